//! Replica-symmetric analysis of random k-SAT at desk scale.
//!
//! The crate bundles the pieces needed to study the number of satisfying
//! assignments of sparse random k-CNF formulas through the cavity method, and
//! to cross-validate every computable claim against exact oracles:
//!
//! * [`cnf`]: formulas, literals, adjacency queries, DIMACS I/O;
//! * [`gen`]: seeded random formulas, clause couplings, Galton-Watson trees;
//! * [`exact`]: exact model counting, marginals, finite-temperature partition
//!   functions and tree recursions;
//! * [`pulp`]: pure literal elimination, literal heights and the pure literal
//!   pursuit closure algorithm;
//! * [`popdyn`]: population dynamics for the Belief Propagation operator and
//!   the Bethe free entropy;
//! * [`thresholds`]: closed-form and root-solved density thresholds plus
//!   first/second moment bounds;
//! * [`uniqueness`]: extremal boundary conditions, log-likelihood-ratio
//!   recursions on trees, the typed distributional operator and its
//!   contraction constant.
//!
//! All randomness flows through [`rng::Rng`], a counter-based generator with
//! named substreams: identical parameters and seed give bit-identical results
//! independent of thread count.

pub mod cnf;
pub mod error;
pub mod exact;
pub mod gen;
pub mod popdyn;
pub mod pulp;
pub mod rng;
pub mod stats;
pub mod thresholds;
pub mod uniqueness;

pub use error::{Error, Result};
