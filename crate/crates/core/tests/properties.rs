//! Property tests over randomly structured formulas and sample sets: the
//! invariants that should hold for every input, not just the seeded corpora
//! used elsewhere.

use proptest::collection::vec;
use proptest::prelude::*;

use rscavity::cnf::{read_dimacs, write_dimacs, Clause, DimacsMode, Formula, Literal};
use rscavity::exact;
use rscavity::popdyn::w1_slices;
use rscavity::pulp::{self, ClosureOutcome};

const MAX_VARS: u32 = 9;

/// A clause over distinct variables in 1..=MAX_VARS with width 2..=3.
fn arb_clause() -> impl Strategy<Value = Clause> {
    (vec(1..=MAX_VARS, 2..=3), vec(any::<bool>(), 3)).prop_filter_map(
        "distinct variables",
        |(vars, signs)| {
            let mut seen = vars.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != vars.len() {
                return None;
            }
            let lits = vars
                .iter()
                .zip(&signs)
                .map(|(&v, &pos)| Literal::new(v, if pos { 1 } else { -1 }))
                .collect();
            Some(Clause::new(lits).expect("distinct by construction"))
        },
    )
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    vec(arb_clause(), 0..8)
        .prop_map(|clauses| Formula::new_reduced(3, MAX_VARS, clauses).expect("vars in range"))
}

/// Direct enumeration over all assignments: the independent counting oracle.
fn brute_force(f: &Formula) -> u64 {
    let n = f.num_vars();
    let mut z = 0u64;
    for bits in 0u64..1 << n {
        let assignment: Vec<i8> = (0..n)
            .map(|v| if bits >> v & 1 == 1 { 1 } else { -1 })
            .collect();
        if f.satisfied_by(&assignment) {
            z += 1;
        }
    }
    z
}

proptest! {
    #[test]
    fn count_agrees_with_enumeration(f in arb_formula()) {
        let fast = exact::count(&f).unwrap();
        prop_assert_eq!(fast.count, exact::BigUint::from(brute_force(&f)));
    }

    #[test]
    fn conditioned_counts_split_the_total(f in arb_formula(), var in 1..=MAX_VARS) {
        let z = exact::count(&f).unwrap().count;
        let plus = exact::count_conditioned(&f, &[Literal::positive(var)]).unwrap().count;
        let minus = exact::count_conditioned(&f, &[Literal::negative(var)]).unwrap().count;
        prop_assert_eq!(plus + minus, z);
    }

    #[test]
    fn assign_commutes_as_multisets(
        f in arb_formula(),
        x in 1..=MAX_VARS,
        y in 1..=MAX_VARS,
        s in any::<bool>(),
        t in any::<bool>(),
    ) {
        prop_assume!(x != y);
        let (s, t) = (if s { 1 } else { -1 }, if t { 1 } else { -1 });
        let mut a: Vec<Clause> = f.assign(x, s).assign(y, t).clauses().to_vec();
        let mut b: Vec<Clause> = f.assign(y, t).assign(x, s).clauses().to_vec();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn occurrences_partition_containing_clauses(f in arb_formula(), var in 1..=MAX_VARS) {
        let (pos, neg) = f.occurrences(var).unwrap();
        let mut union: Vec<usize> = pos.iter().chain(neg).copied().collect();
        union.sort_unstable();
        let expected: Vec<usize> = f
            .clauses()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains_var(var))
            .map(|(i, _)| i)
            .collect();
        prop_assert_eq!(union, expected);
    }

    #[test]
    fn dimacs_round_trip(f in arb_formula()) {
        let mut bytes = Vec::new();
        write_dimacs(&mut bytes, &f).unwrap();
        let back = read_dimacs(bytes.as_slice(), DimacsMode::Strict).unwrap();
        prop_assert_eq!(back.num_vars(), f.num_vars());
        prop_assert_eq!(back.clauses(), f.clauses());
    }

    #[test]
    fn pulp_closure_always_verifies(f in arb_formula(), v1 in 1..=MAX_VARS, sign in any::<bool>()) {
        let initial = [Literal::new(v1, if sign { 1 } else { -1 })];
        let result = pulp::pulp(&f, &initial, None).unwrap();
        if let ClosureOutcome::Closure(lits) = &result.outcome {
            prop_assert!(pulp::verify_closure(&f, &initial, lits));
            // Lemma-style counting bound, exact.
            let z = exact::count(&f).unwrap().count;
            let z_cond = exact::count_conditioned(&f, &initial).unwrap().count;
            prop_assert!(z <= (exact::BigUint::from(1u32) << lits.len()) * z_cond);
        }
    }

    #[test]
    fn w1_is_a_metric_on_sorted_samples(
        a in vec(-50.0f64..50.0, 1..12),
        b in vec(-50.0f64..50.0, 1..12),
        c in vec(-50.0f64..50.0, 1..12),
    ) {
        let dab = w1_slices(&a, &b);
        let dba = w1_slices(&b, &a);
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(w1_slices(&a, &a) == 0.0);
        let dac = w1_slices(&a, &c);
        let dcb = w1_slices(&c, &b);
        prop_assert!(dab <= dac + dcb + 1e-9);
    }

    #[test]
    fn heights_zero_iff_no_opposition(f in arb_formula(), var in 1..=MAX_VARS, sign in any::<bool>()) {
        let s = if sign { 1 } else { -1 };
        let h = pulp::height(&f, var, s).unwrap();
        let (pos, neg) = f.occurrences(var).unwrap();
        let opposing = if s == 1 { neg } else { pos };
        prop_assert_eq!(h == pulp::Height::Finite(0), opposing.is_empty());
    }
}
