//! k-CNF formulas over 1-based variables, the bipartite adjacency view, and
//! DIMACS I/O.
//!
//! A [`Formula`] is immutable after construction; the per-variable occurrence
//! index is built lazily on first query and cached, so repeated adjacency
//! lookups (the dominant operation in pure-literal machinery and exact
//! counting) are cheap. Reduced formulas (clauses shorter than `k` left over
//! from partial assignments) are legal everywhere except the random
//! generator.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A signed variable. `var` is 1-based to match DIMACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    var: u32,
    positive: bool,
}

impl Literal {
    pub fn new(var: u32, sign: i8) -> Self {
        assert!(var >= 1, "variables are 1-based");
        assert!(sign == 1 || sign == -1, "sign must be ±1");
        Literal {
            var,
            positive: sign == 1,
        }
    }

    pub fn positive(var: u32) -> Self {
        Literal::new(var, 1)
    }

    pub fn negative(var: u32) -> Self {
        Literal::new(var, -1)
    }

    /// Parses the DIMACS encoding: non-zero integer, sign = polarity.
    pub fn from_dimacs(code: i64) -> Result<Self> {
        if code == 0 || code.unsigned_abs() > u32::MAX as u64 {
            return Err(Error::invalid(format!("literal code {code} out of range")));
        }
        Ok(Literal {
            var: code.unsigned_abs() as u32,
            positive: code > 0,
        })
    }

    pub fn var(self) -> u32 {
        self.var
    }

    pub fn sign(self) -> i8 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    /// The complementary literal ¬l.
    #[must_use]
    pub fn negated(self) -> Self {
        Literal {
            var: self.var,
            positive: !self.positive,
        }
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    /// True under the assignment `value` of its variable.
    pub fn satisfied_by(self, value: i8) -> bool {
        self.sign() == value
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// An ordered disjunction of literals over distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    /// Rejects clauses mentioning the same variable twice.
    pub fn new(lits: Vec<Literal>) -> Result<Self> {
        let mut vars: Vec<u32> = lits.iter().map(|l| l.var()).collect();
        vars.sort_unstable();
        if vars.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("clause contains the same variable twice"));
        }
        Ok(Clause { lits })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn contains_var(&self, var: u32) -> bool {
        self.lits.iter().any(|l| l.var() == var)
    }

    /// The polarity of `var` in this clause, if present.
    pub fn sign_of(&self, var: u32) -> Option<i8> {
        self.lits.iter().find(|l| l.var() == var).map(|l| l.sign())
    }
}

#[derive(Debug, Clone, Default)]
struct Adjacency {
    /// Per variable (0-based slot var-1): clause indices with positive /
    /// negative occurrence, each in ascending order.
    pos: Vec<Vec<usize>>,
    neg: Vec<Vec<usize>>,
}

/// A CNF formula: `n` variables, clause list, nominal width `k`.
#[derive(Debug)]
pub struct Formula {
    k: usize,
    n: u32,
    clauses: Vec<Clause>,
    adjacency: OnceLock<Adjacency>,
}

impl Clone for Formula {
    fn clone(&self) -> Self {
        Formula {
            k: self.k,
            n: self.n,
            clauses: self.clauses.clone(),
            adjacency: OnceLock::new(),
        }
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.n == other.n && self.clauses == other.clauses
    }
}
impl Eq for Formula {}

impl Formula {
    /// A formula with uniform width `k`. Every clause must have exactly `k`
    /// literals and all variables must lie in `1..=n`.
    pub fn new(k: usize, n: u32, clauses: Vec<Clause>) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("clause width k={k} must be >= 2")));
        }
        for c in &clauses {
            if c.len() != k {
                return Err(Error::invalid(format!(
                    "clause has width {} but formula k={k}",
                    c.len()
                )));
            }
        }
        Self::new_reduced(k, n, clauses)
    }

    /// A formula whose clauses may be shorter than `k` (partial assignments
    /// strip literals). The width invariant is relaxed; the range invariant
    /// is not.
    pub fn new_reduced(k: usize, n: u32, clauses: Vec<Clause>) -> Result<Self> {
        for c in &clauses {
            for l in c.literals() {
                if l.var() > n {
                    return Err(Error::invalid(format!(
                        "literal {l} references variable beyond n={n}"
                    )));
                }
            }
        }
        Ok(Formula {
            k,
            n,
            clauses,
            adjacency: OnceLock::new(),
        })
    }

    pub fn empty(k: usize, n: u32) -> Self {
        Formula {
            k,
            n,
            clauses: Vec::new(),
            adjacency: OnceLock::new(),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_vars(&self) -> u32 {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, idx: usize) -> &Clause {
        &self.clauses[idx]
    }

    fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| {
            let mut adj = Adjacency {
                pos: vec![Vec::new(); self.n as usize],
                neg: vec![Vec::new(); self.n as usize],
            };
            for (i, c) in self.clauses.iter().enumerate() {
                for l in c.literals() {
                    let slot = (l.var() - 1) as usize;
                    if l.is_positive() {
                        adj.pos[slot].push(i);
                    } else {
                        adj.neg[slot].push(i);
                    }
                }
            }
            adj
        })
    }

    fn check_var(&self, var: u32) -> Result<()> {
        if var == 0 || var > self.n {
            return Err(Error::invalid(format!(
                "variable {var} out of range 1..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// The clause index sets ∂⁺x and ∂⁻x.
    pub fn occurrences(&self, var: u32) -> Result<(&[usize], &[usize])> {
        self.check_var(var)?;
        let adj = self.adjacency();
        let slot = (var - 1) as usize;
        Ok((&adj.pos[slot], &adj.neg[slot]))
    }

    /// A variable is pure when it occurs with at most one polarity; a variable
    /// with no occurrences counts as pure.
    pub fn is_pure(&self, var: u32) -> Result<bool> {
        let (pos, neg) = self.occurrences(var)?;
        Ok(pos.is_empty() || neg.is_empty())
    }

    /// Φ[x↦s]: clauses satisfied by the assignment are deleted and the
    /// opposite literal is stripped from the rest. The result keeps `n` and
    /// `k` but may contain clauses shorter than `k` (including empty ones).
    #[must_use]
    pub fn assign(&self, var: u32, s: i8) -> Formula {
        assert!(s == 1 || s == -1);
        let clauses = self
            .clauses
            .iter()
            .filter(|c| c.sign_of(var) != Some(s))
            .map(|c| Clause {
                lits: c
                    .literals()
                    .iter()
                    .copied()
                    .filter(|l| l.var() != var)
                    .collect(),
            })
            .collect();
        Formula {
            k: self.k,
            n: self.n,
            clauses,
            adjacency: OnceLock::new(),
        }
    }

    /// Applies `assign` for every literal in turn (order does not matter).
    #[must_use]
    pub fn assign_all(&self, lits: &[Literal]) -> Formula {
        let mut f = self.clone();
        for l in lits {
            f = f.assign(l.var(), l.sign());
        }
        f
    }

    /// Whether `assignment[var-1]` (±1 per variable) satisfies every clause.
    pub fn satisfied_by(&self, assignment: &[i8]) -> bool {
        self.clauses.iter().all(|c| {
            c.literals()
                .iter()
                .any(|l| l.satisfied_by(assignment[(l.var() - 1) as usize]))
        })
    }
}

/// How [`read_dimacs`] treats a clause that repeats a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimacsMode {
    /// Reject the file.
    Strict,
    /// Drop duplicate identical literals; complementary pairs still error.
    Lenient,
}

/// Parses DIMACS CNF. Comment lines start with `c`; the header is
/// `p cnf <n> <m>`; clauses are 0-terminated and may span lines.
pub fn read_dimacs<R: BufRead>(reader: R, mode: DimacsMode) -> Result<Formula> {
    let mut n: Option<u32> = None;
    let mut declared_m = 0usize;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut clause_start_line = 0usize;

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 || fields[1] != "cnf" {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("malformed header {trimmed:?}"),
                });
            }
            let nv = fields[2].parse::<u32>().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad variable count: {e}"),
            })?;
            declared_m = fields[3].parse::<usize>().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad clause count: {e}"),
            })?;
            n = Some(nv);
            continue;
        }
        let n = n.ok_or(Error::Parse {
            line: line_no,
            msg: "clause before `p cnf` header".into(),
        })?;
        for tok in trimmed.split_whitespace() {
            let code = tok.parse::<i64>().map_err(|e| Error::Parse {
                line: line_no,
                msg: format!("bad literal {tok:?}: {e}"),
            })?;
            if code == 0 {
                if current.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "empty clause".into(),
                    });
                }
                let lits = std::mem::take(&mut current);
                clauses.push(finish_clause(lits, clause_start_line, mode)?);
                continue;
            }
            if current.is_empty() {
                clause_start_line = line_no;
            }
            let lit = Literal::from_dimacs(code).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            if lit.var() > n {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("literal {code} exceeds declared n={n}"),
                });
            }
            current.push(lit);
        }
    }
    if !current.is_empty() {
        return Err(Error::Parse {
            line: clause_start_line,
            msg: "unterminated clause at end of file".into(),
        });
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        msg: "missing `p cnf` header".into(),
    })?;
    if clauses.len() != declared_m {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "header declares {declared_m} clauses but file has {}",
                clauses.len()
            ),
        });
    }
    let k = clauses.iter().map(Clause::len).max().unwrap_or(2).max(2);
    Formula::new_reduced(k, n, clauses)
}

fn finish_clause(mut lits: Vec<Literal>, line: usize, mode: DimacsMode) -> Result<Clause> {
    match mode {
        DimacsMode::Strict => Clause::new(lits).map_err(|_| Error::Parse {
            line,
            msg: "repeated variable in clause".into(),
        }),
        DimacsMode::Lenient => {
            let mut seen: Vec<Literal> = Vec::with_capacity(lits.len());
            for l in lits.drain(..) {
                if seen.contains(&l) {
                    continue;
                }
                if seen.contains(&l.negated()) {
                    return Err(Error::Parse {
                        line,
                        msg: "clause contains a variable with both polarities".into(),
                    });
                }
                seen.push(l);
            }
            Ok(Clause { lits: seen })
        }
    }
}

pub fn write_dimacs<W: Write>(writer: &mut W, formula: &Formula) -> Result<()> {
    writeln!(
        writer,
        "p cnf {} {}",
        formula.num_vars(),
        formula.num_clauses()
    )?;
    for c in formula.clauses() {
        for l in c.literals() {
            write!(writer, "{} ", l.to_dimacs())?;
        }
        writeln!(writer, "0")?;
    }
    Ok(())
}

pub fn read_dimacs_file(path: &std::path::Path, mode: DimacsMode) -> Result<Formula> {
    let file = std::fs::File::open(path)?;
    read_dimacs(std::io::BufReader::new(file), mode)
}

pub fn write_dimacs_file(path: &std::path::Path, formula: &Formula) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dimacs(&mut file, formula)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (x1 ∨ x2 ∨ x3), (¬x1 ∨ x4 ∨ x5)
    fn two_clause() -> Formula {
        Formula::new(
            3,
            5,
            vec![
                Clause::new(vec![
                    Literal::positive(1),
                    Literal::positive(2),
                    Literal::positive(3),
                ])
                .unwrap(),
                Clause::new(vec![
                    Literal::negative(1),
                    Literal::positive(4),
                    Literal::positive(5),
                ])
                .unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn occurrences_single_positive() {
        let f = Formula::new(
            3,
            3,
            vec![Clause::new(vec![
                Literal::positive(1),
                Literal::positive(2),
                Literal::positive(3),
            ])
            .unwrap()],
        )
        .unwrap();
        let (pos, neg) = f.occurrences(1).unwrap();
        assert_eq!(pos, &[0]);
        assert!(neg.is_empty());
    }

    #[test]
    fn occurrences_both_polarities() {
        let f = two_clause();
        let (pos, neg) = f.occurrences(1).unwrap();
        assert_eq!((pos, neg), (&[0usize][..], &[1usize][..]));
    }

    #[test]
    fn occurrences_absent_var() {
        let f = Formula::empty(3, 4);
        let (pos, neg) = f.occurrences(4).unwrap();
        assert!(pos.is_empty() && neg.is_empty());
    }

    #[test]
    fn occurrences_out_of_range_is_input_error() {
        let f = two_clause();
        assert!(f.occurrences(6).is_err());
        assert!(f.occurrences(0).is_err());
    }

    #[test]
    fn occurrences_partition_all_containing_clauses() {
        let f = two_clause();
        for v in 1..=5 {
            let (pos, neg) = f.occurrences(v).unwrap();
            let expected: Vec<usize> = f
                .clauses()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains_var(v))
                .map(|(i, _)| i)
                .collect();
            let mut union: Vec<usize> = pos.iter().chain(neg.iter()).copied().collect();
            union.sort_unstable();
            assert_eq!(union, expected);
        }
    }

    #[test]
    fn purity() {
        let f = two_clause();
        assert!(!f.is_pure(1).unwrap());
        assert!(f.is_pure(2).unwrap());
        // isolated variable
        let g = Formula::empty(3, 2);
        assert!(g.is_pure(2).unwrap());
    }

    #[test]
    fn assign_satisfies_and_strips() {
        let c = Clause::new(vec![
            Literal::positive(1),
            Literal::positive(2),
            Literal::positive(3),
        ])
        .unwrap();
        let f = Formula::new(3, 3, vec![c]).unwrap();
        assert_eq!(f.assign(1, 1).num_clauses(), 0);

        let g = f.assign(1, -1);
        assert_eq!(g.num_clauses(), 1);
        assert_eq!(
            g.clause(0).literals(),
            &[Literal::positive(2), Literal::positive(3)]
        );

        let h = Formula::new(
            3,
            5,
            vec![Clause::new(vec![
                Literal::negative(1),
                Literal::positive(4),
                Literal::positive(5),
            ])
            .unwrap()],
        )
        .unwrap()
        .assign(1, 1);
        assert_eq!(
            h.clause(0).literals(),
            &[Literal::positive(4), Literal::positive(5)]
        );
    }

    #[test]
    fn assign_commutes() {
        let f = two_clause();
        for (s, t) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let a = f.assign(1, s).assign(4, t);
            let b = f.assign(4, t).assign(1, s);
            let mut ca = a.clauses().to_vec();
            let mut cb = b.clauses().to_vec();
            ca.sort();
            cb.sort();
            assert_eq!(ca, cb);
        }
    }

    #[test]
    fn clause_rejects_repeated_variable() {
        assert!(Clause::new(vec![Literal::positive(1), Literal::negative(1)]).is_err());
    }

    #[test]
    fn dimacs_parse_simple() {
        let f = read_dimacs("p cnf 3 1\n1 2 3 0\n".as_bytes(), DimacsMode::Strict).unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.k(), 3);
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(
            f.clause(0).literals(),
            &[
                Literal::positive(1),
                Literal::positive(2),
                Literal::positive(3)
            ]
        );
    }

    #[test]
    fn dimacs_round_trip_preserves_clauses() {
        let input = "c comment\np cnf 5 2\n1 -2 3 0\n-1 4 5 0\n";
        let f = read_dimacs(input.as_bytes(), DimacsMode::Strict).unwrap();
        let mut out = Vec::new();
        write_dimacs(&mut out, &f).unwrap();
        let g = read_dimacs(out.as_slice(), DimacsMode::Strict).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn dimacs_strict_rejects_repeated_var() {
        let err = read_dimacs("p cnf 2 1\n1 1 2 0\n".as_bytes(), DimacsMode::Strict).unwrap_err();
        assert!(err.to_string().contains("repeated variable"), "{err}");
    }

    #[test]
    fn dimacs_lenient_dedups() {
        let f = read_dimacs("p cnf 2 1\n1 1 2 0\n".as_bytes(), DimacsMode::Lenient).unwrap();
        assert_eq!(f.clause(0).len(), 2);
    }

    #[test]
    fn dimacs_errors_carry_line_numbers() {
        let err = read_dimacs("p cnf 2 1\n1 3 0\n".as_bytes(), DimacsMode::Strict).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(read_dimacs("p dnf 2 1\n".as_bytes(), DimacsMode::Strict).is_err());
        assert!(read_dimacs("p cnf 2 1\n0\n".as_bytes(), DimacsMode::Strict).is_err());
    }
}
