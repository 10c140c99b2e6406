//! Reduction from 2P2N-3SAT (every variable occurs exactly twice positively and
//! twice negatively) to matching instances with capped additive hospitals.
//!
//! Hospital layout: clause hospitals `0..m`, then per variable `i` the positive
//! sink, negative sink and priority hospital at `m + 3i`, `m + 3i + 1`,
//! `m + 3i + 2`. Doctor layout: twelve doctors per variable starting at `12i`,
//! in [`DoctorRole`] order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::DoctorSet;
use crate::error::{Error, Result};
use crate::instance::{Allocation, DoctorPrefs, Instance};
use crate::valuation::MatroidRankValuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    /// 0-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn is_true(&self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }

    fn to_dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formula2P2N {
    variable_count: usize,
    clauses: Vec<[Literal; 3]>,
}

impl Formula2P2N {
    pub fn new(variable_count: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        if variable_count == 0 || clauses.is_empty() {
            return Err(Error::Formula(
                "formula has no variables or no clauses".into(),
            ));
        }
        let mut counts = vec![(0usize, 0usize); variable_count];
        for (j, clause) in clauses.iter().enumerate() {
            for lit in clause {
                let Some(c) = counts.get_mut(lit.var) else {
                    return Err(Error::Formula(format!(
                        "clause {} mentions variable {} beyond the {variable_count} declared",
                        j + 1,
                        lit.var + 1
                    )));
                };
                if lit.positive {
                    c.0 += 1;
                } else {
                    c.1 += 1;
                }
            }
        }
        if let Some((v, (p, n))) = counts.iter().enumerate().find(|(_, &c)| c != (2, 2)) {
            return Err(Error::Formula(format!(
                "variable {} occurs {p} times positively and {n} times negatively, expected 2 and 2",
                v + 1
            )));
        }
        Ok(Self {
            variable_count,
            clauses,
        })
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[[Literal; 3]] {
        &self.clauses
    }

    /// Index of the first clause the assignment leaves unsatisfied.
    pub fn first_unsatisfied(&self, assignment: &[bool]) -> Option<usize> {
        self.clauses
            .iter()
            .position(|c| !c.iter().any(|l| l.is_true(assignment)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.variable_count, self.clauses.len());
        for c in &self.clauses {
            let lits: Vec<String> = c.iter().map(|l| l.to_dimacs().to_string()).collect();
            out.push_str(&lits.join(" "));
            out.push_str(" 0\n");
        }
        out
    }
}

/// Parses DIMACS-style CNF: `c` comment lines, an optional `p cnf n m` header,
/// and clauses of three nonzero literals each terminated by `0`.
pub fn parse_formula(text: &str) -> Result<Formula2P2N> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                ["cnf", n, m] => {
                    let parse = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| Error::Formula(format!("bad header {line:?}")))
                    };
                    header = Some((parse(n)?, parse(m)?));
                }
                _ => return Err(Error::Formula(format!("bad header {line:?}"))),
            }
            continue;
        }
        for tok in line.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| Error::Formula(format!("not a literal: {tok:?}")))?;
            if v == 0 {
                let lits: [Literal; 3] = current.as_slice().try_into().map_err(|_| {
                    Error::Formula(format!(
                        "clause {} has {} literals, expected 3",
                        clauses.len() + 1,
                        current.len()
                    ))
                })?;
                clauses.push(lits);
                current.clear();
            } else {
                current.push(Literal {
                    var: v.unsigned_abs() as usize - 1,
                    positive: v > 0,
                });
            }
        }
    }
    if !current.is_empty() {
        return Err(Error::Formula("last clause is not terminated by 0".into()));
    }
    if clauses.is_empty() {
        return Err(Error::Formula("formula has no clauses".into()));
    }
    let n = match header {
        Some((n, m)) => {
            if m != clauses.len() {
                return Err(Error::Formula(format!(
                    "header declares {m} clauses, found {}",
                    clauses.len()
                )));
            }
            n
        }
        None => clauses
            .iter()
            .flatten()
            .map(|l| l.var + 1)
            .max()
            .unwrap_or(0),
    };
    Formula2P2N::new(n, clauses)
}

/// The example formula with three variables and four clauses.
pub fn example_formula() -> Formula2P2N {
    parse_formula("1 2 -3 0\n-1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n").expect("valid 2P2N formula")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoctorRole {
    Pos,
    PosCopy,
    Neg,
    NegCopy,
    APos,
    ANeg,
    BPos,
    BNeg,
    CPos,
    CNeg,
    DPos,
    DNeg,
}

impl DoctorRole {
    pub const ALL: [DoctorRole; 12] = [
        DoctorRole::Pos,
        DoctorRole::PosCopy,
        DoctorRole::Neg,
        DoctorRole::NegCopy,
        DoctorRole::APos,
        DoctorRole::ANeg,
        DoctorRole::BPos,
        DoctorRole::BNeg,
        DoctorRole::CPos,
        DoctorRole::CNeg,
        DoctorRole::DPos,
        DoctorRole::DNeg,
    ];

    pub fn is_literal(self) -> bool {
        matches!(
            self,
            DoctorRole::Pos | DoctorRole::PosCopy | DoctorRole::Neg | DoctorRole::NegCopy
        )
    }

    /// Sign of the literal or dummy.
    pub fn positive(self) -> bool {
        matches!(
            self,
            DoctorRole::Pos
                | DoctorRole::PosCopy
                | DoctorRole::APos
                | DoctorRole::BPos
                | DoctorRole::CPos
                | DoctorRole::DPos
        )
    }

    fn offset(self) -> usize {
        Self::ALL.iter().position(|&r| r == self).expect("listed")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HospitalRole {
    Clause(usize),
    PositiveSink(usize),
    NegativeSink(usize),
    Priority(usize),
}

#[derive(Clone, Debug)]
pub struct GadgetInstance {
    pub formula: Formula2P2N,
    pub instance: Instance,
}

impl GadgetInstance {
    pub fn clause_hospital(&self, j: usize) -> usize {
        j
    }

    pub fn positive_sink(&self, i: usize) -> usize {
        self.formula.clause_count() + 3 * i
    }

    pub fn negative_sink(&self, i: usize) -> usize {
        self.positive_sink(i) + 1
    }

    pub fn priority(&self, i: usize) -> usize {
        self.positive_sink(i) + 2
    }

    pub fn doctor(&self, var: usize, role: DoctorRole) -> usize {
        12 * var + role.offset()
    }

    pub fn doctor_role(&self, d: usize) -> (usize, DoctorRole) {
        (d / 12, DoctorRole::ALL[d % 12])
    }

    pub fn hospital_role(&self, h: usize) -> HospitalRole {
        let m = self.formula.clause_count();
        if h < m {
            return HospitalRole::Clause(h);
        }
        let (i, r) = ((h - m) / 3, (h - m) % 3);
        match r {
            0 => HospitalRole::PositiveSink(i),
            1 => HospitalRole::NegativeSink(i),
            _ => HospitalRole::Priority(i),
        }
    }

    /// Doctors standing for `lit`, original copy first.
    pub fn literal_doctors(&self, lit: Literal) -> [usize; 2] {
        if lit.positive {
            [
                self.doctor(lit.var, DoctorRole::Pos),
                self.doctor(lit.var, DoctorRole::PosCopy),
            ]
        } else {
            [
                self.doctor(lit.var, DoctorRole::Neg),
                self.doctor(lit.var, DoctorRole::NegCopy),
            ]
        }
    }

    /// Per variable, `(total cap of s+, s-, p, doctors they value)`, read off the valuations.
    pub fn variable_capacities(&self) -> Vec<(usize, usize)> {
        let m = self.instance.doctor_count();
        (0..self.formula.variable_count())
            .map(|i| {
                let hs = [
                    self.positive_sink(i),
                    self.negative_sink(i),
                    self.priority(i),
                ];
                let cap = hs
                    .iter()
                    .map(|&h| self.instance.valuation(h).max_rank())
                    .sum();
                let valued = (0..m)
                    .filter(|&d| {
                        hs.iter().any(|&h| {
                            self.instance
                                .valuation(h)
                                .rank(&DoctorSet::new().with(d))
                                .expect("doctor in range")
                                == 1
                        })
                    })
                    .count();
                (cap, valued)
            })
            .collect()
    }

    /// Variables whose positive and negative literal doctors both sit at clause hospitals.
    pub fn literal_conflicts(&self, alloc: &Allocation) -> Vec<usize> {
        let m = self.formula.clause_count();
        let at_clause = |d: usize| alloc.hospital_of(d).is_some_and(|h| h < m);
        (0..self.formula.variable_count())
            .filter(|&i| {
                let pos = [DoctorRole::Pos, DoctorRole::PosCopy]
                    .iter()
                    .any(|&r| at_clause(self.doctor(i, r)));
                let neg = [DoctorRole::Neg, DoctorRole::NegCopy]
                    .iter()
                    .any(|&r| at_clause(self.doctor(i, r)));
                pos && neg
            })
            .collect()
    }
}

fn capped(
    universe: usize,
    cap: usize,
    doctors: impl IntoIterator<Item = usize>,
) -> MatroidRankValuation {
    MatroidRankValuation::capped_additive(universe, cap, doctors.into_iter().collect())
        .expect("gadget doctors are in range")
}

pub fn reduce(formula: &Formula2P2N) -> GadgetInstance {
    let n = formula.variable_count();
    let m = formula.clause_count();
    let doctors = 12 * n;
    let hospitals = m + 3 * n;
    let mut gadget = GadgetInstance {
        formula: formula.clone(),
        instance: Instance::new(
            vec![capped(doctors, 0, []); hospitals],
            DoctorPrefs::Ordinal(vec![(0..hospitals).collect(); doctors]),
        )
        .expect("placeholder instance"),
    };
    let g = &gadget;
    let mut vals = Vec::with_capacity(hospitals);
    for clause in formula.clauses() {
        vals.push(capped(
            doctors,
            1,
            clause.iter().flat_map(|&l| g.literal_doctors(l)),
        ));
    }
    use DoctorRole::*;
    for i in 0..n {
        let d = |r| g.doctor(i, r);
        vals.push(capped(
            doctors,
            4,
            [Pos, PosCopy, APos, BPos, CPos, DPos].map(d),
        ));
        vals.push(capped(
            doctors,
            4,
            [Neg, NegCopy, ANeg, BNeg, CNeg, DNeg].map(d),
        ));
        vals.push(capped(
            doctors,
            3,
            [APos, ANeg, BPos, BNeg, CPos, CNeg].map(d),
        ));
    }
    let orders = (0..doctors)
        .map(|doc| {
            let (i, role) = g.doctor_role(doc);
            let sink = if role.positive() {
                g.positive_sink(i)
            } else {
                g.negative_sink(i)
            };
            let prefix = if role.is_literal() {
                vec![sink]
            } else {
                vec![g.priority(i), sink]
            };
            let mut order = prefix.clone();
            order.extend((0..hospitals).filter(|h| !prefix.contains(h)));
            order
        })
        .collect();
    gadget.instance =
        Instance::new(vals, DoctorPrefs::Ordinal(orders)).expect("well-formed gadget");
    gadget
}

/// The allocation read off a satisfying assignment. Each clause takes the
/// lowest-index unused doctor of one of its true literals. The result is
/// checked for stability before it is returned.
pub fn witness_allocation(gadget: &GadgetInstance, assignment: &[bool]) -> Result<Allocation> {
    let f = &gadget.formula;
    if assignment.len() != f.variable_count() {
        return Err(Error::input(format!(
            "assignment has {} values for {} variables",
            assignment.len(),
            f.variable_count()
        )));
    }
    if let Some(j) = f.first_unsatisfied(assignment) {
        return Err(Error::input(format!(
            "assignment leaves clause {} unsatisfied",
            j + 1
        )));
    }
    use DoctorRole::*;
    let mut alloc = Allocation::empty(gadget.instance.doctor_count());
    for (i, &value) in assignment.iter().enumerate() {
        // the true side's dummies fill its sink; the false side's fill the priority hospital
        let (true_sink, false_sink) = if value {
            (gadget.positive_sink(i), gadget.negative_sink(i))
        } else {
            (gadget.negative_sink(i), gadget.positive_sink(i))
        };
        let (true_dummies, false_dummies) = if value {
            ([APos, BPos, CPos, DPos], [ANeg, BNeg, CNeg, DNeg])
        } else {
            ([ANeg, BNeg, CNeg, DNeg], [APos, BPos, CPos, DPos])
        };
        for r in true_dummies {
            alloc.assignment[gadget.doctor(i, r)] = Some(true_sink);
        }
        for r in &false_dummies[..3] {
            alloc.assignment[gadget.doctor(i, *r)] = Some(gadget.priority(i));
        }
        alloc.assignment[gadget.doctor(i, false_dummies[3])] = Some(false_sink);
        let false_literals = if value {
            [Neg, NegCopy]
        } else {
            [Pos, PosCopy]
        };
        for r in false_literals {
            alloc.assignment[gadget.doctor(i, r)] = Some(false_sink);
        }
    }
    for (j, clause) in f.clauses().iter().enumerate() {
        let pick = clause
            .iter()
            .filter(|l| l.is_true(assignment))
            .flat_map(|&l| gadget.literal_doctors(l))
            .filter(|&d| alloc.hospital_of(d).is_none())
            .min()
            .expect("each true literal has two copies and occurs twice");
        alloc.assignment[pick] = Some(gadget.clause_hospital(j));
    }
    if let Some(w) = gadget.instance.find_blocking_pair(&alloc)? {
        return Err(Error::input(format!(
            "witness allocation is blocked by doctor {} and hospital {}",
            w.doctor, w.hospital
        )));
    }
    Ok(alloc)
}

/// A random 2P2N formula with `n` variables (a multiple of 3) together with an
/// assignment that satisfies it. No clause repeats a variable.
pub fn planted_formula(n: usize, seed: u64) -> Result<(Formula2P2N, Vec<bool>)> {
    if n == 0 || !n.is_multiple_of(3) {
        return Err(Error::input(format!(
            "2P2N formulas need a positive multiple of 3 variables, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment: Vec<bool> = (0..n).map(|_| rand::Rng::gen(&mut rng)).collect();
    let mut pool: Vec<Literal> = (0..n)
        .flat_map(|var| [true, true, false, false].map(|positive| Literal { var, positive }))
        .collect();
    loop {
        pool.shuffle(&mut rng);
        let clauses: Vec<[Literal; 3]> = pool.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        let distinct = clauses
            .iter()
            .all(|c| c[0].var != c[1].var && c[0].var != c[2].var && c[1].var != c[2].var);
        let satisfied = clauses
            .iter()
            .all(|c| c.iter().any(|l| l.is_true(&assignment)));
        if distinct && satisfied {
            return Ok((Formula2P2N::new(n, clauses)?, assignment));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_example() {
        let f = example_formula();
        assert_eq!(f.variable_count(), 3);
        assert_eq!(f.clause_count(), 4);
        assert_eq!(parse_formula(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn parse_rejections() {
        assert!(parse_formula("").is_err());
        assert!(parse_formula("c only a comment\n").is_err());
        let err = parse_formula("1 1 1 0\n-1 2 3 0\n-1 -2 -3 0\n2 -2 3 0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("variable 1"), "{err}");
        assert!(parse_formula("1 2 0\n").is_err());
        assert!(parse_formula("1 2 -3 0\n-1 2 3").is_err());
        assert!(parse_formula("p cnf 3 5\n1 2 -3 0\n-1 2 3 0\n-1 -2 -3 0\n1 -2 3 0\n").is_err());
    }

    #[test]
    fn example_gadget_shape() {
        let g = reduce(&example_formula());
        assert_eq!(g.instance.hospital_count(), 13);
        assert_eq!(g.instance.doctor_count(), 36);
        assert!(g.variable_capacities().iter().all(|&c| c == (11, 12)));
        assert_eq!(g.hospital_role(4), HospitalRole::PositiveSink(0));
        assert_eq!(g.hospital_role(12), HospitalRole::Priority(2));
        assert_eq!(g.doctor_role(13), (1, DoctorRole::PosCopy));
        let orders = g.instance.ordinal_orders().unwrap();
        assert_eq!(&orders[g.doctor(0, DoctorRole::ANeg)][..3], &[6, 5, 0]);
        assert_eq!(&orders[g.doctor(2, DoctorRole::NegCopy)][..2], &[11, 0]);
    }

    #[test]
    fn example_witness() {
        let g = reduce(&example_formula());
        let a = witness_allocation(&g, &[true, true, false]).unwrap();
        assert!(g.instance.is_stable(&a));
        assert!(g.instance.hospital_utilities(&a).iter().all(|&u| u >= 1));
        assert!(g.literal_conflicts(&a).is_empty());
        // clause 1 is satisfied by x1, x2 and not-x3; x1's original copy is lowest
        assert_eq!(a.hospital_of(g.doctor(0, DoctorRole::Pos)), Some(0));
        assert_eq!(witness_allocation(&g, &[true, true, false]).unwrap(), a);
        assert!(witness_allocation(&g, &[true, true, true]).is_err());
        assert!(witness_allocation(&g, &[true, true]).is_err());
    }

    #[test]
    fn planted_formulas_have_stable_witnesses() {
        for seed in 0..10 {
            for n in [3, 6] {
                let (f, assignment) = planted_formula(n, seed).unwrap();
                assert_eq!(f.first_unsatisfied(&assignment), None);
                let g = reduce(&f);
                let a = witness_allocation(&g, &assignment).unwrap();
                assert!(g.instance.hospital_utilities(&a).iter().all(|&u| u >= 1));
            }
        }
        assert!(planted_formula(4, 0).is_err());
    }
}
