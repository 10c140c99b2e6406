//! Matroid rank valuations of hospitals over doctors.
//!
//! A valuation is a set function `v(S)` over subsets of the doctors with
//! `v(∅) = 0`, marginals in `{0, 1}`, and diminishing marginals. Three concrete
//! representations are built in (binary OXS, binary capped additive, explicit
//! table) together with lazy views for contraction and capping.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::bitset::DoctorSet;
use crate::error::{Error, Result};

/// Explicit tables are materialized only up to this many doctors.
pub const MAX_TABLE_UNIVERSE: usize = 16;

/// Exhaustive axiom checking is refused above this many doctors.
pub const MAX_VALIDATE_UNIVERSE: usize = 12;

/// Violations beyond this count are tallied but not listed.
const MAX_LISTED_VIOLATIONS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationKind {
    Oracle,
    BinaryOxs,
    CappedAdditive,
}

type RankFn = dyn Fn(&DoctorSet) -> usize + Send + Sync;

enum Repr {
    Oxs {
        slots: usize,
        /// doctor -> adjacent slots
        adjacency: Vec<Vec<usize>>,
    },
    CappedAdditive {
        cap: usize,
        approved: DoctorSet,
    },
    Table {
        ranks: Vec<u32>,
    },
    Callback {
        f: Arc<RankFn>,
        memo: Mutex<HashMap<DoctorSet, usize>>,
    },
    Contracted {
        base: MatroidRankValuation,
        fixed: DoctorSet,
        fixed_rank: usize,
    },
    Capped {
        base: MatroidRankValuation,
        cap: usize,
    },
}

/// A hospital's matroid rank valuation over `universe_size` doctors.
///
/// Cloning is cheap and clones share the query counter.
#[derive(Clone)]
pub struct MatroidRankValuation {
    universe: usize,
    repr: Arc<Repr>,
    queries: Arc<AtomicU64>,
}

impl MatroidRankValuation {
    fn from_repr(universe: usize, repr: Repr) -> Self {
        Self {
            universe,
            repr: Arc::new(repr),
            queries: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Binary OXS valuation: the rank of `S` is the maximum matching between `S`
    /// and `slots` slot nodes along `edges` given as `(doctor, slot)` pairs.
    pub fn binary_oxs(universe: usize, slots: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if slots > 4 * universe.max(1) {
            return Err(Error::input(format!(
                "OXS slot count {slots} exceeds 4 x {universe} doctors"
            )));
        }
        let mut adjacency = vec![Vec::new(); universe];
        for &(d, r) in edges {
            if d >= universe || r >= slots {
                return Err(Error::input(format!(
                    "OXS edge ({d}, {r}) outside {universe} doctors x {slots} slots"
                )));
            }
            if !adjacency[d].contains(&r) {
                adjacency[d].push(r);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(Self::from_repr(universe, Repr::Oxs { slots, adjacency }))
    }

    /// Binary capped additive valuation `min(cap, |S ∩ approved|)`.
    pub fn capped_additive(universe: usize, cap: usize, approved: DoctorSet) -> Result<Self> {
        check_members(universe, &approved)?;
        Ok(Self::from_repr(
            universe,
            Repr::CappedAdditive { cap, approved },
        ))
    }

    /// The report `f_T(S) = |S ∩ T|`, realized as capped additive with cap `|T|`.
    pub fn indicator(universe: usize, approved: DoctorSet) -> Result<Self> {
        Self::capped_additive(universe, approved.len(), approved)
    }

    /// Explicit rank table indexed by the subset bitmask (`ranks.len() == 2^universe`).
    pub fn table(universe: usize, ranks: Vec<u32>) -> Result<Self> {
        if universe > MAX_TABLE_UNIVERSE {
            return Err(Error::input(format!(
                "rank table over {universe} doctors exceeds the limit of {MAX_TABLE_UNIVERSE}"
            )));
        }
        if ranks.len() != 1 << universe {
            return Err(Error::input(format!(
                "rank table has {} entries, expected {}",
                ranks.len(),
                1usize << universe
            )));
        }
        Ok(Self::from_repr(universe, Repr::Table { ranks }))
    }

    /// Valuation backed by a callback. Small universes are materialized into a
    /// table; larger ones memoize queries.
    pub fn from_fn<F>(universe: usize, f: F) -> Self
    where
        F: Fn(&DoctorSet) -> usize + Send + Sync + 'static,
    {
        if universe <= MAX_TABLE_UNIVERSE {
            let ranks = (0u64..1 << universe)
                .map(|mask| f(&DoctorSet::from_mask(mask)) as u32)
                .collect();
            return Self::from_repr(universe, Repr::Table { ranks });
        }
        Self::from_repr(
            universe,
            Repr::Callback {
                f: Arc::new(f),
                memo: Mutex::new(HashMap::new()),
            },
        )
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn kind(&self) -> ValuationKind {
        match &*self.repr {
            Repr::Oxs { .. } => ValuationKind::BinaryOxs,
            Repr::CappedAdditive { .. } => ValuationKind::CappedAdditive,
            _ => ValuationKind::Oracle,
        }
    }

    /// Number of rank evaluations issued against this valuation (and its clones).
    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_query_count(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    pub fn rank(&self, set: &DoctorSet) -> Result<usize> {
        check_members(self.universe, set)?;
        Ok(self.eval(set))
    }

    /// `rank(S + d) - rank(S)`; `d` must not be in `S`.
    pub fn marginal(&self, set: &DoctorSet, d: usize) -> Result<usize> {
        check_members(self.universe, set)?;
        if d >= self.universe {
            return Err(Error::input(format!(
                "doctor {d} outside universe of {}",
                self.universe
            )));
        }
        if set.contains(d) {
            return Err(Error::input(format!("doctor {d} already in the set")));
        }
        Ok(self.eval_marginal(set, d))
    }

    pub fn is_non_redundant(&self, set: &DoctorSet) -> Result<bool> {
        Ok(self.rank(set)? == set.len())
    }

    /// Contraction by a non-redundant set `T`: `v'(S) = v(T ∪ S) - v(T)`.
    ///
    /// The result is a lazy view over `self`; no table is materialized.
    pub fn contract(&self, fixed: &DoctorSet) -> Result<Self> {
        if !self.is_non_redundant(fixed)? {
            return Err(Error::input(format!(
                "cannot contract by redundant set {fixed:?}"
            )));
        }
        Ok(self.contract_unchecked(fixed.clone(), fixed.len()))
    }

    pub(crate) fn contract_unchecked(&self, fixed: DoctorSet, fixed_rank: usize) -> Self {
        if fixed.is_empty() {
            return self.clone();
        }
        Self::from_repr(
            self.universe,
            Repr::Contracted {
                base: self.clone(),
                fixed,
                fixed_rank,
            },
        )
    }

    /// `v^c(S) = min(v(S), c)`.
    pub fn cap(&self, cap: usize) -> Self {
        Self::from_repr(
            self.universe,
            Repr::Capped {
                base: self.clone(),
                cap,
            },
        )
    }

    /// Rank of the whole universe.
    pub fn max_rank(&self) -> usize {
        self.eval(&(0..self.universe).collect())
    }

    /// Unchecked rank evaluation; counts one query.
    pub(crate) fn eval(&self, set: &DoctorSet) -> usize {
        self.queries.fetch_add(1, Ordering::Relaxed);
        match &*self.repr {
            Repr::Oxs { slots, adjacency } => oxs_rank(*slots, adjacency, set),
            Repr::CappedAdditive { cap, approved } => set.intersection(approved).len().min(*cap),
            Repr::Table { ranks } => ranks[set.mask() as usize] as usize,
            Repr::Callback { f, memo } => {
                if let Some(&r) = memo.lock().expect("memo poisoned").get(set) {
                    return r;
                }
                let r = f(set);
                memo.lock().expect("memo poisoned").insert(set.clone(), r);
                r
            }
            Repr::Contracted {
                base,
                fixed,
                fixed_rank,
            } => base.eval(&fixed.union(set)) - fixed_rank,
            Repr::Capped { base, cap } => base.eval(set).min(*cap),
        }
    }

    pub(crate) fn eval_marginal(&self, set: &DoctorSet, d: usize) -> usize {
        self.eval(&set.with(d)) - self.eval(set)
    }

    /// Exhaustive check of the three rank-function axioms.
    pub fn validate_mrf(&self) -> Result<MrfReport> {
        let m = self.universe;
        if m > MAX_VALIDATE_UNIVERSE {
            return Err(Error::TooLarge {
                what: "MRF validation",
                required: 3u128.pow(m as u32),
                budget: 3u128.pow(MAX_VALIDATE_UNIVERSE as u32),
            });
        }
        let full = 1u64 << m;
        let ranks: Vec<i64> = (0..full)
            .map(|mask| self.eval(&DoctorSet::from_mask(mask)) as i64)
            .collect();
        let mut report = MrfReport::default();
        if ranks[0] != 0 {
            report.push(MrfViolation::NonZeroEmpty { rank: ranks[0] });
        }
        let delta = |s: u64, d: usize| ranks[(s | 1 << d) as usize] - ranks[s as usize];
        for s in 0..full {
            for d in (0..m).filter(|&d| s & (1 << d) == 0) {
                let md = delta(s, d);
                if md != 0 && md != 1 {
                    report.push(MrfViolation::NonBinaryMarginal {
                        set: mask_to_vec(s),
                        doctor: d,
                        marginal: md,
                    });
                }
            }
        }
        // every pair S ⊆ T: enumerate T, then its subsets
        for t in 0..full {
            let mut s = t;
            loop {
                if s != t {
                    for d in (0..m).filter(|&d| t & (1 << d) == 0) {
                        if delta(s, d) < delta(t, d) {
                            report.push(MrfViolation::NotSubmodular {
                                smaller: mask_to_vec(s),
                                larger: mask_to_vec(t),
                                doctor: d,
                            });
                        }
                    }
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & t;
            }
        }
        Ok(report)
    }

    /// Serializable description, materializing lazy views as tables when small enough.
    pub fn to_spec(&self) -> Result<ValuationSpec> {
        match &*self.repr {
            Repr::Oxs { slots, adjacency } => Ok(ValuationSpec::Oxs {
                slots: *slots,
                edges: adjacency
                    .iter()
                    .enumerate()
                    .flat_map(|(d, rs)| rs.iter().map(move |&r| (d, r)))
                    .collect(),
            }),
            Repr::CappedAdditive { cap, approved } => Ok(ValuationSpec::CappedAdditive {
                cap: *cap,
                approved: approved.iter().collect(),
            }),
            _ => {
                if self.universe > MAX_TABLE_UNIVERSE {
                    return Err(Error::input(
                        "valuation view too large to serialize as a table",
                    ));
                }
                let table = (0u64..1 << self.universe)
                    .map(|mask| {
                        let key = mask_to_vec(mask)
                            .iter()
                            .map(usize::to_string)
                            .collect::<Vec<_>>()
                            .join(",");
                        (key, self.eval(&DoctorSet::from_mask(mask)) as u32)
                    })
                    .collect();
                Ok(ValuationSpec::Table { table })
            }
        }
    }

    pub fn from_spec(universe: usize, spec: &ValuationSpec) -> Result<Self> {
        match spec {
            ValuationSpec::Oxs { slots, edges } => Self::binary_oxs(universe, *slots, edges),
            ValuationSpec::CappedAdditive { cap, approved } => {
                Self::capped_additive(universe, *cap, approved.iter().copied().collect())
            }
            ValuationSpec::Table { table } => {
                if universe > MAX_TABLE_UNIVERSE {
                    return Err(Error::input("table valuation over too many doctors"));
                }
                let mut ranks = vec![None; 1 << universe];
                for (key, &rank) in table {
                    let mut mask = 0u64;
                    for part in key.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        let d: usize = part
                            .parse()
                            .map_err(|_| Error::input(format!("bad table key {key:?}")))?;
                        if d >= universe {
                            return Err(Error::input(format!(
                                "table key {key:?} names doctor {d} outside {universe}"
                            )));
                        }
                        mask |= 1 << d;
                    }
                    ranks[mask as usize] = Some(rank);
                }
                let ranks = ranks
                    .into_iter()
                    .enumerate()
                    .map(|(mask, r)| {
                        r.ok_or_else(|| {
                            Error::input(format!(
                                "table misses subset {:?}",
                                mask_to_vec(mask as u64)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::table(universe, ranks)
            }
        }
    }
}

impl PartialEq for MatroidRankValuation {
    fn eq(&self, other: &Self) -> bool {
        if self.universe != other.universe {
            return false;
        }
        if Arc::ptr_eq(&self.repr, &other.repr) {
            return true;
        }
        match (&*self.repr, &*other.repr) {
            (
                Repr::Oxs { slots, adjacency },
                Repr::Oxs {
                    slots: s2,
                    adjacency: a2,
                },
            ) => slots == s2 && adjacency == a2,
            (
                Repr::CappedAdditive { cap, approved },
                Repr::CappedAdditive {
                    cap: c2,
                    approved: a2,
                },
            ) => cap == c2 && approved == a2,
            (Repr::Table { ranks }, Repr::Table { ranks: r2 }) => ranks == r2,
            _ => false,
        }
    }
}

impl fmt::Debug for MatroidRankValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("MatroidRankValuation");
        s.field("universe", &self.universe);
        match &*self.repr {
            Repr::Oxs { slots, adjacency } => s.field("slots", slots).field("adjacency", adjacency),
            Repr::CappedAdditive { cap, approved } => {
                s.field("cap", cap).field("approved", approved)
            }
            Repr::Table { ranks } => s.field("table_len", &ranks.len()),
            Repr::Callback { .. } => s.field("callback", &true),
            Repr::Contracted { base, fixed, .. } => {
                s.field("base", base).field("contracted_by", fixed)
            }
            Repr::Capped { base, cap } => s.field("base", base).field("cap", cap),
        };
        s.finish()
    }
}

fn check_members(universe: usize, set: &DoctorSet) -> Result<()> {
    match set.last() {
        Some(d) if d >= universe => Err(Error::input(format!(
            "doctor {d} outside universe of {universe}"
        ))),
        _ => Ok(()),
    }
}

fn mask_to_vec(mask: u64) -> Vec<usize> {
    (0..64).filter(|&d| mask & (1 << d) != 0).collect()
}

/// Augmenting-path bipartite matching between the doctors of `set` and the slots.
fn oxs_rank(slots: usize, adjacency: &[Vec<usize>], set: &DoctorSet) -> usize {
    fn augment(
        d: usize,
        adjacency: &[Vec<usize>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &r in &adjacency[d] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r].is_none_or(|o| augment(o, adjacency, owner, seen)) {
                owner[r] = Some(d);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; slots];
    let mut seen = vec![false; slots];
    let mut size = 0;
    for d in set.iter() {
        seen.iter_mut().for_each(|s| *s = false);
        if augment(d, adjacency, &mut owner, &mut seen) {
            size += 1;
        }
    }
    size
}

/// JSON form of a valuation. The doctor universe comes from the enclosing instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValuationSpec {
    Oxs {
        slots: usize,
        edges: Vec<(usize, usize)>,
    },
    CappedAdditive {
        cap: usize,
        approved: Vec<usize>,
    },
    /// Keys are comma-joined ascending doctor indices (`""` is the empty set).
    Table {
        table: BTreeMap<String, u32>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum MrfViolation {
    NonZeroEmpty {
        rank: i64,
    },
    NonBinaryMarginal {
        set: Vec<usize>,
        doctor: usize,
        marginal: i64,
    },
    NotSubmodular {
        smaller: Vec<usize>,
        larger: Vec<usize>,
        doctor: usize,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MrfReport {
    /// At most a bounded prefix of the violations found.
    pub violations: Vec<MrfViolation>,
    pub total: usize,
}

impl MrfReport {
    pub fn is_valid(&self) -> bool {
        self.total == 0
    }

    fn push(&mut self, v: MrfViolation) {
        self.total += 1;
        if self.violations.len() < MAX_LISTED_VIOLATIONS {
            self.violations.push(v);
        }
    }
}

/// A hospital bundle with its rank cached, for incremental marginal queries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BundleState {
    doctors: DoctorSet,
    cached_rank: usize,
}

impl BundleState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn doctors(&self) -> &DoctorSet {
        &self.doctors
    }

    pub fn rank(&self) -> usize {
        self.cached_rank
    }

    /// Marginal of `d` at the current bundle, costing a single rank query.
    pub fn marginal(&self, v: &MatroidRankValuation, d: usize) -> usize {
        v.eval(&self.doctors.with(d)) - self.cached_rank
    }

    pub fn insert(&mut self, v: &MatroidRankValuation, d: usize) {
        self.doctors.insert(d);
        self.cached_rank = v.eval(&self.doctors);
    }
}
