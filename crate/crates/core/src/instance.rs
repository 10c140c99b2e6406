//! Instances, allocations, welfare, and stability.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::DoctorSet;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::valuation::{MatroidRankValuation, ValuationSpec};

/// Doctor preferences over hospitals.
#[derive(Clone, Debug, PartialEq)]
pub enum DoctorPrefs {
    /// Per doctor, a strict complete order of hospital indices, best first.
    Ordinal(Vec<Vec<usize>>),
    /// Per doctor, a utility for every hospital. Negative means the doctor
    /// would rather stay unassigned.
    Cardinal(Vec<Vec<Rational>>),
}

impl DoctorPrefs {
    pub fn doctor_count(&self) -> usize {
        match self {
            DoctorPrefs::Ordinal(o) => o.len(),
            DoctorPrefs::Cardinal(c) => c.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    hospitals: Vec<MatroidRankValuation>,
    prefs: DoctorPrefs,
    /// `position[d][h]`: 0-based rank of `h` in doctor `d`'s ordinal list.
    position: Vec<Vec<usize>>,
}

impl Instance {
    pub fn new(hospitals: Vec<MatroidRankValuation>, prefs: DoctorPrefs) -> Result<Self> {
        let n = hospitals.len();
        if n == 0 {
            return Err(Error::input("an instance needs at least one hospital"));
        }
        let m = prefs.doctor_count();
        for (h, v) in hospitals.iter().enumerate() {
            if v.universe_size() != m {
                return Err(Error::input(format!(
                    "hospital {h} values {} doctors, instance has {m}",
                    v.universe_size()
                )));
            }
        }
        let mut position = Vec::new();
        match &prefs {
            DoctorPrefs::Ordinal(orders) => {
                for (d, order) in orders.iter().enumerate() {
                    let mut pos = vec![usize::MAX; n];
                    for (k, &h) in order.iter().enumerate() {
                        if h >= n || pos[h] != usize::MAX {
                            return Err(Error::input(format!(
                                "doctor {d}: order {order:?} is not a permutation of {n} hospitals"
                            )));
                        }
                        pos[h] = k;
                    }
                    if order.len() != n {
                        return Err(Error::input(format!(
                            "doctor {d}: order {order:?} is not a permutation of {n} hospitals"
                        )));
                    }
                    position.push(pos);
                }
            }
            DoctorPrefs::Cardinal(utils) => {
                for (d, u) in utils.iter().enumerate() {
                    if u.len() != n {
                        return Err(Error::input(format!(
                            "doctor {d} has {} utilities for {n} hospitals",
                            u.len()
                        )));
                    }
                }
            }
        }
        Ok(Self {
            hospitals,
            prefs,
            position,
        })
    }

    pub fn hospital_count(&self) -> usize {
        self.hospitals.len()
    }

    pub fn doctor_count(&self) -> usize {
        self.prefs.doctor_count()
    }

    pub fn hospitals(&self) -> &[MatroidRankValuation] {
        &self.hospitals
    }

    pub fn valuation(&self, h: usize) -> &MatroidRankValuation {
        &self.hospitals[h]
    }

    pub fn prefs(&self) -> &DoctorPrefs {
        &self.prefs
    }

    pub fn is_ordinal(&self) -> bool {
        matches!(self.prefs, DoctorPrefs::Ordinal(_))
    }

    /// Same doctors, hospital `h` replaced by `report`.
    pub fn with_valuation(&self, h: usize, report: MatroidRankValuation) -> Result<Self> {
        let mut hospitals = self.hospitals.clone();
        hospitals[h] = report;
        Self::new(hospitals, self.prefs.clone())
    }

    /// Same hospitals, doctor `d`'s ordinal list replaced.
    pub fn with_order(&self, d: usize, order: Vec<usize>) -> Result<Self> {
        let mut orders = self.ordinal_orders()?.to_vec();
        orders[d] = order;
        Self::new(self.hospitals.clone(), DoctorPrefs::Ordinal(orders))
    }

    pub fn ordinal_orders(&self) -> Result<&[Vec<usize>]> {
        match &self.prefs {
            DoctorPrefs::Ordinal(o) => Ok(o),
            DoctorPrefs::Cardinal(_) => Err(Error::Mode("ordinal preferences required".into())),
        }
    }

    pub fn cardinal_utilities(&self) -> Result<&[Vec<Rational>]> {
        match &self.prefs {
            DoctorPrefs::Cardinal(c) => Ok(c),
            DoctorPrefs::Ordinal(_) => Err(Error::Mode("cardinal preferences required".into())),
        }
    }

    /// 0-based position of `h` in `d`'s ordinal list.
    pub fn position(&self, d: usize, h: usize) -> Result<usize> {
        self.ordinal_orders()?;
        Ok(self.position[d][h])
    }

    /// Whether `d` strictly prefers hospital `h` to `current`. Being unassigned is
    /// worse than any hospital under ordinal preferences and worth 0 under cardinal ones.
    pub fn strictly_prefers(&self, d: usize, h: usize, current: Option<usize>) -> bool {
        if current == Some(h) {
            return false;
        }
        match &self.prefs {
            DoctorPrefs::Ordinal(_) => {
                current.is_none_or(|c| self.position[d][h] < self.position[d][c])
            }
            DoctorPrefs::Cardinal(u) => {
                let now = current.map_or_else(Rational::zero, |c| u[d][c].clone());
                u[d][h] > now
            }
        }
    }

    pub fn check_allocation(&self, alloc: &Allocation) -> Result<()> {
        if alloc.assignment.len() != self.doctor_count() {
            return Err(Error::input(format!(
                "allocation covers {} doctors, instance has {}",
                alloc.assignment.len(),
                self.doctor_count()
            )));
        }
        if let Some((d, h)) = alloc
            .iter_assigned()
            .find(|&(_, h)| h >= self.hospital_count())
        {
            return Err(Error::input(format!(
                "doctor {d} assigned to unknown hospital {h}"
            )));
        }
        Ok(())
    }

    pub fn is_non_redundant(&self, alloc: &Allocation) -> Result<bool> {
        self.check_allocation(alloc)?;
        Ok(alloc
            .bundles(self.hospital_count())
            .iter()
            .zip(&self.hospitals)
            .all(|(b, v)| v.eval(b) == b.len()))
    }

    /// Per-hospital utilities `v_h(X_h)`.
    pub fn hospital_utilities(&self, alloc: &Allocation) -> Vec<usize> {
        alloc
            .bundles(self.hospital_count())
            .iter()
            .zip(&self.hospitals)
            .map(|(b, v)| v.eval(b))
            .collect()
    }

    pub fn hospital_usw(&self, alloc: &Allocation) -> usize {
        self.hospital_utilities(alloc).iter().sum()
    }

    pub fn hospital_nsw(&self, alloc: &Allocation) -> BigUint {
        self.hospital_utilities(alloc)
            .into_iter()
            .map(BigUint::from)
            .product()
    }

    /// Sum of assigned doctors' utilities; unassigned doctors contribute 0.
    pub fn doctor_usw(&self, alloc: &Allocation) -> Result<Rational> {
        let u = self.cardinal_utilities()?;
        Ok(alloc
            .iter_assigned()
            .map(|(d, h)| u[d][h].clone())
            .fold(Rational::zero(), |a, b| a + b))
    }

    /// Product of assigned doctors' utilities (the empty product is 1).
    pub fn doctor_nsw(&self, alloc: &Allocation) -> Result<Rational> {
        let u = self.cardinal_utilities()?;
        let mut product = Rational::one();
        for (d, h) in alloc.iter_assigned() {
            if u[d][h] <= Rational::zero() {
                return Err(Error::Domain(format!(
                    "doctor {d} has nonpositive utility {} at hospital {h}",
                    rational::format(&u[d][h])
                )));
            }
            product *= &u[d][h];
        }
        Ok(product)
    }

    /// First (doctor, hospital) pair, in lexicographic order, with marginal 1 at the
    /// hospital's bundle and strictly preferred by the doctor.
    pub fn find_blocking_pair(&self, alloc: &Allocation) -> Result<Option<BlockingWitness>> {
        if !self.is_non_redundant(alloc)? {
            return Err(Error::input(
                "stability is only defined for non-redundant allocations",
            ));
        }
        let bundles = alloc.bundles(self.hospital_count());
        let ranks: Vec<usize> = bundles.iter().map(DoctorSet::len).collect();
        for d in 0..self.doctor_count() {
            let current = alloc.assignment[d];
            for h in 0..self.hospital_count() {
                if current == Some(h) || !self.strictly_prefers(d, h, current) {
                    continue;
                }
                if self.hospitals[h].eval(&bundles[h].with(d)) > ranks[h] {
                    return Ok(Some(BlockingWitness {
                        doctor: d,
                        hospital: h,
                    }));
                }
            }
        }
        Ok(None)
    }

    /// Non-redundant with no blocking pair. Malformed allocations are not stable.
    pub fn is_stable(&self, alloc: &Allocation) -> bool {
        matches!(self.find_blocking_pair(alloc), Ok(None))
    }

    /// Compares two allocations in the HWSD ordering: higher hospital welfare
    /// first, then the earliest doctor whose assignment differs decides.
    /// `Greater` means `x` is better.
    pub fn hwsd_compare(&self, x: &Allocation, y: &Allocation) -> Result<Ordering> {
        self.ordinal_orders()?;
        self.check_allocation(x)?;
        self.check_allocation(y)?;
        let by_welfare = self.hospital_usw(x).cmp(&self.hospital_usw(y));
        if by_welfare != Ordering::Equal {
            return Ok(by_welfare);
        }
        for (d, (a, b)) in x.assignment.iter().zip(&y.assignment).enumerate() {
            if a == b {
                continue;
            }
            return Ok(match (a, b) {
                (Some(_), None) => Ordering::Greater,
                (None, Some(_)) => Ordering::Less,
                (Some(a), Some(b)) => self.position[d][*b].cmp(&self.position[d][*a]),
                (None, None) => unreachable!(),
            });
        }
        Ok(Ordering::Equal)
    }

    /// Cardinal copy with Borda scores `n - k` for the hospital ranked `k`-th (1-based).
    pub fn borda_utilities(&self) -> Result<Instance> {
        let n = self.hospital_count() as i64;
        let utils = self
            .ordinal_orders()?
            .iter()
            .enumerate()
            .map(|(d, _)| {
                (0..self.hospital_count())
                    .map(|h| rational::int(n - 1 - self.position[d][h] as i64))
                    .collect()
            })
            .collect();
        Instance::new(self.hospitals.clone(), DoctorPrefs::Cardinal(utils))
    }

    pub fn to_file(&self) -> Result<InstanceFile> {
        let hospitals = self
            .hospitals
            .iter()
            .map(MatroidRankValuation::to_spec)
            .collect::<Result<_>>()?;
        let doctors = match &self.prefs {
            DoctorPrefs::Ordinal(o) => o.iter().cloned().map(DoctorEntry::Ordinal).collect(),
            DoctorPrefs::Cardinal(c) => c
                .iter()
                .map(|u| DoctorEntry::Cardinal(u.iter().map(rational::format).collect()))
                .collect(),
        };
        Ok(InstanceFile { hospitals, doctors })
    }

    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        let m = file.doctors.len();
        let hospitals = file
            .hospitals
            .iter()
            .map(|s| MatroidRankValuation::from_spec(m, s))
            .collect::<Result<Vec<_>>>()?;
        let ordinal = file
            .doctors
            .iter()
            .all(|d| matches!(d, DoctorEntry::Ordinal(_)));
        let prefs = if ordinal {
            DoctorPrefs::Ordinal(
                file.doctors
                    .iter()
                    .map(|d| match d {
                        DoctorEntry::Ordinal(o) => o.clone(),
                        DoctorEntry::Cardinal(_) => unreachable!(),
                    })
                    .collect(),
            )
        } else {
            DoctorPrefs::Cardinal(
                file.doctors
                    .iter()
                    .enumerate()
                    .map(|(d, entry)| match entry {
                        DoctorEntry::Cardinal(u) => u.iter().map(|s| rational::parse(s)).collect(),
                        DoctorEntry::Ordinal(_) => Err(Error::input(format!(
                            "doctor {d} is ordinal in a cardinal instance"
                        ))),
                    })
                    .collect::<Result<_>>()?,
            )
        };
        Self::new(hospitals, prefs)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file()?)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

/// JSON form of an instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub hospitals: Vec<ValuationSpec>,
    pub doctors: Vec<DoctorEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoctorEntry {
    /// Hospital indices, best first.
    Ordinal(Vec<usize>),
    /// One `"p/q"` utility per hospital.
    Cardinal(Vec<String>),
}

/// Assignment of each doctor to a hospital or to the unassigned pool.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Allocation {
    pub assignment: Vec<Option<usize>>,
}

impl Allocation {
    pub fn new(assignment: Vec<Option<usize>>) -> Self {
        Self { assignment }
    }

    pub fn empty(doctors: usize) -> Self {
        Self::new(vec![None; doctors])
    }

    /// Builds an allocation from per-hospital bundles; a doctor listed twice is an error.
    pub fn from_bundles(doctors: usize, bundles: &[&[usize]]) -> Result<Self> {
        let mut assignment = vec![None; doctors];
        for (h, bundle) in bundles.iter().enumerate() {
            for &d in bundle.iter() {
                let slot = assignment
                    .get_mut(d)
                    .ok_or_else(|| Error::input(format!("doctor {d} out of range")))?;
                if let Some(other) = slot.replace(h) {
                    return Err(Error::input(format!(
                        "doctor {d} assigned to both hospital {other} and {h}"
                    )));
                }
            }
        }
        Ok(Self::new(assignment))
    }

    pub fn doctor_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn hospital_of(&self, d: usize) -> Option<usize> {
        self.assignment[d]
    }

    pub fn iter_assigned(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(d, h)| h.map(|h| (d, h)))
    }

    pub fn assigned_count(&self) -> usize {
        self.iter_assigned().count()
    }

    pub fn bundle(&self, h: usize) -> DoctorSet {
        self.iter_assigned()
            .filter(|&(_, x)| x == h)
            .map(|(d, _)| d)
            .collect()
    }

    pub fn bundles(&self, hospitals: usize) -> Vec<DoctorSet> {
        let mut out = vec![DoctorSet::new(); hospitals];
        for (d, h) in self.iter_assigned() {
            if h < hospitals {
                out[h].insert(d);
            }
        }
        out
    }

    pub fn unassigned(&self) -> DoctorSet {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, h)| h.is_none())
            .map(|(d, _)| d)
            .collect()
    }

    pub fn bundle_sizes(&self, hospitals: usize) -> Vec<usize> {
        let mut sizes = vec![0; hospitals];
        for (_, h) in self.iter_assigned() {
            sizes[h] += 1;
        }
        sizes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingWitness {
    pub doctor: usize,
    pub hospital: usize,
}

/// Valuation families for random instances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKind {
    /// `1..=m` slots, each doctor-slot edge present with probability 0.4.
    Oxs,
    /// Each doctor approved with probability 0.6, cap uniform in `1..=m`.
    CappedAdditive,
    /// Rank of `GF(2)` vectors in dimension `1..=3`, one uniform vector per doctor.
    Table,
    /// Each hospital draws one of the three kinds uniformly.
    Mixed,
}

impl std::str::FromStr for RandomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oxs" => Ok(RandomKind::Oxs),
            "capped_additive" | "capped-additive" => Ok(RandomKind::CappedAdditive),
            "table" => Ok(RandomKind::Table),
            "mixed" => Ok(RandomKind::Mixed),
            other => Err(Error::input(format!("unknown valuation kind {other:?}"))),
        }
    }
}

fn random_valuation(
    m: usize,
    kind: RandomKind,
    rng: &mut ChaCha8Rng,
) -> Result<MatroidRankValuation> {
    let kind = match kind {
        RandomKind::Mixed => [
            RandomKind::Oxs,
            RandomKind::CappedAdditive,
            RandomKind::Table,
        ][rng.gen_range(0..3)],
        k => k,
    };
    match kind {
        RandomKind::Oxs => {
            let slots = rng.gen_range(1..=m.max(1));
            let mut edges = Vec::new();
            for d in 0..m {
                for r in 0..slots {
                    if rng.gen_bool(0.4) {
                        edges.push((d, r));
                    }
                }
            }
            MatroidRankValuation::binary_oxs(m, slots, &edges)
        }
        RandomKind::CappedAdditive => {
            let approved: DoctorSet = (0..m).filter(|_| rng.gen_bool(0.6)).collect();
            let cap = rng.gen_range(1..=m.max(1));
            MatroidRankValuation::capped_additive(m, cap, approved)
        }
        RandomKind::Table => {
            let dim = rng.gen_range(1..=3u32);
            let vectors: Vec<u8> = (0..m).map(|_| rng.gen_range(0..1u8 << dim)).collect();
            Ok(MatroidRankValuation::from_fn(m, move |s| {
                gf2_rank(s.iter().map(|d| vectors[d]))
            }))
        }
        RandomKind::Mixed => unreachable!(),
    }
}

fn gf2_rank(vectors: impl Iterator<Item = u8>) -> usize {
    let mut basis = [0u8; 8];
    let mut rank = 0;
    for mut v in vectors {
        for bit in (0..8).rev() {
            if v & (1 << bit) == 0 {
                continue;
            }
            if basis[bit] == 0 {
                basis[bit] = v;
                rank += 1;
                break;
            }
            v ^= basis[bit];
        }
    }
    rank
}

fn random_hospitals(
    n: usize,
    m: usize,
    kind: RandomKind,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<MatroidRankValuation>> {
    if n == 0 {
        return Err(Error::input("an instance needs at least one hospital"));
    }
    (0..n).map(|_| random_valuation(m, kind, rng)).collect()
}

/// Reproducible random instance with uniformly random strict doctor orders.
pub fn random_instance(n: usize, m: usize, kind: RandomKind, seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hospitals = random_hospitals(n, m, kind, &mut rng)?;
    let orders = (0..m)
        .map(|_| {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();
    Instance::new(hospitals, DoctorPrefs::Ordinal(orders))
}

/// Reproducible random instance with integer utilities uniform in `lo..=hi`.
pub fn random_cardinal_instance(
    n: usize,
    m: usize,
    kind: RandomKind,
    seed: u64,
    lo: i64,
    hi: i64,
) -> Result<Instance> {
    if lo > hi {
        return Err(Error::input("empty utility range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hospitals = random_hospitals(n, m, kind, &mut rng)?;
    let utils = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| rational::int(rng.gen_range(lo..=hi)))
                .collect()
        })
        .collect();
    Instance::new(hospitals, DoctorPrefs::Cardinal(utils))
}
