//! Exhaustive ground truth for small instances.
//!
//! Everything here enumerates: non-redundant allocations, misreports, or doctor
//! orders. Work is refused up front when the state count exceeds a budget.

use std::collections::HashSet;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::DoctorSet;
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::intersection::{self, Weights};
use crate::mechanism::Mechanism;
use crate::rational::{self, Rational};
use crate::valuation::{BundleState, MatroidRankValuation, ValuationSpec};
use crate::welfare_opt::DoctorObjective;

/// Default cap on enumerated states; override per call.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// `(n + 1)^m`, saturating.
pub fn enumeration_size(inst: &Instance) -> u128 {
    let base = inst.hospital_count() as u128 + 1;
    (0..inst.doctor_count()).fold(1u128, |acc, _| acc.saturating_mul(base))
}

fn refuse_over(what: &'static str, required: u128, budget: u128) -> Result<()> {
    if required > budget {
        return Err(Error::TooLarge {
            what,
            required,
            budget,
        });
    }
    Ok(())
}

/// Calls `f` on every non-redundant allocation exactly once, in lexicographic
/// order of the assignment vector (unassigned first, then hospitals by index).
pub fn for_each_non_redundant<F: FnMut(&Allocation)>(
    inst: &Instance,
    budget: u128,
    mut f: F,
) -> Result<()> {
    refuse_over("allocation enumeration", enumeration_size(inst), budget)?;
    let mut bundles = vec![BundleState::new(); inst.hospital_count()];
    let mut alloc = Allocation::empty(inst.doctor_count());
    visit(inst, 0, &mut bundles, &mut alloc, &mut f);
    Ok(())
}

fn visit<F: FnMut(&Allocation)>(
    inst: &Instance,
    d: usize,
    bundles: &mut Vec<BundleState>,
    alloc: &mut Allocation,
    f: &mut F,
) {
    if d == inst.doctor_count() {
        f(alloc);
        return;
    }
    visit(inst, d + 1, bundles, alloc, f);
    for h in 0..inst.hospital_count() {
        let v = inst.valuation(h);
        if bundles[h].marginal(v, d) == 0 {
            continue;
        }
        let saved = bundles[h].clone();
        bundles[h].insert(v, d);
        alloc.assignment[d] = Some(h);
        visit(inst, d + 1, bundles, alloc, f);
        alloc.assignment[d] = None;
        bundles[h] = saved;
    }
}

pub fn enumerate_non_redundant(inst: &Instance) -> Result<Vec<Allocation>> {
    enumerate_non_redundant_within(inst, DEFAULT_BUDGET)
}

pub fn enumerate_non_redundant_within(inst: &Instance, budget: u128) -> Result<Vec<Allocation>> {
    let mut out = Vec::new();
    for_each_non_redundant(inst, budget, |a| out.push(a.clone()))?;
    Ok(out)
}

pub fn brute_max_usw(inst: &Instance) -> Result<usize> {
    let mut best = 0;
    for_each_non_redundant(inst, DEFAULT_BUDGET, |a| {
        best = best.max(a.assigned_count())
    })?;
    Ok(best)
}

pub fn brute_stable(inst: &Instance) -> Result<Vec<Allocation>> {
    let mut out = Vec::new();
    for_each_non_redundant(inst, DEFAULT_BUDGET, |a| {
        if inst.is_stable(a) {
            out.push(a.clone());
        }
    })?;
    Ok(out)
}

/// Largest hospital Nash welfare among stable allocations.
pub fn brute_best_stable_nsw(inst: &Instance) -> Result<BigUint> {
    Ok(brute_stable(inst)?
        .iter()
        .map(|a| inst.hospital_nsw(a))
        .max()
        .unwrap_or_else(BigUint::zero))
}

/// Best allocation in the HWSD ordering.
pub fn brute_hwsd_best(inst: &Instance) -> Result<Allocation> {
    inst.ordinal_orders()?;
    let mut best: Option<Allocation> = None;
    for_each_non_redundant(inst, DEFAULT_BUDGET, |a| {
        let better = best.as_ref().is_none_or(|b| {
            inst.hwsd_compare(a, b).expect("ordinal instance") == std::cmp::Ordering::Greater
        });
        if better {
            best = Some(a.clone());
        }
    })?;
    Ok(best.expect("the empty allocation is non-redundant"))
}

/// Blocking test straight from the set definition: some hospital `h` and
/// non-redundant `S` with `v_h(S) > v_h(X_h)`, every doctor in `S` either
/// already at `h` or strictly preferring `h`.
pub fn has_blocking_set(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    if !inst.is_non_redundant(alloc)? {
        return Err(Error::input(
            "stability is only defined for non-redundant allocations",
        ));
    }
    let m = inst.doctor_count();
    refuse_over(
        "blocking-set enumeration",
        (inst.hospital_count() as u128) << m.min(120),
        DEFAULT_BUDGET,
    )?;
    for h in 0..inst.hospital_count() {
        let v = inst.valuation(h);
        let current = alloc.bundle(h).len();
        let willing: Vec<usize> = (0..m)
            .filter(|&d| {
                alloc.hospital_of(d) == Some(h) || inst.strictly_prefers(d, h, alloc.hospital_of(d))
            })
            .collect();
        for mask in 0u64..(1u64 << willing.len()) {
            let s: DoctorSet = willing
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask & (1 << i) != 0)
                .map(|(_, &d)| d)
                .collect();
            if s.len() > current && v.rank(&s)? == s.len() {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Best total weight among non-redundant allocations of each size, using only
/// pairs with a weight. Entry `k` is `None` when no such allocation has size `k`.
pub fn brute_max_weight_by_size(
    inst: &Instance,
    weights: &Weights<Rational>,
) -> Result<Vec<Option<Rational>>> {
    let mut best: Vec<Option<Rational>> = vec![None; inst.doctor_count() + 1];
    for_each_non_redundant(inst, DEFAULT_BUDGET, |a| {
        let mut total = rational::int(0);
        for (d, h) in a.iter_assigned() {
            match &weights[d][h] {
                Some(w) => total += w,
                None => return,
            }
        }
        let slot = &mut best[a.assigned_count()];
        if slot.as_ref().is_none_or(|b| total > *b) {
            *slot = Some(total);
        }
    })?;
    Ok(best)
}

/// Every allocation of size `k` attaining the maximum doctor welfare at that size.
pub fn brute_k_mdw_allocations(inst: &Instance, k: usize) -> Result<Vec<Allocation>> {
    let weights = intersection::cardinal_weights(inst)?;
    let mut best: Option<Rational> = None;
    let mut out = Vec::new();
    for_each_non_redundant(inst, DEFAULT_BUDGET, |a| {
        if a.assigned_count() != k {
            return;
        }
        let mut total = rational::int(0);
        for (d, h) in a.iter_assigned() {
            match &weights[d][h] {
                Some(w) => total += w,
                None => return,
            }
        }
        match &best {
            Some(b) if total < *b => {}
            Some(b) if total == *b => out.push(a.clone()),
            _ => {
                best = Some(total);
                out = vec![a.clone()];
            }
        }
    })?;
    Ok(out)
}

/// Two `k`-MDW allocations `x`, `y` and a hospital `i` with `|x_i| < |y_i|`
/// for which no single unit move into `i` keeps `x` `k`-MDW.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeCounterexample {
    pub x: Allocation,
    pub y: Allocation,
    pub hospital: usize,
}

/// Exhaustively checks the size-exchange property of `k`-MDW allocations.
pub fn k_mdw_exchange_counterexample(
    inst: &Instance,
    k: usize,
) -> Result<Option<ExchangeCounterexample>> {
    let n = inst.hospital_count();
    let optima = brute_k_mdw_allocations(inst, k)?;
    let profiles: Vec<Vec<usize>> = optima.iter().map(|a| a.bundle_sizes(n)).collect();
    let reachable: HashSet<&Vec<usize>> = profiles.iter().collect();
    for (x, xs) in optima.iter().zip(&profiles) {
        for (y, ys) in optima.iter().zip(&profiles) {
            for i in (0..n).filter(|&i| xs[i] < ys[i]) {
                let found = (0..n).filter(|&j| xs[j] > ys[j]).any(|j| {
                    let mut moved = xs.clone();
                    moved[i] += 1;
                    moved[j] -= 1;
                    reachable.contains(&moved)
                });
                if !found {
                    return Ok(Some(ExchangeCounterexample {
                        x: x.clone(),
                        y: y.clone(),
                        hospital: i,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Lexicographic optimum over non-redundant allocations: doctor welfare first,
/// then hospital Nash welfare. Negative-utility pairs are excluded; in NSW mode
/// every utility must be positive.
pub fn brute_lex_optimum(
    inst: &Instance,
    objective: DoctorObjective,
) -> Result<(Rational, BigUint)> {
    let utils = inst.cardinal_utilities()?;
    if objective == DoctorObjective::Nsw {
        if let Some((d, h)) = (0..utils.len())
            .flat_map(|d| (0..inst.hospital_count()).map(move |h| (d, h)))
            .find(|&(d, h)| utils[d][h] <= rational::int(0))
        {
            return Err(Error::Domain(format!(
                "doctor {d} has nonpositive utility at hospital {h}"
            )));
        }
    }
    let mut best: Option<(Rational, BigUint)> = None;
    for_each_non_redundant(inst, DEFAULT_BUDGET, |a| {
        if a.iter_assigned()
            .any(|(d, h)| utils[d][h] < rational::int(0))
        {
            return;
        }
        let welfare = match objective {
            DoctorObjective::Usw => inst.doctor_usw(a),
            DoctorObjective::Nsw => inst.doctor_nsw(a),
        }
        .expect("cardinal instance with checked utilities");
        let cand = (welfare, inst.hospital_nsw(a));
        if best.as_ref().is_none_or(|b| cand > *b) {
            best = Some(cand);
        }
    })?;
    Ok(best.expect("the empty allocation is non-redundant"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MisreportFamily {
    /// `f_T(S) = |S ∩ T|` for every doctor set `T`.
    SubsetFT,
    /// Every capped additive valuation `(cap, approved)` with `cap <= m`.
    CappedAdditiveAll,
    /// Every strict doctor order; applies to doctors only.
    OrdinalAll,
}

impl std::str::FromStr for MisreportFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subset_f_t" => Ok(MisreportFamily::SubsetFT),
            "capped_additive_all" => Ok(MisreportFamily::CappedAdditiveAll),
            "ordinal_all" => Ok(MisreportFamily::OrdinalAll),
            other => Err(Error::input(format!("unknown misreport family {other:?}"))),
        }
    }
}

impl MisreportFamily {
    pub fn size(self, inst: &Instance) -> u128 {
        let m = inst.doctor_count() as u32;
        let subsets = 2u128.saturating_pow(m);
        match self {
            MisreportFamily::SubsetFT => subsets,
            MisreportFamily::CappedAdditiveAll => subsets.saturating_mul(m as u128 + 1),
            MisreportFamily::OrdinalAll => (1..=inst.hospital_count() as u128).product(),
        }
    }

    /// The hospital reports of this family, in a fixed order.
    pub fn hospital_reports(self, inst: &Instance) -> Result<Vec<MatroidRankValuation>> {
        let m = inst.doctor_count();
        refuse_over("misreport family", self.size(inst), DEFAULT_BUDGET)?;
        let subsets = || (0u64..1 << m).map(DoctorSet::from_mask);
        match self {
            MisreportFamily::SubsetFT => subsets()
                .map(|t| MatroidRankValuation::indicator(m, t))
                .collect(),
            MisreportFamily::CappedAdditiveAll => (0..=m)
                .flat_map(|cap| subsets().map(move |t| (cap, t)))
                .map(|(cap, t)| MatroidRankValuation::capped_additive(m, cap, t))
                .collect(),
            MisreportFamily::OrdinalAll => {
                Err(Error::input("ordinal_all is a doctor misreport family"))
            }
        }
    }
}

/// Manipulated over truthful utility. `0/0` counts as 1; `x/0` with `x > 0`
/// is `Infinite`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum GainRatio {
    Finite(Rational),
    Infinite,
}

impl GainRatio {
    pub fn of(truthful: usize, manipulated: usize) -> Self {
        match (truthful, manipulated) {
            (0, 0) => GainRatio::Finite(rational::int(1)),
            (0, _) => GainRatio::Infinite,
            (t, x) => GainRatio::Finite(rational::ratio(x as i64, t as i64)),
        }
    }

    pub fn exceeds(&self, bound: &Rational) -> bool {
        match self {
            GainRatio::Finite(r) => r > bound,
            GainRatio::Infinite => true,
        }
    }
}

impl std::fmt::Display for GainRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GainRatio::Finite(r) => f.write_str(&rational::format(r)),
            GainRatio::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for GainRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Maximum number of reports evaluated; the rest are skipped and the
    /// result is flagged partial.
    pub budget: u128,
    /// Worker threads; 1 runs inline.
    pub jobs: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManipulationReport {
    pub hospital: usize,
    pub mechanism: Mechanism,
    pub truthful_utility: usize,
    pub truthful_allocation: Allocation,
    pub best_ratio: GainRatio,
    pub best_utility: usize,
    /// First report (in family order) attaining the best ratio.
    pub witness: Option<ValuationSpec>,
    pub witness_allocation: Allocation,
    pub reports_evaluated: u128,
    pub reports_total: u128,
    pub partial: bool,
}

fn run_parallel<T, F>(jobs: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if jobs <= 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::input(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

/// Largest true-utility gain of hospital `h` over the given reports.
pub fn manipulation_search_over(
    inst: &Instance,
    mechanism: Mechanism,
    h: usize,
    reports: &[MatroidRankValuation],
    opts: SearchOptions,
) -> Result<ManipulationReport> {
    if h >= inst.hospital_count() {
        return Err(Error::input(format!("no hospital {h}")));
    }
    let truth = inst.valuation(h);
    let (truthful_allocation, _) = mechanism.run(inst)?;
    let truthful_utility = truth.rank(&truthful_allocation.bundle(h))?;
    let evaluated = (reports.len() as u128).min(opts.budget) as usize;
    let outcomes = run_parallel(opts.jobs, evaluated, |i| {
        let (alloc, _) = mechanism.run(&inst.with_valuation(h, reports[i].clone())?)?;
        let u = truth.rank(&alloc.bundle(h))?;
        Ok((u, alloc))
    })?;
    let mut best = (
        GainRatio::of(truthful_utility, truthful_utility),
        truthful_utility,
        None,
        truthful_allocation.clone(),
    );
    for (i, (u, alloc)) in outcomes.into_iter().enumerate() {
        let ratio = GainRatio::of(truthful_utility, u);
        if best.2.is_none() || ratio > best.0 {
            best = (ratio, u, Some(i), alloc);
        }
    }
    let witness = match best.2 {
        Some(i) => Some(reports[i].to_spec()?),
        None => None,
    };
    Ok(ManipulationReport {
        hospital: h,
        mechanism,
        truthful_utility,
        truthful_allocation,
        best_ratio: best.0,
        best_utility: best.1,
        witness,
        witness_allocation: best.3,
        reports_evaluated: evaluated as u128,
        reports_total: reports.len() as u128,
        partial: evaluated < reports.len(),
    })
}

pub fn manipulation_search(
    inst: &Instance,
    mechanism: Mechanism,
    h: usize,
    family: MisreportFamily,
    opts: SearchOptions,
) -> Result<ManipulationReport> {
    let reports = family.hospital_reports(inst)?;
    manipulation_search_over(inst, mechanism, h, &reports, opts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DoctorManipulationReport {
    pub doctor: usize,
    pub mechanism: Mechanism,
    pub truthful_hospital: Option<usize>,
    /// Best hospital reachable by any report, judged by the true order.
    pub best_hospital: Option<usize>,
    /// A report yielding a strictly better hospital, if one exists.
    pub improving_order: Option<Vec<usize>>,
    pub reports_evaluated: u128,
}

/// Doctor orders beyond this many hospitals are refused.
pub const MAX_DOCTOR_SEARCH_HOSPITALS: usize = 5;

/// Tries every strict order as doctor `d`'s report.
pub fn doctor_manipulation_search(
    inst: &Instance,
    mechanism: Mechanism,
    d: usize,
) -> Result<DoctorManipulationReport> {
    inst.ordinal_orders()?;
    if d >= inst.doctor_count() {
        return Err(Error::input(format!("no doctor {d}")));
    }
    let n = inst.hospital_count();
    if n > MAX_DOCTOR_SEARCH_HOSPITALS {
        return Err(Error::TooLarge {
            what: "doctor report enumeration",
            required: MisreportFamily::OrdinalAll.size(inst),
            budget: (1..=MAX_DOCTOR_SEARCH_HOSPITALS as u128).product(),
        });
    }
    let (truth, _) = mechanism.run(inst)?;
    let truthful_hospital = truth.hospital_of(d);
    let mut best_hospital = truthful_hospital;
    let mut improving_order = None;
    let mut evaluated = 0u128;
    for order in (0..n).permutations(n) {
        evaluated += 1;
        let (alloc, _) = mechanism.run(&inst.with_order(d, order.clone())?)?;
        if let Some(got) = alloc.hospital_of(d) {
            if inst.strictly_prefers(d, got, best_hospital) {
                best_hospital = Some(got);
            }
            if improving_order.is_none() && inst.strictly_prefers(d, got, truthful_hospital) {
                improving_order = Some(order);
            }
        }
    }
    Ok(DoctorManipulationReport {
        doctor: d,
        mechanism,
        truthful_hospital,
        best_hospital,
        improving_order,
        reports_evaluated: evaluated,
    })
}
