//! Weighted matroid intersection over hospital-doctor pairs.
//!
//! An allocation is a set of pairs `(h, d)`; it is feasible when every hospital
//! bundle is non-redundant (the direct sum of hospital matroids) and every
//! doctor appears at most once (a partition matroid). Maximum-weight common
//! independent sets of each exact size are found by successive shortest
//! augmenting paths with `(length, arc count)` labels.

mod exchange;
mod solver;
mod weight;

use serde::{Deserialize, Serialize};

pub use exchange::{build_exchange_graph, is_valid_swap, uncross, ExchangeGraph, SwapCycle};
pub use solver::GroundElement;
pub use weight::{LogWeight, TierWeight, Weight};

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::rational::Rational;
use crate::valuation::MatroidRankValuation;

/// Per `[doctor][hospital]` weight; `None` removes the pair from the ground set.
pub type Weights<W> = Vec<Vec<Option<W>>>;

/// An allocation together with its total weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedAllocation<W> {
    pub allocation: Allocation,
    pub weight: W,
}

impl<W> WeightedAllocation<W> {
    /// Hospital welfare, which equals the number of assigned doctors.
    pub fn size(&self) -> usize {
        self.allocation.assigned_count()
    }
}

fn all_pairs(inst: &Instance) -> Vec<GroundElement> {
    (0..inst.doctor_count())
        .flat_map(|doctor| {
            (0..inst.hospital_count()).map(move |hospital| GroundElement { hospital, doctor })
        })
        .collect()
}

fn to_allocation(doctors: usize, ground: &[GroundElement], members: &[usize]) -> Allocation {
    let mut a = Allocation::empty(doctors);
    for &e in members {
        a.assignment[ground[e].doctor] = Some(ground[e].hospital);
    }
    a
}

/// Maximum hospital welfare over all non-redundant allocations.
pub fn max_usw(inst: &Instance) -> usize {
    max_usw_over(inst.hospitals(), inst.doctor_count(), &all_pairs(inst))
}

/// A maximum hospital-welfare allocation.
pub fn max_usw_allocation(inst: &Instance) -> Allocation {
    let ground = all_pairs(inst);
    let members = solver::max_cardinality(inst.hospitals(), inst.doctor_count(), &ground);
    to_allocation(inst.doctor_count(), &ground, &members)
}

pub(crate) fn max_usw_over(
    hospitals: &[MatroidRankValuation],
    doctors: usize,
    ground: &[GroundElement],
) -> usize {
    solver::max_cardinality(hospitals, doctors, ground).len()
}

fn weighted_ground<W: Weight>(weights: &Weights<W>) -> (Vec<GroundElement>, Vec<W>) {
    let mut ground = Vec::new();
    let mut ws = Vec::new();
    for (doctor, row) in weights.iter().enumerate() {
        for (hospital, w) in row.iter().enumerate() {
            if let Some(w) = w {
                ground.push(GroundElement { hospital, doctor });
                ws.push(w.clone());
            }
        }
    }
    (ground, ws)
}

fn check_weights<W>(inst: &Instance, weights: &Weights<W>) -> Result<()> {
    if weights.len() != inst.doctor_count()
        || weights.iter().any(|r| r.len() != inst.hospital_count())
    {
        return Err(Error::input("weight table does not match instance shape"));
    }
    Ok(())
}

/// Maximum-weight feasible allocations of every size from 0 up to the largest
/// achievable; entry `k` has exactly `k` assigned doctors.
pub fn max_weight_all_k<W: Weight>(
    inst: &Instance,
    weights: &Weights<W>,
) -> Result<Vec<WeightedAllocation<W>>> {
    max_weight_all_k_with(inst.hospitals(), inst, weights, None)
}

fn max_weight_all_k_with<W: Weight>(
    hospitals: &[MatroidRankValuation],
    inst: &Instance,
    weights: &Weights<W>,
    limit: Option<usize>,
) -> Result<Vec<WeightedAllocation<W>>> {
    check_weights(inst, weights)?;
    let (ground, ws) = weighted_ground(weights);
    let m = inst.doctor_count();
    Ok(
        solver::max_weight_by_size(hospitals, m, &ground, &ws, limit)
            .into_iter()
            .map(|opt| WeightedAllocation {
                allocation: to_allocation(m, &ground, &opt.members),
                weight: opt.weight,
            })
            .collect(),
    )
}

/// A maximum-weight feasible allocation with exactly `k` assigned doctors, or
/// `None` when no feasible allocation has that size.
pub fn max_weight_k<W: Weight>(
    inst: &Instance,
    weights: &Weights<W>,
    k: usize,
) -> Result<Option<WeightedAllocation<W>>> {
    let mut all = max_weight_all_k_with(inst.hospitals(), inst, weights, Some(k))?;
    Ok(if all.len() > k { all.pop() } else { None })
}

/// Doctor utilities as weights, dropping pairs a doctor finds worse than being unassigned.
pub fn cardinal_weights(inst: &Instance) -> Result<Weights<Rational>> {
    let zero = Rational::from_integer(0.into());
    Ok(inst
        .cardinal_utilities()?
        .iter()
        .map(|row| {
            row.iter()
                .map(|u| (*u >= zero).then(|| u.clone()))
                .collect()
        })
        .collect())
}

/// Multiplicative weights whose sums are products of utilities, so maximum
/// weight means maximum doctor Nash welfare. Every utility must be positive.
pub fn log_weights(inst: &Instance) -> Result<Weights<LogWeight>> {
    let zero = Rational::from_integer(0.into());
    let mut weights = Vec::with_capacity(inst.doctor_count());
    for (d, row) in inst.cardinal_utilities()?.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (h, u) in row.iter().enumerate() {
            if *u <= zero {
                return Err(Error::Domain(format!(
                    "doctor {d} has nonpositive utility {} at hospital {h}",
                    crate::rational::format(u)
                )));
            }
            out.push(Some(LogWeight::new(u.clone())));
        }
        weights.push(out);
    }
    Ok(weights)
}

fn capped_hospitals(inst: &Instance, caps: Option<&[usize]>) -> Result<Vec<MatroidRankValuation>> {
    match caps {
        None => Ok(inst.hospitals().to_vec()),
        Some(c) if c.len() == inst.hospital_count() => Ok(inst
            .hospitals()
            .iter()
            .zip(c)
            .map(|(v, &cap)| v.cap(cap))
            .collect()),
        Some(_) => Err(Error::input(
            "cap vector length differs from hospital count",
        )),
    }
}

/// A `k`-maximal doctor-welfare allocation: maximum doctor welfare among
/// allocations with hospital welfare exactly `k`, under optional per-hospital caps.
pub fn k_mdw(
    inst: &Instance,
    k: usize,
    caps: Option<&[usize]>,
) -> Result<Option<WeightedAllocation<Rational>>> {
    k_mdw_weighted(inst, &cardinal_weights(inst)?, k, caps)
}

pub(crate) fn k_mdw_weighted<W: Weight>(
    inst: &Instance,
    weights: &Weights<W>,
    k: usize,
    caps: Option<&[usize]>,
) -> Result<Option<WeightedAllocation<W>>> {
    let hospitals = capped_hospitals(inst, caps)?;
    let mut all = max_weight_all_k_with(&hospitals, inst, weights, Some(k))?;
    Ok(if all.len() > k { all.pop() } else { None })
}

/// Best weight over all sizes; ties go to the largest size.
pub(crate) fn best_over_sizes<W: Weight>(all: Vec<WeightedAllocation<W>>) -> WeightedAllocation<W> {
    all.into_iter()
        .rev()
        .reduce(|best, cand| {
            if cand.weight > best.weight {
                cand
            } else {
                best
            }
        })
        .expect("size 0 is always feasible")
}

/// A stable allocation maximizing doctor welfare, with the largest hospital
/// welfare among such allocations.
pub fn max_doctor_usw_with_max_k(inst: &Instance) -> Result<WeightedAllocation<Rational>> {
    Ok(best_over_sizes(max_weight_all_k(
        inst,
        &cardinal_weights(inst)?,
    )?))
}

/// An allocation maximizing doctor Nash welfare over assigned doctors, with the
/// largest hospital welfare among such allocations. The weight is the product.
pub fn max_doctor_nsw_with_max_k(inst: &Instance) -> Result<WeightedAllocation<Rational>> {
    let best = best_over_sizes(max_weight_all_k(inst, &log_weights(inst)?)?);
    Ok(WeightedAllocation {
        allocation: best.allocation,
        weight: best.weight.value().clone(),
    })
}

/// Which sequential mechanism an ordinal weight encoding reproduces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalEncoding {
    SerialDictatorship,
    Hwsd,
}

/// Lexicographic weights reproducing a sequential mechanism.
///
/// Tier 0 carries the large constant `M` (1 per assigned doctor, HWSD only).
/// Tier `1 + i` belongs to doctor `i` and holds the doctor's score for the
/// hospital: `n - k + 1` for the hospital ranked `k`-th, so every hospital
/// scores strictly above staying unassigned. Earlier doctors dominate later
/// ones, which is what the base-`(2n+1)` powers achieve in integer form.
pub fn ordinal_weights(inst: &Instance, mode: OrdinalEncoding) -> Result<Weights<TierWeight>> {
    let n = inst.hospital_count();
    let orders = inst.ordinal_orders()?;
    Ok((0..orders.len())
        .map(|d| {
            (0..n)
                .map(|h| {
                    let score = (n - inst.position(d, h).expect("ordinal")) as i64;
                    let mut w = TierWeight::unit(1 + d, score);
                    if mode == OrdinalEncoding::Hwsd {
                        w = w + TierWeight::unit(0, 1);
                    }
                    Some(w)
                })
                .collect()
        })
        .collect())
}

/// Solves the ordinal encoding over all sizes and returns the best allocation.
pub fn solve_ordinal_encoding(inst: &Instance, mode: OrdinalEncoding) -> Result<Allocation> {
    let weights = ordinal_weights(inst, mode)?;
    Ok(best_over_sizes(max_weight_all_k(inst, &weights)?).allocation)
}
