//! Hospital Nash welfare subject to maximum doctor welfare.
//!
//! For every hospital welfare `k` the search starts from a `k`-MDW allocation,
//! freezes bundle sizes into caps and moves one unit of cap at a time from a
//! larger hospital to a smaller one, keeping a move only when the capped
//! optimum still reaches the uncapped `k`-MDW doctor welfare.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::intersection::{self, Weight, WeightedAllocation, Weights};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoctorObjective {
    #[default]
    Usw,
    Nsw,
}

impl std::str::FromStr for DoctorObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "usw" => Ok(DoctorObjective::Usw),
            "nsw" => Ok(DoctorObjective::Nsw),
            other => Err(Error::input(format!("unknown doctor objective {other:?}"))),
        }
    }
}

/// One attempted cap move from hospital `from` to hospital `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferAttempt {
    pub from: usize,
    pub to: usize,
    pub accepted: bool,
}

/// The local search run for one value of `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSearchLog {
    pub k: usize,
    pub initial_caps: Vec<usize>,
    pub final_caps: Vec<usize>,
    pub attempts: Vec<TransferAttempt>,
    /// Potential before the first move and after every accepted move.
    #[serde(with = "rational::text_vec")]
    pub potentials: Vec<Rational>,
}

impl LocalSearchLog {
    pub fn accepted_count(&self) -> usize {
        self.attempts.iter().filter(|a| a.accepted).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NashOutcome {
    pub allocation: Allocation,
    pub k: usize,
    /// Doctor USW, or doctor NSW (product over assigned doctors) in NSW mode.
    pub doctor_welfare: Rational,
    pub hospital_nsw: BigUint,
    /// One entry per `k`, in the descending order they were searched.
    pub logs: Vec<LocalSearchLog>,
}

/// `sum_i (c_i + i/n^2)^2` with 1-based hospital index `i`.
pub fn potential(caps: &[usize]) -> Rational {
    let n2 = (caps.len() * caps.len()) as i64;
    caps.iter()
        .enumerate()
        .map(|(i, &c)| {
            let t = rational::int(c as i64) + rational::ratio(i as i64 + 1, n2);
            &t * &t
        })
        .fold(rational::int(0), |a, b| a + b)
}

pub fn max_nash_subject_to_doctor_usw(inst: &Instance) -> Result<NashOutcome> {
    let weights = intersection::cardinal_weights(inst)?;
    run(inst, &weights, |w| w.clone())
}

pub fn max_nash_subject_to_doctor_nsw(inst: &Instance) -> Result<NashOutcome> {
    let weights = intersection::log_weights(inst)?;
    run(inst, &weights, |w| w.value().clone())
}

pub fn max_nash_subject_to(inst: &Instance, objective: DoctorObjective) -> Result<NashOutcome> {
    match objective {
        DoctorObjective::Usw => max_nash_subject_to_doctor_usw(inst),
        DoctorObjective::Nsw => max_nash_subject_to_doctor_nsw(inst),
    }
}

fn eligible(caps: &[usize], i: usize, j: usize) -> bool {
    caps[i] >= caps[j] + 2 || (caps[i] == caps[j] + 1 && j < i)
}

fn local_search<W: Weight>(
    inst: &Instance,
    weights: &Weights<W>,
    k: usize,
    start: WeightedAllocation<W>,
) -> Result<(Allocation, W, LocalSearchLog)> {
    let target = start.weight;
    let mut current = start.allocation;
    let mut caps = current.bundle_sizes(inst.hospital_count());
    let n = caps.len();
    let mut log = LocalSearchLog {
        k,
        initial_caps: caps.clone(),
        final_caps: Vec::new(),
        attempts: Vec::new(),
        potentials: vec![potential(&caps)],
    };
    'sweep: loop {
        for i in 0..n {
            for j in 0..n {
                if i == j || !eligible(&caps, i, j) {
                    continue;
                }
                let mut trial = caps.clone();
                trial[i] -= 1;
                trial[j] += 1;
                let next = intersection::k_mdw_weighted(inst, weights, k, Some(&trial))?;
                let accepted = next.as_ref().is_some_and(|x| x.weight == target);
                log.attempts.push(TransferAttempt {
                    from: i,
                    to: j,
                    accepted,
                });
                if let Some(x) = next.filter(|_| accepted) {
                    current = x.allocation;
                    caps = trial;
                    log.potentials.push(potential(&caps));
                    continue 'sweep;
                }
            }
        }
        break;
    }
    log.final_caps = caps;
    Ok((current, target, log))
}

fn run<W, F>(inst: &Instance, weights: &Weights<W>, welfare: F) -> Result<NashOutcome>
where
    W: Weight + Send + Sync,
    F: Fn(&W) -> Rational,
{
    // entry k is an uncapped k-MDW allocation, for every feasible k
    let starts = intersection::max_weight_all_k(inst, weights)?;
    let runs: Vec<_> = starts
        .into_iter()
        .enumerate()
        .rev()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(k, start)| local_search(inst, weights, k, start))
        .collect::<Result<_>>()?;

    let mut best: Option<(W, BigUint, usize, Allocation)> = None;
    let mut logs = Vec::with_capacity(runs.len());
    for (alloc, w, log) in runs {
        let nsw = inst.hospital_nsw(&alloc);
        let better = match &best {
            None => true,
            Some((bw, bn, _, _)) => w > *bw || (w == *bw && nsw > *bn),
        };
        if better {
            best = Some((w, nsw, log.k, alloc));
        }
        logs.push(log);
    }
    let (w, hospital_nsw, k, allocation) = best.expect("k = 0 is always searched");
    Ok(NashOutcome {
        allocation,
        k,
        doctor_welfare: welfare(&w),
        hospital_nsw,
        logs,
    })
}
