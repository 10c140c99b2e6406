//! Sequential mechanisms for ordinal doctors.
//!
//! Both process doctors one at a time; each doctor walks down their list and
//! takes the first hospital that accepts. Serial Dictatorship accepts whenever
//! the doctor has positive marginal value. HWSD additionally requires that the
//! partial allocation still extends to one of maximum hospital welfare.

use serde::{Deserialize, Serialize};

use crate::bitset::DoctorSet;
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::intersection::{self, GroundElement};
use crate::valuation::BundleState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    Accepted,
    /// The doctor adds nothing to the hospital's current bundle.
    MarginalZero,
    /// Accepting would make maximum hospital welfare unreachable.
    CompletionInfeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub hospital: usize,
    pub outcome: ProbeOutcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoctorTrace {
    pub doctor: usize,
    pub probes: Vec<Probe>,
}

/// Per processed doctor, the hospitals probed in preference order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MechanismTrace {
    pub doctors: Vec<DoctorTrace>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Hwsd,
    #[serde(rename = "sd")]
    SerialDictatorship,
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hwsd" => Ok(Mechanism::Hwsd),
            "sd" => Ok(Mechanism::SerialDictatorship),
            other => Err(Error::input(format!("unknown mechanism {other:?}"))),
        }
    }
}

impl Mechanism {
    pub fn run(self, inst: &Instance) -> Result<(Allocation, MechanismTrace)> {
        match self {
            Mechanism::Hwsd => hwsd(inst),
            Mechanism::SerialDictatorship => serial_dictatorship(inst),
        }
    }

    pub fn run_with_order(
        self,
        inst: &Instance,
        order: &[usize],
    ) -> Result<(Allocation, MechanismTrace)> {
        match self {
            Mechanism::Hwsd => hwsd_with_order(inst, order),
            Mechanism::SerialDictatorship => serial_dictatorship_with_order(inst, order),
        }
    }
}

fn identity_order(inst: &Instance) -> Vec<usize> {
    (0..inst.doctor_count()).collect()
}

fn check_order(inst: &Instance, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; inst.doctor_count()];
    for &d in order {
        if d >= seen.len() || std::mem::replace(&mut seen[d], true) {
            return Err(Error::input(format!(
                "doctor order {order:?} is not a permutation of {} doctors",
                seen.len()
            )));
        }
    }
    if order.len() != seen.len() {
        return Err(Error::input(format!(
            "doctor order {order:?} is not a permutation of {} doctors",
            seen.len()
        )));
    }
    Ok(())
}

pub fn serial_dictatorship(inst: &Instance) -> Result<(Allocation, MechanismTrace)> {
    serial_dictatorship_with_order(inst, &identity_order(inst))
}

pub fn serial_dictatorship_with_order(
    inst: &Instance,
    order: &[usize],
) -> Result<(Allocation, MechanismTrace)> {
    let orders = inst.ordinal_orders()?;
    check_order(inst, order)?;
    let mut bundles = vec![BundleState::new(); inst.hospital_count()];
    let mut alloc = Allocation::empty(inst.doctor_count());
    let mut trace = MechanismTrace::default();
    for &d in order {
        let mut probes = Vec::new();
        for &h in &orders[d] {
            let v = inst.valuation(h);
            if bundles[h].marginal(v, d) == 1 {
                bundles[h].insert(v, d);
                alloc.assignment[d] = Some(h);
                probes.push(Probe {
                    hospital: h,
                    outcome: ProbeOutcome::Accepted,
                });
                break;
            }
            probes.push(Probe {
                hospital: h,
                outcome: ProbeOutcome::MarginalZero,
            });
        }
        trace.doctors.push(DoctorTrace { doctor: d, probes });
    }
    Ok((alloc, trace))
}

pub fn hwsd(inst: &Instance) -> Result<(Allocation, MechanismTrace)> {
    hwsd_with_order(inst, &identity_order(inst))
}

pub fn hwsd_with_order(inst: &Instance, order: &[usize]) -> Result<(Allocation, MechanismTrace)> {
    let orders = inst.ordinal_orders()?;
    check_order(inst, order)?;
    let target = intersection::max_usw(inst);
    let mut bundles = vec![BundleState::new(); inst.hospital_count()];
    let mut alloc = Allocation::empty(inst.doctor_count());
    let mut welfare = 0;
    let mut trace = MechanismTrace::default();
    for (step, &d) in order.iter().enumerate() {
        let remaining = &order[step + 1..];
        let mut probes = Vec::new();
        for &h in &orders[d] {
            let v = inst.valuation(h);
            if bundles[h].marginal(v, d) == 0 {
                probes.push(Probe {
                    hospital: h,
                    outcome: ProbeOutcome::MarginalZero,
                });
                continue;
            }
            let mut fixed: Vec<DoctorSet> = bundles.iter().map(|b| b.doctors().clone()).collect();
            fixed[h].insert(d);
            if residual_max(inst, &fixed, remaining) + welfare + 1 == target {
                bundles[h].insert(v, d);
                alloc.assignment[d] = Some(h);
                welfare += 1;
                probes.push(Probe {
                    hospital: h,
                    outcome: ProbeOutcome::Accepted,
                });
                break;
            }
            probes.push(Probe {
                hospital: h,
                outcome: ProbeOutcome::CompletionInfeasible,
            });
        }
        trace.doctors.push(DoctorTrace { doctor: d, probes });
    }
    Ok((alloc, trace))
}

/// Largest welfare gain from `remaining` doctors on top of non-redundant bundles `fixed`.
fn residual_max(inst: &Instance, fixed: &[DoctorSet], remaining: &[usize]) -> usize {
    let contracted: Vec<_> = inst
        .hospitals()
        .iter()
        .zip(fixed)
        .map(|(v, t)| v.contract_unchecked(t.clone(), t.len()))
        .collect();
    let ground: Vec<GroundElement> = remaining
        .iter()
        .flat_map(|&doctor| {
            (0..inst.hospital_count()).map(move |hospital| GroundElement { hospital, doctor })
        })
        .collect();
    intersection::max_usw_over(&contracted, inst.doctor_count(), &ground)
}

/// Whether assigning `d` to `h` on top of `partial` still extends to a maximum
/// hospital-welfare allocation using only doctors after `d` in index order.
///
/// Requires `partial` non-redundant, `d` unassigned, and marginal 1 of `d` at `h`.
pub fn completion_feasible(
    inst: &Instance,
    partial: &Allocation,
    h: usize,
    d: usize,
) -> Result<bool> {
    if !inst.is_non_redundant(partial)? {
        return Err(Error::input("partial allocation must be non-redundant"));
    }
    if h >= inst.hospital_count() || d >= inst.doctor_count() || partial.hospital_of(d).is_some() {
        return Err(Error::input(format!("({h}, {d}) is not an open pair")));
    }
    let mut fixed = partial.bundles(inst.hospital_count());
    if inst.valuation(h).eval(&fixed[h].with(d)) == fixed[h].len() {
        return Err(Error::input(format!(
            "doctor {d} has zero marginal at hospital {h}"
        )));
    }
    fixed[h].insert(d);
    let remaining: Vec<usize> = (d + 1..inst.doctor_count())
        .filter(|&e| partial.hospital_of(e).is_none())
        .collect();
    let target = intersection::max_usw(inst);
    Ok(residual_max(inst, &fixed, &remaining) + inst.hospital_usw(partial) + 1 == target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example1, example1_h1_misreport, example1_x, example1_y};
    use crate::instance::DoctorPrefs;
    use crate::valuation::MatroidRankValuation;

    #[test]
    fn hwsd_on_example() {
        let inst = example1();
        let (alloc, trace) = hwsd(&inst).unwrap();
        assert_eq!(alloc, example1_y());
        // d3 is rejected by h1 on marginal grounds, then accepted by h2
        assert_eq!(
            trace.doctors[2].probes,
            vec![
                Probe {
                    hospital: 0,
                    outcome: ProbeOutcome::MarginalZero
                },
                Probe {
                    hospital: 1,
                    outcome: ProbeOutcome::Accepted
                }
            ]
        );
    }

    #[test]
    fn hwsd_under_misreport_gives_x() {
        let inst = example1()
            .with_valuation(0, example1_h1_misreport())
            .unwrap();
        let (alloc, _) = hwsd(&inst).unwrap();
        assert_eq!(alloc, example1_x());
        let truth = example1();
        assert_eq!(truth.hospital_utilities(&alloc)[0], 2);
        assert_eq!(truth.hospital_utilities(&example1_y())[0], 1);
    }

    #[test]
    fn sd_on_example() {
        let (alloc, trace) = serial_dictatorship(&example1()).unwrap();
        assert_eq!(alloc, example1_y());
        assert_eq!(
            trace.doctors[2].probes[0].outcome,
            ProbeOutcome::MarginalZero
        );
    }

    #[test]
    fn nobody_valued_stays_unassigned() {
        let inst = Instance::new(
            vec![MatroidRankValuation::capped_additive(3, 3, DoctorSet::new()).unwrap()],
            DoctorPrefs::Ordinal(vec![vec![0]; 3]),
        )
        .unwrap();
        for mech in [Mechanism::Hwsd, Mechanism::SerialDictatorship] {
            let (alloc, _) = mech.run(&inst).unwrap();
            assert_eq!(alloc, Allocation::empty(3));
        }
    }

    #[test]
    fn everyone_gets_first_choice_when_unconstrained() {
        let all = DoctorSet::from_mask(0b1111);
        let hospitals = (0..3)
            .map(|_| MatroidRankValuation::capped_additive(4, 4, all.clone()).unwrap())
            .collect();
        let orders = vec![vec![2, 0, 1], vec![0, 1, 2], vec![1, 2, 0], vec![2, 1, 0]];
        let inst = Instance::new(hospitals, DoctorPrefs::Ordinal(orders.clone())).unwrap();
        let (alloc, _) = serial_dictatorship(&inst).unwrap();
        let firsts: Vec<_> = orders.iter().map(|o| Some(o[0])).collect();
        assert_eq!(alloc.assignment, firsts);
    }

    #[test]
    fn single_doctor_takes_top_valuing_hospital() {
        let hospitals = vec![
            MatroidRankValuation::capped_additive(1, 1, DoctorSet::new()).unwrap(),
            MatroidRankValuation::capped_additive(1, 1, DoctorSet::from_mask(1)).unwrap(),
        ];
        let inst = Instance::new(hospitals, DoctorPrefs::Ordinal(vec![vec![0, 1]])).unwrap();
        assert_eq!(
            serial_dictatorship(&inst).unwrap().0.assignment,
            vec![Some(1)]
        );
        assert_eq!(hwsd(&inst).unwrap().0.assignment, vec![Some(1)]);
    }

    #[test]
    fn completion_feasibility() {
        let inst = example1();
        let empty = Allocation::empty(3);
        // Y assigns d1 to h1
        assert!(completion_feasible(&inst, &empty, 0, 0).unwrap());
        let partial = Allocation::new(vec![Some(0), None, None]);
        assert!(completion_feasible(&inst, &partial, 0, 1).unwrap());
        let partial = Allocation::new(vec![Some(0), Some(1), None]);
        assert!(completion_feasible(&inst, &partial, 0, 2).is_err());
        assert!(completion_feasible(&inst, &partial, 1, 2).unwrap());
    }

    #[test]
    fn order_flag_permutes_processing() {
        let inst = example1();
        let (alloc, trace) = serial_dictatorship_with_order(&inst, &[2, 1, 0]).unwrap();
        // d3 first takes h1, d2 takes h2, d1 finds both blocked
        assert_eq!(alloc, Allocation::new(vec![None, Some(1), Some(0)]));
        assert_eq!(trace.doctors[0].doctor, 2);
        assert!(serial_dictatorship_with_order(&inst, &[0, 0, 1]).is_err());
        assert!(hwsd_with_order(&inst, &[0, 1]).is_err());
    }

    #[test]
    fn cardinal_instance_rejected() {
        let inst = example1().borda_utilities().unwrap();
        assert!(matches!(hwsd(&inst), Err(Error::Mode(_))));
    }
}
