mod common;

use stablematch::mechanism::{hwsd, serial_dictatorship, Mechanism};
use stablematch::oracle::{
    self, brute_hwsd_best, brute_max_usw, brute_stable, has_blocking_set, manipulation_search,
    manipulation_search_over, GainRatio, MisreportFamily, SearchOptions,
};
use stablematch::rational::int;
use stablematch::{DoctorSet, MatroidRankValuation, RandomKind};

#[test]
fn hwsd_is_optimal_and_stable() {
    for seed in 0..150 {
        let inst = common::ordinal(seed, 3, 6, RandomKind::Mixed);
        let (x, _) = hwsd(&inst).unwrap();
        let stable = brute_stable(&inst).unwrap();
        assert!(stable.contains(&x), "seed {seed}");
        assert_eq!(
            inst.hospital_usw(&x),
            brute_max_usw(&inst).unwrap(),
            "seed {seed}"
        );
        assert_eq!(x, brute_hwsd_best(&inst).unwrap(), "seed {seed}");
    }
}

#[test]
fn sd_is_stable_and_half_optimal() {
    for seed in 0..150 {
        let inst = common::ordinal(seed, 3, 6, RandomKind::Mixed);
        let (x, _) = serial_dictatorship(&inst).unwrap();
        assert!(brute_stable(&inst).unwrap().contains(&x), "seed {seed}");
        let best = brute_max_usw(&inst).unwrap();
        assert!(2 * inst.hospital_usw(&x) >= best, "seed {seed}");
    }
}

#[test]
fn every_stable_allocation_is_half_optimal() {
    for seed in 0..100 {
        let inst = common::ordinal(seed, 3, 5, RandomKind::Mixed);
        let best = brute_max_usw(&inst).unwrap();
        for a in brute_stable(&inst).unwrap() {
            assert!(2 * inst.hospital_usw(&a) >= best, "seed {seed}");
        }
    }
}

#[test]
fn set_and_pair_blocking_agree() {
    for seed in 0..60 {
        let inst = common::ordinal(seed, 3, 4, RandomKind::Mixed);
        for a in oracle::enumerate_non_redundant(&inst).unwrap() {
            assert_eq!(
                has_blocking_set(&inst, &a).unwrap(),
                !inst.is_stable(&a),
                "seed {seed}"
            );
        }
        let card = common::cardinal(seed, 3, 4, -1, 2);
        for a in oracle::enumerate_non_redundant(&card).unwrap() {
            assert_eq!(
                has_blocking_set(&card, &a).unwrap(),
                !card.is_stable(&a),
                "seed {seed}"
            );
        }
    }
}

#[test]
fn hwsd_ordering_is_a_total_preorder() {
    use std::cmp::Ordering::*;
    for seed in 0..30 {
        let inst = common::ordinal(seed, 3, 4, RandomKind::Mixed);
        let all = oracle::enumerate_non_redundant(&inst).unwrap();
        let all = &all[..all.len().min(40)];
        for x in all {
            assert_eq!(inst.hwsd_compare(x, x).unwrap(), Equal);
            for y in all {
                let xy = inst.hwsd_compare(x, y).unwrap();
                assert_eq!(xy, inst.hwsd_compare(y, x).unwrap().reverse());
                if xy == Equal {
                    assert_eq!(x, y);
                }
                for z in all {
                    if xy == Greater && inst.hwsd_compare(y, z).unwrap() == Greater {
                        assert_eq!(inst.hwsd_compare(x, z).unwrap(), Greater);
                    }
                }
            }
        }
    }
}

#[test]
fn doctors_never_gain_by_misreporting() {
    for seed in 0..60 {
        let inst = common::ordinal(seed, 3, 4, RandomKind::Mixed);
        for mech in [Mechanism::Hwsd, Mechanism::SerialDictatorship] {
            for d in 0..inst.doctor_count() {
                let rep = oracle::doctor_manipulation_search(&inst, mech, d).unwrap();
                assert_eq!(rep.improving_order, None, "seed {seed} {mech:?} doctor {d}");
            }
        }
    }
}

#[test]
fn capped_additive_hospitals_cannot_gain_under_hwsd() {
    for seed in 0..40 {
        let inst = common::ordinal(seed, 3, 4, RandomKind::CappedAdditive);
        for h in 0..inst.hospital_count() {
            let rep = manipulation_search(
                &inst,
                Mechanism::Hwsd,
                h,
                MisreportFamily::CappedAdditiveAll,
                SearchOptions::default(),
            )
            .unwrap();
            assert_eq!(
                rep.best_ratio,
                GainRatio::Finite(int(1)),
                "seed {seed} hospital {h}"
            );
        }
    }
}

#[test]
fn hospital_gain_is_at_most_two() {
    let two = int(2);
    for seed in 0..40 {
        let oxs = common::ordinal(seed, 3, 4, RandomKind::Oxs);
        let mixed = common::ordinal(seed, 3, 4, RandomKind::Mixed);
        for family in [
            MisreportFamily::SubsetFT,
            MisreportFamily::CappedAdditiveAll,
        ] {
            for h in 0..oxs.hospital_count() {
                let rep =
                    manipulation_search(&oxs, Mechanism::Hwsd, h, family, SearchOptions::default())
                        .unwrap();
                assert!(!rep.best_ratio.exceeds(&two), "seed {seed}: {rep:?}");
            }
            for h in 0..mixed.hospital_count() {
                let rep = manipulation_search(
                    &mixed,
                    Mechanism::SerialDictatorship,
                    h,
                    family,
                    SearchOptions::default(),
                )
                .unwrap();
                assert!(!rep.best_ratio.exceeds(&two), "seed {seed}: {rep:?}");
            }
        }
    }
}

fn subsets(set: &DoctorSet) -> Vec<DoctorSet> {
    let items: Vec<usize> = set.iter().collect();
    (0u64..1 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|&(i, _)| mask & (1 << i) != 0)
                .map(|(_, &d)| d)
                .collect()
        })
        .collect()
}

#[test]
fn reporting_a_subset_of_the_bundle_yields_exactly_that_subset() {
    for seed in 0..60 {
        let inst = common::ordinal(seed, 3, 5, RandomKind::Oxs);
        let (x, _) = hwsd(&inst).unwrap();
        for h in 0..inst.hospital_count() {
            for t in subsets(&x.bundle(h)) {
                let report =
                    MatroidRankValuation::indicator(inst.doctor_count(), t.clone()).unwrap();
                let (y, _) = hwsd(&inst.with_valuation(h, report).unwrap()).unwrap();
                assert_eq!(y.bundle(h), t, "seed {seed} hospital {h}");
            }
        }
    }
}

#[test]
fn truthful_bundle_is_at_least_half_of_a_subset_report() {
    for seed in 0..60 {
        let inst = common::ordinal(seed, 3, 5, RandomKind::Oxs);
        let m = inst.doctor_count();
        let (truth, _) = hwsd(&inst).unwrap();
        for h in 0..inst.hospital_count() {
            let v = inst.valuation(h);
            for t in subsets(&DoctorSet::from_mask((1 << m) - 1)) {
                if v.rank(&t).unwrap() != t.len() {
                    continue;
                }
                let report = MatroidRankValuation::indicator(m, t.clone()).unwrap();
                let (x, _) = hwsd(&inst.with_valuation(h, report).unwrap()).unwrap();
                if x.bundle(h) == t {
                    assert!(
                        2 * truth.bundle(h).len() >= t.len(),
                        "seed {seed} hospital {h}"
                    );
                }
            }
        }
    }
}

#[test]
fn parallel_search_matches_sequential() {
    let inst = common::ordinal(7, 3, 5, RandomKind::Mixed);
    for h in 0..inst.hospital_count() {
        let reports = MisreportFamily::CappedAdditiveAll
            .hospital_reports(&inst)
            .unwrap();
        let seq = manipulation_search_over(
            &inst,
            Mechanism::SerialDictatorship,
            h,
            &reports,
            SearchOptions::default(),
        )
        .unwrap();
        let par = manipulation_search_over(
            &inst,
            Mechanism::SerialDictatorship,
            h,
            &reports,
            SearchOptions {
                jobs: 4,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn sd_query_count_is_linear_in_probes() {
    for seed in 0..30 {
        let inst = common::ordinal(seed, 3, 6, RandomKind::Mixed);
        for v in inst.hospitals() {
            v.reset_query_count();
        }
        serial_dictatorship(&inst).unwrap();
        let queries: u64 = inst.hospitals().iter().map(|v| v.query_count()).sum();
        assert!(queries <= (inst.doctor_count() * inst.hospital_count()) as u64 * 2);
    }
}
