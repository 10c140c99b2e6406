mod common;

use proptest::prelude::*;
use stablematch::instance::{DoctorEntry, InstanceFile};
use stablematch::{DoctorSet, Instance, MatroidRankValuation, RandomKind};

fn random_valuations() -> impl Iterator<Item = MatroidRankValuation> {
    (0..120u64).flat_map(|seed| {
        let kind = [
            RandomKind::Oxs,
            RandomKind::CappedAdditive,
            RandomKind::Table,
        ][seed as usize % 3];
        common::ordinal(seed, 3, 7, kind).hospitals().to_vec()
    })
}

#[test]
fn generated_valuations_are_matroid_rank_functions() {
    for v in random_valuations() {
        assert!(v.validate_mrf().unwrap().is_valid());
        let some = DoctorSet::from_mask(0b101 & ((1 << v.universe_size()) - 1));
        if v.is_non_redundant(&some).unwrap() {
            assert!(v
                .contract(&some)
                .unwrap()
                .validate_mrf()
                .unwrap()
                .is_valid());
        }
        for cap in 0..3 {
            assert!(v.cap(cap).validate_mrf().unwrap().is_valid());
        }
    }
}

#[test]
fn augmentation_between_independent_sets() {
    for v in random_valuations() {
        let m = v.universe_size();
        let independent: Vec<DoctorSet> = (0u64..1 << m)
            .map(DoctorSet::from_mask)
            .filter(|s| v.is_non_redundant(s).unwrap())
            .collect();
        for s in independent.iter().step_by(3) {
            for t in independent.iter().step_by(5) {
                if s.len() < t.len() {
                    assert!(t
                        .difference(s)
                        .iter()
                        .any(|d| v.marginal(s, d).unwrap() == 1));
                }
            }
        }
    }
}

#[test]
fn random_instances_round_trip_through_json() {
    for seed in 0..60 {
        let inst = common::ordinal(seed, 3, 6, RandomKind::Mixed);
        assert_eq!(Instance::from_json(&inst.to_json().unwrap()).unwrap(), inst);
        let card = common::cardinal(seed, 3, 6, -3, 3);
        assert_eq!(Instance::from_json(&card.to_json().unwrap()).unwrap(), card);
    }
}

#[test]
fn malformed_files_are_rejected() {
    let base = common::ordinal(1, 2, 3, RandomKind::CappedAdditive)
        .to_file()
        .unwrap();
    let mut bad = base.clone();
    bad.doctors[0] = DoctorEntry::Ordinal(vec![0, 0]);
    assert!(Instance::from_file(&bad).is_err());
    let mut bad: InstanceFile = base.clone();
    bad.doctors[0] = DoctorEntry::Cardinal(vec!["x".into(); base.hospitals.len()]);
    assert!(Instance::from_file(&bad).is_err());
    let mut bad = base;
    bad.hospitals.clear();
    assert!(Instance::from_file(&bad).is_err());
}

proptest! {
    #[test]
    fn capped_additive_is_min_of_cap_and_count(cap in 0usize..6, approved in 0u64..64, set in 0u64..64) {
        let v = MatroidRankValuation::capped_additive(6, cap, DoctorSet::from_mask(approved)).unwrap();
        let s = DoctorSet::from_mask(set);
        let expected = cap.min((approved & set).count_ones() as usize);
        prop_assert_eq!(v.rank(&s).unwrap(), expected);
    }

    #[test]
    fn oxs_rank_is_bounded_and_monotone(edges in proptest::collection::vec((0usize..5, 0usize..3), 0..12), a in 0u64..32, b in 0u64..32) {
        let v = MatroidRankValuation::binary_oxs(5, 3, &edges).unwrap();
        let (s, t) = (DoctorSet::from_mask(a), DoctorSet::from_mask(a | b));
        let (rs, rt) = (v.rank(&s).unwrap(), v.rank(&t).unwrap());
        prop_assert!(rs <= rt);
        prop_assert!(rt <= t.len().min(3));
    }
}
