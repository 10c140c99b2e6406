mod common;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stablematch::intersection::{
    self, build_exchange_graph, cardinal_weights, max_weight_all_k, max_weight_k, ordinal_weights,
    solve_ordinal_encoding, uncross, GroundElement, OrdinalEncoding,
};
use stablematch::mechanism::{hwsd, serial_dictatorship};
use stablematch::oracle::{self, brute_k_mdw_allocations, brute_max_weight_by_size};
use stablematch::{Allocation, RandomKind};

fn elements(a: &Allocation) -> BTreeSet<GroundElement> {
    a.iter_assigned()
        .map(|(doctor, hospital)| GroundElement { hospital, doctor })
        .collect()
}

#[test]
fn max_usw_matches_brute_force() {
    for seed in 0..200 {
        let inst = common::ordinal(seed, 3, 6, RandomKind::Mixed);
        assert_eq!(
            intersection::max_usw(&inst),
            oracle::brute_max_usw(&inst).unwrap(),
            "seed {seed}"
        );
        let a = intersection::max_usw_allocation(&inst);
        assert!(inst.is_non_redundant(&a).unwrap());
    }
}

#[test]
fn max_weight_k_matches_brute_force() {
    for seed in 0..150 {
        let inst = common::cardinal(seed, 3, 6, -2, 5);
        let w = cardinal_weights(&inst).unwrap();
        let brute = brute_max_weight_by_size(&inst, &w).unwrap();
        let all = max_weight_all_k(&inst, &w).unwrap();
        for (k, expected) in brute.iter().enumerate() {
            let got = all.get(k).map(|x| x.weight.clone());
            assert_eq!(got, expected.clone(), "seed {seed} k {k}");
            let single = max_weight_k(&inst, &w, k).unwrap();
            assert_eq!(
                single.map(|x| x.weight),
                expected.clone(),
                "seed {seed} k {k}"
            );
        }
        for x in &all {
            assert!(inst.is_non_redundant(&x.allocation).unwrap());
            assert_eq!(inst.doctor_usw(&x.allocation).unwrap(), x.weight);
        }
    }
}

#[test]
fn optimal_exchange_graphs_have_no_negative_cycle() {
    for seed in 0..120 {
        let inst = common::cardinal(seed, 3, 5, 0, 4);
        let w = cardinal_weights(&inst).unwrap();
        for opt in max_weight_all_k(&inst, &w).unwrap() {
            let g = build_exchange_graph(&inst, &opt.allocation).unwrap();
            assert_eq!(g.find_negative_cycle(), None, "seed {seed}");
        }
    }
}

#[test]
fn suboptimal_allocations_have_improving_cycles() {
    for seed in 0..60 {
        let inst = common::cardinal(seed, 3, 4, 0, 4);
        let w = cardinal_weights(&inst).unwrap();
        let best = brute_max_weight_by_size(&inst, &w).unwrap();
        for a in oracle::enumerate_non_redundant(&inst).unwrap() {
            let k = a.assigned_count();
            let weight = inst.doctor_usw(&a).unwrap();
            if Some(&weight) == best[k].as_ref() {
                continue;
            }
            let g = build_exchange_graph(&inst, &a).unwrap();
            let c = g
                .find_negative_cycle()
                .unwrap_or_else(|| panic!("seed {seed} {a:?}"));
            assert!(c.total_weight < stablematch::rational::int(0));
        }
    }
}

#[test]
fn two_optima_admit_matching_and_back_matching() {
    for seed in 0..80 {
        let inst = common::cardinal(seed, 3, 5, 0, 2);
        for k in 0..=intersection::max_usw(&inst) {
            let optima = brute_k_mdw_allocations(&inst, k).unwrap();
            for x in optima.iter().take(6) {
                let g = build_exchange_graph(&inst, x).unwrap();
                for y in optima.iter().take(6) {
                    let (ex, ey) = (elements(x), elements(y));
                    let removed: Vec<_> = ex.difference(&ey).copied().collect();
                    let added: Vec<_> = ey.difference(&ex).copied().collect();
                    assert!(
                        g.has_matching_and_back_matching(&removed, &added),
                        "seed {seed} k {k}"
                    );
                }
            }
        }
    }
}

#[test]
fn k_mdw_size_profiles_exchange() {
    for seed in 0..80 {
        let inst = common::cardinal(seed, 3, 5, 0, 2);
        for k in 0..=intersection::max_usw(&inst) {
            assert_eq!(
                oracle::k_mdw_exchange_counterexample(&inst, k).unwrap(),
                None,
                "seed {seed} k {k}"
            );
        }
    }
}

#[test]
fn uncrossing_random_cycles() {
    let mut checked = 0;
    let mut multi_cross = 0;
    for seed in 0..3000u64 {
        if checked >= 100 {
            break;
        }
        let inst = common::cardinal(seed, 3, 6, 0, 3);
        let w = cardinal_weights(&inst).unwrap();
        let all = max_weight_all_k(&inst, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = &all.choose(&mut rng).unwrap().allocation;
        let g = build_exchange_graph(&inst, x).unwrap();
        let inside: Vec<GroundElement> = g
            .nodes()
            .iter()
            .copied()
            .filter(|&n| g.in_base(n))
            .collect();
        let outside: Vec<GroundElement> = g
            .nodes()
            .iter()
            .copied()
            .filter(|&n| !g.in_base(n))
            .collect();
        let pairs = inside.len().min(outside.len()).min(3);
        if pairs < 2 {
            continue;
        }
        for _ in 0..50 {
            let len = rng.gen_range(2..=pairs);
            let xs: Vec<_> = inside.choose_multiple(&mut rng, len).copied().collect();
            let ys: Vec<_> = outside.choose_multiple(&mut rng, len).copied().collect();
            let nodes: Vec<_> = (0..len).flat_map(|i| [xs[i], ys[i]]).collect();
            let Ok(cycle) = g.cycle(nodes.clone()) else {
                continue;
            };
            let parts = uncross(&g, &cycle).unwrap();
            let covered: BTreeSet<_> = parts.iter().flat_map(|c| c.nodes.clone()).collect();
            assert_eq!(covered, nodes.iter().copied().collect::<BTreeSet<_>>());
            assert_eq!(
                parts.iter().map(|c| c.nodes.len()).sum::<usize>(),
                nodes.len()
            );
            let total = parts
                .iter()
                .fold(stablematch::rational::int(0), |a, c| a + &c.total_weight);
            assert_eq!(total, cycle.total_weight);
            assert!(parts.iter().all(|c| c.cross_edge_count <= 1));
            if cycle.cross_edge_count > 1 {
                multi_cross += 1;
            }
            checked += 1;
            break;
        }
    }
    assert!(checked >= 100, "only {checked} cycles sampled");
    assert!(multi_cross > 0);
}

#[test]
fn ordinal_encodings_reproduce_mechanisms() {
    for seed in 0..150 {
        let inst = common::ordinal(seed, 3, 6, RandomKind::Mixed);
        let sd = solve_ordinal_encoding(&inst, OrdinalEncoding::SerialDictatorship).unwrap();
        assert_eq!(sd, serial_dictatorship(&inst).unwrap().0, "seed {seed}");
        let hw = solve_ordinal_encoding(&inst, OrdinalEncoding::Hwsd).unwrap();
        assert_eq!(hw, hwsd(&inst).unwrap().0, "seed {seed}");
        assert_eq!(
            ordinal_weights(&inst, OrdinalEncoding::Hwsd).unwrap().len(),
            inst.doctor_count()
        );
    }
}

#[test]
fn max_doctor_welfare_is_stable() {
    for seed in 0..100 {
        let inst = common::cardinal(seed, 3, 5, -1, 4);
        let best = intersection::max_doctor_usw_with_max_k(&inst).unwrap();
        assert!(inst.is_stable(&best.allocation), "seed {seed}");
        let pos = common::cardinal(seed, 3, 5, 1, 4);
        let best = intersection::max_doctor_nsw_with_max_k(&pos).unwrap();
        assert!(pos.is_stable(&best.allocation), "seed {seed}");
        assert_eq!(pos.doctor_nsw(&best.allocation).unwrap(), best.weight);
    }
}
