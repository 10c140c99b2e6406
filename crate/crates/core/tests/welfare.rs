mod common;

use stablematch::oracle::brute_lex_optimum;
use stablematch::welfare_opt::{max_nash_subject_to, potential, DoctorObjective};

fn check(inst: &stablematch::Instance, objective: DoctorObjective, label: &str) {
    let out = max_nash_subject_to(inst, objective).unwrap();
    let (welfare, nsw) = brute_lex_optimum(inst, objective).unwrap();
    assert_eq!(
        (out.doctor_welfare.clone(), out.hospital_nsw.clone()),
        (welfare, nsw),
        "{label}"
    );
    assert!(inst.is_stable(&out.allocation), "{label}");
    let (n, m) = (inst.hospital_count(), inst.doctor_count());
    for log in &out.logs {
        assert!(log.accepted_count() <= 4 * m * m * n * n, "{label}");
        assert_eq!(log.potentials.len(), log.accepted_count() + 1);
        assert!(log.potentials.windows(2).all(|p| p[1] < p[0]), "{label}");
        assert_eq!(log.potentials.last(), Some(&potential(&log.final_caps)));
        assert_eq!(log.final_caps.iter().sum::<usize>(), log.k);
    }
}

#[test]
fn usw_mode_matches_lexicographic_optimum() {
    for seed in 0..150 {
        let inst = common::cardinal(seed, 3, 6, 0, 3);
        check(&inst, DoctorObjective::Usw, &format!("seed {seed}"));
    }
}

#[test]
fn usw_mode_with_negative_utilities() {
    for seed in 0..80 {
        let inst = common::cardinal(seed, 3, 5, -2, 2);
        check(&inst, DoctorObjective::Usw, &format!("seed {seed}"));
    }
}

#[test]
fn ties_everywhere() {
    // equal utilities make every max-cardinality allocation tie on doctor welfare
    for seed in 0..80 {
        let inst = common::cardinal(seed, 3, 6, 1, 1);
        check(&inst, DoctorObjective::Usw, &format!("seed {seed}"));
    }
}

#[test]
fn nsw_mode_matches_lexicographic_optimum() {
    for seed in 0..100 {
        let inst = common::cardinal(seed, 3, 5, 1, 4);
        check(&inst, DoctorObjective::Nsw, &format!("seed {seed}"));
    }
}

#[test]
fn two_hospital_nsw_matches_brute_force() {
    for seed in 0..40 {
        let inst = stablematch::instance::random_cardinal_instance(
            2,
            4,
            stablematch::RandomKind::Mixed,
            seed,
            1,
            5,
        )
        .unwrap();
        let best = stablematch::intersection::max_doctor_nsw_with_max_k(&inst).unwrap();
        let (welfare, _) = brute_lex_optimum(&inst, DoctorObjective::Nsw).unwrap();
        assert_eq!(best.weight, welfare, "seed {seed}");
    }
}
