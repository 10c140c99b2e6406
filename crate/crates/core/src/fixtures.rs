//! The canonical two-hospital, three-doctor instance with no hospital-optimal
//! stable allocation, and its three stable allocations.
//!
//! Doctors are zero-indexed: `d1, d2, d3` are `0, 1, 2`; hospitals `h1, h2` are `0, 1`.

use crate::bitset::DoctorSet;
use crate::instance::{Allocation, DoctorPrefs, Instance};
use crate::valuation::MatroidRankValuation;

/// `v_h1(S) = |S ∩ {d2}| + min(|S ∩ {d1,d3}|, 1)` and
/// `v_h2(S) = |S ∩ {d3}| + min(|S ∩ {d1,d2}|, 1)`, both as binary OXS.
pub fn example1_valuations() -> [MatroidRankValuation; 2] {
    let h1 =
        MatroidRankValuation::binary_oxs(3, 2, &[(1, 0), (0, 1), (2, 1)]).expect("static fixture");
    let h2 =
        MatroidRankValuation::binary_oxs(3, 2, &[(2, 0), (0, 1), (1, 1)]).expect("static fixture");
    [h1, h2]
}

/// d1 and d3 prefer h1; d2 prefers h2.
pub fn example1() -> Instance {
    let [h1, h2] = example1_valuations();
    Instance::new(
        vec![h1, h2],
        DoctorPrefs::Ordinal(vec![vec![0, 1], vec![1, 0], vec![0, 1]]),
    )
    .expect("static fixture")
}

/// h1's misreport `|S ∩ {d2, d3}|`.
pub fn example1_h1_misreport() -> MatroidRankValuation {
    MatroidRankValuation::indicator(3, [1, 2].into_iter().collect::<DoctorSet>())
        .expect("static fixture")
}

/// h1 = {d2, d3}, h2 = {d1}.
pub fn example1_x() -> Allocation {
    Allocation::new(vec![Some(1), Some(0), Some(0)])
}

/// h1 = {d1}, h2 = {d2, d3}.
pub fn example1_y() -> Allocation {
    Allocation::new(vec![Some(0), Some(1), Some(1)])
}

/// h1 = {d3}, h2 = {d2}; d1 unassigned.
pub fn example1_z() -> Allocation {
    Allocation::new(vec![None, Some(1), Some(0)])
}
