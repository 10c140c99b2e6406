//! Fixed benchmark workloads.

use stablematch::instance::{random_cardinal_instance, random_instance};
use stablematch::{Instance, RandomKind};

/// Ordinal instances of the given shape, one per seed in `0..count`.
pub fn ordinal_instances(n: usize, m: usize, count: u64) -> Vec<Instance> {
    (0..count)
        .map(|seed| random_instance(n, m, RandomKind::Mixed, seed).expect("valid shape"))
        .collect()
}

/// Cardinal instances with utilities in `1..=4`.
pub fn cardinal_instances(n: usize, m: usize, count: u64) -> Vec<Instance> {
    (0..count)
        .map(|seed| {
            random_cardinal_instance(n, m, RandomKind::Mixed, seed, 1, 4).expect("valid shape")
        })
        .collect()
}
