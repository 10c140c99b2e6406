#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stablematch::instance::{random_cardinal_instance, random_instance};
use stablematch::{Instance, RandomKind};

/// Ordinal instance with `n` in `1..=max_n` and `m` in `1..=max_m` drawn from the seed.
pub fn ordinal(seed: u64, max_n: usize, max_m: usize, kind: RandomKind) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    random_instance(n, m, kind, seed).unwrap()
}

pub fn cardinal(seed: u64, max_n: usize, max_m: usize, lo: i64, hi: i64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xca4d);
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(1..=max_m);
    random_cardinal_instance(n, m, RandomKind::Mixed, seed, lo, hi).unwrap()
}
