//! Exact weight types for the weighted intersection solver.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};

use crate::rational::Rational;

/// A totally ordered abelian group. Path lengths and set weights live here.
pub trait Weight:
    Clone + Ord + Debug + Zero + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self>
{
}

impl<T> Weight for T where
    T: Clone + Ord + Debug + Zero + Add<Output = T> + Sub<Output = T> + Neg<Output = T>
{
}

/// Lexicographic weight vector: tier 0 is most significant. Absent tiers are zero.
///
/// Encodes `M + B^(priority) * score`-style weights without big integers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TierWeight(Vec<i64>);

impl TierWeight {
    pub fn new(mut tiers: Vec<i64>) -> Self {
        while tiers.last() == Some(&0) {
            tiers.pop();
        }
        Self(tiers)
    }

    /// A single nonzero tier.
    pub fn unit(tier: usize, value: i64) -> Self {
        let mut v = vec![0; tier + 1];
        v[tier] = value;
        Self::new(v)
    }

    pub fn tier(&self, i: usize) -> i64 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn tiers(&self) -> &[i64] {
        &self.0
    }

    fn zip_with(&self, other: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        let len = self.0.len().max(other.0.len());
        Self::new((0..len).map(|i| f(self.tier(i), other.tier(i))).collect())
    }
}

impl Ord for TierWeight {
    fn cmp(&self, other: &Self) -> Ordering {
        let len = self.0.len().max(other.0.len());
        (0..len)
            .map(|i| self.tier(i).cmp(&other.tier(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for TierWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for TierWeight {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for TierWeight {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Neg for TierWeight {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.into_iter().map(|a| -a).collect())
    }
}

impl Zero for TierWeight {
    fn zero() -> Self {
        Self(Vec::new())
    }
    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
}

/// A positive rational in multiplicative form: `a + b` is the product, `-a`
/// the reciprocal, and zero is 1. Ordering a sum of these orders products, which
/// is the same as ordering sums of logarithms, without any floating point.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogWeight(Rational);

impl LogWeight {
    /// `value` must be positive.
    pub fn new(value: Rational) -> Self {
        debug_assert!(value > Rational::zero());
        Self(value)
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

impl Add for LogWeight {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Sub for LogWeight {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 / rhs.0)
    }
}

impl Neg for LogWeight {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.recip())
    }
}

impl Zero for LogWeight {
    fn zero() -> Self {
        Self(Rational::one())
    }
    fn is_zero(&self) -> bool {
        self.0.is_one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn tier_order_ignores_trailing_zeros() {
        let a = TierWeight::new(vec![1, 0, 0]);
        let b = TierWeight::new(vec![1]);
        assert_eq!(a, b);
        assert!(TierWeight::new(vec![1, -1]) < b);
        assert!(TierWeight::new(vec![0, 5]) < TierWeight::unit(0, 1));
        let s = TierWeight::unit(2, 3) + TierWeight::unit(0, 1) - TierWeight::unit(2, 3);
        assert_eq!(s, TierWeight::unit(0, 1));
        assert!((-TierWeight::unit(1, 2)).tier(1) == -2);
    }

    #[test]
    fn log_weight_is_multiplicative() {
        let a = LogWeight::new(ratio(3, 2));
        let b = LogWeight::new(ratio(4, 1));
        assert_eq!((a.clone() + b.clone()).value(), &ratio(6, 1));
        assert_eq!((a.clone() - b).value(), &ratio(3, 8));
        assert_eq!((a.clone() + (-a)), LogWeight::zero());
        assert!(LogWeight::new(ratio(1, 2)) < LogWeight::zero());
    }
}
