use std::fmt;

use smallvec::SmallVec;

/// A set of doctor indices, stored as a bitset.
///
/// Trailing zero words are always trimmed so that equal sets compare and hash equal.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DoctorSet {
    words: SmallVec<[u64; 2]>,
}

impl DoctorSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Set whose members are the one bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        let mut s = Self::new();
        if mask != 0 {
            s.words.push(mask);
        }
        s
    }

    /// Low 64 members as a mask. Only meaningful for universes of at most 64 doctors.
    pub fn mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    pub fn contains(&self, d: usize) -> bool {
        self.words
            .get(d / 64)
            .is_some_and(|w| w & (1u64 << (d % 64)) != 0)
    }

    /// Returns true if `d` was newly inserted.
    pub fn insert(&mut self, d: usize) -> bool {
        let w = d / 64;
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let bit = 1u64 << (d % 64);
        let fresh = self.words[w] & bit == 0;
        self.words[w] |= bit;
        fresh
    }

    /// Returns true if `d` was present.
    pub fn remove(&mut self, d: usize) -> bool {
        let w = d / 64;
        let Some(word) = self.words.get_mut(w) else {
            return false;
        };
        let bit = 1u64 << (d % 64);
        let present = *word & bit != 0;
        *word &= !bit;
        self.trim();
        present
    }

    pub fn with(&self, d: usize) -> Self {
        let mut s = self.clone();
        s.insert(d);
        s
    }

    pub fn without(&self, d: usize) -> Self {
        let mut s = self.clone();
        s.remove(d);
        s
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Largest member, if any.
    pub fn last(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn union(&self, other: &Self) -> Self {
        let (long, short) = if self.words.len() >= other.words.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut s = long.clone();
        for (w, o) in s.words.iter_mut().zip(short.words.iter()) {
            *w |= o;
        }
        s
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut s = Self {
            words: self
                .words
                .iter()
                .zip(other.words.iter())
                .map(|(a, b)| a & b)
                .collect(),
        };
        s.trim();
        s
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut s = self.clone();
        for (w, o) in s.words.iter_mut().zip(other.words.iter()) {
            *w &= !o;
        }
        s.trim();
        s
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & b == 0)
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

impl FromIterator<usize> for DoctorSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Self::new();
        for d in iter {
            s.insert(d);
        }
        s
    }
}

impl fmt::Debug for DoctorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn insert_remove_across_words() {
        let mut s = DoctorSet::new();
        assert!(s.insert(3));
        assert!(s.insert(70));
        assert!(!s.insert(70));
        assert_eq!(s.len(), 2);
        assert_eq!(s.last(), Some(70));
        assert!(s.remove(70));
        assert_eq!(s, DoctorSet::from_mask(1 << 3));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3]);
    }

    proptest! {
        #[test]
        fn set_algebra_matches_btreeset(a in prop::collection::btree_set(0usize..150, 0..20),
                                        b in prop::collection::btree_set(0usize..150, 0..20)) {
            let sa: DoctorSet = a.iter().copied().collect();
            let sb: DoctorSet = b.iter().copied().collect();
            prop_assert_eq!(sa.union(&sb).iter().collect::<Vec<_>>(), a.union(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.intersection(&sb).iter().collect::<Vec<_>>(), a.intersection(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.difference(&sb).iter().collect::<Vec<_>>(), a.difference(&b).copied().collect::<Vec<_>>());
            prop_assert_eq!(sa.is_subset(&sb), a.is_subset(&b));
            prop_assert_eq!(sa.is_disjoint(&sb), a.is_disjoint(&b));
            let rebuilt: DoctorSet = sa.union(&sb).difference(&sb).union(&sa.intersection(&sb));
            prop_assert_eq!(rebuilt, sa);
        }
    }
}
