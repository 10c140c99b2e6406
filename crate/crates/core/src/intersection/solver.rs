//! Augmenting-path matroid intersection of the direct sum of hospital matroids
//! (bundles must be non-redundant) with the doctor partition matroid (each
//! doctor at most once).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::weight::Weight;
use crate::bitset::DoctorSet;
use crate::valuation::MatroidRankValuation;

/// A hospital-doctor pair of the intersection ground set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundElement {
    pub hospital: usize,
    pub doctor: usize,
}

/// Mutable common independent set with per-hospital bundles and per-doctor holders.
struct CommonSet<'a> {
    hospitals: &'a [MatroidRankValuation],
    ground: &'a [GroundElement],
    member: Vec<bool>,
    bundles: Vec<DoctorSet>,
    holder: Vec<Option<usize>>,
}

impl<'a> CommonSet<'a> {
    fn new(
        hospitals: &'a [MatroidRankValuation],
        doctors: usize,
        ground: &'a [GroundElement],
    ) -> Self {
        Self {
            hospitals,
            ground,
            member: vec![false; ground.len()],
            bundles: vec![DoctorSet::new(); hospitals.len()],
            holder: vec![None; doctors],
        }
    }

    fn size(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    fn members(&self) -> Vec<usize> {
        (0..self.ground.len()).filter(|&e| self.member[e]).collect()
    }

    /// `I + x` independent in the hospital matroid.
    fn hospital_free(&self, x: usize) -> bool {
        let GroundElement { hospital, doctor } = self.ground[x];
        let b = &self.bundles[hospital];
        self.hospitals[hospital].eval(&b.with(doctor)) > b.len()
    }

    /// `I - y + x` independent in the hospital matroid, for `y` in `I`, `x` not,
    /// given whether `x` is hospital-free.
    fn hospital_exchange(&self, y: usize, x: usize, x_free: bool) -> bool {
        if x_free {
            return true;
        }
        let (gy, gx) = (self.ground[y], self.ground[x]);
        if gy.hospital != gx.hospital {
            return false;
        }
        let b = &self.bundles[gx.hospital];
        self.hospitals[gx.hospital].eval(&b.without(gy.doctor).with(gx.doctor)) == b.len()
    }

    fn insert(&mut self, e: usize) {
        let g = self.ground[e];
        self.member[e] = true;
        self.bundles[g.hospital].insert(g.doctor);
        self.holder[g.doctor] = Some(e);
    }

    fn remove(&mut self, e: usize) {
        let g = self.ground[e];
        self.member[e] = false;
        self.bundles[g.hospital].remove(g.doctor);
        self.holder[g.doctor] = None;
    }

    /// Applies the symmetric difference with an alternating path.
    fn flip(&mut self, path: &[usize]) {
        let (out, inn): (Vec<usize>, Vec<usize>) = path.iter().partition(|&&e| self.member[e]);
        for e in out {
            self.remove(e);
        }
        for e in inn {
            self.insert(e);
        }
    }

    fn greedy_fill(&mut self) {
        for x in 0..self.ground.len() {
            if self.holder[self.ground[x].doctor].is_none() && self.hospital_free(x) {
                self.insert(x);
            }
        }
    }

    /// Shortest (fewest arcs) source-to-sink path, by breadth-first search.
    fn shortest_augmenting_path(&self) -> Option<Vec<usize>> {
        let n = self.ground.len();
        let free: Vec<bool> = (0..n)
            .map(|x| !self.member[x] && self.hospital_free(x))
            .collect();
        let mut pred = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for x in (0..n).filter(|&x| free[x]) {
            seen[x] = true;
            queue.push_back(x);
        }
        while let Some(u) = queue.pop_front() {
            if self.member[u] {
                for x in 0..n {
                    if !seen[x] && !self.member[x] && self.hospital_exchange(u, x, free[x]) {
                        seen[x] = true;
                        pred[x] = u;
                        queue.push_back(x);
                    }
                }
            } else {
                match self.holder[self.ground[u].doctor] {
                    None => return Some(trace_back(&pred, u)),
                    Some(y) => {
                        if !seen[y] {
                            seen[y] = true;
                            pred[y] = u;
                            queue.push_back(y);
                        }
                    }
                }
            }
        }
        None
    }

    /// Minimum-length source-to-sink path under vertex lengths `w(y)` for members
    /// and `-w(x)` for non-members, fewest arcs among those, by Bellman-Ford.
    fn best_augmenting_path<W: Weight>(&self, weights: &[W]) -> Option<Vec<usize>> {
        let n = self.ground.len();
        let free: Vec<bool> = (0..n)
            .map(|x| !self.member[x] && self.hospital_free(x))
            .collect();
        let members = self.members();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &y in &members {
            adjacency[y] = (0..n)
                .filter(|&x| !self.member[x] && self.hospital_exchange(y, x, free[x]))
                .collect();
        }
        for x in (0..n).filter(|&x| !self.member[x]) {
            adjacency[x] = match self.holder[self.ground[x].doctor] {
                None => members.clone(),
                Some(y) => vec![y],
            };
        }
        let length = |v: usize| {
            if self.member[v] {
                weights[v].clone()
            } else {
                -weights[v].clone()
            }
        };

        let mut label: Vec<Option<(W, usize)>> = vec![None; n];
        let mut pred = vec![usize::MAX; n];
        for x in (0..n).filter(|&x| free[x]) {
            label[x] = Some((length(x), 0));
        }
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                let Some((lu, au)) = label[u].clone() else {
                    continue;
                };
                for &v in &adjacency[u] {
                    let cand = (lu.clone() + length(v), au + 1);
                    if label[v].as_ref().is_none_or(|cur| cand < *cur) {
                        label[v] = Some(cand);
                        pred[v] = u;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..n)
            .filter(|&x| !self.member[x] && self.holder[self.ground[x].doctor].is_none())
            .filter_map(|x| label[x].clone().map(|l| (l, x)))
            .min()?
            .1;
        Some(trace_back(&pred, sink))
    }
}

fn trace_back(pred: &[usize], mut v: usize) -> Vec<usize> {
    let mut path = vec![v];
    while pred[v] != usize::MAX {
        v = pred[v];
        path.push(v);
        assert!(
            path.len() <= pred.len(),
            "predecessor cycle in exchange graph"
        );
    }
    path.reverse();
    path
}

/// Maximum-cardinality common independent set, as ground-element indices.
pub(crate) fn max_cardinality(
    hospitals: &[MatroidRankValuation],
    doctors: usize,
    ground: &[GroundElement],
) -> Vec<usize> {
    let mut set = CommonSet::new(hospitals, doctors, ground);
    set.greedy_fill();
    while let Some(path) = set.shortest_augmenting_path() {
        set.flip(&path);
    }
    set.members()
}

/// One optimal set per cardinality.
#[derive(Clone, Debug)]
pub(crate) struct SizedOptimum<W> {
    pub members: Vec<usize>,
    pub weight: W,
}

/// Maximum-weight common independent sets of every size `0..=k_max`, by
/// successive best augmenting paths. Stops early after `limit` elements.
pub(crate) fn max_weight_by_size<W: Weight>(
    hospitals: &[MatroidRankValuation],
    doctors: usize,
    ground: &[GroundElement],
    weights: &[W],
    limit: Option<usize>,
) -> Vec<SizedOptimum<W>> {
    let mut set = CommonSet::new(hospitals, doctors, ground);
    let mut weight = W::zero();
    let mut out = vec![SizedOptimum {
        members: Vec::new(),
        weight: weight.clone(),
    }];
    while limit.is_none_or(|l| set.size() < l) {
        let Some(path) = set.best_augmenting_path(weights) else {
            break;
        };
        for &e in &path {
            weight = if set.member[e] {
                weight - weights[e].clone()
            } else {
                weight + weights[e].clone()
            };
        }
        set.flip(&path);
        out.push(SizedOptimum {
            members: set.members(),
            weight: weight.clone(),
        });
    }
    out
}
