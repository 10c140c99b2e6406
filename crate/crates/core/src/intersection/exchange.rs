//! The exchange graph of an allocation under doctor-utility weights.
//!
//! Nodes are hospital-doctor pairs. A forward edge runs from a pair `x` in the
//! allocation to a pair `y` outside it when dropping `x` and adding `y` keeps
//! every bundle non-redundant; it weighs `c(x) - c(y)`. A backward edge runs
//! from `y` to `x` when the same exchange keeps every doctor assigned at most
//! once; it weighs 0.

use std::collections::HashMap;

use num_traits::Zero;
use serde::Serialize;

use super::solver::GroundElement;
use crate::bitset::DoctorSet;
use crate::error::{Error, Result};
use crate::instance::{Allocation, Instance};
use crate::rational::Rational;

#[derive(Clone, Debug)]
pub struct ExchangeGraph {
    base: Allocation,
    nodes: Vec<GroundElement>,
    index: HashMap<GroundElement, usize>,
    in_base: Vec<bool>,
    utility: Vec<Rational>,
    forward: Vec<Vec<usize>>,
    backward: Vec<Vec<usize>>,
}

/// One directed edge, for reporting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExchangeEdge {
    pub from: GroundElement,
    pub to: GroundElement,
    #[serde(with = "crate::rational::text")]
    pub weight: Rational,
    pub forward: bool,
}

/// A closed alternating walk `nodes[0] -> nodes[1] -> ... -> nodes[0]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwapCycle {
    pub nodes: Vec<GroundElement>,
    pub total_weight: Rational,
    pub cross_edge_count: usize,
}

/// Builds the exchange graph of a non-redundant allocation of a cardinal instance.
///
/// The node set is every pair with nonnegative utility plus the pairs of the allocation.
pub fn build_exchange_graph(inst: &Instance, alloc: &Allocation) -> Result<ExchangeGraph> {
    let utils = inst.cardinal_utilities()?;
    if !inst.is_non_redundant(alloc)? {
        return Err(Error::input(
            "exchange graph needs a non-redundant allocation",
        ));
    }
    let zero = Rational::zero();
    let mut nodes = Vec::new();
    for (d, row) in utils.iter().enumerate() {
        for (h, u) in row.iter().enumerate() {
            if *u >= zero || alloc.hospital_of(d) == Some(h) {
                nodes.push(GroundElement {
                    hospital: h,
                    doctor: d,
                });
            }
        }
    }
    let index: HashMap<_, _> = nodes.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let in_base: Vec<bool> = nodes
        .iter()
        .map(|g| alloc.hospital_of(g.doctor) == Some(g.hospital))
        .collect();
    let utility = nodes
        .iter()
        .map(|g| utils[g.doctor][g.hospital].clone())
        .collect();
    let bundles = alloc.bundles(inst.hospital_count());
    let hospital_free: Vec<bool> = nodes
        .iter()
        .map(|g| {
            let b = &bundles[g.hospital];
            inst.valuation(g.hospital).eval(&b.with(g.doctor)) > b.len()
        })
        .collect();

    let n = nodes.len();
    let mut forward = vec![Vec::new(); n];
    let mut backward = vec![Vec::new(); n];
    for x in (0..n).filter(|&x| in_base[x]) {
        let gx = nodes[x];
        for y in (0..n).filter(|&y| !in_base[y]) {
            let gy = nodes[y];
            let ok = hospital_free[y]
                || (gx.hospital == gy.hospital && {
                    let b: &DoctorSet = &bundles[gy.hospital];
                    inst.valuation(gy.hospital)
                        .eval(&b.without(gx.doctor).with(gy.doctor))
                        == b.len()
                });
            if ok {
                forward[x].push(y);
            }
            if alloc.hospital_of(gy.doctor).is_none() || gy.doctor == gx.doctor {
                backward[y].push(x);
            }
        }
    }
    Ok(ExchangeGraph {
        base: alloc.clone(),
        nodes,
        index,
        in_base,
        utility,
        forward,
        backward,
    })
}

impl ExchangeGraph {
    pub fn base(&self) -> &Allocation {
        &self.base
    }

    pub fn nodes(&self) -> &[GroundElement] {
        &self.nodes
    }

    pub fn contains_node(&self, g: GroundElement) -> bool {
        self.index.contains_key(&g)
    }

    pub fn in_base(&self, g: GroundElement) -> bool {
        self.index.get(&g).is_some_and(|&i| self.in_base[i])
    }

    fn edge_index_weight(&self, u: usize, v: usize) -> Option<Rational> {
        if self.in_base[u] {
            self.forward[u]
                .contains(&v)
                .then(|| self.utility[u].clone() - self.utility[v].clone())
        } else {
            self.backward[u].contains(&v).then(Rational::zero)
        }
    }

    /// Weight of the edge `from -> to`, if present.
    pub fn edge_weight(&self, from: GroundElement, to: GroundElement) -> Option<Rational> {
        let (&u, &v) = (self.index.get(&from)?, self.index.get(&to)?);
        self.edge_index_weight(u, v)
    }

    pub fn has_edge(&self, from: GroundElement, to: GroundElement) -> bool {
        self.edge_weight(from, to).is_some()
    }

    /// A forward edge between pairs of different hospitals.
    pub fn is_cross_edge(&self, from: GroundElement, to: GroundElement) -> bool {
        self.in_base(from) && !self.in_base(to) && from.hospital != to.hospital
    }

    pub fn edge_count(&self) -> usize {
        self.forward
            .iter()
            .chain(&self.backward)
            .map(Vec::len)
            .sum()
    }

    /// All edges, forward edges first, each group in node order.
    pub fn edges(&self) -> Vec<ExchangeEdge> {
        let mut out = Vec::new();
        for (u, targets) in self.forward.iter().enumerate() {
            for &v in targets {
                out.push(ExchangeEdge {
                    from: self.nodes[u],
                    to: self.nodes[v],
                    weight: self.utility[u].clone() - self.utility[v].clone(),
                    forward: true,
                });
            }
        }
        for (u, targets) in self.backward.iter().enumerate() {
            for &v in targets {
                out.push(ExchangeEdge {
                    from: self.nodes[u],
                    to: self.nodes[v],
                    weight: Rational::zero(),
                    forward: false,
                });
            }
        }
        out
    }

    /// Validates a closed walk and computes its weight and cross-edge count.
    pub fn cycle(&self, nodes: Vec<GroundElement>) -> Result<SwapCycle> {
        if nodes.len() < 2 {
            return Err(Error::input("a cycle needs at least two nodes"));
        }
        let mut total = Rational::zero();
        let mut cross = 0;
        for i in 0..nodes.len() {
            let (a, b) = (nodes[i], nodes[(i + 1) % nodes.len()]);
            let w = self
                .edge_weight(a, b)
                .ok_or_else(|| Error::input(format!("no edge {a:?} -> {b:?}")))?;
            total += w;
            if self.is_cross_edge(a, b) {
                cross += 1;
            }
        }
        Ok(SwapCycle {
            nodes,
            total_weight: total,
            cross_edge_count: cross,
        })
    }

    /// A negative-weight cycle, if one exists (Bellman-Ford from a virtual source).
    pub fn find_negative_cycle(&self) -> Option<SwapCycle> {
        let n = self.nodes.len();
        let mut dist = vec![Rational::zero(); n];
        let mut pred = vec![usize::MAX; n];
        let mut last = None;
        for _ in 0..=n {
            last = None;
            for u in 0..n {
                let targets = if self.in_base[u] {
                    &self.forward[u]
                } else {
                    &self.backward[u]
                };
                for &v in targets {
                    let w = self.edge_index_weight(u, v).expect("edge listed");
                    let cand = dist[u].clone() + w;
                    if cand < dist[v] {
                        dist[v] = cand;
                        pred[v] = u;
                        last = Some(v);
                    }
                }
            }
            last?;
        }
        let mut v = last?;
        for _ in 0..n {
            v = pred[v];
        }
        let start = v;
        let mut cycle = vec![start];
        let mut u = pred[start];
        while u != start {
            cycle.push(u);
            u = pred[u];
        }
        cycle.reverse();
        let nodes = cycle.into_iter().map(|i| self.nodes[i]).collect();
        Some(self.cycle(nodes).expect("cycle built from graph edges"))
    }

    /// Whether there is a perfect matching of forward edges from `removed` (in
    /// the allocation) onto `added` (outside it), and one of backward edges from
    /// `added` onto `removed`.
    pub fn has_matching_and_back_matching(
        &self,
        removed: &[GroundElement],
        added: &[GroundElement],
    ) -> bool {
        removed.len() == added.len()
            && perfect_matching(removed.len(), |i, j| self.has_edge(removed[i], added[j]))
            && perfect_matching(removed.len(), |i, j| self.has_edge(added[j], removed[i]))
    }
}

fn perfect_matching(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    fn augment(
        i: usize,
        n: usize,
        edge: &impl Fn(usize, usize) -> bool,
        owner: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for j in 0..n {
            if edge(i, j) && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|o| augment(o, n, edge, owner, seen)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut owner = vec![None; n];
    (0..n).all(|i| augment(i, n, &edge, &mut owner, &mut vec![false; n]))
}

/// Splits a cycle into node-disjoint cycles covering the same nodes, each with
/// at most one cross edge. Consecutive cross edges `a -> b` and `c -> d` are
/// replaced by `a -> d` and `c -> b`, which exist because a cross edge into a
/// pair means that pair's hospital has room for it. Total weight is preserved.
pub fn uncross(graph: &ExchangeGraph, cycle: &SwapCycle) -> Result<Vec<SwapCycle>> {
    let mut current = graph.cycle(cycle.nodes.clone())?;
    let mut out = Vec::new();
    while current.cross_edge_count > 1 {
        let s = current.nodes.len();
        let is_cross = |nodes: &[GroundElement], i: usize| {
            graph.is_cross_edge(nodes[i], nodes[(i + 1) % nodes.len()])
        };
        let first = (0..s)
            .find(|&i| is_cross(&current.nodes, i))
            .expect("counted cross edges");
        let mut nodes = current.nodes.clone();
        nodes.rotate_left(first);
        // edge j (1-based) runs nodes[j-1] -> nodes[j]; edge 1 is cross
        let t = (2..=s)
            .find(|&j| is_cross(&nodes, j - 1))
            .expect("second cross edge");
        let (a, b, c, d) = (nodes[0], nodes[1], nodes[t - 1], nodes[t % s]);
        for (from, to) in [(a, d), (c, b)] {
            if !graph.has_edge(from, to) {
                return Err(Error::input(format!(
                    "internal invariant violated: replacement edge {from:?} -> {to:?} missing"
                )));
            }
        }
        let first_part: Vec<GroundElement> = nodes[1..t].to_vec();
        let mut rest = vec![a];
        rest.extend_from_slice(&nodes[t..]);
        out.push(graph.cycle(first_part)?);
        current = graph.cycle(rest)?;
    }
    out.push(current);
    Ok(out)
}

/// Whether removing `removed` from the allocation and adding `added` gives a
/// non-redundant allocation with every doctor assigned at most once.
pub fn is_valid_swap(
    inst: &Instance,
    alloc: &Allocation,
    removed: &[GroundElement],
    added: &[GroundElement],
) -> Result<bool> {
    if removed.len() != added.len() {
        return Err(Error::input(format!(
            "swap sizes differ: {} removed, {} added",
            removed.len(),
            added.len()
        )));
    }
    inst.check_allocation(alloc)?;
    let n = inst.hospital_count();
    let mut bundles = alloc.bundles(n);
    let mut holders: Vec<usize> = alloc
        .assignment
        .iter()
        .map(|h| h.is_some() as usize)
        .collect();
    for g in removed {
        if alloc.assignment.get(g.doctor).copied().flatten() != Some(g.hospital) {
            return Err(Error::input(format!("{g:?} is not in the allocation")));
        }
        bundles[g.hospital].remove(g.doctor);
        holders[g.doctor] -= 1;
    }
    for g in added {
        if g.hospital >= n || g.doctor >= inst.doctor_count() {
            return Err(Error::input(format!("{g:?} out of range")));
        }
        if alloc.hospital_of(g.doctor) == Some(g.hospital) {
            return Err(Error::input(format!("{g:?} is already in the allocation")));
        }
        if !bundles[g.hospital].insert(g.doctor) {
            return Ok(false);
        }
        holders[g.doctor] += 1;
    }
    if holders.iter().any(|&c| c > 1) {
        return Ok(false);
    }
    Ok(bundles
        .iter()
        .enumerate()
        .all(|(h, b)| inst.valuation(h).eval(b) == b.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example1, example1_x, example1_z};
    use crate::instance::DoctorPrefs;
    use crate::intersection::{k_mdw, max_usw};
    use crate::rational::int;
    use crate::valuation::MatroidRankValuation;

    fn ge(hospital: usize, doctor: usize) -> GroundElement {
        GroundElement { hospital, doctor }
    }

    #[test]
    fn empty_allocation_graph() {
        let inst = example1().borda_utilities().unwrap();
        let g = build_exchange_graph(&inst, &Allocation::empty(3)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.find_negative_cycle().is_none());
    }

    #[test]
    fn forward_edges_into_room() {
        let inst = example1().borda_utilities().unwrap();
        let z = example1_z();
        let g = build_exchange_graph(&inst, &z).unwrap();
        // h2 = {d2} has room for d3
        assert_eq!(inst.valuation(1).marginal(&z.bundle(1), 2).unwrap(), 1);
        for x in [ge(1, 1), ge(0, 2)] {
            assert!(g.has_edge(x, ge(1, 2)));
            assert!(g.is_cross_edge(x, ge(1, 2)) == (x.hospital != 1));
        }
        // d3 is assigned, so (h2, d3) only points back at (h1, d3)
        assert!(g.has_edge(ge(1, 2), ge(0, 2)));
        assert!(!g.has_edge(ge(1, 2), ge(1, 1)));
        assert_eq!(g.edge_weight(ge(0, 2), ge(1, 2)).unwrap(), int(1));
    }

    #[test]
    fn malformed_allocation_rejected() {
        let inst = example1().borda_utilities().unwrap();
        let redundant = Allocation::new(vec![Some(0), None, Some(0)]);
        assert!(build_exchange_graph(&inst, &redundant).is_err());
        assert!(build_exchange_graph(&example1(), &example1_z()).is_err());
    }

    #[test]
    fn optimum_has_no_negative_cycle() {
        let inst = example1().borda_utilities().unwrap();
        for k in 0..=max_usw(&inst) {
            let opt = k_mdw(&inst, k, None).unwrap().unwrap();
            let g = build_exchange_graph(&inst, &opt.allocation).unwrap();
            assert!(g.find_negative_cycle().is_none(), "k = {k}");
        }
        // X has doctor welfare 1 < 2 at size 3
        let g = build_exchange_graph(&inst, &example1_x()).unwrap();
        let c = g.find_negative_cycle().unwrap();
        assert!(c.total_weight < int(0));
    }

    #[test]
    fn swaps() {
        let inst = example1();
        let x = example1_x();
        assert!(is_valid_swap(&inst, &x, &[], &[]).unwrap());
        assert!(is_valid_swap(&inst, &x, &[ge(0, 2)], &[ge(1, 2)]).unwrap());
        // d1 would be at both hospitals
        assert!(!is_valid_swap(&inst, &x, &[ge(0, 2)], &[ge(0, 0)]).unwrap());
        assert!(is_valid_swap(&inst, &x, &[ge(0, 2)], &[]).is_err());
        assert!(is_valid_swap(&inst, &x, &[ge(1, 2)], &[ge(0, 0)]).is_err());
    }

    /// Three hospitals with plenty of room, doctors d0..d2 assigned one each.
    fn three_hospital_fixture() -> (Instance, Allocation) {
        let all = DoctorSet::from_mask(0b111111);
        let hospitals = (0..3)
            .map(|_| MatroidRankValuation::capped_additive(6, 2, all.clone()).unwrap())
            .collect();
        let utils = (0..6)
            .map(|d| (0..3).map(|h| int(((d + 2 * h) % 4) as i64)).collect())
            .collect();
        let inst = Instance::new(hospitals, DoctorPrefs::Cardinal(utils)).unwrap();
        let alloc = Allocation::new(vec![Some(0), Some(1), Some(2), None, None, None]);
        (inst, alloc)
    }

    #[test]
    fn uncross_splits_two_cross_edges() {
        let (inst, alloc) = three_hospital_fixture();
        let g = build_exchange_graph(&inst, &alloc).unwrap();
        // (h0,d0) -> (h1,d3) -> back to (h1,d1)?  d3 unassigned so any backward edge works
        let cycle = g
            .cycle(vec![
                ge(0, 0),
                ge(1, 3),
                ge(1, 1),
                ge(2, 4),
                ge(2, 2),
                ge(0, 5),
            ])
            .unwrap();
        assert_eq!(cycle.cross_edge_count, 3);
        let parts = uncross(&g, &cycle).unwrap();
        assert!(parts.len() >= 2);
        let mut covered: Vec<_> = parts.iter().flat_map(|c| c.nodes.clone()).collect();
        covered.sort();
        let mut expected = cycle.nodes.clone();
        expected.sort();
        assert_eq!(covered, expected);
        let total = parts
            .iter()
            .fold(Rational::zero(), |a, c| a + c.total_weight.clone());
        assert_eq!(total, cycle.total_weight);
        assert!(parts.iter().all(|c| c.cross_edge_count <= 1));
    }

    #[test]
    fn uncross_leaves_simple_cycles() {
        let (inst, alloc) = three_hospital_fixture();
        let g = build_exchange_graph(&inst, &alloc).unwrap();
        let one = g.cycle(vec![ge(0, 0), ge(1, 3), ge(0, 3)]);
        assert!(one.is_err(), "not alternating");
        let c = g
            .cycle(vec![ge(0, 0), ge(1, 3), ge(1, 1), ge(1, 4)])
            .unwrap();
        assert_eq!(c.cross_edge_count, 1);
        assert_eq!(uncross(&g, &c).unwrap(), vec![c]);
    }
}
