//! Exact hardcore Gibbs distributions at desk scale.
//!
//! A [`DistributionTable`] is the explicit weight table of a distribution
//! over subsets of a ground set, stored as `(bit mask, weight)` pairs over
//! the support. For the hardcore model the support is the family of
//! independent sets and the weight of a set `I` is `lambda^|I|`. Every other
//! module in the crate treats these tables as the ground truth it is checked
//! against.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ratio::Ratio;
use crate::tol;

/// Largest ground-set size accepted for explicit enumeration.
pub const ENUM_CAP: usize = 24;

/// In/out value of a pinned element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Spin {
    In,
    Out,
}

/// The hardcore model: a graph together with a positive fugacity.
#[derive(Clone, Debug)]
pub struct HardcoreModel {
    pub graph: Graph,
    pub lambda: f64,
}

impl HardcoreModel {
    pub fn new(graph: Graph, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fugacity must be positive and finite, got {lambda}"
            )));
        }
        Ok(HardcoreModel { graph, lambda })
    }
}

/// A partial assignment of elements to in/out.
///
/// Kept ordered so pinnings have a canonical (lexicographic) representation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pinning {
    assign: BTreeMap<usize, Spin>,
}

impl Pinning {
    pub fn empty() -> Self {
        Pinning::default()
    }

    pub fn single(v: usize, s: Spin) -> Self {
        let mut p = Pinning::default();
        p.assign.insert(v, s);
        p
    }

    /// Adds a pin; rejects re-pinning an element.
    pub fn pin(&mut self, v: usize, s: Spin) -> Result<()> {
        if self.assign.insert(v, s).is_some() {
            return Err(Error::Invariant(format!("element {v} pinned twice")));
        }
        Ok(())
    }

    pub fn get(&self, v: usize) -> Option<Spin> {
        self.assign.get(&v).copied()
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Spin)> + '_ {
        self.assign.iter().map(|(&v, &s)| (v, s))
    }

    /// Checks the hardcore consistency requirement: in-pinned vertices form
    /// an independent set of `g`.
    pub fn check_independent(&self, g: &Graph) -> Result<()> {
        for (v, s) in self.iter() {
            g.check_vertex(v)?;
            if s == Spin::In {
                for &w in g.neighbors(v) {
                    if self.get(w) == Some(Spin::In) {
                        return Err(Error::Invariant(format!(
                            "adjacent vertices {v} and {w} both pinned in"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromIterator<(usize, Spin)> for Pinning {
    fn from_iter<T: IntoIterator<Item = (usize, Spin)>>(iter: T) -> Self {
        Pinning {
            assign: iter.into_iter().collect(),
        }
    }
}

/// Explicit weight table of a distribution over subsets of `0..ground`.
#[derive(Clone, Debug)]
pub struct DistributionTable {
    ground: usize,
    /// Positive-weight masks, sorted ascending.
    support: Vec<(u32, f64)>,
    total: f64,
}

impl DistributionTable {
    /// Builds a table from raw `(mask, weight)` pairs, dropping zero weights.
    pub fn from_weights(ground: usize, weights: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        if ground > ENUM_CAP {
            return Err(Error::CapExceeded {
                what: "enumeration",
                needed: ground,
                cap: ENUM_CAP,
            });
        }
        let mut support: Vec<(u32, f64)> = Vec::new();
        for (mask, w) in weights {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "weight of mask {mask:#b} must be finite and nonnegative, got {w}"
                )));
            }
            if ground < 32 && mask >= (1u32 << ground) {
                return Err(Error::InvalidParameter(format!(
                    "mask {mask:#b} outside ground set of size {ground}"
                )));
            }
            if w > 0.0 {
                support.push((mask, w));
            }
        }
        support.sort_unstable_by_key(|&(m, _)| m);
        support.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        if support.is_empty() {
            return Err(Error::EmptySupport("all weights are zero".into()));
        }
        let total = support.iter().map(|&(_, w)| w).sum();
        Ok(DistributionTable {
            ground,
            support,
            total,
        })
    }

    /// Enumerates the hardcore distribution of `m` conditioned on `pin`.
    ///
    /// The mass of an independent set `I` consistent with the pinning is
    /// `lambda^|I|`; `total` is the conditioned partition function.
    pub fn enumerate_hardcore(m: &HardcoreModel, pin: &Pinning) -> Result<Self> {
        let acts = vec![m.lambda; m.graph.n()];
        Self::enumerate_hardcore_weighted(&m.graph, &acts, pin)
    }

    /// Hardcore enumeration with a per-vertex activity vector.
    pub fn enumerate_hardcore_weighted(g: &Graph, acts: &[f64], pin: &Pinning) -> Result<Self> {
        let n = g.n();
        if n > ENUM_CAP {
            return Err(Error::CapExceeded {
                what: "enumeration",
                needed: n,
                cap: ENUM_CAP,
            });
        }
        if acts.len() != n {
            return Err(Error::InvalidParameter(
                "activity vector length must equal vertex count".into(),
            ));
        }
        pin.check_independent(g)?;

        let mut nbr = vec![0u32; n];
        for &(u, v) in g.edges() {
            nbr[u] |= 1 << v;
            nbr[v] |= 1 << u;
        }
        let mut required = 0u32;
        let mut forbidden = 0u32;
        for (v, s) in pin.iter() {
            match s {
                Spin::In => {
                    required |= 1 << v;
                    forbidden |= nbr[v]; // neighbors forced out
                }
                Spin::Out => forbidden |= 1 << v,
            }
        }
        if required & forbidden != 0 {
            return Err(Error::Invariant(
                "pinning forces a vertex both in and out".into(),
            ));
        }

        let mut support = Vec::new();
        let limit: u64 = 1u64 << n;
        let mut mask: u64 = 0;
        while mask < limit {
            let m32 = mask as u32;
            if m32 & forbidden == 0 && m32 & required == required {
                let mut ok = true;
                let mut rest = m32;
                while rest != 0 {
                    let v = rest.trailing_zeros() as usize;
                    if nbr[v] & m32 != 0 {
                        ok = false;
                        break;
                    }
                    rest &= rest - 1;
                }
                if ok {
                    let mut w = 1.0;
                    let mut rest = m32;
                    while rest != 0 {
                        let v = rest.trailing_zeros() as usize;
                        w *= acts[v];
                        rest &= rest - 1;
                    }
                    support.push((m32, w));
                }
            }
            mask += 1;
        }
        if support.is_empty() {
            return Err(Error::EmptySupport(
                "no independent set is consistent with the pinning".into(),
            ));
        }
        let total = support.iter().map(|&(_, w)| w).sum();
        Ok(DistributionTable {
            ground: n,
            support,
            total,
        })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// The normalizing constant (conditioned partition function).
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn weight(&self, mask: u32) -> f64 {
        match self.support.binary_search_by_key(&mask, |&(m, _)| m) {
            Ok(i) => self.support[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn probability(&self, mask: u32) -> f64 {
        self.weight(mask) / self.total
    }

    /// Conditions on a pinning, renormalizing over the surviving masks.
    pub fn condition(&self, pin: &Pinning) -> Result<Self> {
        let mut required = 0u32;
        let mut forbidden = 0u32;
        for (v, s) in pin.iter() {
            if v >= self.ground {
                return Err(Error::InvalidVertex {
                    id: v,
                    n: self.ground,
                });
            }
            match s {
                Spin::In => required |= 1 << v,
                Spin::Out => forbidden |= 1 << v,
            }
        }
        let support: Vec<(u32, f64)> = self
            .support
            .iter()
            .copied()
            .filter(|&(m, _)| m & required == required && m & forbidden == 0)
            .collect();
        if support.is_empty() {
            return Err(Error::ZeroMass(format!("pinning {pin:?}")));
        }
        let total = support.iter().map(|&(_, w)| w).sum();
        Ok(DistributionTable {
            ground: self.ground,
            support,
            total,
        })
    }

    /// `Pr[i]`.
    pub fn marginal(&self, i: usize) -> f64 {
        let bit = 1u32 << i;
        self.support
            .iter()
            .filter(|&&(m, _)| m & bit != 0)
            .map(|&(_, w)| w)
            .sum::<f64>()
            / self.total
    }

    /// `Pr[i and j]` (for `i = j` this is `Pr[i]`).
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        let bits = (1u32 << i) | (1u32 << j);
        self.support
            .iter()
            .filter(|&&(m, _)| m & bits == bits)
            .map(|&(_, w)| w)
            .sum::<f64>()
            / self.total
    }

    /// Exact conditional marginal `Pr[j | i = side]`.
    pub fn conditional_marginal(&self, j: usize, i: usize, side: Spin) -> Result<f64> {
        let cond = self.condition(&Pinning::single(i, side))?;
        Ok(cond.marginal(j))
    }

    /// True when element `i` takes both values on the support.
    ///
    /// Purely combinatorial, so the free/deterministic split is exact.
    pub fn is_free(&self, i: usize) -> bool {
        let bit = 1u32 << i;
        let mut seen_in = false;
        let mut seen_out = false;
        for &(m, _) in &self.support {
            if m & bit != 0 {
                seen_in = true;
            } else {
                seen_out = true;
            }
            if seen_in && seen_out {
                return true;
            }
        }
        false
    }

    pub fn free_elements(&self) -> Vec<usize> {
        (0..self.ground).filter(|&i| self.is_free(i)).collect()
    }

    /// Occupation odds `Pr[r] / Pr[not r]` of element `r`.
    pub fn ratio(&self, r: usize) -> Ratio {
        Ratio::from_marginal(self.marginal(r))
    }

    /// CSV dump `mask,weight` (debugging aid).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mask,weight\n");
        for &(m, w) in &self.support {
            let _ = writeln!(out, "{m},{w:.17e}");
        }
        out
    }

    /// Sanity check: total matches the sum of masses.
    pub fn mass_consistent(&self) -> bool {
        let sum: f64 = self.support.iter().map(|&(_, w)| w).sum();
        tol::close_rel(sum, self.total, 1e-12)
    }
}

/// Exact `Z` and root marginal on a forest via the two-state bottom-up
/// recursion. `O(n)` per call, no enumeration cap.
pub fn tree_partition_dp(
    m: &HardcoreModel,
    pin: &Pinning,
    root: usize,
) -> Result<(f64, f64)> {
    let acts = vec![m.lambda; m.graph.n()];
    tree_partition_dp_weighted(&m.graph, &acts, pin, root)
}

/// Forest DP with per-vertex activities. Returns `(Z, Pr[root in I])`.
pub fn tree_partition_dp_weighted(
    g: &Graph,
    acts: &[f64],
    pin: &Pinning,
    root: usize,
) -> Result<(f64, f64)> {
    if !g.is_forest() {
        return Err(Error::NotAForest);
    }
    g.check_vertex(root)?;
    pin.check_independent(g)?;

    // (z_out, z_in) of the subtree hanging below `v` when entered from `from`.
    fn subtree(
        g: &Graph,
        acts: &[f64],
        pin: &Pinning,
        v: usize,
        from: Option<usize>,
    ) -> (f64, f64) {
        let mut z_out = 1.0;
        let mut z_in = acts[v];
        for &c in g.neighbors(v) {
            if Some(c) == from {
                continue;
            }
            let (co, ci) = subtree(g, acts, pin, c, Some(v));
            z_out *= co + ci;
            z_in *= co;
        }
        match pin.get(v) {
            Some(Spin::In) => z_out = 0.0,
            Some(Spin::Out) => z_in = 0.0,
            None => {}
        }
        (z_out, z_in)
    }

    // Component containing the root first, then the rest.
    let mut comp = vec![usize::MAX; g.n()];
    let mut ncomp = 0;
    for s in 0..g.n() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = ncomp;
        while let Some(x) = stack.pop() {
            for &y in g.neighbors(x) {
                if comp[y] == usize::MAX {
                    comp[y] = ncomp;
                    stack.push(y);
                }
            }
        }
        ncomp += 1;
    }
    let mut done = vec![false; ncomp];
    let (zo, zi) = subtree(g, acts, pin, root, None);
    if zo + zi <= 0.0 {
        return Err(Error::ZeroMass("pinning leaves no valid configuration".into()));
    }
    let mut z = zo + zi;
    let root_marginal = zi / (zo + zi);
    done[comp[root]] = true;
    for s in 0..g.n() {
        if done[comp[s]] {
            continue;
        }
        done[comp[s]] = true;
        let (zo, zi) = subtree(g, acts, pin, s, None);
        if zo + zi <= 0.0 {
            return Err(Error::ZeroMass("pinning leaves no valid configuration".into()));
        }
        z *= zo + zi;
    }
    Ok((z, root_marginal))
}

/// Root occupation odds `R = Pr[r | pin] / (1 - Pr[r | pin])` of a hardcore
/// model, computed from the exact table.
pub fn ratio_r(m: &HardcoreModel, pin: &Pinning, r: usize) -> Result<Ratio> {
    if pin.get(r).is_some() {
        return Err(Error::InvalidParameter(format!(
            "element {r} is pinned; its odds are degenerate"
        )));
    }
    let table = DistributionTable::enumerate_hardcore(m, pin)?;
    Ok(table.ratio(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use approx::assert_relative_eq;

    fn k2(lambda: f64) -> HardcoreModel {
        HardcoreModel::new(Graph::new(2, vec![(0, 1)]).unwrap(), lambda).unwrap()
    }

    #[test]
    fn k2_table() {
        let t = DistributionTable::enumerate_hardcore(&k2(1.0), &Pinning::empty()).unwrap();
        assert_eq!(t.support_size(), 3);
        assert_relative_eq!(t.total(), 3.0);
        assert_relative_eq!(t.weight(0b00), 1.0);
        assert_relative_eq!(t.weight(0b01), 1.0);
        assert_relative_eq!(t.weight(0b10), 1.0);
        assert_eq!(t.weight(0b11), 0.0);
        assert_relative_eq!(t.marginal(0), 1.0 / 3.0);
    }

    #[test]
    fn k2_pinned_in() {
        let t =
            DistributionTable::enumerate_hardcore(&k2(1.0), &Pinning::single(0, Spin::In)).unwrap();
        assert_eq!(t.support_size(), 1);
        assert_relative_eq!(t.total(), 1.0);
        assert_relative_eq!(t.marginal(0), 1.0);
        assert_relative_eq!(t.marginal(1), 0.0);
    }

    #[test]
    fn single_vertex_lambda2() {
        let g = Graph::new(1, vec![]).unwrap();
        let m = HardcoreModel::new(g, 2.0).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        assert_relative_eq!(t.total(), 3.0);
        assert_relative_eq!(t.marginal(0), 2.0 / 3.0);
    }

    #[test]
    fn adjacent_in_pins_rejected() {
        let pin: Pinning = [(0, Spin::In), (1, Spin::In)].into_iter().collect();
        assert!(DistributionTable::enumerate_hardcore(&k2(1.0), &pin).is_err());
    }

    #[test]
    fn conditional_marginals_k2() {
        let t = DistributionTable::enumerate_hardcore(&k2(1.0), &Pinning::empty()).unwrap();
        assert_relative_eq!(t.conditional_marginal(1, 0, Spin::In).unwrap(), 0.0);
        assert_relative_eq!(t.conditional_marginal(1, 0, Spin::Out).unwrap(), 0.5);
    }

    #[test]
    fn conditional_marginal_isolated_pair() {
        let g = Graph::new(2, vec![]).unwrap();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        assert_relative_eq!(t.conditional_marginal(1, 0, Spin::In).unwrap(), 0.5);
    }

    #[test]
    fn law_of_total_probability() {
        let g = gen::twin_triangles();
        let m = HardcoreModel::new(g, 1.3).unwrap();
        let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    continue;
                }
                let pi = t.marginal(i);
                let lhs = t.marginal(j);
                let rhs = t.conditional_marginal(j, i, Spin::In).unwrap() * pi
                    + t.conditional_marginal(j, i, Spin::Out).unwrap() * (1.0 - pi);
                assert!((lhs - rhs).abs() < 1e-12, "i={i} j={j}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn marginal_cap() {
        // Pr[v | pin] <= lambda / (1 + lambda) for every free vertex.
        let g = gen::twin_triangles();
        for &lambda in &[0.5, 1.0, 2.0] {
            let m = HardcoreModel::new(g.clone(), lambda).unwrap();
            let cap = lambda / (1.0 + lambda);
            let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
            for v in 0..6 {
                assert!(t.marginal(v) <= cap + 1e-14);
            }
            let pin = Pinning::single(1, Spin::Out);
            let t = DistributionTable::enumerate_hardcore(&m, &pin).unwrap();
            for v in 0..6 {
                if pin.get(v).is_none() {
                    assert!(t.marginal(v) <= cap + 1e-14);
                }
            }
        }
    }

    #[test]
    fn monotone_in_fugacity() {
        let g = Graph::new(1, vec![]).unwrap();
        let mut last = 0.0;
        for k in 1..=40 {
            let lambda = 0.1 * k as f64;
            let m = HardcoreModel::new(g.clone(), lambda).unwrap();
            let t = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
            let p = t.marginal(0);
            assert!(p >= last);
            assert_relative_eq!(p, lambda / (1.0 + lambda), epsilon = 1e-12);
            last = p;
        }
    }

    #[test]
    fn tree_dp_matches_enumeration() {
        // path of 2
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        let (z, _) = tree_partition_dp(&m, &Pinning::empty(), 0).unwrap();
        assert_relative_eq!(z, 3.0);

        // star with 3 leaves
        let g = Graph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        let (z, p) = tree_partition_dp(&m, &Pinning::empty(), 0).unwrap();
        assert_relative_eq!(z, 9.0);
        assert_relative_eq!(p, 1.0 / 9.0);

        // complete binary tree of depth 2 vs brute force
        let t = crate::graph::RootedTree::complete_ary_tree(2, 2).unwrap();
        let g = t.to_graph();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        let (z, p) = tree_partition_dp(&m, &Pinning::empty(), 0).unwrap();
        let table = DistributionTable::enumerate_hardcore(&m, &Pinning::empty()).unwrap();
        assert_relative_eq!(z, table.total(), max_relative = 1e-10);
        assert_relative_eq!(p, table.marginal(0), max_relative = 1e-10);
    }

    #[test]
    fn tree_dp_rejects_cycles() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let m = HardcoreModel::new(g, 1.0).unwrap();
        assert!(matches!(
            tree_partition_dp(&m, &Pinning::empty(), 0),
            Err(Error::NotAForest)
        ));
    }

    #[test]
    fn tree_dp_forest_and_pins() {
        let g = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let m = HardcoreModel::new(g, 2.0).unwrap();
        let (z, p) = tree_partition_dp(&m, &Pinning::empty(), 0).unwrap();
        // Z = (1 + 2 + 2) per K2 component
        assert_relative_eq!(z, 25.0);
        assert_relative_eq!(p, 2.0 / 5.0);
        let pin = Pinning::single(1, Spin::Out);
        let (z, p) = tree_partition_dp(&m, &pin, 0).unwrap();
        assert_relative_eq!(z, 15.0);
        assert_relative_eq!(p, 2.0 / 3.0);
    }

    #[test]
    fn ratio_examples() {
        let g = Graph::new(1, vec![]).unwrap();
        let m = HardcoreModel::new(g, 1.7).unwrap();
        let r = ratio_r(&m, &Pinning::empty(), 0).unwrap();
        assert_relative_eq!(r.finite().unwrap(), 1.7, max_relative = 1e-12);

        let m = k2(1.0);
        let r = ratio_r(&m, &Pinning::single(1, Spin::Out), 0).unwrap();
        assert_relative_eq!(r.finite().unwrap(), 1.0, max_relative = 1e-12);
        let r = ratio_r(&m, &Pinning::single(1, Spin::In), 0).unwrap();
        assert_relative_eq!(r.finite().unwrap(), 0.0);
    }

    #[test]
    fn csv_export_shape() {
        let t = DistributionTable::enumerate_hardcore(&k2(1.0), &Pinning::empty()).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("mask,weight\n"));
        assert_eq!(csv.lines().count(), 4);
    }
}
