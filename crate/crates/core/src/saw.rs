//! Self-avoiding-walk trees and pseudoinfluence oracles.
//!
//! The SAW tree of a graph rooted at `r` has one node per walk from `r`
//! that is self-avoiding, plus terminal nodes for walks whose last step
//! closes a cycle (backtracking and staying are not walks). Terminals carry
//! a structural in/out label determined purely by the cycle structure: when
//! the walk leaves the revisited vertex through neighbor `x` and returns
//! through neighbor `y`, the terminal is labeled "in" exactly when `x`
//! comes after `y` in the revisited vertex's neighbor order. The default
//! order lists neighbors in descending id order, which reproduces the
//! standard worked example bit for bit.
//!
//! The marginal of the root in the graph equals the marginal of the root in
//! the labeled tree; pseudoinfluence oracles then measure how sensitive the
//! root's occupation odds are to flipping a single tree vertex, maximized
//! over marginal boundary conditions on that vertex's level.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{DistributionTable, HardcoreModel, Pinning, Spin};
use crate::graph::{Graph, RootedTree};
use crate::influence;
use crate::ratio::Ratio;
use crate::tol;

/// Widest level (free coordinates) accepted by the exhaustive
/// vertex-boundary search.
pub const LEVEL_WIDTH_CAP: usize = 20;

/// Total boundary-assignment cap for the grid-refined search.
pub const GRID_POINT_CAP: u64 = 1 << 22;

/// Per-vertex neighbor orderings used for structural labels.
#[derive(Clone, Debug)]
pub struct NeighborOrder {
    /// `order[v]` is a permutation of `neighbors(v)`.
    order: Vec<Vec<usize>>,
}

impl NeighborOrder {
    /// The default: neighbors listed in descending id order.
    pub fn reverse_lexicographic(g: &Graph) -> Self {
        let order = (0..g.n())
            .map(|v| {
                let mut nb = g.neighbors(v).to_vec();
                nb.sort_unstable_by(|a, b| b.cmp(a));
                nb
            })
            .collect();
        NeighborOrder { order }
    }

    /// Custom per-vertex permutations; each must permute `neighbors(v)`.
    pub fn custom(g: &Graph, order: Vec<Vec<usize>>) -> Result<Self> {
        if order.len() != g.n() {
            return Err(Error::InvalidParameter(
                "need one neighbor order per vertex".into(),
            ));
        }
        for (v, perm) in order.iter().enumerate() {
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            if sorted != g.neighbors(v) {
                return Err(Error::InvalidParameter(format!(
                    "order at vertex {v} is not a permutation of its neighbors"
                )));
            }
        }
        Ok(NeighborOrder { order })
    }

    fn position(&self, v: usize, neighbor: usize) -> usize {
        self.order[v]
            .iter()
            .position(|&x| x == neighbor)
            .expect("neighbor present in order")
    }
}

/// A SAW tree with structural labels and the copy sets of original vertices.
#[derive(Clone, Debug)]
pub struct SawTree {
    pub tree: RootedTree,
    /// Original vertex of each tree node.
    pub origin: Vec<usize>,
    /// Structural or copied in/out label per node (root never labeled).
    pub structural: Vec<Option<Spin>>,
    /// Copy sets: original vertex -> tree nodes ending at it.
    pub copies: BTreeMap<usize, Vec<usize>>,
}

impl SawTree {
    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    pub fn label_counts(&self) -> (usize, usize) {
        let ins = self
            .structural
            .iter()
            .filter(|l| **l == Some(Spin::In))
            .count();
        let outs = self
            .structural
            .iter()
            .filter(|l| **l == Some(Spin::Out))
            .count();
        (ins, outs)
    }

    /// Indented one-node-per-line rendering for visual diffing.
    pub fn to_indented_text(&self, g: &Graph) -> String {
        let mut out = String::new();
        self.render(g, self.tree.root(), 0, &mut out);
        out
    }

    fn render(&self, g: &Graph, node: usize, indent: usize, out: &mut String) {
        let label = match self.structural[node] {
            Some(Spin::In) => " [in]",
            Some(Spin::Out) => " [out]",
            None => "",
        };
        let _ = writeln!(
            out,
            "{}{}{}",
            "  ".repeat(indent),
            g.name(self.origin[node]),
            label
        );
        for &c in self.tree.children(node) {
            self.render(g, c, indent + 1, out);
        }
    }

    /// DOT rendering with labels.
    pub fn to_dot(&self, g: &Graph) -> String {
        let mut out = String::from("digraph saw {\n  node [shape=circle];\n");
        for v in 0..self.node_count() {
            let color = match self.structural[v] {
                Some(Spin::In) => ", style=filled, fillcolor=salmon",
                Some(Spin::Out) => ", style=filled, fillcolor=lightblue",
                None => "",
            };
            let _ = writeln!(
                out,
                "  n{v} [label=\"{}\"{color}];",
                g.name(self.origin[v])
            );
        }
        for v in 0..self.node_count() {
            if let Some(p) = self.tree.parent(v) {
                let _ = writeln!(out, "  n{p} -> n{v};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the SAW tree of `g` rooted at `r` with the given neighbor order.
pub fn build_saw_tree(g: &Graph, r: usize, order: &NeighborOrder) -> Result<SawTree> {
    build_saw_tree_pinned(g, r, order, &Pinning::empty())
}

/// SAW tree construction where walks stop at pinned vertices.
///
/// A pinned vertex becomes a leaf carrying its pin as a copied label (the
/// value of the root never depends on anything beyond a fixed vertex), and
/// unpinned cycle-closing terminals get structural labels. With an empty
/// pinning this is the plain construction.
pub fn build_saw_tree_pinned(
    g: &Graph,
    r: usize,
    order: &NeighborOrder,
    pin: &Pinning,
) -> Result<SawTree> {
    g.check_vertex(r)?;
    if pin.get(r).is_some() {
        return Err(Error::InvalidParameter("root must not be pinned".into()));
    }

    struct Frame {
        node: usize,
        path: Vec<usize>,
    }

    let mut origin = vec![r];
    let mut parent: Vec<Option<usize>> = vec![None];
    let mut label: Vec<Option<Spin>> = vec![None];
    let mut stack = vec![Frame {
        node: 0,
        path: vec![r],
    }];
    while let Some(frame) = stack.pop() {
        let u = *frame.path.last().expect("nonempty path");
        for &w in &order.order[u] {
            if frame.path.len() >= 2 && w == frame.path[frame.path.len() - 2] {
                continue; // backtracking is not a walk
            }
            if let Some(s) = pin.get(w) {
                origin.push(w);
                parent.push(Some(frame.node));
                label.push(Some(s));
                continue; // the walk stops at a fixed vertex
            }
            if let Some(i) = frame.path.iter().position(|&x| x == w) {
                // cycle closer only when the revisit is not a backtrack
                if i + 2 < frame.path.len() {
                    let outgoing = frame.path[i + 1];
                    let returning = u;
                    let spin = if order.position(w, outgoing) > order.position(w, returning) {
                        Spin::In
                    } else {
                        Spin::Out
                    };
                    origin.push(w);
                    parent.push(Some(frame.node));
                    label.push(Some(spin));
                }
                continue;
            }
            origin.push(w);
            parent.push(Some(frame.node));
            label.push(None);
            let mut path = frame.path.clone();
            path.push(w);
            stack.push(Frame {
                node: origin.len() - 1,
                path,
            });
        }
    }

    let tree = RootedTree::from_parents(0, parent)?;
    let mut copies: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &v) in origin.iter().enumerate() {
        copies.entry(v).or_default().push(node);
    }
    Ok(SawTree {
        tree,
        origin,
        structural: label,
        copies,
    })
}

/// A rooted tree with a fugacity and per-node permanent in/out labels; the
/// object pseudoinfluence oracles operate on.
#[derive(Clone, Debug)]
pub struct TreeHardcore {
    pub tree: RootedTree,
    pub labels: Vec<Option<Spin>>,
    pub lambda: f64,
}

impl TreeHardcore {
    pub fn from_saw(saw: &SawTree, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter("fugacity must be positive".into()));
        }
        Ok(TreeHardcore {
            tree: saw.tree.clone(),
            labels: saw.structural.clone(),
            lambda,
        })
    }

    pub fn from_tree(tree: &RootedTree, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter("fugacity must be positive".into()));
        }
        Ok(TreeHardcore {
            tree: tree.clone(),
            labels: vec![None; tree.node_count()],
            lambda,
        })
    }

    /// Maximum degree of the underlying (undirected) tree.
    pub fn max_degree(&self) -> usize {
        self.tree.to_graph().max_degree()
    }

    /// Exact root marginal under the permanent labels (full tree, no
    /// boundary), via the two-state recursion.
    pub fn root_marginal(&self) -> Result<f64> {
        let (z_out, z_in) = self.subtree_z(self.tree.root());
        if z_out + z_in <= 0.0 {
            return Err(Error::ZeroMass("labels admit no configuration".into()));
        }
        Ok(z_in / (z_out + z_in))
    }

    fn subtree_z(&self, v: usize) -> (f64, f64) {
        let mut z_out = 1.0;
        let mut z_in = self.lambda;
        for &c in self.tree.children(v) {
            let (co, ci) = self.subtree_z(c);
            z_out *= co + ci;
            z_in *= co;
        }
        match self.labels[v] {
            Some(Spin::In) => z_out = 0.0,
            Some(Spin::Out) => z_in = 0.0,
            None => {}
        }
        (z_out, z_in)
    }

    /// Occupation odds of `root` when every vertex of its subtree at depth
    /// `cutoff` carries an assigned ratio and deeper vertices are cut away.
    ///
    /// `assigned` overrides permanent labels (used for the flipped vertex);
    /// unassigned labeled vertices anywhere contribute their label.
    fn ratio_with_boundary(
        &self,
        node: usize,
        cutoff: usize,
        assigned: &BTreeMap<usize, Ratio>,
    ) -> Ratio {
        if let Some(&r) = assigned.get(&node) {
            return r;
        }
        if let Some(spin) = self.labels[node] {
            return match spin {
                Spin::In => Ratio::Infinite,
                Spin::Out => Ratio::Finite(0.0),
            };
        }
        debug_assert!(
            self.tree.depth(node) < cutoff,
            "free boundary vertex must be assigned"
        );
        let mut r = self.lambda;
        for &c in self.tree.children(node) {
            let rc = self.ratio_with_boundary(c, cutoff, assigned);
            let f = rc.recursion_factor();
            if f == 0.0 {
                return Ratio::Finite(0.0);
            }
            r *= f;
        }
        Ratio::Finite(r)
    }
}

/// Boundary search mode for pseudoinfluence maximization.
#[derive(Clone, Copy, Debug)]
pub enum BoundaryMode {
    /// All 0/1 marginal assignments on the free level vertices.
    VertexBoundary,
    /// A uniform grid (including the endpoints) per free coordinate.
    GridRefined(usize),
}

/// Maximized odds sensitivity and potential-scale sensitivity of the root
/// of `sub_root`'s subtree to flipping `v`, over boundary marginals on
/// `v`'s level.
#[derive(Clone, Copy, Debug)]
pub struct Pseudoinfluence {
    /// max over boundaries of `|R(v out) - R(v in)|`
    pub r_scale: f64,
    /// max over boundaries of `|phi(R(v out)) - phi(R(v in))|`
    pub k_scale: f64,
}

/// Computes the pseudoinfluence of `v` on `sub_root` (which must be a
/// proper ancestor of `v`).
pub fn pseudoinfluence(
    tm: &TreeHardcore,
    sub_root: usize,
    v: usize,
    mode: BoundaryMode,
) -> Result<Pseudoinfluence> {
    let cutoff = tm.tree.depth(v);
    if cutoff <= tm.tree.depth(sub_root) {
        return Err(Error::InvalidParameter(
            "flipped vertex must lie strictly below the subtree root".into(),
        ));
    }
    if tm.labels[sub_root].is_some() {
        return Err(Error::InvalidParameter(
            "subtree root must be a free vertex".into(),
        ));
    }
    // level vertices inside the subtree, excluding v; only free ones get
    // boundary coordinates, labeled ones keep their labels
    let mut free_level = Vec::new();
    {
        let mut stack = vec![sub_root];
        while let Some(x) = stack.pop() {
            if tm.tree.depth(x) == cutoff {
                if x != v && tm.labels[x].is_none() {
                    free_level.push(x);
                }
                continue;
            }
            stack.extend(tm.tree.children(x).iter().copied());
        }
    }
    if !free_level
        .iter()
        .chain(std::iter::once(&v))
        .all(|&x| tm.tree.depth(x) == cutoff)
    {
        return Err(Error::Invariant("level collection broke".into()));
    }

    let phi = crate::decay::PotentialFunction;
    let mut best = Pseudoinfluence {
        r_scale: 0.0,
        k_scale: 0.0,
    };
    let mut evaluate = |assigned: &mut BTreeMap<usize, Ratio>| {
        assigned.insert(v, Ratio::Finite(0.0));
        let r_out = tm.ratio_with_boundary(sub_root, cutoff, assigned);
        assigned.insert(v, Ratio::Infinite);
        let r_in = tm.ratio_with_boundary(sub_root, cutoff, assigned);
        let (a, b) = (
            r_out.finite().expect("root odds are finite"),
            r_in.finite().expect("root odds are finite"),
        );
        let dr = (a - b).abs();
        let dk = (phi.phi(a) - phi.phi(b)).abs();
        if dr > best.r_scale {
            best.r_scale = dr;
        }
        if dk > best.k_scale {
            best.k_scale = dk;
        }
    };

    let width = free_level.len();
    match mode {
        BoundaryMode::VertexBoundary => {
            if width > LEVEL_WIDTH_CAP {
                return Err(Error::CapExceeded {
                    what: "level width",
                    needed: width,
                    cap: LEVEL_WIDTH_CAP,
                });
            }
            for bits in 0u64..(1u64 << width) {
                let mut assigned = BTreeMap::new();
                for (idx, &u) in free_level.iter().enumerate() {
                    let r = if bits >> idx & 1 == 1 {
                        Ratio::Infinite
                    } else {
                        Ratio::Finite(0.0)
                    };
                    assigned.insert(u, r);
                }
                evaluate(&mut assigned);
            }
        }
        BoundaryMode::GridRefined(points) => {
            if points < 2 {
                return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
            }
            let combos = (points as u64).checked_pow(width as u32);
            match combos {
                Some(c) if c <= GRID_POINT_CAP => {}
                _ => {
                    return Err(Error::CapExceeded {
                        what: "grid boundary search",
                        needed: usize::MAX,
                        cap: GRID_POINT_CAP as usize,
                    })
                }
            }
            let mut counter = vec![0usize; width];
            loop {
                let mut assigned = BTreeMap::new();
                for (idx, &u) in free_level.iter().enumerate() {
                    let q = counter[idx] as f64 / (points - 1) as f64;
                    assigned.insert(u, Ratio::from_marginal(q));
                }
                evaluate(&mut assigned);
                // odometer increment
                let mut pos = 0;
                loop {
                    if pos == width {
                        return Ok(best);
                    }
                    counter[pos] += 1;
                    if counter[pos] < points {
                        break;
                    }
                    counter[pos] = 0;
                    pos += 1;
                }
                if width == 0 {
                    return Ok(best);
                }
            }
        }
    }
    Ok(best)
}

/// Odds-scale pseudoinfluence of `v` on the tree root.
pub fn r_pseudoinfluence(tm: &TreeHardcore, v: usize, mode: BoundaryMode) -> Result<f64> {
    Ok(pseudoinfluence(tm, tm.tree.root(), v, mode)?.r_scale)
}

/// Sum of odds-scale pseudoinfluences over the depth-`ell` level of the
/// subtree rooted at `sub_root` (zero over an empty level).
pub fn level_pseudoinfluence_sum(
    tm: &TreeHardcore,
    sub_root: usize,
    ell: usize,
    mode: BoundaryMode,
) -> Result<f64> {
    Ok(level_rk_sums(tm, sub_root, ell, mode)?.0)
}

/// Per-level `(sum R-scale, sum K-scale)` pseudoinfluence totals.
pub fn level_rk_sums(
    tm: &TreeHardcore,
    sub_root: usize,
    ell: usize,
    mode: BoundaryMode,
) -> Result<(f64, f64)> {
    if tm.labels[sub_root].is_some() {
        return Ok((0.0, 0.0)); // pinned subtree root: nothing below it matters
    }
    let target = tm.tree.depth(sub_root) + ell;
    let mut sum_r = 0.0;
    let mut sum_k = 0.0;
    for node in tm.tree.subtree(sub_root) {
        if tm.tree.depth(node) == target {
            let p = pseudoinfluence(tm, sub_root, node, mode)?;
            sum_r += p.r_scale;
            sum_k += p.k_scale;
        }
    }
    Ok((sum_r, sum_k))
}

/// Outcome of the marginal-preservation comparison between a graph and its
/// labeled SAW tree.
#[derive(Clone, Debug, Serialize)]
pub struct WeitzReport {
    pub root: usize,
    pub graph_marginal: f64,
    pub tree_marginal: f64,
    pub deviation: f64,
    pub saw_nodes: usize,
    pub pass: bool,
}

/// Checks `Pr_G[r | pin] = Pr_T[r | labels]` by computing both sides
/// independently (enumeration vs tree recursion).
pub fn weitz_identity_check(m: &HardcoreModel, r: usize, pin: &Pinning) -> Result<WeitzReport> {
    let table = DistributionTable::enumerate_hardcore(m, pin)?;
    let graph_marginal = table.marginal(r);

    let order = NeighborOrder::reverse_lexicographic(&m.graph);
    let saw = build_saw_tree_pinned(&m.graph, r, &order, pin)?;
    let tm = TreeHardcore::from_saw(&saw, m.lambda)?;
    let tree_marginal = tm.root_marginal()?;

    let deviation = (graph_marginal - tree_marginal).abs();
    Ok(WeitzReport {
        root: r,
        graph_marginal,
        tree_marginal,
        deviation,
        saw_nodes: saw.node_count(),
        pass: deviation < tol::REL.max(1e-10),
    })
}

/// Outcome of the influence-decoupling comparison at a root.
#[derive(Clone, Debug, Serialize)]
pub struct DecouplingReport {
    pub root: usize,
    /// total absolute influence on the root, from enumeration
    pub lhs: f64,
    /// twice the total root pseudoinfluence over the SAW tree
    pub rhs: f64,
    pub slack: f64,
    pub saw_nodes: usize,
    pub pass: bool,
}

/// Checks that the total influence on `r` is at most twice the total
/// pseudoinfluence over the SAW tree rooted at `r`.
pub fn decoupling_check(m: &HardcoreModel, r: usize) -> Result<DecouplingReport> {
    let table = DistributionTable::enumerate_hardcore(m, &Pinning::empty())?;
    let psi = influence::influence_matrix(&table, &Pinning::empty())?;
    let mut lhs = 0.0;
    for &u in psi.free() {
        if u == r {
            continue;
        }
        if let Some(x) = psi.entry_by_element(u, r) {
            lhs += x.abs();
        }
    }

    let order = NeighborOrder::reverse_lexicographic(&m.graph);
    let saw = build_saw_tree(&m.graph, r, &order)?;
    let tm = TreeHardcore::from_saw(&saw, m.lambda)?;
    let mut total = 0.0;
    for node in 1..tm.tree.node_count() {
        total += r_pseudoinfluence(&tm, node, BoundaryMode::VertexBoundary)?;
    }
    let rhs = 2.0 * total;
    Ok(DecouplingReport {
        root: r,
        lhs,
        rhs,
        slack: rhs - lhs,
        saw_nodes: saw.node_count(),
        pass: lhs <= rhs + tol::INEQ_SLACK,
    })
}
