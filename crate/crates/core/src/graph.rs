//! Simple undirected graphs and rooted trees.
//!
//! Vertex ids are dense integers `0..n`. Display names (for graphs that come
//! with a name table in the input file) are carried separately so that all
//! downstream bit-mask enumeration can index by id.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// A finite simple undirected graph.
///
/// Immutable after construction; adjacency lists are kept sorted.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    names: Option<Vec<String>>,
}

impl Graph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicate
    /// edges and out-of-range endpoints.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in &edges {
            if u >= n {
                return Err(Error::InvalidVertex { id: u, n });
            }
            if v >= n {
                return Err(Error::InvalidVertex { id: v, n });
            }
            if u == v {
                return Err(Error::Invariant(format!("self-loop at vertex {u}")));
            }
            let e = (u.min(v), u.max(v));
            if normalized.contains(&e) {
                return Err(Error::Invariant(format!(
                    "duplicate edge {} {}",
                    e.0, e.1
                )));
            }
            normalized.push(e);
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: normalized,
            adj,
            names: None,
        })
    }

    /// Parses the edge-list text format: a header `n m`, then `m` lines
    /// `u v`, then optional `#name idx name` lines. LF line endings, UTF-8.
    pub fn from_edge_list_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (hdr_no, header) = lines
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .ok_or(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })?;
        let mut it = header.split_whitespace();
        let parse_usize = |tok: Option<&str>, line: usize, what: &str| -> Result<usize> {
            tok.ok_or_else(|| Error::Parse {
                line,
                msg: format!("missing {what}"),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("bad {what}: {e}"),
            })
        };
        let n = parse_usize(it.next(), hdr_no + 1, "vertex count")?;
        let m = parse_usize(it.next(), hdr_no + 1, "edge count")?;
        if it.next().is_some() {
            return Err(Error::Parse {
                line: hdr_no + 1,
                msg: "trailing tokens after header".into(),
            });
        }

        let mut edges = Vec::with_capacity(m);
        let mut names: Vec<Option<String>> = vec![None; n];
        let mut have_names = false;
        for (no, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("#name") {
                let mut toks = rest.split_whitespace();
                let idx = parse_usize(toks.next(), no + 1, "name index")?;
                let name = toks.next().ok_or_else(|| Error::Parse {
                    line: no + 1,
                    msg: "missing name".into(),
                })?;
                if idx >= n {
                    return Err(Error::Parse {
                        line: no + 1,
                        msg: format!("name index {idx} out of range"),
                    });
                }
                names[idx] = Some(name.to_string());
                have_names = true;
                continue;
            }
            if edges.len() == m {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: format!("unexpected line after {m} edges"),
                });
            }
            let mut toks = line.split_whitespace();
            let u = parse_usize(toks.next(), no + 1, "edge endpoint")?;
            let v = parse_usize(toks.next(), no + 1, "edge endpoint")?;
            if toks.next().is_some() {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: "trailing tokens after edge".into(),
                });
            }
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("expected {m} edges, found {}", edges.len()),
            });
        }
        let mut g = Graph::new(n, edges)?;
        if have_names {
            g.names = Some(
                names
                    .into_iter()
                    .enumerate()
                    .map(|(i, x)| x.unwrap_or_else(|| i.to_string()))
                    .collect(),
            );
        }
        Ok(g)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list_str(&text)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Display name of vertex `v` (its id when no name table was given).
    pub fn name(&self, v: usize) -> String {
        match &self.names {
            Some(t) => t[v].clone(),
            None => v.to_string(),
        }
    }

    /// Resolves a vertex given either its id or its display name.
    pub fn resolve(&self, token: &str) -> Result<usize> {
        if let Some(t) = &self.names {
            if let Some(i) = t.iter().position(|x| x == token) {
                return Ok(i);
            }
        }
        let id: usize = token.parse().map_err(|_| Error::InvalidParameter(
            format!("unknown vertex {token:?}"),
        ))?;
        self.check_vertex(id)?;
        Ok(id)
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n {
            return Err(Error::InvalidVertex { id: v, n: self.n });
        }
        Ok(())
    }

    /// BFS distance between `u` and `v`; `None` when unreachable.
    pub fn shortest_path_distance(&self, u: usize, v: usize) -> Result<Option<usize>> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Ok(Some(0));
        }
        let mut dist = vec![usize::MAX; self.n];
        dist[u] = 0;
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            for &y in self.neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    if y == v {
                        return Ok(Some(dist[y]));
                    }
                    queue.push_back(y);
                }
            }
        }
        Ok(None)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in self.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == self.n
    }

    /// True when the graph is acyclic (every component a tree).
    pub fn is_forest(&self) -> bool {
        let mut parent = vec![usize::MAX; self.n];
        let mut seen = vec![false; self.n];
        for s in 0..self.n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &y in self.neighbors(x) {
                    if y == parent[x] {
                        continue;
                    }
                    if seen[y] {
                        return false;
                    }
                    seen[y] = true;
                    parent[y] = x;
                    stack.push(y);
                }
            }
        }
        true
    }
}

/// A rooted tree over nodes `0..len`, with parent pointers, ordered child
/// lists and per-node depth.
#[derive(Clone, Debug)]
pub struct RootedTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl RootedTree {
    /// Validates parent pointers: exactly one root, connected, acyclic.
    pub fn from_parents(root: usize, parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        if root >= n || parent[root].is_some() {
            return Err(Error::Invariant("root must exist and have no parent".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (v, &p) in parent.iter().enumerate() {
            match p {
                Some(p) => {
                    if p >= n {
                        return Err(Error::InvalidVertex { id: p, n });
                    }
                    children[p].push(v);
                }
                None => {
                    if v != root {
                        return Err(Error::Invariant(format!(
                            "node {v} has no parent but is not the root"
                        )));
                    }
                }
            }
        }
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut stack = vec![root];
        let mut visited = 1;
        while let Some(x) = stack.pop() {
            for &c in &children[x] {
                if depth[c] != usize::MAX {
                    return Err(Error::Invariant("cycle in parent pointers".into()));
                }
                depth[c] = depth[x] + 1;
                visited += 1;
                stack.push(c);
            }
        }
        if visited != n {
            return Err(Error::Invariant("tree is not connected".into()));
        }
        Ok(RootedTree {
            root,
            parent,
            children,
            depth,
        })
    }

    /// The complete `branching`-ary tree with leaves at the given depth.
    pub fn complete_ary_tree(branching: usize, depth: usize) -> Result<Self> {
        if branching < 1 {
            return Err(Error::InvalidParameter("branching must be >= 1".into()));
        }
        Self::regular_rooted_tree(branching, branching, depth)
    }

    /// Root gets `root_branching` children, every internal node below gets
    /// `branching`; leaves sit at `depth`.
    pub fn regular_rooted_tree(
        root_branching: usize,
        branching: usize,
        depth: usize,
    ) -> Result<Self> {
        let mut parent = vec![None];
        let mut frontier = vec![0usize];
        for level in 0..depth {
            let b = if level == 0 { root_branching } else { branching };
            let mut next = Vec::new();
            for &u in &frontier {
                for _ in 0..b {
                    parent.push(Some(u));
                    next.push(parent.len() - 1);
                }
            }
            frontier = next;
        }
        Self::from_parents(0, parent)
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn nodes_at_depth(&self, level: usize) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| self.depth[v] == level)
            .collect()
    }

    /// Nodes of the subtree rooted at `u` (including `u`), preorder.
    pub fn subtree(&self, u: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![u];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.children[x].iter().copied());
        }
        out
    }

    /// The same tree as an undirected `Graph` (node ids preserved).
    pub fn to_graph(&self) -> Graph {
        let edges = (0..self.node_count())
            .filter_map(|v| self.parent[v].map(|p| (p, v)))
            .collect();
        Graph::new(self.node_count(), edges).expect("tree edges are always simple")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn k2_from_text() {
        let g = Graph::from_edge_list_str("2 1\n0 1\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.max_degree(), 1);
    }

    #[test]
    fn self_loop_rejected() {
        let err = Graph::from_edge_list_str("1 1\n0 0\n").unwrap_err();
        assert!(matches!(err, Error::Invariant(_)), "{err}");
    }

    #[test]
    fn duplicate_edge_rejected() {
        assert!(Graph::from_edge_list_str("2 2\n0 1\n1 0\n").is_err());
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = Graph::from_edge_list_str("2 1\nx y\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn name_table_round_trip() {
        let g = Graph::from_edge_list_str("2 1\n0 1\n#name 0 a\n#name 1 b\n").unwrap();
        assert_eq!(g.name(0), "a");
        assert_eq!(g.resolve("b").unwrap(), 1);
        assert_eq!(g.resolve("0").unwrap(), 0);
    }

    #[test]
    fn demo_graph_degrees() {
        let g = gen::twin_triangles();
        assert_eq!(g.n(), 6);
        assert_eq!(g.edge_count(), 7);
        // Only the hub vertex d reaches the maximum degree 4.
        assert_eq!(g.max_degree(), 4);
        assert_eq!(g.degree(3), 4);
    }

    #[test]
    fn bfs_distances() {
        let g = gen::twin_triangles();
        // a to f goes through d.
        assert_eq!(g.shortest_path_distance(0, 5).unwrap(), Some(2));
        assert_eq!(g.shortest_path_distance(4, 4).unwrap(), Some(0));
        let iso = Graph::new(2, vec![]).unwrap();
        assert_eq!(iso.shortest_path_distance(0, 1).unwrap(), None);
        assert!(iso.shortest_path_distance(0, 7).is_err());
    }

    #[test]
    fn degree_sum_is_twice_edges() {
        let g = gen::twin_triangles();
        let sum: usize = (0..g.n()).map(|v| g.degree(v)).sum();
        assert_eq!(sum, 2 * g.edge_count());
    }

    #[test]
    fn empty_graph_degree() {
        let g = Graph::new(5, vec![]).unwrap();
        assert_eq!(g.max_degree(), 0);
    }

    #[test]
    fn complete_ary_tree_sizes() {
        assert_eq!(RootedTree::complete_ary_tree(2, 0).unwrap().node_count(), 1);
        assert_eq!(RootedTree::complete_ary_tree(2, 2).unwrap().node_count(), 7);
        assert_eq!(RootedTree::complete_ary_tree(3, 3).unwrap().node_count(), 40);
        // (b^{d+1} - 1) / (b - 1) for a few more shapes
        for b in 2..=4usize {
            for d in 0..=4usize {
                let t = RootedTree::complete_ary_tree(b, d).unwrap();
                assert_eq!(t.node_count(), (b.pow(d as u32 + 1) - 1) / (b - 1));
                assert_eq!(t.height(), d);
            }
        }
    }

    #[test]
    fn tree_depth_consistency() {
        let t = RootedTree::complete_ary_tree(3, 2).unwrap();
        for v in 0..t.node_count() {
            match t.parent(v) {
                Some(p) => assert_eq!(t.depth(v), t.depth(p) + 1),
                None => assert_eq!(t.depth(v), 0),
            }
        }
        assert_eq!(t.nodes_at_depth(2).len(), 9);
    }
}
