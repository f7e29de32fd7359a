//! Immutable undirected graphs in compressed adjacency form.
//!
//! Each undirected edge `{u, v}` is oriented as `(min, max)`; flow signs are
//! reported with respect to that orientation.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Unweighted, undirected, simple graph.
///
/// Neighbor lists are sorted and symmetric; `degree(v)` is the length of `v`'s
/// list and `total_volume() == 2 * edge_count()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

/// Collects edges and validates them into a [`Graph`].
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl GraphBuilder {
    pub fn new(node_count: usize) -> Self {
        Self { node_count, edges: Vec::new() }
    }

    pub fn with_capacity(node_count: usize, edges: usize) -> Self {
        Self { node_count, edges: Vec::with_capacity(edges) }
    }

    /// Records an undirected edge. Duplicates (in either direction) are merged
    /// at build time.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> &mut Self {
        self.edges.push((u, v));
        self
    }

    pub fn extend<I: IntoIterator<Item = (NodeId, NodeId)>>(&mut self, edges: I) -> &mut Self {
        self.edges.extend(edges);
        self
    }

    /// Builds the graph and requires it to be connected.
    pub fn build(self) -> Result<Graph> {
        let g = self.build_allow_disconnected()?;
        let components = g.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(g)
    }

    /// Builds the graph without the connectivity check.
    pub fn build_allow_disconnected(self) -> Result<Graph> {
        let n = self.node_count;
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut oriented = Vec::with_capacity(self.edges.len());
        for (u, v) in self.edges {
            if u >= n {
                return Err(Error::NodeOutOfRange { node: u, node_count: n });
            }
            if v >= n {
                return Err(Error::NodeOutOfRange { node: v, node_count: n });
            }
            if u == v {
                return Err(Error::SelfLoop { node: u });
            }
            oriented.push(if u < v { (u, v) } else { (v, u) });
        }
        oriented.sort_unstable();
        oriented.dedup();

        let mut degree = vec![0usize; n];
        for &(u, v) in &oriented {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0; offsets[n]];
        // Lists come out sorted: `oriented` is sorted by (u, v), so each u's
        // larger neighbors arrive in order, and each v's smaller neighbors are
        // appended in increasing u, before any larger ones.
        for &(u, v) in &oriented {
            targets[cursor[v]] = u;
            cursor[v] += 1;
        }
        for &(u, v) in &oriented {
            targets[cursor[u]] = v;
            cursor[u] += 1;
        }
        Ok(Graph { offsets, targets })
    }
}

impl Graph {
    /// Shorthand for a connected graph from an edge iterator.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut b = GraphBuilder::new(node_count);
        b.extend(edges);
        b.build()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    /// `vol(V) = Σ deg(v) = 2m`.
    #[inline]
    pub fn total_volume(&self) -> usize {
        self.targets.len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.node_count()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges in their fixed orientation `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count())
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn volume(&self, s: &NodeSet) -> usize {
        s.volume
    }

    /// Number of edges with exactly one endpoint in `s`.
    pub fn cut_size(&self, s: &NodeSet) -> usize {
        s.iter()
            .map(|v| self.neighbors(v).iter().filter(|&&u| !s.contains(u)).count())
            .sum()
    }

    /// `cut(S) / min(vol(S), vol(V∖S))`.
    pub fn conductance(&self, s: &NodeSet) -> Result<f64> {
        let vol = s.volume;
        let rest = self.total_volume() - vol;
        if s.is_empty() || s.len() == self.node_count() {
            return Err(Error::UndefinedConductance);
        }
        let denom = vol.min(rest);
        if denom == 0 {
            // Only reachable on graphs with isolated nodes.
            return Err(Error::UndefinedConductance);
        }
        Ok(self.cut_size(s) as f64 / denom as f64)
    }

    /// Breadth-first component of `start`, sorted by id.
    pub fn component_of(&self, start: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.node_count()];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            for &u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn component_count(&self) -> usize {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &u in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        count
    }

    /// Subgraph induced by `nodes` (sorted, distinct). Node `i` of the result is
    /// `nodes[i]` of `self`.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Result<Graph> {
        let mut b = GraphBuilder::new(nodes.len());
        for (i, &v) in nodes.iter().enumerate() {
            if v >= self.node_count() {
                return Err(Error::NodeOutOfRange { node: v, node_count: self.node_count() });
            }
            for &u in self.neighbors(v) {
                if u > v {
                    if let Ok(j) = nodes.binary_search(&u) {
                        b.add_edge(i, j);
                    }
                }
            }
        }
        b.build_allow_disconnected()
    }
}

/// A set of nodes of a particular graph with its cached volume.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSet {
    members: Vec<NodeId>,
    volume: usize,
}

impl NodeSet {
    /// Validates ids against `g` and deduplicates.
    pub fn new<I: IntoIterator<Item = NodeId>>(g: &Graph, ids: I) -> Result<Self> {
        let mut members: Vec<NodeId> = ids.into_iter().collect();
        let n = g.node_count();
        if let Some(&bad) = members.iter().find(|&&v| v >= n) {
            return Err(Error::NodeOutOfRange { node: bad, node_count: n });
        }
        members.sort_unstable();
        members.dedup();
        let volume = members.iter().map(|&v| g.degree(v)).sum();
        Ok(Self { members, volume })
    }

    pub fn empty() -> Self {
        Self { members: Vec::new(), volume: 0 }
    }

    pub fn all(g: &Graph) -> Self {
        Self { members: (0..g.node_count()).collect(), volume: g.total_volume() }
    }

    pub fn complement(&self, g: &Graph) -> Self {
        let members: Vec<NodeId> = (0..g.node_count()).filter(|&v| !self.contains(v)).collect();
        Self { members, volume: g.total_volume() - self.volume }
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn volume(&self) -> usize {
        self.volume
    }

    /// Members in increasing id order.
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.members
    }

    pub fn intersection_len(&self, other: &NodeSet) -> usize {
        let (mut i, mut j, mut k) = (0, 0, 0);
        let (a, b) = (&self.members, &other.members);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    k += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn set(g: &Graph, ids: &[NodeId]) -> NodeSet {
        NodeSet::new(g, ids.iter().copied()).unwrap()
    }

    #[test]
    fn path_of_three() {
        let g = path(3);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!((0..3).map(|v| g.degree(v)).collect::<Vec<_>>(), [1, 2, 1]);
        assert_eq!(g.total_volume(), 4);
    }

    #[test]
    fn duplicate_and_reversed_edges_merge() {
        let g = Graph::from_edges(2, [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn self_loop_rejected() {
        assert!(matches!(Graph::from_edges(1, [(0, 0)]), Err(Error::SelfLoop { node: 0 })));
    }

    #[test]
    fn disconnected_rejected_unless_allowed() {
        let mut b = GraphBuilder::new(4);
        b.add_edge(0, 1).add_edge(2, 3);
        assert!(matches!(b.clone().build(), Err(Error::Disconnected { components: 2 })));
        let g = b.build_allow_disconnected().unwrap();
        assert_eq!(g.component_of(3), [2, 3]);
        let sub = g.induced_subgraph(&g.component_of(2)).unwrap();
        assert_eq!(sub.edge_count(), 1);
    }

    #[test]
    fn volume_cut_conductance_on_path() {
        let g = path(4);
        let ab = set(&g, &[0, 1]);
        assert_eq!(g.volume(&ab), 3);
        assert_eq!(g.cut_size(&ab), 1);
        assert!((g.conductance(&ab).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.volume(&NodeSet::empty()), 0);
        let all = NodeSet::all(&g);
        assert_eq!(g.volume(&all), 6);
        assert_eq!(g.cut_size(&all), 0);
        assert!(matches!(g.conductance(&all), Err(Error::UndefinedConductance)));
        assert!(matches!(g.conductance(&NodeSet::empty()), Err(Error::UndefinedConductance)));
    }

    #[test]
    fn four_cycle_adjacent_pair() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(g.cut_size(&set(&g, &[0, 1])), 2);
    }

    #[test]
    fn single_edge_conductance_is_one() {
        let g = path(2);
        assert_eq!(g.conductance(&set(&g, &[0])).unwrap(), 1.0);
    }

    #[test]
    fn node_set_rejects_out_of_range() {
        let g = path(3);
        assert!(matches!(NodeSet::new(&g, [5]), Err(Error::NodeOutOfRange { node: 5, .. })));
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..14)
            .prop_flat_map(|n| {
                let tree = proptest::collection::vec(any::<u32>(), n - 1);
                let extra = proptest::collection::vec((0..n, 0..n), 0..2 * n);
                (Just(n), tree, extra)
            })
            .prop_map(|(n, tree, extra)| {
                let mut b = GraphBuilder::new(n);
                for (i, r) in tree.into_iter().enumerate() {
                    b.add_edge(i + 1, r as usize % (i + 1));
                }
                b.extend(extra.into_iter().filter(|(u, v)| u != v));
                b.build().unwrap()
            })
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric_sorted(g in arb_graph()) {
            let mut vol = 0;
            for v in 0..g.node_count() {
                let nb = g.neighbors(v);
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                for &u in nb {
                    prop_assert!(u != v);
                    prop_assert!(g.has_edge(u, v));
                }
                vol += g.degree(v);
            }
            prop_assert_eq!(vol, g.total_volume());
            prop_assert_eq!(vol, 2 * g.edges().count());
        }

        #[test]
        fn conductance_bounds_and_symmetry(g in arb_graph(), mask in any::<u64>()) {
            let ids: Vec<NodeId> = (0..g.node_count()).filter(|v| mask >> (v % 64) & 1 == 1).collect();
            let s = NodeSet::new(&g, ids).unwrap();
            let c = s.complement(&g);
            prop_assert_eq!(s.volume() + c.volume(), g.total_volume());
            prop_assert_eq!(g.cut_size(&s), g.cut_size(&c));
            prop_assert!(g.cut_size(&s) <= s.volume().min(c.volume()));
            if !s.is_empty() && !c.is_empty() {
                let phi = g.conductance(&s).unwrap();
                prop_assert!((0.0..=1.0).contains(&phi));
                prop_assert_eq!(phi, g.conductance(&c).unwrap());
            }
        }
    }
}
