//! Node-weighted undirected graphs and the dense node set they operate on.
//!
//! Everything downstream (scenario conditioning, the submodular objectives,
//! the exact solvers, the policies) manipulates subsets of a fixed node range
//! `[0, n)`, so [`NodeSet`] is a plain bitset with set algebra, and induced
//! subgraphs are represented as restriction sets rather than copied graphs.

use std::cmp::Ordering;
use std::fmt;

use num::BigRational;
use num::Zero;
use thiserror::Error;

/// Dense node index, stable within one instance.
pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} out of range (n = {1})")]
    InvalidNode(NodeId, usize),
    #[error("self loop at node {0}")]
    SelfLoop(NodeId),
    #[error("negative weight at node {0}")]
    NegativeWeight(NodeId),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("seed node {0} not in the restriction set")]
    SeedOutsideRestriction(NodeId),
}

/// Subset of `[0, n)` as a bitset. Node 0 is the least significant bit, so
/// comparing two sets as integers (the deterministic tie-break used by the
/// solvers) is a word-wise comparison from the high end.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct NodeSet {
    words: Vec<u64>,
}

impl NodeSet {
    pub fn empty(n: usize) -> Self {
        NodeSet {
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    pub fn singleton(n: usize, v: NodeId) -> Self {
        let mut s = Self::empty(n);
        s.insert(v);
        s
    }

    #[inline]
    pub fn contains(&self, v: NodeId) -> bool {
        self.words
            .get(v / 64)
            .is_some_and(|w| w & (1u64 << (v % 64)) != 0)
    }

    #[inline]
    pub fn insert(&mut self, v: NodeId) {
        self.words[v / 64] |= 1u64 << (v % 64);
    }

    #[inline]
    pub fn remove(&mut self, v: NodeId) {
        if let Some(w) = self.words.get_mut(v / 64) {
            *w &= !(1u64 << (v % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of representable node ids. Sets built with `empty(capacity())`
    /// are word-compatible with this one.
    pub fn capacity(&self) -> usize {
        self.words.len() * 64
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Smallest member, if any.
    pub fn first(&self) -> Option<NodeId> {
        for (i, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(i * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &word)| {
            std::iter::successors(Some(word), |&w| (w != 0).then(|| w & (w - 1)))
                .take_while(|&w| w != 0)
                .map(move |w| i * 64 + w.trailing_zeros() as usize)
        })
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &NodeSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        for a in self.words.iter_mut().skip(other.words.len()) {
            *a = 0;
        }
    }

    pub fn subtract(&mut self, other: &NodeSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        let mut s = self.clone();
        s.subtract(other);
        s
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(i, &w)| w & !other.words.get(i).copied().unwrap_or(0) == 0)
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(&a, &b)| a & b == 0)
    }

    pub fn intersection_len(&self, other: &NodeSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| (a & b).count_ones() as usize)
            .sum()
    }
}

/// Orders sets by their value as little-endian integers. A strict superset is
/// always strictly greater, which the solvers rely on for tie-breaking.
impl Ord for NodeSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let len = self.words.len().max(other.words.len());
        for i in (0..len).rev() {
            let a = self.words.get(i).copied().unwrap_or(0);
            let b = other.words.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for NodeSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<NodeId> for NodeSet {
    /// Capacity is sized to the largest member; callers that need a specific
    /// capacity should start from [`NodeSet::empty`].
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let nodes: Vec<NodeId> = iter.into_iter().collect();
        let n = nodes.iter().map(|&v| v + 1).max().unwrap_or(0);
        let mut s = NodeSet::empty(n);
        for v in nodes {
            s.insert(v);
        }
        s
    }
}

/// Undirected node-weighted graph with a designated root. Immutable after
/// construction; policies shrink it by carrying a live [`NodeSet`] alongside.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    root: NodeId,
    adj: Vec<NodeSet>,
    closed: Vec<NodeSet>,
    edges: Vec<(NodeId, NodeId)>,
    weights: Vec<BigRational>,
    positions: Option<Vec<(BigRational, BigRational)>>,
}

impl Graph {
    pub fn new(
        n: usize,
        root: NodeId,
        edges: &[(NodeId, NodeId)],
        weights: Vec<BigRational>,
    ) -> Result<Self, GraphError> {
        if root >= n {
            return Err(GraphError::InvalidNode(root, n));
        }
        if weights.len() != n {
            return Err(GraphError::WeightCount {
                expected: n,
                got: weights.len(),
            });
        }
        if let Some(v) = weights.iter().position(|w| w < &BigRational::zero()) {
            return Err(GraphError::NegativeWeight(v));
        }
        let mut adj = vec![NodeSet::empty(n); n];
        let mut canonical = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= n {
                return Err(GraphError::InvalidNode(u, n));
            }
            if v >= n {
                return Err(GraphError::InvalidNode(v, n));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u].insert(v);
            adj[v].insert(u);
            canonical.push((u.min(v), u.max(v)));
        }
        canonical.sort_unstable();
        canonical.dedup();
        let closed = adj
            .iter()
            .enumerate()
            .map(|(v, nb)| {
                let mut c = nb.clone();
                c.insert(v);
                c
            })
            .collect();
        Ok(Graph {
            n,
            root,
            adj,
            closed,
            edges: canonical,
            weights,
            positions: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Edge list in canonical (u < v, sorted) order.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn weight(&self, v: NodeId) -> &BigRational {
        &self.weights[v]
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn positions(&self) -> Option<&[(BigRational, BigRational)]> {
        self.positions.as_deref()
    }

    pub fn set_positions(&mut self, positions: Vec<(BigRational, BigRational)>) {
        assert_eq!(positions.len(), self.n);
        self.positions = Some(positions);
    }

    pub fn all_nodes(&self) -> NodeSet {
        NodeSet::full(self.n)
    }

    /// Open neighborhood N(v).
    pub fn neighbors(&self, v: NodeId) -> &NodeSet {
        &self.adj[v]
    }

    /// Closed neighborhood N[v].
    pub fn closed_neighborhood(&self, v: NodeId) -> Result<&NodeSet, GraphError> {
        self.closed
            .get(v)
            .ok_or(GraphError::InvalidNode(v, self.n))
    }

    /// N[U]: every node of `u` together with all their neighbors.
    pub fn dominated_set(&self, u: &NodeSet) -> NodeSet {
        let mut out = u.clone();
        for v in u.iter() {
            out.union_with(&self.adj[v]);
        }
        out
    }

    /// Maximal connected node set of the induced subgraph G[restrict]
    /// containing `seed`.
    pub fn connected_component(
        &self,
        restrict: &NodeSet,
        seed: NodeId,
    ) -> Result<NodeSet, GraphError> {
        if !restrict.contains(seed) {
            return Err(GraphError::SeedOutsideRestriction(seed));
        }
        Ok(self.component_of(restrict, seed))
    }

    /// As [`connected_component`] with the membership of `seed` already known.
    pub(crate) fn component_of(&self, restrict: &NodeSet, seed: NodeId) -> NodeSet {
        debug_assert!(restrict.contains(seed));
        let mut comp = NodeSet::empty(self.n);
        comp.insert(seed);
        let mut stack = vec![seed];
        while let Some(v) = stack.pop() {
            let mut fresh = self.adj[v].intersection(restrict);
            fresh.subtract(&comp);
            for u in fresh.iter() {
                stack.push(u);
            }
            comp.union_with(&fresh);
        }
        comp
    }

    /// Whether G[set] is connected (the empty set counts as disconnected).
    pub fn is_connected_within(&self, set: &NodeSet) -> bool {
        match set.first() {
            None => false,
            Some(seed) => self.component_of(set, seed) == *set,
        }
    }

    /// Whether `u` contains the root, induces a connected subgraph, and
    /// dominates every node of the graph.
    pub fn is_cds(&self, u: &NodeSet) -> bool {
        u.contains(self.root)
            && self.is_connected_within(u)
            && self.dominated_set(u) == self.all_nodes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;
    use proptest::prelude::*;

    fn rat(x: i64) -> BigRational {
        BigRational::from_i64(x).unwrap()
    }

    fn zero_weights(n: usize) -> Vec<BigRational> {
        vec![BigRational::zero(); n]
    }

    /// r(0) - x(1) - y(2), w = (0, 1, 2).
    fn path3() -> Graph {
        Graph::new(3, 0, &[(0, 1), (1, 2)], vec![rat(0), rat(1), rat(2)]).unwrap()
    }

    /// Root 0 joined to 1, 2, 3; each of those to its partner 5, 6, 7; the
    /// partners all joined to a common sink 4.
    fn tri_branch_graph() -> Graph {
        Graph::new(
            8,
            0,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (1, 5),
                (2, 6),
                (3, 7),
                (5, 4),
                (6, 4),
                (7, 4),
            ],
            zero_weights(8),
        )
        .unwrap()
    }

    fn set(nodes: &[NodeId]) -> NodeSet {
        let mut s = NodeSet::empty(8);
        for &v in nodes {
            s.insert(v);
        }
        s
    }

    #[test]
    fn closed_neighborhood_on_path() {
        let g = path3();
        assert_eq!(g.closed_neighborhood(1).unwrap().iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(g.closed_neighborhood(0).unwrap().iter().collect::<Vec<_>>(), vec![0, 1]);
        assert!(matches!(g.closed_neighborhood(7), Err(GraphError::InvalidNode(7, 3))));
    }

    #[test]
    fn closed_neighborhood_of_tri_branch_root() {
        let g = tri_branch_graph();
        assert_eq!(*g.closed_neighborhood(0).unwrap(), set(&[0, 1, 2, 3]));
    }

    #[test]
    fn dominated_set_examples() {
        let g = path3();
        let mut rx = NodeSet::empty(3);
        rx.insert(0);
        rx.insert(1);
        assert_eq!(g.dominated_set(&rx), NodeSet::full(3));
        assert!(g.dominated_set(&NodeSet::empty(3)).is_empty());

        let g = tri_branch_graph();
        assert_eq!(g.dominated_set(&set(&[0, 1])), set(&[0, 1, 2, 3, 5]));
    }

    #[test]
    fn connected_component_examples() {
        let g = tri_branch_graph();
        // Restricting to {r, a, b, c, d} separates the sink d from the root.
        assert_eq!(
            g.connected_component(&set(&[0, 1, 2, 3, 4]), 0).unwrap(),
            set(&[0, 1, 2, 3])
        );
        assert_eq!(g.connected_component(&set(&[4]), 4).unwrap(), set(&[4]));
        assert!(g.connected_component(&set(&[1, 2]), 0).is_err());

        let g = path3();
        assert_eq!(g.connected_component(&NodeSet::full(3), 0).unwrap(), NodeSet::full(3));
    }

    #[test]
    fn is_cds_examples() {
        let g = path3();
        let mut rx = NodeSet::empty(3);
        rx.insert(0);
        rx.insert(1);
        assert!(g.is_cds(&rx));
        let mut ry = NodeSet::empty(3);
        ry.insert(0);
        ry.insert(2);
        assert!(!g.is_cds(&ry), "r and y are not adjacent");
        assert!(!g.is_cds(&NodeSet::empty(3)));
    }

    #[test]
    fn nodeset_orders_as_integer() {
        let a = set(&[0, 3, 7]);
        let b = set(&[0, 3, 4]);
        assert!(b < a, "bit 7 outweighs bit 4");
        let mut c = b.clone();
        c.insert(6);
        assert!(b < c, "supersets are strictly larger");
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            Graph::new(2, 0, &[(0, 0)], zero_weights(2)),
            Err(GraphError::SelfLoop(0))
        ));
        assert!(matches!(
            Graph::new(2, 5, &[], zero_weights(2)),
            Err(GraphError::InvalidNode(5, 2))
        ));
        assert!(matches!(
            Graph::new(2, 0, &[(0, 2)], zero_weights(2)),
            Err(GraphError::InvalidNode(2, 2))
        ));
        let w = vec![BigRational::zero(), -BigRational::from_i64(1).unwrap()];
        assert!(matches!(
            Graph::new(2, 0, &[(0, 1)], w),
            Err(GraphError::NegativeWeight(1))
        ));
    }

    /// Random graph strategy over at most 9 nodes.
    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2usize..10).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            proptest::collection::vec(any::<bool>(), pairs.len()).prop_map(move |mask| {
                let edges: Vec<_> = pairs
                    .iter()
                    .zip(&mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(&e, _)| e)
                    .collect();
                Graph::new(n, 0, &edges, vec![BigRational::zero(); n]).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric(g in arb_graph()) {
            for u in 0..g.n() {
                for v in 0..g.n() {
                    prop_assert_eq!(g.neighbors(u).contains(v), g.neighbors(v).contains(u));
                }
            }
        }

        #[test]
        fn dominated_set_is_monotone(g in arb_graph(), mask in proptest::collection::vec(any::<bool>(), 10)) {
            let mut small = NodeSet::empty(g.n());
            let mut large = NodeSet::empty(g.n());
            for v in 0..g.n() {
                if mask[v] {
                    small.insert(v);
                }
                // Every third node extra in the superset.
                if mask[v] || v % 3 == 0 {
                    large.insert(v);
                }
            }
            prop_assert!(g.dominated_set(&small).is_subset(&g.dominated_set(&large)));
        }

        #[test]
        fn connected_component_is_idempotent(g in arb_graph()) {
            let comp = g.connected_component(&g.all_nodes(), 0).unwrap();
            prop_assert_eq!(g.connected_component(&comp, 0).unwrap(), comp.clone());
        }

        #[test]
        fn all_nodes_is_cds_when_connected(g in arb_graph()) {
            let all = g.all_nodes();
            if g.is_connected_within(&all) {
                prop_assert!(g.is_cds(&all));
            }
        }
    }
}
