//! Exact desk-scale solvers. The central problem: among connected node sets
//! that contain the root and drive a monotone integer objective to its
//! maximum, find one of minimum node weight. A branch and bound over
//! root-grown connected sets solves it exactly; a subset-enumeration solver
//! serves as reference oracle and as fallback on small domains. An
//! edge-weighted variant (minimum spanning-tree cost over feasible spanned
//! sets) supports the node-to-edge weight reduction.
//!
//! Solutions are reported as spanned node sets; callers never consume tree
//! edges. Ties among equal-weight optima break toward the lexicographically
//! smallest set bitstring, which keeps every downstream average
//! deterministic.

use std::collections::HashMap;

use num::integer::Integer;
use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, NodeSet};
use crate::polymatroid::{IntegerPolymatroid, PolymatroidError, SubmodularFn};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no feasible solution: the reachable domain cannot meet the target")]
    Infeasible,
    #[error("solver domain is not connected")]
    Disconnected,
    #[error("search budget exhausted after {0} explored nodes")]
    Limit(u64),
    #[error("node weights overflow the solver's integer range")]
    WeightOverflow,
    #[error("objective ground set does not match the solver domain")]
    GroundMismatch,
    #[error("invalid solver instance: {0}")]
    BadInstance(&'static str),
    #[error("domain too large for exhaustive enumeration")]
    TooLarge,
    #[error(transparent)]
    Objective(#[from] PolymatroidError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Monotone integer-valued objective over subsets of a fixed ground set,
/// with feasibility defined as reaching the ground value.
pub trait IntegerObjective {
    fn ground(&self) -> &NodeSet;
    fn target(&self) -> u128;
    fn eval_int(&self, x: &NodeSet) -> Result<u128, PolymatroidError>;
}

impl<F: SubmodularFn> IntegerObjective for IntegerPolymatroid<F> {
    fn ground(&self) -> &NodeSet {
        IntegerPolymatroid::ground(self)
    }

    fn target(&self) -> u128 {
        IntegerPolymatroid::target(self)
    }

    fn eval_int(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        IntegerPolymatroid::eval_int(self, x)
    }
}

/// Coverage objective |N[S] ∩ domain| with target |domain|: feasible sets
/// are exactly the dominating sets of the domain-induced subgraph.
pub struct DominationObjective<'a> {
    graph: &'a Graph,
    domain: NodeSet,
}

impl<'a> DominationObjective<'a> {
    pub fn new(graph: &'a Graph, domain: NodeSet) -> Self {
        DominationObjective { graph, domain }
    }
}

impl IntegerObjective for DominationObjective<'_> {
    fn ground(&self) -> &NodeSet {
        &self.domain
    }

    fn target(&self) -> u128 {
        self.domain.len() as u128
    }

    fn eval_int(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        Ok(self.graph.dominated_set(x).intersection_len(&self.domain) as u128)
    }
}

/// Terminal-counting objective |S ∩ terminals| with target |terminals|:
/// feasible sets are those spanning every terminal.
pub struct TerminalObjective {
    domain: NodeSet,
    terminals: NodeSet,
}

impl TerminalObjective {
    /// Terminals outside the domain are dropped.
    pub fn new(domain: NodeSet, terminals: &NodeSet) -> Self {
        let terminals = terminals.intersection(&domain);
        TerminalObjective { domain, terminals }
    }
}

impl IntegerObjective for TerminalObjective {
    fn ground(&self) -> &NodeSet {
        &self.domain
    }

    fn target(&self) -> u128 {
        self.terminals.len() as u128
    }

    fn eval_int(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        Ok(x.intersection_len(&self.terminals) as u128)
    }
}

/// One node-weighted solve: find a minimum-weight connected subset of
/// `domain` that contains the root and reaches the objective target. Only
/// nodes in `objective_set` pay their weight; the rest count as zero, which
/// is how callers exempt already-chosen nodes.
pub struct SteinerInstance<'a> {
    graph: &'a Graph,
    domain: NodeSet,
    root: NodeId,
    objective_set: NodeSet,
    f: &'a dyn IntegerObjective,
    target: u128,
    budget: Option<u64>,
}

impl<'a> SteinerInstance<'a> {
    pub fn new(
        graph: &'a Graph,
        domain: NodeSet,
        objective_set: NodeSet,
        f: &'a dyn IntegerObjective,
        budget: Option<u64>,
    ) -> Result<Self, SolverError> {
        let root = graph.root();
        if !domain.contains(root) {
            return Err(SolverError::BadInstance("domain must contain the root"));
        }
        if f.ground() != &domain {
            return Err(SolverError::GroundMismatch);
        }
        if !objective_set.is_subset(&domain) {
            return Err(SolverError::BadInstance(
                "objective set must lie inside the domain",
            ));
        }
        let target = f.target();
        Ok(SteinerInstance {
            graph,
            domain,
            root,
            objective_set,
            f,
            target,
            budget,
        })
    }

    pub fn domain(&self) -> &NodeSet {
        &self.domain
    }

    pub fn target(&self) -> u128 {
        self.target
    }

    /// Weight actually paid for `v` in this instance.
    fn paid_weight(&self, v: NodeId) -> BigRational {
        if self.objective_set.contains(v) {
            self.graph.weight(v).clone()
        } else {
            BigRational::zero()
        }
    }

    fn paid_total(&self, s: &NodeSet) -> BigRational {
        s.iter().map(|v| self.paid_weight(v)).sum()
    }

    /// Per-node weights as integers over a common denominator, so the search
    /// compares weights without rational arithmetic.
    fn scaled_weights(&self) -> Result<Vec<u128>, SolverError> {
        let mut denom_lcm = BigInt::one();
        for v in self.objective_set.iter() {
            denom_lcm = denom_lcm.lcm(self.graph.weight(v).denom());
        }
        let mut out = vec![0u128; self.graph.n()];
        for v in self.objective_set.iter() {
            let w = self.graph.weight(v);
            let scaled: BigInt = w.numer() * (&denom_lcm / w.denom());
            out[v] = scaled.to_u128().ok_or(SolverError::WeightOverflow)?;
        }
        Ok(out)
    }
}

/// Solve result. `solution` is the spanned node set; `objective` is its
/// paid node weight (or tree edge weight for the edge-weighted solver);
/// `alpha` is the optimality factor, always exactly 1 here.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverReport {
    pub solution: NodeSet,
    pub objective: BigRational,
    pub alpha: BigRational,
    pub nodes_explored: u64,
}

/// Running best solution, ordered by scaled weight then set bitstring.
struct Incumbent {
    weight: u128,
    solution: NodeSet,
}

impl Incumbent {
    fn dominates_candidate(&self, weight: u128, candidate: &NodeSet) -> bool {
        weight > self.weight || (weight == self.weight && *candidate >= self.solution)
    }

    fn offer(&mut self, weight: u128, candidate: &NodeSet) {
        if !self.dominates_candidate(weight, candidate) {
            self.weight = weight;
            self.solution = candidate.clone();
        }
    }
}

struct Search<'s, 'a> {
    inst: &'s SteinerInstance<'a>,
    scaled: Vec<u128>,
    explored: u64,
    budget: u64,
    best: Option<Incumbent>,
}

impl Search<'_, '_> {
    /// Frontier of I: nodes adjacent to I inside `avail`, excluding I.
    fn frontier(&self, current: &NodeSet, avail: &NodeSet) -> NodeSet {
        let mut f = self.inst.graph.dominated_set(current);
        f.intersect_with(avail);
        f.subtract(current);
        f
    }

    fn eval(&self, x: &NodeSet) -> Result<u128, SolverError> {
        Ok(self.inst.f.eval_int(x)?)
    }

    /// Greedy weight-efficiency run from the root; its result seeds the
    /// incumbent so the exact search starts with a strong pruning bound.
    fn greedy_seed(&mut self, avail: &NodeSet) -> Result<(), SolverError> {
        let mut current = NodeSet::empty(self.inst.graph.n());
        current.insert(self.inst.root);
        let mut weight: u128 = 0;
        let mut value = self.eval(&current)?;
        while value < self.inst.target {
            let frontier = self.frontier(&current, avail);
            // avail meets the target, so the frontier is nonempty here.
            let mut choice: Option<(NodeId, u128)> = None;
            let mut best_ratio: Option<(u128, u128)> = None;
            for v in frontier.iter() {
                let mut grown = current.clone();
                grown.insert(v);
                let gain = self.eval(&grown)? - value;
                if gain == 0 {
                    continue;
                }
                let w = self.scaled[v];
                let better = match &best_ratio {
                    None => true,
                    // gain/w beats best g/bw iff gain*bw > g*w; zero weight
                    // ranks above every finite ratio.
                    Some((bg, bw)) => {
                        BigInt::from(gain) * BigInt::from(*bw)
                            > BigInt::from(*bg) * BigInt::from(w)
                    }
                };
                if better {
                    best_ratio = Some((gain, w));
                    choice = Some((v, gain));
                }
            }
            match choice {
                Some((v, gain)) => {
                    current.insert(v);
                    weight += self.scaled[v];
                    value += gain;
                }
                None => {
                    // Plateau: every frontier node has zero marginal gain.
                    // Add the cheapest one to keep growing toward avail.
                    let v = frontier
                        .iter()
                        .min_by_key(|&v| (self.scaled[v], v))
                        .expect("frontier nonempty below target");
                    current.insert(v);
                    weight += self.scaled[v];
                }
            }
        }
        self.best = Some(Incumbent {
            weight,
            solution: current,
        });
        Ok(())
    }

    fn recurse(
        &mut self,
        current: NodeSet,
        excluded: NodeSet,
        weight: u128,
        value: u128,
    ) -> Result<(), SolverError> {
        self.explored += 1;
        if self.explored > self.budget {
            return Err(SolverError::Limit(self.explored));
        }

        // Reachability bound: nothing outside the root's component of
        // domain minus exclusions can ever join this branch.
        let mut open = self.inst.domain.clone();
        open.subtract(&excluded);
        let avail = self
            .inst
            .graph
            .connected_component(&open, self.inst.root)?;
        if self.eval(&avail)? < self.inst.target {
            return Ok(());
        }
        if let Some(best) = &self.best {
            if best.dominates_candidate(weight, &current) {
                return Ok(());
            }
        }
        if value == self.inst.target {
            // Supersets only add weight or grow the bitstring, so stop here.
            if let Some(best) = &mut self.best {
                best.offer(weight, &current);
            } else {
                self.best = Some(Incumbent {
                    weight,
                    solution: current,
                });
            }
            return Ok(());
        }

        let frontier = self.frontier(&current, &avail);
        let mut branch: Option<(NodeId, u128)> = None;
        for v in frontier.iter() {
            let mut grown = current.clone();
            grown.insert(v);
            let gain = self.eval(&grown)? - value;
            let better = match branch {
                None => true,
                Some((_, bg)) => gain > bg,
            };
            if better {
                branch = Some((v, gain));
            }
        }
        let (v, gain) = branch.expect("frontier nonempty while below target");

        let mut grown = current.clone();
        grown.insert(v);
        self.recurse(grown, excluded.clone(), weight + self.scaled[v], value + gain)?;
        let mut shut = excluded;
        shut.insert(v);
        self.recurse(current, shut, weight, value)
    }
}

/// Exact branch and bound. Returns a minimum paid-weight connected subset
/// of the domain containing the root with objective value equal to the
/// target, breaking weight ties toward the smallest bitstring. If a node
/// budget is set and exhausted, falls back to exhaustive enumeration on
/// domains of at most 20 nodes and reports a limit error otherwise.
pub fn solve_polymatroid_steiner(inst: &SteinerInstance) -> Result<SolverReport, SolverError> {
    let avail0 = inst
        .graph
        .connected_component(&inst.domain, inst.root)?;
    if inst.f.eval_int(&avail0)? < inst.target {
        return Err(SolverError::Infeasible);
    }

    let mut search = Search {
        inst,
        scaled: inst.scaled_weights()?,
        explored: 0,
        budget: inst.budget.unwrap_or(u64::MAX),
        best: None,
    };
    search.greedy_seed(&avail0)?;

    let mut start = NodeSet::empty(inst.graph.n());
    start.insert(inst.root);
    let value = search.eval(&start)?;
    let excluded = NodeSet::empty(inst.graph.n());
    match search.recurse(start, excluded, 0, value) {
        Ok(()) => {}
        Err(SolverError::Limit(explored)) => {
            if inst.domain.len() <= 20 {
                let mut report = solve_exhaustive(inst)?;
                report.nodes_explored += explored;
                return Ok(report);
            }
            return Err(SolverError::Limit(explored));
        }
        Err(e) => return Err(e),
    }

    let best = search.best.expect("feasible search keeps an incumbent");
    Ok(SolverReport {
        objective: inst.paid_total(&best.solution),
        solution: best.solution,
        alpha: BigRational::one(),
        nodes_explored: search.explored,
    })
}

/// Domain nodes renumbered 0..k with bitmask adjacency, for subset
/// enumeration. Ascending node order makes mask order agree with NodeSet
/// bitstring order.
struct CompactDomain {
    nodes: Vec<NodeId>,
    adj: Vec<u32>,
    root_bit: u32,
}

const ENUMERATION_CAP: usize = 25;

impl CompactDomain {
    fn new(g: &Graph, domain: &NodeSet, root: NodeId) -> Result<Self, SolverError> {
        let nodes: Vec<NodeId> = domain.iter().collect();
        if nodes.len() > ENUMERATION_CAP {
            return Err(SolverError::TooLarge);
        }
        let index: HashMap<NodeId, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as u32))
            .collect();
        let adj = nodes
            .iter()
            .map(|&v| {
                let mut mask = 0u32;
                for u in g.neighbors(v).intersection(domain).iter() {
                    mask |= 1 << index[&u];
                }
                mask
            })
            .collect();
        Ok(CompactDomain {
            adj,
            root_bit: index[&root],
            nodes,
        })
    }

    fn connected(&self, mask: u32) -> bool {
        debug_assert!(mask & (1 << self.root_bit) != 0);
        let mut seen = 1u32 << self.root_bit;
        loop {
            let mut grown = seen;
            let mut rest = seen;
            while rest != 0 {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                grown |= self.adj[b] & mask;
            }
            if grown == seen {
                return seen == mask;
            }
            seen = grown;
        }
    }

    fn expand(&self, mask: u32, n: usize) -> NodeSet {
        let mut s = NodeSet::empty(n);
        let mut rest = mask;
        while rest != 0 {
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            s.insert(self.nodes[b]);
        }
        s
    }
}

/// Reference solver: enumerate every connected root-containing subset of
/// the domain and keep the lightest feasible one. Exact by construction;
/// domains above 25 nodes are refused.
pub fn solve_exhaustive(inst: &SteinerInstance) -> Result<SolverReport, SolverError> {
    let compact = CompactDomain::new(inst.graph, &inst.domain, inst.root)?;
    let scaled = inst.scaled_weights()?;
    let k = compact.nodes.len();
    let root_mask = 1u32 << compact.root_bit;
    let mut best: Option<Incumbent> = None;
    let mut inspected = 0u64;
    for mask in 0..(1u64 << k) as u64 {
        let mask = mask as u32;
        if mask & root_mask == 0 || !compact.connected(mask) {
            continue;
        }
        inspected += 1;
        let s = compact.expand(mask, inst.graph.n());
        if inst.f.eval_int(&s)? != inst.target {
            continue;
        }
        let weight: u128 = s.iter().map(|v| scaled[v]).sum();
        match &mut best {
            // Ascending mask order visits smaller bitstrings first, so a
            // strict comparison implements the tie-break.
            Some(b) => {
                if weight < b.weight {
                    *b = Incumbent { weight, solution: s };
                }
            }
            None => best = Some(Incumbent { weight, solution: s }),
        }
    }
    let best = best.ok_or(SolverError::Infeasible)?;
    Ok(SolverReport {
        objective: inst.paid_total(&best.solution),
        solution: best.solution,
        alpha: BigRational::one(),
        nodes_explored: inspected,
    })
}

/// Minimum-weight connected dominating set of the domain-induced subgraph.
/// Nodes outside `objective_set` are free, which lets policies re-solve
/// with already-chosen nodes exempted. The domain must be connected.
pub fn solve_min_weight_cds(
    g: &Graph,
    domain: &NodeSet,
    objective_set: &NodeSet,
    budget: Option<u64>,
) -> Result<SolverReport, SolverError> {
    if !g.is_connected_within(domain) {
        return Err(SolverError::Disconnected);
    }
    let f = DominationObjective::new(g, domain.clone());
    let inst = SteinerInstance::new(g, domain.clone(), objective_set.clone(), &f, budget)?;
    solve_polymatroid_steiner(&inst)
}

/// Edge weights w'(uv) = w(u) + w(v), parallel to `g.edges()`.
pub fn reduce_node_to_edge_weights(g: &Graph) -> Vec<BigRational> {
    g.edges()
        .iter()
        .map(|&(u, v)| g.weight(u) + g.weight(v))
        .collect()
}

/// Exact edge-weighted variant: over connected root-containing subsets S of
/// the domain with f(S) at the target, minimize the minimum-spanning-tree
/// cost of the induced subgraph, reporting the spanned set and that cost.
/// Enumeration-based; domains above 25 nodes are refused.
pub fn solve_edge_weighted_steiner(
    g: &Graph,
    domain: &NodeSet,
    edge_weights: &[BigRational],
    f: &dyn IntegerObjective,
) -> Result<SolverReport, SolverError> {
    if edge_weights.len() != g.edges().len() {
        return Err(SolverError::BadInstance(
            "edge weight list must parallel the graph's edge list",
        ));
    }
    let root = g.root();
    if !domain.contains(root) {
        return Err(SolverError::BadInstance("domain must contain the root"));
    }
    if f.ground() != domain {
        return Err(SolverError::GroundMismatch);
    }
    let target = f.target();
    let compact = CompactDomain::new(g, domain, root)?;
    let index: HashMap<NodeId, u32> = compact
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();

    // Domain-internal edges sorted by weight then edge index; Kruskal scans
    // this order for every candidate subset.
    let mut dom_edges: Vec<(usize, u32, u32)> = Vec::new();
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        if let (Some(&bu), Some(&bv)) = (index.get(&u), index.get(&v)) {
            dom_edges.push((i, bu, bv));
        }
    }
    dom_edges.sort_by(|a, b| edge_weights[a.0].cmp(&edge_weights[b.0]).then(a.0.cmp(&b.0)));

    let k = compact.nodes.len();
    let root_mask = 1u32 << compact.root_bit;
    let mut inspected = 0u64;
    let mut best: Option<(BigRational, NodeSet)> = None;
    for mask in 0..(1u64 << k) {
        let mask = mask as u32;
        if mask & root_mask == 0 || !compact.connected(mask) {
            continue;
        }
        inspected += 1;
        let s = compact.expand(mask, g.n());
        if f.eval_int(&s)? != target {
            continue;
        }
        let cost = mst_cost(&dom_edges, edge_weights, mask, k);
        let better = match &best {
            None => true,
            Some((bc, _)) => cost < *bc,
        };
        if better {
            best = Some((cost, s));
        }
    }
    let (cost, solution) = best.ok_or(SolverError::Infeasible)?;
    Ok(SolverReport {
        solution,
        objective: cost,
        alpha: BigRational::one(),
        nodes_explored: inspected,
    })
}

/// Kruskal over the subset selected by `mask`; the caller guarantees the
/// subset is connected, so exactly popcount-1 edges are taken.
fn mst_cost(
    sorted_edges: &[(usize, u32, u32)],
    edge_weights: &[BigRational],
    mask: u32,
    k: usize,
) -> BigRational {
    let mut parent: Vec<u32> = (0..k as u32).collect();
    fn find(parent: &mut [u32], x: u32) -> u32 {
        let mut x = x;
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let mut cost = BigRational::zero();
    let mut needed = mask.count_ones();
    for &(i, u, v) in sorted_edges {
        if needed <= 1 {
            break;
        }
        if mask & (1 << u) == 0 || mask & (1 << v) == 0 {
            continue;
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru as usize] = rv;
            cost += &edge_weights[i];
            needed -= 1;
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::fixture_tri_branch;
    use crate::polymatroid::{to_integer_polymatroid, FeedbackModel, PolyKind, RoundContext};
    use crate::scenario::Realization;
    use num::FromPrimitive;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn set(n: usize, members: &[NodeId]) -> NodeSet {
        let mut s = NodeSet::empty(n);
        for &v in members {
            s.insert(v);
        }
        s
    }

    fn path3() -> Graph {
        Graph::new(
            3,
            0,
            &[(0, 1), (1, 2)],
            vec![rat(0, 1), rat(1, 1), rat(2, 1)],
        )
        .unwrap()
    }

    fn check_report(g: &Graph, f: &dyn IntegerObjective, report: &SolverReport) {
        assert!(report.solution.contains(g.root()));
        assert!(g.is_connected_within(&report.solution));
        assert_eq!(f.eval_int(&report.solution).unwrap(), f.target());
        assert_eq!(report.alpha, BigRational::one());
    }

    #[test]
    fn min_cds_on_path() {
        let g = path3();
        let all = g.all_nodes();
        let report = solve_min_weight_cds(&g, &all, &all, None).unwrap();
        assert_eq!(report.solution, set(3, &[0, 1]));
        assert_eq!(report.objective, rat(1, 1));
    }

    #[test]
    fn min_cds_on_greedy_trap() {
        let (g, _) = crate::instances::fixture_greedy_bad(5, &rat(1, 10)).unwrap();
        let all = g.all_nodes();
        let report = solve_min_weight_cds(&g, &all, &all, None).unwrap();
        assert_eq!(report.solution, set(9, &[0, 2, 3]));
        assert_eq!(report.objective, rat(11, 10));
    }

    #[test]
    fn min_cds_rejects_disconnected_domain() {
        let g = path3();
        let domain = set(3, &[0, 2]);
        assert!(matches!(
            solve_min_weight_cds(&g, &domain, &domain, None),
            Err(SolverError::Disconnected)
        ));
    }

    /// Initial full-feedback round of the three-branch fixture.
    fn tri_branch_round() -> (Graph, crate::scenario::ScenarioSet, Realization, NodeSet) {
        let (g, s) = fixture_tri_branch(&rat(1, 1), &rat(2, 1), &rat(3, 1)).unwrap();
        let mut phi = Realization::all_unknown(8, 0);
        for v in [1, 2, 3] {
            phi.observe(v, true);
        }
        let chosen = set(8, &[0]);
        (g, s, phi, chosen)
    }

    #[test]
    fn tri_branch_refutation_solution() {
        let (g, s, phi, chosen) = tri_branch_round();
        let ctx =
            RoundContext::new(&g, &s, g.all_nodes(), chosen.clone(), phi.clone(), FeedbackModel::Full)
                .unwrap();
        let f = to_integer_polymatroid(ctx.plr(), PolyKind::Plr, &s, &phi).unwrap();
        let domain = ctx.steiner_ground().clone();
        let mut objective_set = domain.clone();
        objective_set.subtract(&chosen);
        let inst = SteinerInstance::new(&g, domain, objective_set, &f, None).unwrap();
        let report = solve_polymatroid_steiner(&inst).unwrap();
        check_report(&g, &f, &report);
        assert_eq!(report.solution, set(8, &[0, 1, 2]));
        assert_eq!(report.objective, rat(3, 1));
    }

    #[test]
    fn tri_branch_coverage_solution() {
        let (g, s, phi, chosen) = tri_branch_round();
        let ctx =
            RoundContext::new(&g, &s, g.all_nodes(), chosen.clone(), phi.clone(), FeedbackModel::Full)
                .unwrap();
        let f = to_integer_polymatroid(ctx.plt(), PolyKind::Plt, &s, &phi).unwrap();
        let domain = ctx.steiner_ground().clone();
        let mut objective_set = domain.clone();
        objective_set.subtract(&chosen);
        let inst = SteinerInstance::new(&g, domain.clone(), objective_set, &f, None).unwrap();
        let report = solve_polymatroid_steiner(&inst).unwrap();
        check_report(&g, &f, &report);
        assert_eq!(report.solution, domain);
        assert_eq!(report.objective, rat(6, 1));
    }

    #[test]
    fn trivial_target_returns_root_alone() {
        let g = path3();
        let all = g.all_nodes();
        let f = TerminalObjective::new(all.clone(), &NodeSet::empty(3));
        let inst = SteinerInstance::new(&g, all.clone(), all, &f, None).unwrap();
        let report = solve_polymatroid_steiner(&inst).unwrap();
        assert_eq!(report.solution, set(3, &[0]));
        assert_eq!(report.objective, rat(0, 1));
    }

    #[test]
    fn infeasible_when_terminal_unreachable() {
        let g = path3();
        // Exclude the middle node: y is cut off from the root.
        let domain = set(3, &[0, 2]);
        let f = TerminalObjective::new(domain.clone(), &set(3, &[2]));
        let inst = SteinerInstance::new(&g, domain.clone(), domain, &f, None).unwrap();
        assert!(matches!(
            solve_polymatroid_steiner(&inst),
            Err(SolverError::Infeasible)
        ));
    }

    #[test]
    fn budget_falls_back_to_enumeration_on_small_domains() {
        let (g, _) = crate::instances::fixture_greedy_bad(5, &rat(1, 10)).unwrap();
        let all = g.all_nodes();
        let limited = solve_min_weight_cds(&g, &all, &all, Some(1)).unwrap();
        let unlimited = solve_min_weight_cds(&g, &all, &all, None).unwrap();
        assert_eq!(limited.solution, unlimited.solution);
        assert_eq!(limited.objective, unlimited.objective);
    }

    #[test]
    fn reduction_formula() {
        let g = path3();
        let ew = reduce_node_to_edge_weights(&g);
        assert_eq!(ew, vec![rat(1, 1), rat(3, 1)]);

        let zero = Graph::new(3, 0, &[(0, 1), (1, 2)], vec![rat(0, 1); 3]).unwrap();
        assert_eq!(
            reduce_node_to_edge_weights(&zero),
            vec![rat(0, 1), rat(0, 1)]
        );

        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let weights: Vec<BigRational> = (0..5)
            .map(|_| BigRational::from_u64(rng.gen_range(0..50)).unwrap())
            .collect();
        let g = Graph::new(
            5,
            0,
            &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 4)],
            weights.clone(),
        )
        .unwrap();
        for (i, &(u, v)) in g.edges().iter().enumerate() {
            assert_eq!(reduce_node_to_edge_weights(&g)[i], &weights[u] + &weights[v]);
        }
    }

    #[test]
    fn edge_weighted_path_spans_terminal() {
        let g = path3();
        let all = g.all_nodes();
        let ew = reduce_node_to_edge_weights(&g);
        let f = TerminalObjective::new(all.clone(), &set(3, &[2]));
        let report = solve_edge_weighted_steiner(&g, &all, &ew, &f).unwrap();
        assert_eq!(report.solution, set(3, &[0, 1, 2]));
        assert_eq!(report.objective, rat(4, 1));
    }

    #[test]
    fn edge_weighted_trivial_tree_is_free() {
        let g = path3();
        let all = g.all_nodes();
        let ew = reduce_node_to_edge_weights(&g);
        let f = TerminalObjective::new(all.clone(), &set(3, &[0]));
        let report = solve_edge_weighted_steiner(&g, &all, &ew, &f).unwrap();
        assert_eq!(report.solution, set(3, &[0]));
        assert_eq!(report.objective, rat(0, 1));
    }

    #[test]
    fn edge_weighted_star_matches_enumeration() {
        // Root is leaf 1; the hub 0 is the only way to dominate the rest.
        let weights = vec![rat(2, 1), rat(0, 1), rat(5, 1), rat(1, 1), rat(4, 1)];
        let g = Graph::new(5, 1, &[(0, 1), (0, 2), (0, 3), (0, 4)], weights).unwrap();
        let all = g.all_nodes();
        let ew = reduce_node_to_edge_weights(&g);
        let f = DominationObjective::new(&g, all.clone());
        let report = solve_edge_weighted_steiner(&g, &all, &ew, &f).unwrap();
        assert_eq!(report.solution, set(5, &[0, 1]));
        assert_eq!(report.objective, rat(2, 1));
        check_report(&g, &f, &report);
    }

    /// Random connected graph with small rational weights.
    fn random_instance(seed: u64) -> Graph {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        loop {
            let n = rng.gen_range(3..9usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_range(0..100) < 45 {
                        edges.push((u, v));
                    }
                }
            }
            let weights: Vec<BigRational> = (0..n)
                .map(|_| rat(rng.gen_range(0..8), rng.gen_range(1..4)))
                .collect();
            let Ok(g) = Graph::new(n, 0, &edges, weights) else {
                continue;
            };
            if g.is_connected_within(&g.all_nodes()) {
                return g;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn branch_and_bound_matches_exhaustive(seed in 0u64..5000) {
            let g = random_instance(seed);
            let all = g.all_nodes();
            let f = DominationObjective::new(&g, all.clone());
            let inst = SteinerInstance::new(&g, all.clone(), all.clone(), &f, None).unwrap();
            let fast = solve_polymatroid_steiner(&inst).unwrap();
            let slow = solve_exhaustive(&inst).unwrap();
            prop_assert_eq!(&fast.objective, &slow.objective);
            prop_assert_eq!(&fast.solution, &slow.solution);
            check_report(&g, &f, &fast);
        }

        #[test]
        fn branch_and_bound_matches_exhaustive_on_terminals(seed in 0u64..5000) {
            let g = random_instance(seed);
            let all = g.all_nodes();
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x9e3779b9);
            let mut terminals = NodeSet::empty(g.n());
            for v in 0..g.n() {
                if rng.gen_range(0..3) == 0 {
                    terminals.insert(v);
                }
            }
            let f = TerminalObjective::new(all.clone(), &terminals);
            let inst = SteinerInstance::new(&g, all.clone(), all.clone(), &f, None).unwrap();
            let fast = solve_polymatroid_steiner(&inst).unwrap();
            let slow = solve_exhaustive(&inst).unwrap();
            prop_assert_eq!(&fast.objective, &slow.objective);
            prop_assert_eq!(&fast.solution, &slow.solution);
        }

        #[test]
        fn zero_weight_nodes_keep_tie_break_deterministic(seed in 0u64..5000) {
            let mut g = random_instance(seed);
            // Zero out every weight: all solutions tie, so both solvers must
            // agree on the smallest-bitstring optimum.
            let n = g.n();
            let edges = g.edges().to_vec();
            g = Graph::new(n, 0, &edges, vec![BigRational::zero(); n]).unwrap();
            let all = g.all_nodes();
            let f = DominationObjective::new(&g, all.clone());
            let inst = SteinerInstance::new(&g, all.clone(), all.clone(), &f, None).unwrap();
            let fast = solve_polymatroid_steiner(&inst).unwrap();
            let slow = solve_exhaustive(&inst).unwrap();
            prop_assert_eq!(&fast.solution, &slow.solution);
        }
    }
}
