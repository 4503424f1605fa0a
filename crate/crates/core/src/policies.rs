//! Adaptive policies against an environment that holds a hidden full
//! realization and answers per the feedback model: the two-objective
//! polymatroid round policy, the coverage greedy, the recompute-a-CDS
//! heuristic, and a weight-sensitive variant of the Borgs greedy as the
//! local-feedback baseline.
//!
//! All policies share the same outer shape: grow a chosen set U from the
//! root, only ever choosing a node dominated by an active chosen node, and
//! after observations prune nodes that are certainly inactive together with
//! components cut off from the root. A run ends when U dominates the pruned
//! graph, so for the hidden realization the active chosen nodes form a CDS
//! of the root's active component.

use num::{BigRational, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeId, NodeSet};
pub use crate::polymatroid::FeedbackModel;
use crate::polymatroid::{
    most_likely_vector, to_integer_polymatroid, PolyKind, PolymatroidError, RoundContext,
    SubmodularFn,
};
use crate::scenario::{FullRealization, Obs, Realization, ScenarioError, ScenarioSet};
use crate::solvers::{solve_min_weight_cds, solve_polymatroid_steiner, SolverError, SteinerInstance};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("the hidden realization must keep the root active")]
    InactiveRoot,
    #[error("this policy only supports the local feedback model")]
    BadModel,
    #[error("policy invariant violated: {0}")]
    Internal(&'static str),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Polymatroid(#[from] PolymatroidError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Oracle for one run: holds the hidden realization and answers choices
/// under the feedback model. Reveals are computed on the original graph;
/// distinguishing already-known states is the runner's bookkeeping.
pub struct Environment<'a> {
    graph: &'a Graph,
    hidden: &'a FullRealization,
    model: FeedbackModel,
}

impl<'a> Environment<'a> {
    pub fn new(
        graph: &'a Graph,
        hidden: &'a FullRealization,
        model: FeedbackModel,
    ) -> Result<Self, PolicyError> {
        if !hidden.is_active(graph.root()) {
            return Err(PolicyError::InactiveRoot);
        }
        Ok(Environment {
            graph,
            hidden,
            model,
        })
    }

    pub fn model(&self) -> FeedbackModel {
        self.model
    }

    /// States revealed before any choice: the root's closed neighborhood
    /// under full feedback, the root alone under local feedback.
    fn initial_reveal(&self) -> Vec<(NodeId, bool)> {
        match self.model {
            FeedbackModel::Full => self
                .graph
                .closed_neighborhood(self.graph.root())
                .expect("root is a node")
                .iter()
                .map(|u| (u, self.hidden.is_active(u)))
                .collect(),
            FeedbackModel::Local => vec![(self.graph.root(), true)],
        }
    }

    /// States revealed by choosing `v`: under full feedback an active
    /// choice exposes its whole closed neighborhood, an inactive choice
    /// only itself; under local feedback only `v` is exposed.
    fn reveal_for_choice(&self, v: NodeId) -> Vec<(NodeId, bool)> {
        match self.model {
            FeedbackModel::Full if self.hidden.is_active(v) => self
                .graph
                .closed_neighborhood(v)
                .expect("chosen node exists")
                .iter()
                .map(|u| (u, self.hidden.is_active(u)))
                .collect(),
            _ => vec![(v, self.hidden.is_active(v))],
        }
    }
}

/// Record of one run: chosen nodes in order, the new observations each
/// choice produced (index 0 is the pre-choice reveal attached to the
/// root), indices into `chosen` where rounds ended, and the weight totals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyTrace {
    pub chosen: Vec<NodeId>,
    pub observations: Vec<Vec<(NodeId, bool)>>,
    pub round_ends: Vec<usize>,
    pub rounds: usize,
    pub total_weight: BigRational,
    pub active_weight: BigRational,
}

/// Shared run bookkeeping: the policy-visible partial realization, the
/// chosen set, the live node set, and the trace under construction.
struct Run<'a> {
    graph: &'a Graph,
    scenarios: &'a ScenarioSet,
    env: Environment<'a>,
    phi: Realization,
    live: NodeSet,
    chosen_set: NodeSet,
    chosen: Vec<NodeId>,
    observations: Vec<Vec<(NodeId, bool)>>,
    round_ends: Vec<usize>,
    scenario_reach: Vec<NodeSet>,
}

impl<'a> Run<'a> {
    fn start(
        graph: &'a Graph,
        scenarios: &'a ScenarioSet,
        hidden: &'a FullRealization,
        model: FeedbackModel,
    ) -> Result<Self, PolicyError> {
        let env = Environment::new(graph, hidden, model)?;
        let mut phi = Realization::all_unknown(graph.n(), graph.root());
        let mut delta = Vec::new();
        for (u, state) in env.initial_reveal() {
            if phi.state(u) == Obs::Unknown {
                phi.observe(u, state);
                delta.push((u, state));
            } else {
                debug_assert_eq!(phi.state(u) == Obs::Active, state);
            }
        }
        let mut chosen_set = NodeSet::empty(graph.n());
        chosen_set.insert(graph.root());
        let scenario_reach = scenario_reaches(graph, scenarios);
        let mut run = Run {
            graph,
            scenarios,
            env,
            phi,
            live: graph.all_nodes(),
            chosen_set,
            chosen: vec![graph.root()],
            observations: vec![delta],
            round_ends: Vec::new(),
            scenario_reach,
        };
        run.prune()?;
        Ok(run)
    }

    /// Choose `v`: record it, apply its reveal to phi, and return the newly
    /// observed states.
    fn choose(&mut self, v: NodeId) -> Result<&[(NodeId, bool)], PolicyError> {
        if self.chosen_set.contains(v) {
            return Err(PolicyError::Internal("node chosen twice"));
        }
        if self.dominators_of(v).is_empty() {
            return Err(PolicyError::Internal(
                "chosen node lacks an active chosen dominator",
            ));
        }
        self.chosen_set.insert(v);
        self.chosen.push(v);
        let mut delta = Vec::new();
        for (u, state) in self.env.reveal_for_choice(v) {
            match self.phi.state(u) {
                Obs::Unknown => {
                    self.phi.observe(u, state);
                    delta.push((u, state));
                }
                known => debug_assert_eq!(known == Obs::Active, state),
            }
        }
        self.observations.push(delta);
        Ok(self.observations.last().expect("just pushed").as_slice())
    }

    /// Active chosen nodes adjacent to `v` (excluding `v`), the feasibility
    /// witnesses for choosing it.
    fn dominators_of(&self, v: NodeId) -> NodeSet {
        let mut d = self.active_chosen();
        d.intersect_with(self.graph.neighbors(v));
        d
    }

    fn active_chosen(&self) -> NodeSet {
        self.chosen_set.intersection(self.phi.observed_active())
    }

    /// Unchosen live nodes adjacent to an active chosen node.
    fn reachable_candidates(&self) -> NodeSet {
        let mut c = self.graph.dominated_set(&self.active_chosen());
        c.intersect_with(&self.live);
        c.subtract(&self.chosen_set);
        c
    }

    /// Remove nodes lying outside the root's active component in every
    /// consistent scenario, then components not containing the root. A node
    /// kept live belongs to some consistent scenario's root component, so it
    /// can still be required by, and reached under, that scenario.
    fn prune(&mut self) -> Result<(), PolicyError> {
        let consistent = self.scenarios.consistent_set(&self.phi);
        if consistent.is_empty() {
            return Err(PolicyError::Internal(
                "observations inconsistent with every scenario",
            ));
        }
        let mut possible = NodeSet::empty(self.graph.n());
        for &i in &consistent {
            possible.union_with(&self.scenario_reach[i]);
        }
        self.live.intersect_with(&possible);
        self.live = self
            .graph
            .connected_component(&self.live, self.graph.root())?;
        Ok(())
    }

    /// Whether the chosen set dominates the current pruned graph.
    fn dominated(&self) -> bool {
        let mut covered = self.graph.dominated_set(&self.chosen_set.intersection(&self.live));
        covered.intersect_with(&self.live);
        covered == self.live
    }

    fn end_round(&mut self) {
        self.round_ends.push(self.chosen.len());
    }

    fn finish(self) -> PolicyTrace {
        let hidden = self.env.hidden;
        let total_weight: BigRational = self.chosen.iter().map(|&v| self.graph.weight(v)).sum();
        let active_weight: BigRational = self
            .chosen
            .iter()
            .filter(|&&v| hidden.is_active(v))
            .map(|&v| self.graph.weight(v))
            .sum();
        PolicyTrace {
            rounds: self.round_ends.len(),
            chosen: self.chosen,
            observations: self.observations,
            round_ends: self.round_ends,
            total_weight,
            active_weight,
        }
    }
}

/// The root's active component of each scenario. Only these nodes can ever
/// belong to, or need domination by, a solution when the scenario is the
/// hidden one.
fn scenario_reaches(g: &Graph, s: &ScenarioSet) -> Vec<NodeSet> {
    (0..s.len())
        .map(|i| g.component_of(s.scenario(i).active_set(), g.root()))
        .collect()
}

/// Remove from `live` the nodes lying outside the root's active component
/// in every scenario consistent with `phi`, then the components not
/// containing the root. Standalone version of the in-run pruning step.
pub fn prune(
    g: &Graph,
    s: &ScenarioSet,
    phi: &Realization,
    live: &NodeSet,
) -> Result<NodeSet, PolicyError> {
    let consistent = s.consistent_set(phi);
    if consistent.is_empty() {
        return Err(PolicyError::Internal(
            "observations inconsistent with every scenario",
        ));
    }
    let reaches = scenario_reaches(g, s);
    let mut possible = NodeSet::empty(g.n());
    for &i in &consistent {
        possible.union_with(&reaches[i]);
    }
    let mut out = live.intersection(&possible);
    out = g.connected_component(&out, g.root())?;
    Ok(out)
}

/// The two-objective round policy. Each round solves an exact Steiner
/// instance for the coverage objective and (unless refutation is already
/// hopeless) one for the refutation objective, commits to the lighter
/// solution, and walks it from the root until it is exhausted or an
/// observation contradicts the planning assumption; then prunes and
/// re-plans. Runs under both feedback models.
pub fn run_polymatroid_policy(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    hidden: &FullRealization,
    budget: Option<u64>,
) -> Result<PolicyTrace, PolicyError> {
    let mut run = Run::start(g, s, hidden, model)?;
    while !run.dominated() {
        let chosen_before = run.chosen.len();
        let supp_before = run.phi.supp().len();

        let ctx = RoundContext::new(
            g,
            s,
            run.live.clone(),
            run.chosen_set.intersection(&run.live),
            run.phi.clone(),
            model,
        )?;
        let domain = ctx.steiner_ground().clone();
        let mut objective_set = domain.clone();
        objective_set.subtract(&run.chosen_set);

        let plt = to_integer_polymatroid(ctx.plt(), PolyKind::Plt, s, ctx.phi())?;
        let inst = SteinerInstance::new(g, domain.clone(), objective_set.clone(), &plt, budget)?;
        let plt_report = solve_polymatroid_steiner(&inst)?;

        // When even choosing the whole domain cannot reach refutation
        // probability 1/2, the refutation solve is skipped and coverage
        // wins the round outright.
        let plr_fn = ctx.plr();
        let consistent_mass: u128 = ctx.mass() as u128;
        let h_star = if plr_fn.numerator(&domain)? < consistent_mass {
            plt_report.solution
        } else {
            let plr = to_integer_polymatroid(plr_fn, PolyKind::Plr, s, ctx.phi())?;
            let inst = SteinerInstance::new(g, domain.clone(), objective_set, &plr, budget)?;
            let plr_report = solve_polymatroid_steiner(&inst)?;
            if plr_report.objective < plt_report.objective {
                plr_report.solution
            } else {
                plt_report.solution
            }
        };

        // Walk the committed set from the root in smallest-id order,
        // stopping the round on any observation that contradicts the
        // most-likely vector of the chosen node.
        loop {
            let mut cands = run.reachable_candidates();
            cands.intersect_with(&h_star);
            let Some(v) = cands.first() else {
                break;
            };
            let predicted = most_likely_vector(&ctx, v)?;
            let delta = run.choose(v)?.to_vec();
            let contradicted = delta.iter().any(|&(u, state)| {
                predicted.state(u) != Obs::Unknown
                    && (predicted.state(u) == Obs::Active) != state
            });
            if contradicted {
                break;
            }
        }
        run.end_round();
        run.prune()?;

        if run.chosen.len() == chosen_before
            && run.phi.supp().len() == supp_before
            && !run.dominated()
        {
            return Err(PolicyError::Internal("round made no progress"));
        }
    }
    Ok(run.finish())
}

/// Candidate score: the chi numerator is a sum of scenario masses over a
/// common denominator, so chi-per-weight ratios compare exactly by
/// cross-multiplication.
struct Score {
    chi: u128,
    weight: BigRational,
}

/// Coverage greedy. Scores count the expected number of so-far-undominated
/// nodes a candidate would newly dominate, conditioned on the observations;
/// candidates are known-active nodes under full feedback and neighbors of
/// active chosen nodes under local feedback.
pub fn run_greedy(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    hidden: &FullRealization,
) -> Result<PolicyTrace, PolicyError> {
    let mut run = Run::start(g, s, hidden, model)?;
    while !run.dominated() {
        let consistent = s.consistent_set(&run.phi);
        let candidates = match model {
            FeedbackModel::Full => {
                let mut d = run.phi.observed_active().clone();
                d.intersect_with(&run.live);
                d.subtract(&run.chosen_set);
                d
            }
            FeedbackModel::Local => run.reachable_candidates(),
        };
        if candidates.is_empty() {
            return Err(PolicyError::Internal(
                "greedy has no candidate before domination",
            ));
        }

        let mut best: Option<(NodeId, Score)> = None;
        for v in candidates.iter() {
            let chi: u128 = match model {
                // Unobserved neighbors, weighted by their conditional
                // activation mass.
                FeedbackModel::Full => {
                    let mut fresh = g.closed_neighborhood(v)?.clone();
                    fresh.subtract(run.phi.supp());
                    let mut total = 0u128;
                    for u in fresh.iter() {
                        for &i in &consistent {
                            if s.scenario(i).is_active(u) {
                                total += s.k(i) as u128;
                            }
                        }
                    }
                    total
                }
                // Neighbors outside N[chosen], weighted by the mass of
                // scenarios where both the candidate and the neighbor are
                // active.
                FeedbackModel::Local => {
                    let mut fresh = g.closed_neighborhood(v)?.clone();
                    fresh.subtract(&g.dominated_set(&run.chosen_set));
                    let mut total = 0u128;
                    for u in fresh.iter() {
                        for &i in &consistent {
                            let psi = s.scenario(i);
                            if psi.is_active(u) && psi.is_active(v) {
                                total += s.k(i) as u128;
                            }
                        }
                    }
                    total
                }
            };
            let score = Score {
                chi,
                weight: g.weight(v).clone(),
            };
            let better = match &best {
                None => true,
                Some((bv, bs)) => {
                    let v_free = score.weight.is_zero();
                    let b_free = bs.weight.is_zero();
                    match (v_free, b_free) {
                        // Free nodes outrank every paid ratio; among free
                        // (or exactly tied) ratios, larger chi wins, then
                        // smaller id.
                        (true, false) => true,
                        (false, true) => false,
                        (true, true) => score.chi > bs.chi || (score.chi == bs.chi && v < *bv),
                        (false, false) => {
                            let lhs = BigRational::from_integer(score.chi.into()) * &bs.weight;
                            let rhs = BigRational::from_integer(bs.chi.into()) * &score.weight;
                            lhs > rhs
                                || (lhs == rhs
                                    && (score.chi > bs.chi || (score.chi == bs.chi && v < *bv)))
                        }
                    }
                }
            };
            if better {
                best = Some((v, score));
            }
        }
        let (v, _) = best.expect("candidates nonempty");
        run.choose(v)?;
        run.prune()?;
    }
    run.end_round();
    Ok(run.finish())
}

/// Recompute-a-CDS heuristic: solve an exact minimum-weight CDS of the
/// current pruned graph with chosen nodes free, walk it from the root, and
/// recompute as soon as an inactive node is observed (the chosen node
/// itself under local feedback, any newly revealed neighbor under full).
pub fn run_cds_based(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    hidden: &FullRealization,
    budget: Option<u64>,
) -> Result<PolicyTrace, PolicyError> {
    let mut run = Run::start(g, s, hidden, model)?;
    while !run.dominated() {
        let chosen_before = run.chosen.len();
        let supp_before = run.phi.supp().len();

        let mut objective_set = run.live.clone();
        objective_set.subtract(&run.chosen_set);
        let report = solve_min_weight_cds(g, &run.live, &objective_set, budget)?;
        let cds = report.solution;

        loop {
            let mut cands = run.reachable_candidates();
            cands.intersect_with(&cds);
            let Some(v) = cands.first() else {
                break;
            };
            let delta = run.choose(v)?.to_vec();
            let saw_inactive = delta.iter().any(|&(_, state)| !state);
            if saw_inactive {
                break;
            }
        }
        run.end_round();
        run.prune()?;

        if run.chosen.len() == chosen_before
            && run.phi.supp().len() == supp_before
            && !run.dominated()
        {
            return Err(PolicyError::Internal("recompute made no progress"));
        }
    }
    if run.round_ends.last() != Some(&run.chosen.len()) {
        run.end_round();
    }
    Ok(run.finish())
}

/// Weight-sensitive Borgs baseline for local feedback: repeatedly take the
/// reachable candidate maximizing new coverage per unit weight, then with
/// the supplied randomness try one extra node from the fresh coverage of
/// that choice.
pub fn run_borgs_local(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    hidden: &FullRealization,
    seed: u64,
) -> Result<PolicyTrace, PolicyError> {
    if model != FeedbackModel::Local {
        return Err(PolicyError::BadModel);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut run = Run::start(g, s, hidden, model)?;
    while !run.dominated() {
        let candidates = run.reachable_candidates();
        if candidates.is_empty() {
            return Err(PolicyError::Internal(
                "no reachable candidate before domination",
            ));
        }
        let covered = {
            let mut c = g.dominated_set(&run.chosen_set);
            c.intersect_with(&run.live);
            c
        };
        let mut best: Option<(NodeId, usize)> = None;
        for v in candidates.iter() {
            let mut fresh = g.closed_neighborhood(v)?.intersection(&run.live);
            fresh.subtract(&covered);
            let gain = fresh.len();
            let better = match best {
                None => true,
                Some((bv, bg)) => {
                    // gain/w(v) > bg/w(bv) by cross-multiplication, free
                    // nodes first, ties to smaller id.
                    let (wv, wb) = (g.weight(v), g.weight(bv));
                    let lhs = BigRational::from_integer(gain.into()) * wb;
                    let rhs = BigRational::from_integer(bg.into()) * wv;
                    lhs > rhs || (lhs == rhs && v < bv)
                }
            };
            if better {
                best = Some((v, gain));
            }
        }
        let (v, _) = best.expect("candidates nonempty");
        let mut spare_pool = g.closed_neighborhood(v)?.intersection(&run.live);
        spare_pool.subtract(&covered);
        spare_pool.remove(v);
        run.choose(v)?;
        run.prune()?;

        // Secondary choice: one uniform pick from the fresh coverage of v,
        // taken only if it is still live, reachable, and worth anything.
        let pool: Vec<NodeId> = spare_pool.iter().collect();
        if !pool.is_empty() {
            let u = pool[rng.gen_range(0..pool.len())];
            if run.live.contains(u)
                && !run.chosen_set.contains(u)
                && !run.dominators_of(u).is_empty()
            {
                let mut now_covered = g.dominated_set(&run.chosen_set);
                now_covered.intersect_with(&run.live);
                let mut fresh = g.closed_neighborhood(u)?.intersection(&run.live);
                fresh.subtract(&now_covered);
                if !fresh.is_empty() {
                    run.choose(u)?;
                    run.prune()?;
                }
            }
        }
    }
    run.end_round();
    Ok(run.finish())
}

/// Exact policy value: run the supplied single-scenario runner once per
/// stored scenario and weight the outcomes by scenario probability.
/// Returns expected chosen weight and expected active chosen weight, and
/// validates every trace against the hidden realization.
pub fn evaluate_policy_wavg<F>(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    runner: F,
) -> Result<(BigRational, BigRational), PolicyError>
where
    F: Fn(usize, &FullRealization) -> Result<PolicyTrace, PolicyError> + Sync,
{
    let traces: Vec<Result<PolicyTrace, PolicyError>> = (0..s.len())
        .into_par_iter()
        .map(|i| {
            let trace = runner(i, s.scenario(i))?;
            validate_trace(g, model, s.scenario(i), &trace)?;
            Ok(trace)
        })
        .collect();
    let mut w_avg = BigRational::zero();
    let mut w_active = BigRational::zero();
    for (i, trace) in traces.into_iter().enumerate() {
        let trace = trace?;
        let p = s.prob(i);
        w_avg += &p * &trace.total_weight;
        w_active += &p * &trace.active_weight;
    }
    Ok((w_avg, w_active))
}

/// Output validity for one finished run: the active chosen nodes form a
/// CDS of the root's component of the active subgraph, and under full
/// feedback every chosen node is active.
pub fn validate_trace(
    g: &Graph,
    model: FeedbackModel,
    hidden: &FullRealization,
    trace: &PolicyTrace,
) -> Result<(), PolicyError> {
    let chosen: NodeSet = {
        let mut c = NodeSet::empty(g.n());
        for &v in &trace.chosen {
            c.insert(v);
        }
        c
    };
    if model == FeedbackModel::Full && !chosen.is_subset(hidden.active_set()) {
        return Err(PolicyError::Internal(
            "full feedback run chose an inactive node",
        ));
    }
    let active_chosen = chosen.intersection(hidden.active_set());
    let root_active_comp = g.connected_component(hidden.active_set(), g.root())?;
    if !g.is_connected_within(&active_chosen) {
        return Err(PolicyError::Internal("active chosen set is disconnected"));
    }
    let mut covered = g.dominated_set(&active_chosen);
    covered.intersect_with(&root_active_comp);
    if covered != root_active_comp {
        return Err(PolicyError::Internal(
            "active chosen set fails to dominate the root's active component",
        ));
    }
    Ok(())
}

/// Exact form of the round bound: rounds is within 1 + lg(1/delta) iff
/// 2^(rounds-1) * delta_numerator <= delta_denominator.
pub fn rounds_within_bound(rounds: usize, s: &ScenarioSet) -> bool {
    if rounds == 0 {
        return true;
    }
    if rounds - 1 >= 127 {
        return false;
    }
    let (num, den) = s.delta();
    (num as u128) << (rounds - 1) <= den as u128
}
