//! Round contexts and the submodular objectives that drive the adaptive
//! policy.
//!
//! At the start of a round the policy summarizes its knowledge as a
//! [`RoundContext`]: the pruned graph, the observations so far, the chosen
//! set U, the majority set H of nodes more likely active than not, and the
//! reach R, the root's component of the graph induced on H and U. Over that
//! context two set functions are defined. The coverage objective [`f_plt`]
//! credits a candidate set X one unit per unobserved node it dominates, and
//! partial credit for an undominated node equal to the probability mass under
//! which that node is disconnected from the root or some most-likely vector
//! of X has already been contradicted. The refutation objective [`f_plr`]
//! measures the conditional mass inconsistent with X's most-likely vectors,
//! capped at one half. Both functions are monotone and submodular, and after
//! shifting by their value at the empty set and scaling by a common
//! denominator they become integer-valued polymatroids accepted by the exact
//! Steiner solver.

use std::cell::RefCell;
use std::collections::HashMap;

use num::{BigInt, BigRational};
use thiserror::Error;

use crate::graph::{Graph, NodeId, NodeSet};
use crate::scenario::{Realization, ScenarioSet};

/// How much the environment reveals when a node is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeedbackModel {
    /// Choosing an active node reveals the states of its whole closed
    /// neighborhood; choosing an inactive node reveals only that node.
    Full,
    /// Choosing a node reveals only that node's own state.
    Local,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolymatroidError {
    #[error("no stored scenario is consistent with the observation")]
    NoConsistentScenarios,
    #[error("invalid round context: {0}")]
    InvalidContext(&'static str),
    #[error("node {0} is outside the domain of this query")]
    NodeOutsideDomain(NodeId),
    #[error("set reaches outside the domain of this objective")]
    SetOutsideDomain,
    #[error("scale mismatch between objective and scenario set")]
    ScaleMismatch,
}

/// Immutable per-round snapshot of the policy's knowledge.
///
/// The pruned graph is represented as the original graph plus the `live`
/// node set; all neighborhoods, components, and domains below are restricted
/// to live nodes. Construction computes the majority set H, the reach R, and
/// per-scenario data (root components and violated most-likely-vector
/// domains) that the objectives query repeatedly.
pub struct RoundContext<'a> {
    graph: &'a Graph,
    scenarios: &'a ScenarioSet,
    phi: Realization,
    live: NodeSet,
    chosen: NodeSet,
    majority: NodeSet,
    reach: NodeSet,
    closed_reach: NodeSet,
    model: FeedbackModel,
    /// Indices of scenarios consistent with phi.
    consistent: Vec<usize>,
    /// Probability numerators of the consistent scenarios, parallel to
    /// `consistent`.
    ck: Vec<u64>,
    /// Root components of the live active subgraph, parallel to `consistent`.
    comp: Vec<NodeSet>,
    /// Nodes whose most-likely vector each consistent scenario violates,
    /// already intersected with the vector domain.
    bad: Vec<NodeSet>,
    /// Total consistent mass K, so p(phi) = K / M.
    mass: u64,
    /// Live unobserved nodes.
    unobserved: NodeSet,
    /// Live nodes outside the closed reach.
    outside: NodeSet,
    /// Sizes of each root component restricted to `outside`, parallel to
    /// `consistent`.
    outside_sizes: Vec<u64>,
}

impl std::fmt::Debug for RoundContext<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoundContext")
            .field("model", &self.model)
            .field("live", &self.live)
            .field("chosen", &self.chosen)
            .field("majority", &self.majority)
            .field("reach", &self.reach)
            .field("mass", &self.mass)
            .finish_non_exhaustive()
    }
}

impl<'a> RoundContext<'a> {
    /// Builds the round snapshot and validates its invariants: the root is
    /// live and observed active, chosen nodes are observed, live observed
    /// nodes are active, and in the full model every live neighbor of a
    /// chosen node is observed.
    pub fn new(
        graph: &'a Graph,
        scenarios: &'a ScenarioSet,
        live: NodeSet,
        chosen: NodeSet,
        phi: Realization,
        model: FeedbackModel,
    ) -> Result<Self, PolymatroidError> {
        let root = graph.root();
        if !live.contains(root) {
            return Err(PolymatroidError::InvalidContext("root is not live"));
        }
        if !phi.observed_active().contains(root) {
            return Err(PolymatroidError::InvalidContext(
                "root must be observed active",
            ));
        }
        if !chosen.is_subset(phi.supp()) {
            return Err(PolymatroidError::InvalidContext(
                "chosen nodes must be observed",
            ));
        }
        let live_observed = live.intersection(phi.supp());
        if !live_observed.is_subset(phi.observed_active()) {
            return Err(PolymatroidError::InvalidContext(
                "live observed nodes must be active",
            ));
        }
        let live_chosen = chosen.intersection(&live);
        if model == FeedbackModel::Full {
            let nbhd = graph.dominated_set(&live_chosen).intersection(&live);
            if !nbhd.is_subset(phi.supp()) {
                return Err(PolymatroidError::InvalidContext(
                    "full feedback leaves no chosen node with unobserved neighbors",
                ));
            }
        }

        let consistent = scenarios.consistent_set(&phi);
        if consistent.is_empty() {
            return Err(PolymatroidError::NoConsistentScenarios);
        }
        let ck: Vec<u64> = consistent.iter().map(|&i| scenarios.k(i)).collect();
        let mass: u64 = ck.iter().sum();

        // H: live unchosen nodes active with conditional probability
        // strictly above one half, tested as 2 * (active mass) > K.
        let mut majority = NodeSet::empty(graph.n());
        for v in live.difference(&chosen).iter() {
            let active: u64 = consistent
                .iter()
                .zip(&ck)
                .filter(|(&i, _)| scenarios.scenario(i).is_active(v))
                .map(|(_, &k)| k)
                .sum();
            if 2 * active > mass {
                majority.insert(v);
            }
        }

        let reach = graph.component_of(&majority.union(&live_chosen), root);
        let closed_reach = graph.dominated_set(&reach).intersection(&live);
        let unobserved = live.difference(phi.supp());
        let outside = live.difference(&closed_reach);

        let mut comp = Vec::with_capacity(consistent.len());
        let mut bad = Vec::with_capacity(consistent.len());
        let mut outside_sizes = Vec::with_capacity(consistent.len());
        for &i in &consistent {
            let active = scenarios.scenario(i).active_set().intersection(&live);
            let c = graph.component_of(&active, root);
            // Nodes where the scenario disagrees with majority membership.
            let mismatch = majority
                .difference(&active)
                .union(&active.difference(&majority));
            let bad_i = match model {
                FeedbackModel::Full => {
                    // A full-model vector at v is violated exactly when some
                    // unobserved closed neighbor of v mismatches.
                    let m = mismatch.intersection(&unobserved);
                    graph
                        .dominated_set(&m)
                        .intersection(&reach)
                        .intersection(&majority)
                }
                FeedbackModel::Local => mismatch
                    .intersection(&closed_reach)
                    .difference(&chosen),
            };
            outside_sizes.push(c.intersection_len(&outside) as u64);
            comp.push(c);
            bad.push(bad_i);
        }

        Ok(RoundContext {
            graph,
            scenarios,
            phi,
            live,
            chosen,
            majority,
            reach,
            closed_reach,
            model,
            consistent,
            ck,
            comp,
            bad,
            mass,
            unobserved,
            outside,
            outside_sizes,
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn scenario_set(&self) -> &ScenarioSet {
        self.scenarios
    }

    pub fn phi(&self) -> &Realization {
        &self.phi
    }

    pub fn live(&self) -> &NodeSet {
        &self.live
    }

    pub fn chosen(&self) -> &NodeSet {
        &self.chosen
    }

    /// H: live unchosen nodes more likely active than not.
    pub fn majority(&self) -> &NodeSet {
        &self.majority
    }

    /// R: the root's component of the live graph induced on H and the chosen
    /// set.
    pub fn reach(&self) -> &NodeSet {
        &self.reach
    }

    /// N[R] within the live graph.
    pub fn closed_reach(&self) -> &NodeSet {
        &self.closed_reach
    }

    pub fn model(&self) -> FeedbackModel {
        self.model
    }

    /// Indices of the scenarios consistent with the round's observation.
    pub fn consistent(&self) -> &[usize] {
        &self.consistent
    }

    /// K: total probability numerator of the consistent scenarios.
    pub fn mass(&self) -> u64 {
        self.mass
    }

    /// Ground set of the round's Steiner instances: R in the full model,
    /// N[R] in the local model.
    pub fn steiner_ground(&self) -> &NodeSet {
        match self.model {
            FeedbackModel::Full => &self.reach,
            FeedbackModel::Local => &self.closed_reach,
        }
    }

    /// Domain of the most-likely vectors.
    fn vector_domain(&self) -> NodeSet {
        match self.model {
            FeedbackModel::Full => self.reach.intersection(&self.majority),
            FeedbackModel::Local => self.closed_reach.difference(&self.chosen),
        }
    }

    /// Nodes whose most-likely vectors constrain the residual hypothesis for
    /// a query set x.
    fn relevant(&self, x: &NodeSet) -> NodeSet {
        match self.model {
            FeedbackModel::Full => x.intersection(&self.majority),
            FeedbackModel::Local => x.difference(&self.chosen),
        }
    }

    fn nbhd_live(&self, x: &NodeSet) -> NodeSet {
        self.graph.dominated_set(x).intersection(&self.live)
    }

    /// Memoized coverage objective for this round.
    pub fn plt(&self) -> PltFn<'_, 'a> {
        PltFn {
            ctx: self,
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// Memoized refutation objective for this round.
    pub fn plr(&self) -> PlrFn<'_, 'a> {
        PlrFn {
            ctx: self,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn check_domain(&self, x: &NodeSet) -> Result<(), PolymatroidError> {
        if x.is_subset(self.steiner_ground()) {
            Ok(())
        } else {
            Err(PolymatroidError::SetOutsideDomain)
        }
    }

    /// Probability numerator, over denominator M, of 1 minus the coverage
    /// deficit. Shared by the rational and integer views of f_plt.
    fn plt_numerator(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        self.check_domain(x)?;
        let m = self.scenarios.m() as u128;
        let rel = self.relevant(x);
        match self.model {
            FeedbackModel::Full => {
                let uncovered = self.unobserved.difference(&self.nbhd_live(x));
                let mut lost: u128 = 0;
                for (j, k) in self.ck.iter().enumerate() {
                    if self.bad[j].is_disjoint(&rel) {
                        lost += *k as u128 * self.comp[j].intersection_len(&uncovered) as u128;
                    }
                }
                Ok(m * self.unobserved.len() as u128 - lost)
            }
            FeedbackModel::Local => {
                let xr = x.intersection(&self.reach);
                let covered = self.unobserved.intersection_len(&self.nbhd_live(&xr)) as u128;
                let mut lost: u128 = 0;
                for (j, k) in self.ck.iter().enumerate() {
                    if self.bad[j].is_disjoint(&rel) {
                        lost += *k as u128 * self.outside_sizes[j] as u128;
                    }
                }
                Ok(m * (covered + self.outside.len() as u128) - lost)
            }
        }
    }

    /// Probability numerator of f_plr over denominator 2K.
    fn plr_numerator(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        self.check_domain(x)?;
        let rel = self.relevant(x);
        let surviving: u64 = self
            .ck
            .iter()
            .enumerate()
            .filter(|(j, _)| self.bad[*j].is_disjoint(&rel))
            .map(|(_, &k)| k)
            .sum();
        let k = self.mass as u128;
        Ok(k.min(2 * (k - surviving as u128)))
    }
}

/// The observation a node is most likely to produce when chosen.
///
/// Full model: every live unobserved closed neighbor of v is predicted
/// active exactly when it lies in H. Local model: v itself is predicted
/// active exactly when it lies in H.
pub fn most_likely_vector(
    ctx: &RoundContext<'_>,
    v: NodeId,
) -> Result<Realization, PolymatroidError> {
    if !ctx.vector_domain().contains(v) {
        return Err(PolymatroidError::NodeOutsideDomain(v));
    }
    let mut xi = Realization::empty(ctx.graph.n());
    match ctx.model {
        FeedbackModel::Full => {
            let mut single = NodeSet::empty(ctx.graph.n());
            single.insert(v);
            for u in ctx.nbhd_live(&single).difference(ctx.phi.supp()).iter() {
                xi.observe(u, ctx.majority.contains(u));
            }
        }
        FeedbackModel::Local => {
            xi.observe(v, ctx.majority.contains(v));
        }
    }
    Ok(xi)
}

/// Indices of the consistent scenarios that agree with the most-likely
/// vectors of every node in h.
pub fn residual_hypothesis(
    ctx: &RoundContext<'_>,
    h: &NodeSet,
) -> Result<Vec<usize>, PolymatroidError> {
    if !h.is_subset(&ctx.vector_domain()) {
        return Err(PolymatroidError::SetOutsideDomain);
    }
    Ok(ctx
        .consistent
        .iter()
        .enumerate()
        .filter(|(j, _)| ctx.bad[*j].is_disjoint(h))
        .map(|(_, &i)| i)
        .collect())
}

/// Coverage objective value at x. Domain: subsets of R (full model) or N[R]
/// (local model).
pub fn f_plt(ctx: &RoundContext<'_>, x: &NodeSet) -> Result<BigRational, PolymatroidError> {
    Ok(BigRational::new(
        BigInt::from(ctx.plt_numerator(x)?),
        BigInt::from(ctx.scenarios.m()),
    ))
}

/// Refutation objective value at x: the conditional mass inconsistent with
/// x's most-likely vectors, capped at one half. Same domain as [`f_plt`].
pub fn f_plr(ctx: &RoundContext<'_>, x: &NodeSet) -> Result<BigRational, PolymatroidError> {
    Ok(BigRational::new(
        BigInt::from(ctx.plr_numerator(x)?),
        BigInt::from(2 * ctx.mass as u128),
    ))
}

/// Monotone submodular rational-valued set function with a fixed ground set.
///
/// Values are exact: every evaluation is an integer numerator over a fixed
/// per-function denominator.
pub trait SubmodularFn {
    fn ground(&self) -> &NodeSet;
    fn denominator(&self) -> u128;
    fn numerator(&self, x: &NodeSet) -> Result<u128, PolymatroidError>;

    fn eval(&self, x: &NodeSet) -> Result<BigRational, PolymatroidError> {
        Ok(BigRational::new(
            BigInt::from(self.numerator(x)?),
            BigInt::from(self.denominator()),
        ))
    }

    /// f at the ground set, the feasibility threshold of a Steiner instance.
    fn target(&self) -> BigRational {
        self.eval(self.ground()).expect("ground set is in domain")
    }
}

/// Memoized f_plt for one round.
///
/// The memo key is the part of x the value depends on: x intersected with H
/// in the full model (chosen nodes have no unobserved neighbors there, so
/// they contribute nothing), the whole of x in the local model.
pub struct PltFn<'c, 'a> {
    ctx: &'c RoundContext<'a>,
    memo: RefCell<HashMap<NodeSet, u128>>,
}

impl SubmodularFn for PltFn<'_, '_> {
    fn ground(&self) -> &NodeSet {
        self.ctx.steiner_ground()
    }

    fn denominator(&self) -> u128 {
        self.ctx.scenarios.m() as u128
    }

    fn numerator(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        let key = match self.ctx.model {
            FeedbackModel::Full => x.intersection(&self.ctx.majority),
            FeedbackModel::Local => x.clone(),
        };
        if let Some(&v) = self.memo.borrow().get(&key) {
            return Ok(v);
        }
        let v = self.ctx.plt_numerator(x)?;
        self.memo.borrow_mut().insert(key, v);
        Ok(v)
    }
}

/// Memoized f_plr for one round. The memo key is the relevant part of x:
/// x intersected with H (full model) or x minus the chosen set (local).
pub struct PlrFn<'c, 'a> {
    ctx: &'c RoundContext<'a>,
    memo: RefCell<HashMap<NodeSet, u128>>,
}

impl SubmodularFn for PlrFn<'_, '_> {
    fn ground(&self) -> &NodeSet {
        self.ctx.steiner_ground()
    }

    fn denominator(&self) -> u128 {
        2 * self.ctx.mass as u128
    }

    fn numerator(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        let key = self.ctx.relevant(x);
        if let Some(&v) = self.memo.borrow().get(&key) {
            return Ok(v);
        }
        let v = self.ctx.plr_numerator(x)?;
        self.memo.borrow_mut().insert(key, v);
        Ok(v)
    }
}

/// Which objective an integer polymatroid was built from; decides the scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolyKind {
    Plt,
    Plr,
}

/// Proper integer-valued polymatroid: scale * (f(x) - f(empty)).
///
/// The scale is the wrapped function's denominator (M for the coverage
/// objective, 2K for the refutation objective), so scaled values are exact
/// nonnegative integers and feasibility is preserved: the shifted function
/// reaches its target exactly where f reaches f(ground).
pub struct IntegerPolymatroid<F: SubmodularFn> {
    f: F,
    scale: u128,
    empty_num: u128,
    ground: NodeSet,
    target: u128,
}

impl<F: SubmodularFn> std::fmt::Debug for IntegerPolymatroid<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegerPolymatroid")
            .field("scale", &self.scale)
            .field("empty_num", &self.empty_num)
            .field("ground", &self.ground)
            .field("target", &self.target)
            .finish_non_exhaustive()
    }
}

impl<F: SubmodularFn> IntegerPolymatroid<F> {
    pub fn ground(&self) -> &NodeSet {
        &self.ground
    }

    pub fn scale(&self) -> u128 {
        self.scale
    }

    /// The additive shift, -f(empty), as a rational.
    pub fn shift(&self) -> BigRational {
        -BigRational::new(BigInt::from(self.empty_num), BigInt::from(self.scale))
    }

    /// Scaled shifted value; an exact nonnegative integer for every x in the
    /// domain.
    pub fn eval_int(&self, x: &NodeSet) -> Result<u128, PolymatroidError> {
        Ok(self.f.numerator(x)? - self.empty_num)
    }

    /// Value at the ground set; reaching it is the Steiner feasibility test.
    pub fn target(&self) -> u128 {
        self.target
    }

    pub fn inner(&self) -> &F {
        &self.f
    }
}

/// Wraps an objective into its proper integer polymatroid, deriving the
/// scale from the scenario set and observation: M for the coverage kind,
/// 2 * M * p(phi) = 2K for the refutation kind.
pub fn to_integer_polymatroid<F: SubmodularFn>(
    f: F,
    kind: PolyKind,
    s: &ScenarioSet,
    phi: &Realization,
) -> Result<IntegerPolymatroid<F>, PolymatroidError> {
    let scale = match kind {
        PolyKind::Plt => s.m() as u128,
        PolyKind::Plr => {
            let consistent_mass: u64 = s.consistent_set(phi).iter().map(|&i| s.k(i)).sum();
            2 * consistent_mass as u128
        }
    };
    if scale != f.denominator() {
        return Err(PolymatroidError::ScaleMismatch);
    }
    let ground = f.ground().clone();
    let empty_num = f.numerator(&NodeSet::empty(ground.capacity()))?;
    let target = f.numerator(&ground)? - empty_num;
    Ok(IntegerPolymatroid {
        f,
        scale,
        empty_num,
        ground,
        target,
    })
}
