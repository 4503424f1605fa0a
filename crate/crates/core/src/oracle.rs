//! Exact optimal adaptive policy value on tiny instances, by memoized
//! expectimax over belief states.
//!
//! A belief state is the chosen set together with the observations so far;
//! its value is the cheapest expected remaining weight over all adaptive
//! continuations that respect the feedback model's feasibility rules.
//! Choosing a node is a min node, the feedback it produces is a chance
//! node weighted by conditional scenario mass, and a state is terminal
//! when the chosen set dominates the pruned graph.
//!
//! Memoization keys states by their pruned canonical form: the live part
//! of the chosen set, the live observed-active set, and the index set of
//! consistent scenarios. Pruned nodes are either inactive in every
//! consistent scenario or unreachable from the root, so they influence
//! neither feasibility nor future cost, and observing one reveals nothing.

use std::collections::HashMap;

use num::{BigRational, Zero};
use thiserror::Error;

use crate::graph::{Graph, GraphError, NodeSet};
use crate::polymatroid::FeedbackModel;
use crate::scenario::{Realization, ScenarioError, ScenarioSet};

/// Hard ceiling on both guard dimensions, from the 64-bit masks used for
/// memo keys.
const ABSOLUTE_CAP: usize = 64;

/// Size guard for the exhaustive search. The defaults keep runtime in
/// seconds; callers that accept longer runs may raise them explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleGuard {
    pub max_n: usize,
    pub max_scenarios: usize,
}

impl Default for OracleGuard {
    fn default() -> Self {
        OracleGuard {
            max_n: 12,
            max_scenarios: 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(
        "instance too large for the exhaustive oracle: n={n} (limit {max_n}), \
         scenarios={scenarios} (limit {max_scenarios})"
    )]
    TooLarge {
        n: usize,
        max_n: usize,
        scenarios: usize,
        max_scenarios: usize,
    },
    #[error("invalid scenario partition: {0}")]
    BadPartition(&'static str),
    #[error("no action available in a non-terminal belief state")]
    Stuck,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Optimal adaptive policy value under the default size guard.
pub fn optimal_wavg(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
) -> Result<BigRational, OracleError> {
    optimal_wavg_with_guard(g, s, model, &OracleGuard::default())
}

/// Optimal adaptive policy value under an explicit size guard.
pub fn optimal_wavg_with_guard(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    guard: &OracleGuard,
) -> Result<BigRational, OracleError> {
    optimal_wavg_impl(g, s, model, guard, true)
}

fn optimal_wavg_impl(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    guard: &OracleGuard,
    memoize: bool,
) -> Result<BigRational, OracleError> {
    let max_n = guard.max_n.min(ABSOLUTE_CAP);
    let max_scenarios = guard.max_scenarios.min(ABSOLUTE_CAP);
    if g.n() > max_n || s.len() > max_scenarios {
        return Err(OracleError::TooLarge {
            n: g.n(),
            max_n,
            scenarios: s.len(),
            max_scenarios,
        });
    }
    let scenario_reach = (0..s.len())
        .map(|i| g.component_of(s.scenario(i).active_set(), g.root()))
        .collect();
    let mut search = Expectimax {
        g,
        s,
        model,
        scenario_reach,
        memo: if memoize { Some(HashMap::new()) } else { None },
    };
    let mut chosen = NodeSet::empty(g.n());
    chosen.insert(g.root());
    // The root is processed like a choice: under full feedback this is the
    // initial chance node over neighborhood reveal patterns, under local
    // feedback it only confirms the root.
    let phi = Realization::empty(g.n());
    let value = search.chance_value(&chosen, &phi, g.root())?;
    Ok(g.weight(g.root()) + value)
}

type MemoKey = (u64, u64, u64);

struct Expectimax<'a> {
    g: &'a Graph,
    s: &'a ScenarioSet,
    model: FeedbackModel,
    memo: Option<HashMap<MemoKey, BigRational>>,
}

fn bits(set: &NodeSet) -> u64 {
    set.iter().fold(0u64, |acc, v| acc | (1u64 << v))
}

impl<'a> Expectimax<'a> {
    /// Expected remaining cost after committing to choose `v` from the
    /// state (chosen, phi), `v` already counted in `chosen` and its weight
    /// already paid: branch on the feedback outcomes.
    fn chance_value(
        &mut self,
        chosen: &NodeSet,
        phi: &Realization,
        v: usize,
    ) -> Result<BigRational, OracleError> {
        let consistent = self.s.consistent_set(phi);
        let total: u64 = consistent.iter().map(|&i| self.s.k(i)).sum();
        // Group consistent scenarios by the observation pattern choosing v
        // would produce: under local feedback the state of v alone, under
        // full feedback v inactive or the whole neighborhood state vector.
        let mut groups: HashMap<(bool, u64), (u64, Vec<usize>)> = HashMap::new();
        for &i in &consistent {
            let psi = self.s.scenario(i);
            let key = match self.model {
                FeedbackModel::Local => (psi.is_active(v), 0),
                FeedbackModel::Full => {
                    if psi.is_active(v) {
                        let nbhd = self.g.closed_neighborhood(v)?;
                        (true, bits(&nbhd.intersection(psi.active_set())))
                    } else {
                        (false, 0)
                    }
                }
            };
            let entry = groups.entry(key).or_insert((0, Vec::new()));
            entry.0 += self.s.k(i);
            entry.1.push(i);
        }
        let mut expected = BigRational::zero();
        for ((v_active, _), (mass, members)) in groups {
            let mut next_phi = phi.clone();
            let witness = self.s.scenario(members[0]);
            match self.model {
                FeedbackModel::Local => next_phi.observe(v, v_active),
                FeedbackModel::Full => {
                    if v_active {
                        for u in self.g.closed_neighborhood(v)?.iter() {
                            next_phi.observe(u, witness.is_active(u));
                        }
                    } else {
                        next_phi.observe(v, false);
                    }
                }
            }
            let p = BigRational::new(mass.into(), total.into());
            expected += p * self.value(chosen, &next_phi)?;
        }
        Ok(expected)
    }

    /// Cheapest expected remaining weight from the state (chosen, phi).
    fn value(&mut self, chosen: &NodeSet, phi: &Realization) -> Result<BigRational, OracleError> {
        let consistent = self.s.consistent_set(phi);
        let mut possible = NodeSet::empty(self.g.n());
        for &i in &consistent {
            possible.union_with(self.s.scenario(i).active_set());
        }
        let live = self.g.connected_component(&possible, self.g.root())?;

        let live_chosen = chosen.intersection(&live);
        let mut covered = self.g.dominated_set(&live_chosen);
        covered.intersect_with(&live);
        if covered == live {
            return Ok(BigRational::zero());
        }

        let key: MemoKey = (
            bits(&live_chosen),
            bits(&phi.observed_active().intersection(&live)),
            consistent.iter().fold(0u64, |acc, &i| acc | (1u64 << i)),
        );
        if let Some(memo) = &self.memo {
            if let Some(hit) = memo.get(&key) {
                return Ok(hit.clone());
            }
        }

        // Feasible actions: known-active unchosen nodes under full
        // feedback, live neighbors of active chosen nodes under local.
        // Live chosen nodes are exactly the active chosen ones, because an
        // observed-inactive node is certainly inactive and gets pruned.
        let mut actions = match self.model {
            FeedbackModel::Full => phi.observed_active().clone(),
            FeedbackModel::Local => self.g.dominated_set(&live_chosen),
        };
        actions.intersect_with(&live);
        actions.subtract(chosen);
        if actions.is_empty() {
            return Err(OracleError::Stuck);
        }

        let mut best: Option<BigRational> = None;
        for v in actions.iter() {
            let mut next_chosen = chosen.clone();
            next_chosen.insert(v);
            let value = self.g.weight(v) + self.chance_value(&next_chosen, phi, v)?;
            if best.as_ref().is_none_or(|b| value < *b) {
                best = Some(value);
            }
        }
        let best = best.expect("actions nonempty");
        if let Some(memo) = &mut self.memo {
            memo.insert(key, best.clone());
        }
        Ok(best)
    }
}

/// Both sides of the partition inequality: the probability-weighted sum of
/// optimal values of the conditioned sub-instances, and the optimal value
/// of the full instance.
pub fn partition_sides(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    partition: &[Vec<usize>],
    guard: &OracleGuard,
) -> Result<(BigRational, BigRational), OracleError> {
    let mut seen = vec![false; s.len()];
    for part in partition {
        if part.is_empty() {
            return Err(OracleError::BadPartition("empty part"));
        }
        for &i in part {
            if i >= s.len() {
                return Err(OracleError::BadPartition("scenario index out of range"));
            }
            if seen[i] {
                return Err(OracleError::BadPartition("scenario listed twice"));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|&b| !b) {
        return Err(OracleError::BadPartition("scenario missing from partition"));
    }

    let mut lhs = BigRational::zero();
    for part in partition {
        let mass: u64 = part.iter().map(|&i| s.k(i)).sum();
        let members: Vec<_> = part
            .iter()
            .map(|&i| (s.scenario(i).clone(), s.k(i)))
            .collect();
        // Conditioning on the part keeps relative masses, so the
        // sub-instance distribution is k_i over the part total.
        let sub = ScenarioSet::new(g.root(), members, mass)?;
        let p = BigRational::new(mass.into(), s.m().into());
        lhs += p * optimal_wavg_with_guard(g, &sub, model, guard)?;
    }
    let rhs = optimal_wavg_with_guard(g, s, model, guard)?;
    Ok((lhs, rhs))
}

/// Whether the conditioned optimal values are consistent with adaptivity:
/// knowing which part of the partition the hidden scenario falls in can
/// only help, so the weighted sum of per-part optima is at most the
/// uninformed optimum.
pub fn check_partition_inequality(
    g: &Graph,
    s: &ScenarioSet,
    model: FeedbackModel,
    partition: &[Vec<usize>],
    guard: &OracleGuard,
) -> Result<bool, OracleError> {
    let (lhs, rhs) = partition_sides(g, s, model, partition, guard)?;
    Ok(lhs <= rhs)
}

/// Whether `policy_wavg <= 2 * (1 + lg(1/delta)) * optimal` holds, where
/// delta is the smallest positive scenario probability.
///
/// The logarithm is irrational in general, so the check brackets it with
/// dyadic bounds tight to well under 2^-40: `Some(true)` and `Some(false)`
/// are certificates, and the (practically unreachable) ambiguous gap
/// returns `None` so callers can fail loudly instead of guessing.
pub fn satisfies_approx_bound(
    policy_wavg: &BigRational,
    optimal: &BigRational,
    s: &ScenarioSet,
) -> Option<bool> {
    let (num, den) = s.delta();
    let (lo, hi) = log2_bounds(den, num);
    let two = BigRational::from_integer(2.into());
    let one = BigRational::from_integer(1.into());
    let lower_budget = &two * (&one + lo) * optimal;
    if *policy_wavg <= lower_budget {
        return Some(true);
    }
    let upper_budget = two * (one + hi) * optimal;
    if *policy_wavg > upper_budget {
        return Some(false);
    }
    None
}

/// Dyadic bracket of lg(a/b) for integers a >= b >= 1: the f64 logarithm
/// is correct to a few ulps (about 2^-46 here), so widening by 2^-40 on
/// each side yields guaranteed bounds.
fn log2_bounds(a: u64, b: u64) -> (BigRational, BigRational) {
    let x = ((a as f64) / (b as f64)).log2();
    let slack = 1.0 / (1u64 << 40) as f64;
    let lo = BigRational::from_float((x - slack).max(0.0)).expect("finite");
    let hi = BigRational::from_float(x + slack).expect("finite");
    (lo, hi)
}
