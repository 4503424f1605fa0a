//! The probability model over node states: full realizations, partial
//! observations, and exact conditioning.
//!
//! A [`ScenarioSet`] stores the finite support of the state distribution as
//! integer numerators over a common denominator M, so every conditional
//! probability below is an exact rational and the strict comparisons the
//! policies branch on (such as "active with probability more than a half")
//! never touch floating point. The minimum positive scenario probability
//! delta = k_min/M drives the round and approximation bounds.

use num::{BigInt, BigRational};
use thiserror::Error;

use crate::graph::{Graph, NodeId, NodeSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario set must be nonempty")]
    Empty,
    #[error("scenario {0} has zero probability")]
    ZeroProbability(usize),
    #[error("probabilities sum to {got}/{m}, expected {m}/{m}")]
    BadTotal { got: u64, m: u64 },
    #[error("root {0} inactive in scenario {1}")]
    InactiveRoot(NodeId, usize),
    #[error("no stored scenarios are consistent with the observation")]
    ZeroMassConditioning,
    #[error("realization not drawn from this scenario set")]
    UnknownRealization,
}

/// Complete active/inactive assignment to all nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FullRealization {
    active: NodeSet,
}

impl FullRealization {
    pub fn new(active: NodeSet) -> Self {
        FullRealization { active }
    }

    #[inline]
    pub fn is_active(&self, v: NodeId) -> bool {
        self.active.contains(v)
    }

    /// The active node set A.
    pub fn active_set(&self) -> &NodeSet {
        &self.active
    }
}

/// Per-node observation state in a partial realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Obs {
    Active,
    Inactive,
    Unknown,
}

/// Partial observation vector: each node is Active, Inactive, or Unknown.
/// supp is the set of observed (non-Unknown) nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Realization {
    known: NodeSet,
    active: NodeSet,
}

impl Realization {
    /// Everything unknown except the root, which is observed active.
    pub fn all_unknown(n: usize, root: NodeId) -> Self {
        let mut known = NodeSet::empty(n);
        known.insert(root);
        let active = known.clone();
        Realization { known, active }
    }

    /// No observations at all. Observation fragments (most-likely vectors)
    /// are built from this, so the root is not implicitly observed.
    pub fn empty(n: usize) -> Self {
        Realization {
            known: NodeSet::empty(n),
            active: NodeSet::empty(n),
        }
    }

    /// Records the state of `v`. Re-observing with the same state is a no-op;
    /// observations never contradict each other when they come from one
    /// hidden realization, so a flip is a caller bug.
    pub fn observe(&mut self, v: NodeId, active: bool) {
        if self.known.contains(v) {
            assert_eq!(
                self.active.contains(v),
                active,
                "contradictory observation of node {v}"
            );
            return;
        }
        self.known.insert(v);
        if active {
            self.active.insert(v);
        }
    }

    pub fn state(&self, v: NodeId) -> Obs {
        if !self.known.contains(v) {
            Obs::Unknown
        } else if self.active.contains(v) {
            Obs::Active
        } else {
            Obs::Inactive
        }
    }

    /// supp(phi): the observed nodes.
    pub fn supp(&self) -> &NodeSet {
        &self.known
    }

    /// The nodes observed active.
    pub fn observed_active(&self) -> &NodeSet {
        &self.active
    }
}

/// Finite scenario distribution: support vectors with probabilities k/M.
///
/// Construction merges duplicate support vectors and divides all numerators
/// and M by their gcd, so M is the minimal common denominator and every
/// stored scenario has positive probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScenarioSet {
    scenarios: Vec<FullRealization>,
    k: Vec<u64>,
    m: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl ScenarioSet {
    pub fn new(
        root: NodeId,
        scenarios: Vec<(FullRealization, u64)>,
        m: u64,
    ) -> Result<Self, ScenarioError> {
        if scenarios.is_empty() || m == 0 {
            return Err(ScenarioError::Empty);
        }
        for (i, (psi, k)) in scenarios.iter().enumerate() {
            if *k == 0 {
                return Err(ScenarioError::ZeroProbability(i));
            }
            if !psi.is_active(root) {
                return Err(ScenarioError::InactiveRoot(root, i));
            }
        }
        // Merge scenarios with identical support before reducing M: the
        // distribution is over distinct state vectors.
        let mut merged: Vec<(FullRealization, u64)> = Vec::with_capacity(scenarios.len());
        for (psi, k) in scenarios {
            match merged.iter_mut().find(|(q, _)| *q == psi) {
                Some((_, kq)) => *kq += k,
                None => merged.push((psi, k)),
            }
        }
        let total: u64 = merged.iter().map(|(_, k)| *k).sum();
        if total != m {
            return Err(ScenarioError::BadTotal { got: total, m });
        }
        let g = merged.iter().fold(m, |acc, (_, k)| gcd(acc, *k));
        let (scenarios, k): (Vec<_>, Vec<_>) =
            merged.into_iter().map(|(psi, kq)| (psi, kq / g)).unzip();
        Ok(ScenarioSet {
            scenarios,
            k,
            m: m / g,
        })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scenario(&self, i: usize) -> &FullRealization {
        &self.scenarios[i]
    }

    pub fn scenarios(&self) -> &[FullRealization] {
        &self.scenarios
    }

    /// Probability numerator of scenario i; the probability is k(i)/m().
    pub fn k(&self, i: usize) -> u64 {
        self.k[i]
    }

    pub fn numerators(&self) -> &[u64] {
        &self.k
    }

    /// Minimal common denominator M.
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn prob(&self, i: usize) -> BigRational {
        BigRational::new(BigInt::from(self.k[i]), BigInt::from(self.m))
    }

    /// delta = min positive scenario probability, as (numerator, M).
    pub fn delta(&self) -> (u64, u64) {
        (*self.k.iter().min().expect("nonempty"), self.m)
    }

    /// Whether psi agrees with phi on every observed node.
    pub fn extends(psi: &FullRealization, phi: &Realization) -> bool {
        // Mismatch on supp(phi) means a node observed active but inactive in
        // psi, or the reverse.
        let observed_active_in_psi = psi.active_set().intersection(phi.supp());
        observed_active_in_psi == *phi.observed_active()
    }

    /// Indices of the stored scenarios extending phi.
    pub fn consistent_set(&self, phi: &Realization) -> Vec<usize> {
        (0..self.scenarios.len())
            .filter(|&i| Self::extends(&self.scenarios[i], phi))
            .collect()
    }

    /// Total probability mass of scenarios extending phi.
    pub fn realization_prob(&self, phi: &Realization) -> BigRational {
        let num: u64 = self
            .consistent_set(phi)
            .into_iter()
            .map(|i| self.k[i])
            .sum();
        BigRational::new(BigInt::from(num), BigInt::from(self.m))
    }

    /// p(psi | phi) for a stored scenario. Errors if nothing is consistent
    /// with phi or psi is not one of the stored vectors.
    pub fn conditional_prob(
        &self,
        psi: &FullRealization,
        phi: &Realization,
    ) -> Result<BigRational, ScenarioError> {
        let consistent = self.consistent_set(phi);
        if consistent.is_empty() {
            return Err(ScenarioError::ZeroMassConditioning);
        }
        let i = self
            .scenarios
            .iter()
            .position(|q| q == psi)
            .ok_or(ScenarioError::UnknownRealization)?;
        let total: u64 = consistent.iter().map(|&j| self.k[j]).sum();
        let num = if consistent.contains(&i) { self.k[i] } else { 0 };
        Ok(BigRational::new(BigInt::from(num), BigInt::from(total)))
    }

    /// Conditional probability that v is active given phi.
    pub fn active_prob(&self, v: NodeId, phi: &Realization) -> Result<BigRational, ScenarioError> {
        let consistent = self.consistent_set(phi);
        if consistent.is_empty() {
            return Err(ScenarioError::ZeroMassConditioning);
        }
        let total: u64 = consistent.iter().map(|&j| self.k[j]).sum();
        let num: u64 = consistent
            .iter()
            .filter(|&&j| self.scenarios[j].is_active(v))
            .map(|&j| self.k[j])
            .sum();
        Ok(BigRational::new(BigInt::from(num), BigInt::from(total)))
    }
}

/// Whether v is active under psi and connected to the root within the active
/// subgraph G[A].
pub fn same_component_as_root(g: &Graph, psi: &FullRealization, v: NodeId) -> bool {
    if !psi.is_active(v) || !psi.is_active(g.root()) {
        return false;
    }
    if v == g.root() {
        return true;
    }
    g.component_of(psi.active_set(), g.root()).contains(v)
}
