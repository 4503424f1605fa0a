//! Adaptive construction of connected dominating sets on graphs whose nodes
//! fail stochastically.
//!
//! A hidden full realization drawn from a finite scenario set decides which
//! nodes are active. A policy grows a chosen set from the root, learning node
//! states through a feedback model (choosing a node reveals either its whole
//! neighborhood or just the node itself), until the active chosen nodes form
//! a connected dominating set of the root's active component.
//!
//! The crate provides:
//! - the submodular exploitation/exploration objectives and their integer
//!   polymatroid forms that drive the round-based adaptive policy,
//! - exact branch-and-bound solvers for node-weighted polymatroid Steiner
//!   trees and minimum-weight CDS, used as the policy's subroutine,
//! - greedy, CDS-recomputation, and coverage-ratio baselines,
//! - an expectimax oracle computing the optimal adaptive value on small
//!   instances, and
//! - instance generators (random geometric and Erdos-Renyi families plus
//!   fixed adversarial fixtures) with an exact-rational file format.
//!
//! All probability and weight arithmetic is exact: scenario masses are integer
//! numerators over a common denominator and weights are rationals, so policy
//! branching on strict inequalities is reproducible bit for bit.

pub mod graph;
pub mod instances;
pub mod oracle;
pub mod policies;
pub mod polymatroid;
pub mod scenario;
pub mod solvers;

pub use graph::{Graph, GraphError, NodeId, NodeSet};
pub use instances::{
    fixture_cds_bad, fixture_greedy_bad, fixture_tri_branch, gen_bidirectional_disk,
    gen_erdos_renyi, gen_unit_disk, generate, Family, GenerateError, GeneratorConfig,
};
pub use oracle::{
    check_partition_inequality, optimal_wavg, optimal_wavg_with_guard, partition_sides,
    satisfies_approx_bound, OracleError, OracleGuard,
};
pub use policies::{
    evaluate_policy_wavg, prune, rounds_within_bound, run_borgs_local, run_cds_based, run_greedy,
    run_polymatroid_policy, validate_trace, Environment, PolicyError, PolicyTrace,
};
pub use polymatroid::{
    f_plr, f_plt, most_likely_vector, residual_hypothesis, to_integer_polymatroid, FeedbackModel,
    IntegerPolymatroid, PltFn, PlrFn, PolyKind, PolymatroidError, RoundContext, SubmodularFn,
};
pub use scenario::{FullRealization, Obs, Realization, ScenarioError, ScenarioSet};
pub use solvers::{
    reduce_node_to_edge_weights, solve_edge_weighted_steiner, solve_exhaustive,
    solve_min_weight_cds, solve_polymatroid_steiner, DominationObjective, IntegerObjective,
    SolverError, SolverReport, SteinerInstance, TerminalObjective,
};
