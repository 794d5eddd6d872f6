//! Proximal problems over grids and boxes, and the inexact worthwhile-change run.

mod descent;
pub mod grid;
pub mod inexact;
pub mod probes;
pub mod prox;
pub mod stopping;

pub use descent::InnerOptions;
pub use grid::{constrained_prox_argmin_set, prox_argmin_set, solve_global, worthwhile_min_set};
pub use inexact::{
    inexact_prox_run, passes_inexact_test, ProposalPolicy, RunOptions, SolverResult, StepRecord,
    StopReason, StopRuleOptions,
};
pub use probes::{
    kl_inequality_probe, nonexpansiveness_probe, ProbeReport, EXPANSION_TOLERANCE,
    KL_NUMERIC_TOLERANCE,
};
pub use prox::{
    exact_prox_step, exact_prox_step_constrained, local_prox_step, min_over_worthwhile,
    InnerSolver, ProxSolution,
};
pub use stopping::{stopping_rule, stopping_rule_fires, StopRuleCheck};
