//! Habit-formation runs: experience-weighted iterations, trajectory diagnostics and
//! λ-sensitivity sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::experience::ExperienceModel;
use crate::model::ProximalModel;
use crate::point::Point;
use crate::schedule::{ProximalSchedule, Sequence};
use crate::solvers::grid::solve_global;
use crate::solvers::inexact::{
    inexact_prox_run, run_with_lambda, ProposalPolicy, RunOptions, SolverResult, StopReason,
};
use crate::space::SearchSpace;
use crate::worthwhile::{TrapSampling, WorthwhileSpec};

/// Tolerances reported by `steps_to_tolerance`.
pub const TOLERANCES: [f64; 3] = [1e-2, 1e-4, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToleranceHit {
    pub tolerance: f64,
    /// First k with f(x^k) − f* ≤ tolerance.
    pub step: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HabitDiagnostics {
    /// q(x^k, x^{k+1}) per step.
    pub step_costs: Vec<f64>,
    /// Running sum of `step_costs`.
    pub cumulative_cost: Vec<f64>,
    /// f(x⁰), f(x¹), …
    pub f_series: Vec<f64>,
    pub trap_hit_step: Option<usize>,
    pub f_star: Option<f64>,
    pub steps_to_tolerance: Vec<ToleranceHit>,
    pub lambda_series: Vec<f64>,
}

impl HabitDiagnostics {
    pub fn from_result(result: &SolverResult, f_star: Option<f64>) -> Self {
        let step_costs: Vec<f64> = result.steps.iter().map(|s| s.step_cost).collect();
        let cumulative_cost = step_costs
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c;
                Some(*acc)
            })
            .collect();
        let f0 = result.steps.first().map(|s| s.f_before).unwrap_or(f64::NAN);
        let f_series: Vec<f64> = std::iter::once(f0)
            .chain(result.steps.iter().map(|s| s.f_after))
            .collect();
        let trap_hit_step = (result.stop_reason == StopReason::TrapReached)
            .then(|| result.steps.last().map(|s| s.k))
            .flatten();
        let steps_to_tolerance = TOLERANCES
            .iter()
            .map(|&tolerance| ToleranceHit {
                tolerance,
                step: f_star.and_then(|fs| f_series.iter().position(|f| f - fs <= tolerance)),
            })
            .collect();
        HabitDiagnostics {
            step_costs,
            cumulative_cost,
            f_series,
            trap_hit_step,
            f_star,
            steps_to_tolerance,
            lambda_series: result.steps.iter().map(|s| s.lambda_k).collect(),
        }
    }
}

/// f* from the grid oracle, or the objective's declared lower bound on boxes.
pub fn reference_minimum(model: &ProximalModel, space: &SearchSpace) -> Option<f64> {
    match space {
        SearchSpace::Grid(_) => solve_global(&model.objective, space).ok().map(|(_, v)| v),
        SearchSpace::Box(_) => model.objective.flags().lower_bound,
    }
}

/// Runs the iteration with λ_k = η_k / v(E^k) on the realized history.
///
/// Debug builds replay the realized λ sequence through a plain run and assert the
/// iterates coincide.
pub fn run_habit_experiment(
    model: &ProximalModel,
    experience: &ExperienceModel,
    schedule: &ProximalSchedule,
    x0: &Point,
    space: &SearchSpace,
    proposal: &ProposalPolicy,
    opts: &RunOptions,
) -> Result<(SolverResult, HabitDiagnostics)> {
    experience.validate()?;
    let result = run_with_lambda(model, schedule, x0, space, proposal, opts, &mut |k, h| {
        experience.proximal_ratio(k, h)
    })?;
    if cfg!(debug_assertions) && !result.steps.is_empty() {
        let replay = ProximalSchedule {
            lambda: Sequence::List(result.steps.iter().map(|s| s.lambda_k).collect()),
            ..schedule.clone()
        };
        let plain = inexact_prox_run(model, &replay, x0, space, proposal, opts)?;
        debug_assert_eq!(plain.iterates(), result.iterates());
    }
    let diagnostics = HabitDiagnostics::from_result(&result, reference_minimum(model, space));
    Ok((result, diagnostics))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub final_point: Point,
    pub final_value: f64,
    /// W_λ(x0) = {x0}.
    pub x0_is_trap: bool,
    /// The trap verdict came from sampling (continuous space).
    pub trap_probabilistic: bool,
    pub stop_reason: StopReason,
    pub steps: usize,
    pub steps_to_tolerance: Vec<ToleranceHit>,
    pub cumulative_cost: f64,
}

/// One independent run per λ (constant schedule), executed in parallel; rows keep
/// the order of `lambdas`.
pub fn lambda_sensitivity_sweep(
    model: &ProximalModel,
    schedule: &ProximalSchedule,
    x0: &Point,
    space: &SearchSpace,
    lambdas: &[f64],
    proposal: &ProposalPolicy,
    opts: &RunOptions,
) -> Result<Vec<SweepRow>> {
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(invalid("lambdas", "must be positive and finite"));
    }
    let f_star = reference_minimum(model, space);
    lambdas
        .par_iter()
        .map(|&lambda| {
            let sched = ProximalSchedule {
                lambda: Sequence::Constant(lambda),
                ..schedule.clone()
            };
            let anchor = space.locate(x0)?;
            let trap = WorthwhileSpec::new(model.clone(), lambda)?.detect_trap_with(
                &anchor,
                space,
                TrapSampling {
                    budget: opts.trap_budget,
                },
            );
            let result = inexact_prox_run(model, &sched, x0, space, proposal, opts)?;
            let diag = HabitDiagnostics::from_result(&result, f_star);
            Ok(SweepRow {
                lambda,
                final_value: model.value(&result.final_point),
                final_point: result.final_point.clone(),
                x0_is_trap: trap.is_trap,
                trap_probabilistic: trap.probabilistic,
                stop_reason: result.stop_reason,
                steps: result.steps.len(),
                steps_to_tolerance: diag.steps_to_tolerance,
                cumulative_cost: diag.cumulative_cost.last().copied().unwrap_or(0.0),
            })
        })
        .collect()
}
