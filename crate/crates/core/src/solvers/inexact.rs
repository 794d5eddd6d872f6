//! The inexact worthwhile-change iteration.
//!
//! At step k a proposal policy offers a candidate y, which is accepted when
//! f(x^k) − f(y) ≥ λ_k μ_k Γ(q(x^k, y)) − ε_k. Otherwise the agent stays put.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experience::History;
use crate::model::ProximalModel;
use crate::point::Point;
use crate::schedule::ProximalSchedule;
use crate::solvers::descent::InnerOptions;
use crate::solvers::prox::{exact_prox_step, local_prox_step, min_over_worthwhile, InnerSolver};
use crate::solvers::stopping::stopping_rule;
use crate::space::SearchSpace;
use crate::worthwhile::{TrapSampling, WorthwhileSpec};

/// Halvings tried by the step-based policies on continuous spaces.
const MAX_HALVINGS: usize = 30;

/// How a step looks for a candidate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProposalPolicy {
    /// Exact proximal step over the whole space.
    #[default]
    ExactInnerMin,
    /// Proximal step restricted to a Euclidean ball around the anchor.
    LocalInnerMin { radius: f64 },
    /// Minimizer of f over W_{λμ}(x^k). Finite grids only.
    MinOverWorthwhile,
    /// First of `budget` uniform draws that passes the acceptance test.
    RandomWorthwhileSample { budget: usize },
    /// First passing ±1 grid neighbour, or axis move of ±step (halved on failure)
    /// on boxes.
    FirstImprovingNeighbor { step: f64 },
    /// y = x − t∂f(x) with t = step, halved until the test passes; snapped to the
    /// nearest point on grids.
    GradientStepThenTest { step: f64 },
}

impl ProposalPolicy {
    pub fn validate(&self, space: &SearchSpace) -> Result<()> {
        match *self {
            ProposalPolicy::LocalInnerMin { radius } if !(radius > 0.0) => {
                Err(invalid("radius", "must be positive"))
            }
            ProposalPolicy::MinOverWorthwhile if !space.is_finite() => Err(Error::Unsupported(
                "min-over-worthwhile proposals need a finite grid".into(),
            )),
            ProposalPolicy::RandomWorthwhileSample { budget: 0 } => {
                Err(invalid("budget", "must be at least 1"))
            }
            ProposalPolicy::FirstImprovingNeighbor { step }
            | ProposalPolicy::GradientStepThenTest { step }
                if !(step > 0.0 && step.is_finite()) =>
            {
                Err(invalid("step", "must be positive and finite"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub anchor: Point,
    pub accepted: Point,
    pub f_before: f64,
    pub f_after: f64,
    /// q(anchor, accepted).
    pub step_cost: f64,
    pub lambda_k: f64,
    pub mu_k: f64,
    pub epsilon_k: f64,
    pub worthwhile: bool,
    pub inner_solver: InnerSolver,
    pub stop_rule_fired: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Stationary,
    StoppingRule,
    MaxSteps,
    TrapReached,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub initial: Point,
    pub steps: Vec<StepRecord>,
    #[serde(rename = "final")]
    pub final_point: Point,
    pub stop_reason: StopReason,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SolverResult {
    /// x⁰, x¹, …, one entry per step plus the start.
    pub fn iterates(&self) -> Vec<&Point> {
        std::iter::once(&self.initial)
            .chain(self.steps.iter().map(|s| &s.accepted))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopRuleOptions {
    /// Multiplier on the marginal-resistance bound.
    pub factor: f64,
    /// Halt the run when the rule fires. Exact proximal steps satisfy the rule at
    /// every step, so it is only recorded unless this is set.
    pub halt: bool,
}

impl Default for StopRuleOptions {
    fn default() -> Self {
        StopRuleOptions {
            factor: 1.0,
            halt: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// Consecutive stays before the run is declared stationary.
    pub patience: usize,
    pub seed: u64,
    pub inner: InnerOptions,
    pub stop_rule: StopRuleOptions,
    /// Sample budget of the trap probe on continuous spaces.
    pub trap_budget: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            patience: 3,
            seed: 0,
            inner: InnerOptions::default(),
            stop_rule: StopRuleOptions::default(),
            trap_budget: TrapSampling::default().budget,
        }
    }
}

/// The acceptance test f(x) − f(y) ≥ ξΓ(q(x, y)) − ε.
pub fn passes_inexact_test(
    model: &ProximalModel,
    xi: f64,
    epsilon: f64,
    x: &[f64],
    y: &[f64],
) -> bool {
    let fy = model.value(y);
    if fy == f64::INFINITY {
        return false;
    }
    let fx = model.value(x);
    if fx == f64::INFINITY {
        return true;
    }
    let r = model.resistance_cost(x, y);
    let threshold = if r == 0.0 { -epsilon } else { xi * r - epsilon };
    fx - fy >= threshold
}

/// Runs the iteration with λ_k from the schedule.
pub fn inexact_prox_run(
    model: &ProximalModel,
    schedule: &ProximalSchedule,
    x0: &Point,
    space: &SearchSpace,
    proposal: &ProposalPolicy,
    opts: &RunOptions,
) -> Result<SolverResult> {
    run_with_lambda(model, schedule, x0, space, proposal, opts, &mut |k, _| {
        schedule.lambda_at(k)
    })
}

struct Proposal {
    point: Point,
    inner: InnerSolver,
    converged: bool,
}

struct StepContext<'a> {
    model: &'a ProximalModel,
    space: &'a SearchSpace,
    opts: &'a RunOptions,
    lambda: f64,
    xi: f64,
    epsilon: f64,
}

impl StepContext<'_> {
    fn passes(&self, x: &Point, y: &Point) -> bool {
        y != x && passes_inexact_test(self.model, self.xi, self.epsilon, x, y)
    }

    fn propose(
        &self,
        policy: &ProposalPolicy,
        x: &Point,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<Proposal>> {
        let found = |point: Point, inner: InnerSolver| {
            Some(Proposal {
                point,
                inner,
                converged: true,
            })
        };
        Ok(match *policy {
            ProposalPolicy::ExactInnerMin => {
                let s = exact_prox_step(self.model, self.lambda, x, self.space, &self.opts.inner)?;
                Some(Proposal {
                    point: s.point,
                    inner: s.inner,
                    converged: s.converged,
                })
            }
            ProposalPolicy::LocalInnerMin { radius } => {
                let s = local_prox_step(
                    self.model,
                    self.lambda,
                    x,
                    radius,
                    self.space,
                    &self.opts.inner,
                )?;
                Some(Proposal {
                    point: s.point,
                    inner: s.inner,
                    converged: s.converged,
                })
            }
            ProposalPolicy::MinOverWorthwhile => {
                let (p, _) = min_over_worthwhile(self.model, self.xi, x, self.space)?;
                found(p, InnerSolver::GridOracle)
            }
            ProposalPolicy::RandomWorthwhileSample { budget } => {
                let mut hit = None;
                for _ in 0..budget {
                    let y = match self.space {
                        SearchSpace::Grid(g) => g.point(rng.gen_range(0..g.len())),
                        SearchSpace::Box(b) => {
                            let u: Vec<f64> = (0..b.dim()).map(|_| rng.gen::<f64>()).collect();
                            b.from_unit(&u)
                        }
                    };
                    if self.passes(x, &y) {
                        hit = Some(y);
                        break;
                    }
                }
                hit.and_then(|y| found(y, InnerSolver::WorthwhileSample))
            }
            ProposalPolicy::FirstImprovingNeighbor { step } => {
                let hit = match self.space {
                    SearchSpace::Grid(g) => {
                        let i = g.index_of(x).expect("iterates stay on the grid");
                        g.neighbours(i)
                            .into_iter()
                            .map(|j| g.point(j))
                            .find(|y| self.passes(x, y))
                    }
                    SearchSpace::Box(b) => {
                        let mut s = step;
                        let mut hit = None;
                        'outer: for _ in 0..=MAX_HALVINGS {
                            for d in 0..x.dim() {
                                for sign in [-1.0, 1.0] {
                                    let mut y = x.clone().into_inner();
                                    y[d] += sign * s;
                                    b.project(&mut y);
                                    let y = Point::new(y).expect("finite");
                                    if self.passes(x, &y) {
                                        hit = Some(y);
                                        break 'outer;
                                    }
                                }
                            }
                            s *= 0.5;
                        }
                        hit
                    }
                };
                hit.and_then(|y| found(y, InnerSolver::Neighbor))
            }
            ProposalPolicy::GradientStepThenTest { step } => {
                let Some(g) = self.model.objective.subgradient(x) else {
                    return Ok(None);
                };
                let mut t = step;
                let mut hit = None;
                for _ in 0..=MAX_HALVINGS {
                    let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - t * b).collect();
                    let y = match self.space {
                        SearchSpace::Grid(grid) => grid.point(grid.nearest_index(&y)),
                        SearchSpace::Box(b) => {
                            b.project(&mut y);
                            match Point::new(y) {
                                Ok(p) => p,
                                Err(_) => break,
                            }
                        }
                    };
                    if self.passes(x, &y) {
                        hit = Some(y);
                        break;
                    }
                    t *= 0.5;
                }
                hit.and_then(|y| found(y, InnerSolver::GradientStep))
            }
        })
    }
}

/// Shared engine. `lambda_of(k, history)` supplies the raw λ_k given the realized
/// history x⁰…x^k; the schedule's floor is applied on top.
pub(crate) fn run_with_lambda(
    model: &ProximalModel,
    schedule: &ProximalSchedule,
    x0: &Point,
    space: &SearchSpace,
    proposal: &ProposalPolicy,
    opts: &RunOptions,
    lambda_of: &mut dyn FnMut(usize, &History<'_>) -> f64,
) -> Result<SolverResult> {
    schedule.validate()?;
    proposal.validate(space)?;
    let x0 = space.locate(x0)?;
    let f0 = model.value(&x0);
    if !f0.is_finite() {
        return Err(invalid("x0", "f(x0) must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut points = vec![x0.clone()];
    let mut values = vec![f0];
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut stall = 0;
    let mut cumulative = 0.0;
    let mut accepted_moves = 0usize;
    let mut inner_nonconverged = 0usize;
    let mut last_fired = false;
    let mut stop_reason = StopReason::MaxSteps;

    for k in 0..schedule.max_steps {
        let x = points[k].clone();
        let fx = values[k];
        let raw = lambda_of(
            k,
            &History {
                points: &points,
                values: &values,
            },
        );
        let lambda = schedule.apply_floor(raw);
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("λ_{k} = {lambda} is not positive and finite"),
            ));
        }
        let mu = schedule.mu_at(k);
        let epsilon = schedule.epsilon_at(k);
        let ctx = StepContext {
            model,
            space,
            opts,
            lambda,
            xi: lambda * mu,
            epsilon,
        };
        let stay = |worthwhile: bool, inner: InnerSolver| StepRecord {
            k,
            anchor: x.clone(),
            accepted: x.clone(),
            f_before: fx,
            f_after: fx,
            step_cost: 0.0,
            lambda_k: lambda,
            mu_k: mu,
            epsilon_k: epsilon,
            worthwhile,
            inner_solver: inner,
            stop_rule_fired: false,
        };

        let check_trap = space.is_finite() || last_fired;
        if check_trap {
            let spec = WorthwhileSpec::new(model.clone(), ctx.xi)?;
            let report = spec.detect_trap_with(
                &x,
                space,
                TrapSampling {
                    budget: opts.trap_budget,
                },
            );
            if report.is_trap {
                steps.push(stay(false, InnerSolver::None));
                points.push(x);
                values.push(fx);
                stop_reason = StopReason::TrapReached;
                break;
            }
        }

        let candidate = ctx.propose(proposal, &x, &mut rng)?;
        let mut moved = None;
        if let Some(c) = candidate {
            if !c.converged {
                inner_nonconverged += 1;
            }
            if ctx.passes(&x, &c.point) {
                moved = Some(c);
            }
        }
        match moved {
            Some(c) => {
                stall = 0;
                accepted_moves += 1;
                let y = c.point;
                let fy = model.value(&y);
                let cost = model.cost(&x, &y);
                cumulative += cost;
                let fired = stopping_rule(model, lambda, &x, &y, opts.stop_rule.factor).fires;
                last_fired = fired;
                steps.push(StepRecord {
                    k,
                    anchor: x.clone(),
                    accepted: y.clone(),
                    f_before: fx,
                    f_after: fy,
                    step_cost: cost,
                    lambda_k: lambda,
                    mu_k: mu,
                    epsilon_k: epsilon,
                    worthwhile: true,
                    inner_solver: c.inner,
                    stop_rule_fired: fired,
                });
                points.push(y);
                values.push(fy);
                if fired && opts.stop_rule.halt {
                    stop_reason = StopReason::StoppingRule;
                    break;
                }
            }
            None => {
                let inner = match proposal {
                    ProposalPolicy::ExactInnerMin | ProposalPolicy::LocalInnerMin { .. }
                        if space.is_finite() =>
                    {
                        InnerSolver::GridOracle
                    }
                    ProposalPolicy::ExactInnerMin | ProposalPolicy::LocalInnerMin { .. } => {
                        InnerSolver::ProjectedGradient
                    }
                    _ => InnerSolver::None,
                };
                steps.push(stay(false, inner));
                points.push(x);
                values.push(fx);
                stall += 1;
                // a stay means no worthwhile candidate was found, so probe for a trap next step
                last_fired = true;
                if stall >= opts.patience {
                    stop_reason = StopReason::Stationary;
                    break;
                }
            }
        }
    }

    let final_point = points.last().cloned().expect("at least x0");
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("accepted_moves".to_string(), accepted_moves as f64);
    diagnostics.insert("cumulative_step_cost".to_string(), cumulative);
    diagnostics.insert(
        "final_value".to_string(),
        *values.last().expect("at least f(x0)"),
    );
    diagnostics.insert("inner_nonconverged".to_string(), inner_nonconverged as f64);
    diagnostics.insert("stays".to_string(), (steps.len() - accepted_moves) as f64);
    Ok(SolverResult {
        initial: x0,
        steps,
        final_point,
        stop_reason,
        diagnostics,
    })
}
