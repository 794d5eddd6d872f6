//! Executes the runs of a configuration and writes their outputs.
//!
//! Runs are independent: each gets seed `config.seed + index`, writes only its own
//! files, and returns a JSON summary entry. The coordinator writes `summary.json`
//! (and `probes.json` when probes ran) after every run has finished.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use vrprox::dynamics::reference_minimum;
use vrprox::testbed::{
    check_prox_equivalence, check_sandwich, check_trap_monotonicity, monotonicity_lambdas,
    random_grid_instance, tally, GridInstance,
};
use vrprox::{
    check_quasi_distance_axioms, constrained_prox_argmin_set, exact_prox_step, inexact_prox_run,
    is_worthwhile, kl_inequality_probe, lambda_sensitivity_sweep, local_prox_step,
    min_over_worthwhile, nonexpansiveness_probe, prox_argmin_set, run_habit_experiment,
    solve_global, trap_stability_sweep, worthwhile_min_set, HabitDiagnostics, InnerOptions,
    InnerSolver, Point, ProbeReport, ProximalModel, SearchSpace, SolverResult, StepRecord,
    StopReason,
};

use crate::config::{
    check_applicable, kl_minimizer, Check, ExperimentConfig, Mode, RunConfig, DEFAULT_INSTANCES,
    DEFAULT_SAMPLES,
};
use crate::error::CliError;
use crate::output::{emit_plot_data, write_json, write_trajectory};

pub const DEFAULT_CHECKS: [Check; 4] = [
    Check::Lemma1,
    Check::Lemma2,
    Check::TrapMonotonicity,
    Check::Axioms,
];

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
}

/// What a finished invocation produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub output_dir: PathBuf,
    pub failed_runs: Vec<String>,
    pub failed_checks: Vec<String>,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.failed_runs.is_empty() && self.failed_checks.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.success() {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct CheckOutcome {
    check: &'static str,
    line: String,
    passed: bool,
    detail: Value,
}

struct RunOutput {
    summary: Value,
    checks: Option<Vec<CheckOutcome>>,
}

/// Executes every run of `cfg` (probe runs only when `probes_only`).
pub fn execute(
    mut cfg: ExperimentConfig,
    overrides: &Overrides,
    probes_only: bool,
) -> Result<Outcome, CliError> {
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(d) = &overrides.output_dir {
        cfg.output_dir = d.clone();
    }
    if probes_only {
        cfg.runs.retain(|r| r.mode == Mode::Probes);
        if cfg.runs.is_empty() {
            cfg.runs.push(RunConfig::probes("probes"));
        }
    }
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let space = cfg.build_space()?;
    let model = cfg.build_model(space.dim())?;
    let ctx = Context {
        cfg: &cfg,
        space: &space,
        model: &model,
        out: &out,
    };
    let work = || -> Vec<Result<RunOutput, CliError>> {
        cfg.runs
            .par_iter()
            .enumerate()
            .map(|(i, run)| ctx.execute_run(i, run))
            .collect()
    };
    let results = match overrides.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?
            .install(work),
        None => work(),
    };

    let mut failed_runs = Vec::new();
    let mut failed_checks = Vec::new();
    let mut run_summaries = Vec::new();
    let mut probe_reports = Vec::new();
    for (run, res) in cfg.runs.iter().zip(results) {
        match res {
            Ok(o) => {
                if let Some(checks) = o.checks {
                    for c in checks.iter().filter(|c| !c.passed) {
                        failed_checks.push(format!("{}: {}", run.name, c.line));
                    }
                    probe_reports.push(json!({
                        "run": run.name,
                        "lines": checks.iter().map(|c| c.line.clone()).collect::<Vec<_>>(),
                        "checks": checks,
                    }));
                }
                run_summaries.push(o.summary);
            }
            Err(e) => {
                failed_runs.push(run.name.clone());
                run_summaries.push(json!({
                    "name": run.name,
                    "mode": run.mode.name(),
                    "status": "error",
                    "error": e.to_string(),
                }));
            }
        }
    }
    if !probe_reports.is_empty() {
        write_json(
            &json!({
                "all_passed": failed_checks.is_empty(),
                "runs": probe_reports,
            }),
            &out.join("probes.json"),
        )?;
    }
    write_json(
        &json!({
            "seed": cfg.seed,
            "objective": model.objective.name(),
            "resistance": model.resistance.name(),
            "all_passed": failed_runs.is_empty() && failed_checks.is_empty(),
            "runs": run_summaries,
        }),
        &out.join("summary.json"),
    )?;
    Ok(Outcome {
        output_dir: out,
        failed_runs,
        failed_checks,
    })
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    space: &'a SearchSpace,
    model: &'a ProximalModel,
    out: &'a Path,
}

fn run_err(run: &RunConfig) -> impl Fn(vrprox::Error) -> CliError + '_ {
    move |e| CliError::Run {
        run: run.name.clone(),
        message: e.to_string(),
    }
}

/// Wraps a single proximal step as a one-step result.
fn one_step(
    model: &ProximalModel,
    anchor: Point,
    accepted: Point,
    lambda: f64,
    inner: InnerSolver,
) -> SolverResult {
    let f_before = model.value(&anchor);
    let f_after = model.value(&accepted);
    let step = StepRecord {
        k: 0,
        step_cost: model.cost(&anchor, &accepted),
        worthwhile: is_worthwhile(model, lambda, &anchor, &accepted),
        anchor: anchor.clone(),
        accepted: accepted.clone(),
        f_before,
        f_after,
        lambda_k: lambda,
        mu_k: 1.0,
        epsilon_k: 0.0,
        inner_solver: inner,
        stop_rule_fired: false,
    };
    let diagnostics = BTreeMap::from([
        ("cumulative_step_cost".to_string(), step.step_cost),
        ("final_value".to_string(), f_after),
    ]);
    SolverResult {
        initial: anchor,
        steps: vec![step],
        final_point: accepted,
        stop_reason: StopReason::MaxSteps,
        diagnostics,
    }
}

impl Context<'_> {
    fn execute_run(&self, index: usize, run: &RunConfig) -> Result<RunOutput, CliError> {
        let seed = self.cfg.seed.wrapping_add(index as u64);
        let mut opts = self.cfg.run_options(run);
        opts.seed = seed;
        let schedule = self.cfg.run_schedule(run);
        let lambda = run.lambda.unwrap_or_else(|| schedule.lambda_at(0));
        let x0 = match &run.x0 {
            Some(v) => Some(
                self.space
                    .locate(&Point::new(v.clone()).map_err(run_err(run))?)
                    .map_err(run_err(run))?,
            ),
            None => None,
        };
        let m = self.model;
        let s = self.space;
        let e = run_err(run);
        let mut checks = None;
        let (trajectory, body) = match run.mode {
            Mode::Global => {
                let (p, v) = solve_global(&m.objective, s).map_err(&e)?;
                (None, json!({ "minimizer": p, "value": v }))
            }
            Mode::ExactProx => {
                let x = x0.expect("validated");
                let sol = exact_prox_step(m, lambda, &x, s, &opts.inner).map_err(&e)?;
                let r = one_step(m, x, sol.point.clone(), lambda, sol.inner);
                let body = json!({
                    "lambda": lambda,
                    "point": sol.point,
                    "payoff": sol.payoff,
                    "converged": sol.converged,
                });
                (Some((r, None)), body)
            }
            Mode::LocalProx => {
                let x = x0.expect("validated");
                let radius = run.radius.expect("validated");
                let sol = local_prox_step(m, lambda, &x, radius, s, &opts.inner).map_err(&e)?;
                let r = one_step(m, x, sol.point.clone(), lambda, sol.inner);
                let body = json!({
                    "lambda": lambda,
                    "radius": radius,
                    "point": sol.point,
                    "payoff": sol.payoff,
                    "converged": sol.converged,
                });
                (Some((r, None)), body)
            }
            Mode::MinOverW => {
                let x = x0.expect("validated");
                let (p, v) = min_over_worthwhile(m, lambda, &x, s).map_err(&e)?;
                let r = one_step(m, x, p.clone(), lambda, InnerSolver::GridOracle);
                (
                    Some((r, None)),
                    json!({ "lambda": lambda, "point": p, "value": v }),
                )
            }
            Mode::InexactProx => {
                let x = x0.expect("validated");
                let policy = run.proposal.clone().unwrap_or_default();
                let r = inexact_prox_run(m, schedule, &x, s, &policy, &opts).map_err(&e)?;
                let d = HabitDiagnostics::from_result(&r, reference_minimum(m, s));
                let body = trajectory_body(&r, &d);
                (Some((r, Some(d))), body)
            }
            Mode::Habit => {
                let x = x0.expect("validated");
                let policy = run.proposal.clone().unwrap_or_default();
                let exp = run.experience.as_ref().expect("validated");
                let (r, d) =
                    run_habit_experiment(m, exp, schedule, &x, s, &policy, &opts).map_err(&e)?;
                let body = trajectory_body(&r, &d);
                (Some((r, Some(d))), body)
            }
            Mode::TrapSweep => {
                let x = x0.expect("validated");
                let lambdas = run.lambdas.as_ref().expect("validated");
                let reports = trap_stability_sweep(m, &x, s, lambdas).map_err(&e)?;
                (None, json!({ "x0": x, "reports": reports }))
            }
            Mode::LambdaSweep => {
                let x = x0.expect("validated");
                let lambdas = run.lambdas.as_ref().expect("validated");
                let policy = run.proposal.clone().unwrap_or_default();
                let rows = lambda_sensitivity_sweep(m, schedule, &x, s, lambdas, &policy, &opts)
                    .map_err(&e)?;
                (None, json!({ "x0": x, "rows": rows }))
            }
            Mode::Probes => {
                let outcomes = self.probes(run, seed, lambda, &opts.inner)?;
                let lines: Vec<String> = outcomes.iter().map(|c| c.line.clone()).collect();
                checks = Some(outcomes);
                (None, json!({ "lines": lines }))
            }
        };
        if let Some((r, d)) = &trajectory {
            let d = d
                .clone()
                .unwrap_or_else(|| HabitDiagnostics::from_result(r, reference_minimum(m, s)));
            write_trajectory(r, &self.out.join(format!("{}.trajectory.jsonl", run.name)))?;
            emit_plot_data(r, &d, &self.out.join(format!("{}.plot.csv", run.name)))?;
        }
        Ok(RunOutput {
            summary: json!({
                "name": run.name,
                "mode": run.mode.name(),
                "seed": seed,
                "status": "ok",
                "result": body,
            }),
            checks,
        })
    }

    fn probes(
        &self,
        run: &RunConfig,
        seed: u64,
        lambda: f64,
        inner: &InnerOptions,
    ) -> Result<Vec<CheckOutcome>, CliError> {
        let instances = run.instances.unwrap_or(DEFAULT_INSTANCES);
        let samples = run.samples.unwrap_or(DEFAULT_SAMPLES);
        let checks = run
            .checks
            .clone()
            .unwrap_or_else(|| DEFAULT_CHECKS.to_vec());
        let e = run_err(run);
        let mut out = Vec::new();
        for check in checks {
            let outcome = match check {
                Check::Lemma1 => {
                    tally_outcome(check, instances, seed, check_prox_equivalence, |i| {
                        let idx = |v: Vec<usize>| -> Vec<Point> {
                            v.into_iter().map(|k| i.grid.point(k)).collect()
                        };
                        json!({
                            "prox_argmin": idx(prox_argmin_set(&i.model, i.lambda, &i.anchor, &i.grid)),
                            "constrained_argmin": idx(constrained_prox_argmin_set(&i.model, i.lambda, &i.anchor, &i.grid)),
                        })
                    })
                }
                Check::Lemma2 => tally_outcome(check, instances, seed, check_sandwich, |i| {
                    let g = &i.grid;
                    let x5 = g.point(worthwhile_min_set(&i.model, i.lambda, &i.anchor, g)[0]);
                    let x2 = g.point(prox_argmin_set(&i.model, i.lambda, &i.anchor, g)[0]);
                    json!({
                        "inf_f": g.points().map(|p| i.model.value(&p)).fold(f64::INFINITY, f64::min),
                        "x5": x5, "f_x5": i.model.value(&x5),
                        "x2": x2, "f_x2": i.model.value(&x2),
                    })
                }),
                Check::TrapMonotonicity => {
                    tally_outcome(check, instances, seed, check_trap_monotonicity, |i| {
                        match trap_stability_sweep(
                            &i.model,
                            &i.anchor,
                            &i.space(),
                            &monotonicity_lambdas(),
                        ) {
                            Ok(r) => json!({
                                "is_trap": r.iter().map(|t| (t.lambda, t.is_trap)).collect::<Vec<_>>()
                            }),
                            Err(err) => json!({ "error": err.to_string() }),
                        }
                    })
                }
                Check::Axioms => {
                    let r = check_quasi_distance_axioms(
                        &self.model.distance,
                        self.space,
                        samples,
                        seed,
                    )
                    .map_err(&e)?;
                    let parts = [
                        &r.finiteness,
                        &r.nonnegativity,
                        &r.identity,
                        &r.separation,
                        &r.triangle,
                    ];
                    let ok = parts.iter().filter(|c| c.passed).count();
                    CheckOutcome {
                        check: check.name(),
                        line: format!("axioms: {ok}/{} pass", parts.len()),
                        passed: r.all_passed(),
                        detail: serde_json::to_value(&r).expect("serializable"),
                    }
                }
                Check::Nonexpansiveness => {
                    check_applicable(check, self.cfg, run, self.space, self.model).map_err(
                        |m| CliError::Run {
                            run: run.name.clone(),
                            message: m,
                        },
                    )?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let pairs: Vec<(Point, Point)> = (0..samples)
                        .map(|_| (self.sample(&mut rng), self.sample(&mut rng)))
                        .collect();
                    let r = nonexpansiveness_probe(self.model, lambda, &pairs, self.space, inner)
                        .map_err(&e)?;
                    probe_outcome(check, &r)
                }
                Check::Kl => {
                    check_applicable(check, self.cfg, run, self.space, self.model).map_err(
                        |m| CliError::Run {
                            run: run.name.clone(),
                            message: m,
                        },
                    )?;
                    let minimizer =
                        Point::new(kl_minimizer(self.cfg, run, self.space).expect("checked"))
                            .map_err(&e)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let pts: Vec<Point> = (0..samples).map(|_| self.sample(&mut rng)).collect();
                    let r = kl_inequality_probe(
                        &self.model.objective,
                        &minimizer,
                        &pts,
                        run.kl_c.unwrap_or(1.0),
                    )
                    .map_err(&e)?;
                    probe_outcome(check, &r)
                }
            };
            out.push(outcome);
        }
        Ok(out)
    }

    /// Uniform point in the bounding box of the space.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Point {
        let s = &self.cfg.space;
        let v = s
            .lower
            .iter()
            .zip(&s.upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
            .collect();
        Point::new(v).expect("finite bounds")
    }
}

fn trajectory_body(r: &SolverResult, d: &HabitDiagnostics) -> Value {
    json!({
        "initial": r.initial,
        "final": r.final_point,
        "stop_reason": r.stop_reason,
        "steps": r.steps.len(),
        "diagnostics": r.diagnostics,
        "habit": d,
    })
}

fn tally_outcome(
    check: Check,
    instances: usize,
    seed: u64,
    test: fn(&GridInstance) -> bool,
    witness: impl Fn(&GridInstance) -> Value,
) -> CheckOutcome {
    let t = tally(check.name(), instances, seed, test);
    let detail = match t.failing_seeds.first() {
        Some(&s) => {
            let inst = random_grid_instance(s);
            json!({
                "passed": t.passed,
                "total": t.total,
                "failing_seeds": t.failing_seeds,
                "witness": {
                    "seed": s,
                    "lambda": inst.lambda,
                    "anchor": inst.anchor,
                    "grid_points": inst.grid.len(),
                    "values": witness(&inst),
                },
            })
        }
        None => json!({ "passed": t.passed, "total": t.total, "failing_seeds": [] }),
    };
    CheckOutcome {
        check: check.name(),
        line: t.summary_line(),
        passed: t.all_passed(),
        detail,
    }
}

fn probe_outcome(check: Check, r: &ProbeReport) -> CheckOutcome {
    CheckOutcome {
        check: check.name(),
        line: format!("{}: {}/{} pass", check.name(), r.passed, r.checked),
        passed: r.pass(),
        detail: serde_json::to_value(r).expect("serializable"),
    }
}
