//! Experiment configuration (TOML) and its validation.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vrprox::{
    ExperienceModel, Objective, ObjectiveFlags, Point, ProposalPolicy, ProximalModel,
    ProximalSchedule, QuasiDistance, Resistance, RunOptions, SearchSpace,
};

use crate::error::CliError;
use crate::expr::Expr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub objective: ObjectiveConfig,
    pub quasi_distance: QuasiConfig,
    pub resistance: ResistanceConfig,
    #[serde(default)]
    pub schedule: ProximalSchedule,
    pub space: SpaceConfig,
    #[serde(default)]
    pub options: RunOptions,
    pub runs: Vec<RunConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// Σ wᵢ(xᵢ − aᵢ)², unit weights by default.
    Quadratic {
        center: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Absolute {
        center: Vec<f64>,
    },
    Rosenbrock {
        #[serde(default = "one")]
        a: f64,
        #[serde(default = "hundred")]
        b: f64,
    },
    DoubleWell,
    Linear {
        coefficients: Vec<f64>,
    },
    Expr {
        expr: String,
        #[serde(default)]
        convex: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower_bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kl_exponent: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn hundred() -> f64 {
    100.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuasiConfig {
    Euclidean,
    Manhattan,
    Asymmetric {
        up: f64,
        down: f64,
    },
    /// max(‖x − y‖ − offset, 0): violates separation, for negative controls.
    Shifted {
        offset: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ResistanceConfig {
    Linear,
    Quadratic,
    Power { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    Box,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Points per axis; grids only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Global,
    ExactProx,
    InexactProx,
    LocalProx,
    #[serde(rename = "min-over-W", alias = "min-over-w")]
    MinOverW,
    TrapSweep,
    Habit,
    LambdaSweep,
    Probes,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Global => "global",
            Mode::ExactProx => "exact-prox",
            Mode::InexactProx => "inexact-prox",
            Mode::LocalProx => "local-prox",
            Mode::MinOverW => "min-over-W",
            Mode::TrapSweep => "trap-sweep",
            Mode::Habit => "habit",
            Mode::LambdaSweep => "lambda-sweep",
            Mode::Probes => "probes",
        }
    }

    fn needs_x0(self) -> bool {
        !matches!(self, Mode::Global | Mode::Probes)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Lemma1,
    Lemma2,
    TrapMonotonicity,
    Axioms,
    Nonexpansiveness,
    Kl,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Lemma1 => "lemma1",
            Check::Lemma2 => "lemma2",
            Check::TrapMonotonicity => "trap-monotonicity",
            Check::Axioms => "axioms",
            Check::Nonexpansiveness => "nonexpansiveness",
            Check::Kl => "kl",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Single-step modes and probes; defaults to λ₀ of the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<ProposalPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experience: Option<ExperienceModel>,
    /// Replaces the top-level schedule for this run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ProximalSchedule>,
    /// Replaces the top-level run options for this run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<RunOptions>,
    /// Random grid instances per property check (probes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    /// Sample count for axiom, non-expansiveness and KL probes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<Check>>,
    /// Known minimizer for the KL probe on boxes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimizer: Option<Vec<f64>>,
    /// Constant c of the KL desingularizer φ(s) = c·s^{1−θ}.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl_c: Option<f64>,
}

pub const DEFAULT_INSTANCES: usize = 50;
pub const DEFAULT_SAMPLES: usize = 1000;

impl RunConfig {
    pub fn probes(name: &str) -> Self {
        RunConfig {
            name: name.to_string(),
            mode: Mode::Probes,
            x0: None,
            lambda: None,
            radius: None,
            lambdas: None,
            proposal: None,
            experience: None,
            schedule: None,
            options: None,
            instances: None,
            samples: None,
            checks: None,
            minimizer: None,
            kl_c: None,
        }
    }
}

/// Dotted field path and 1-based line of the key at byte `offset`, found from
/// the nearest preceding table header.
fn field_at(text: &str, offset: usize) -> Option<(String, usize)> {
    let before = text.get(..offset)?;
    let line_no = before.matches('\n').count() + 1;
    let line = text.lines().nth(line_no - 1)?;
    let key = line.split_once('=').map(|(k, _)| k.trim().to_string());
    let mut table = String::new();
    let mut runs = 0usize;
    for l in before.lines() {
        let t = l.trim();
        if t == "[[runs]]" {
            table = format!("runs[{runs}]");
            runs += 1;
        } else if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            table = name.trim().to_string();
        }
    }
    let path = match (table.is_empty(), key) {
        (_, Some(k)) if k.starts_with('[') => return None,
        (true, Some(k)) => k,
        (false, Some(k)) => format!("{table}.{k}"),
        (false, None) => table,
        (true, None) => return None,
    };
    Some((path, line_no))
}

fn fail(path: impl Into<String>, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", path.into()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let located = e.span().and_then(|span| field_at(text, span.start));
            CliError::Config(match located {
                Some((path, line)) => format!("{path} (line {line}): {}", e.message().trim_end()),
                None => e.to_string().trim_end().to_string(),
            })
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn build_space(&self) -> Result<SearchSpace, CliError> {
        let s = &self.space;
        let built = match s.kind {
            SpaceKind::Box => {
                if s.resolution.is_some() {
                    return Err(fail("space.resolution", "only grids take a resolution"));
                }
                SearchSpace::continuous(s.lower.clone(), s.upper.clone())
            }
            SpaceKind::Grid => {
                let res = s
                    .resolution
                    .as_ref()
                    .ok_or_else(|| fail("space.resolution", "required for grids"))?;
                SearchSpace::grid(&s.lower, &s.upper, res)
            }
        };
        built.map_err(|e| fail("space", e))
    }

    pub fn build_model(&self, dim: usize) -> Result<ProximalModel, CliError> {
        let objective = build_objective(&self.objective, dim)?;
        let distance = match self.quasi_distance {
            QuasiConfig::Euclidean => QuasiDistance::euclidean(),
            QuasiConfig::Manhattan => QuasiDistance::manhattan(),
            QuasiConfig::Asymmetric { up, down } => {
                QuasiDistance::asymmetric(up, down).map_err(|e| fail("quasi_distance", e))?
            }
            QuasiConfig::Shifted { offset } => {
                QuasiDistance::shifted(offset).map_err(|e| fail("quasi_distance", e))?
            }
        };
        let resistance = match self.resistance {
            ResistanceConfig::Linear => Resistance::Linear,
            ResistanceConfig::Quadratic => Resistance::Quadratic,
            ResistanceConfig::Power { p } => {
                Resistance::power(p).map_err(|e| fail("resistance", e))?
            }
        };
        Ok(ProximalModel::new(objective, distance, resistance))
    }

    pub fn run_schedule<'a>(&'a self, run: &'a RunConfig) -> &'a ProximalSchedule {
        run.schedule.as_ref().unwrap_or(&self.schedule)
    }

    pub fn run_options(&self, run: &RunConfig) -> RunOptions {
        run.options.clone().unwrap_or_else(|| self.options.clone())
    }

    /// Checks every cross-field constraint; errors name the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let space = self.build_space()?;
        let model = self.build_model(space.dim())?;
        self.schedule.validate().map_err(|e| fail("schedule", e))?;
        if self.runs.is_empty() {
            return Err(fail("runs", "at least one run is required"));
        }
        let mut names = HashSet::new();
        for (i, run) in self.runs.iter().enumerate() {
            let at = |field: &str| format!("runs[{i}].{field}");
            if run.name.is_empty()
                || !run
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
                || run.name.starts_with('.')
            {
                return Err(fail(at("name"), "use letters, digits, '-', '_' or '.'"));
            }
            if !names.insert(run.name.as_str()) {
                return Err(fail(
                    at("name"),
                    format!("duplicate run name `{}`", run.name),
                ));
            }
            validate_run(self, run, &space, &model, &at)?;
        }
        Ok(())
    }
}

fn validate_run(
    cfg: &ExperimentConfig,
    run: &RunConfig,
    space: &SearchSpace,
    model: &ProximalModel,
    at: &dyn Fn(&str) -> String,
) -> Result<(), CliError> {
    if let Some(s) = &run.schedule {
        s.validate().map_err(|e| fail(at("schedule"), e))?;
    }
    if run.mode.needs_x0() {
        let x0 = run
            .x0
            .as_ref()
            .ok_or_else(|| fail(at("x0"), format!("required for mode {}", run.mode.name())))?;
        let p = Point::new(x0.clone()).map_err(|e| fail(at("x0"), e))?;
        let p = space.locate(&p).map_err(|e| fail(at("x0"), e))?;
        if !model.value(&p).is_finite() {
            return Err(fail(at("x0"), "f(x0) must be finite"));
        }
    }
    if let Some(l) = run.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(fail(at("lambda"), "must be positive and finite"));
        }
    }
    let needs_grid = matches!(run.mode, Mode::Global | Mode::MinOverW);
    if needs_grid && !space.is_finite() {
        return Err(fail(
            "space.kind",
            format!("mode {} needs a grid space", run.mode.name()),
        ));
    }
    match run.mode {
        Mode::LocalProx => match run.radius {
            Some(r) if r > 0.0 && r.is_finite() => {}
            Some(_) => return Err(fail(at("radius"), "must be positive")),
            None => return Err(fail(at("radius"), "required for mode local-prox")),
        },
        Mode::TrapSweep | Mode::LambdaSweep => {
            let ls = run.lambdas.as_ref().ok_or_else(|| {
                fail(
                    at("lambdas"),
                    format!("required for mode {}", run.mode.name()),
                )
            })?;
            if ls.is_empty() || ls.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(fail(at("lambdas"), "need positive, finite values"));
            }
            if run.mode == Mode::TrapSweep && ls.windows(2).any(|w| w[0] >= w[1]) {
                return Err(fail(at("lambdas"), "must be strictly ascending"));
            }
        }
        Mode::Habit => {
            let e = run
                .experience
                .as_ref()
                .ok_or_else(|| fail(at("experience"), "required for mode habit"))?;
            e.validate().map_err(|e| fail(at("experience"), e))?;
        }
        Mode::Probes => {
            if run.instances == Some(0) {
                return Err(fail(at("instances"), "must be at least 1"));
            }
            if run.samples == Some(0) {
                return Err(fail(at("samples"), "must be at least 1"));
            }
            if let Some(c) = run.kl_c {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(fail(at("kl_c"), "must be positive"));
                }
            }
            if let Some(m) = &run.minimizer {
                let p = Point::new(m.clone()).map_err(|e| fail(at("minimizer"), e))?;
                space.locate(&p).map_err(|e| fail(at("minimizer"), e))?;
            }
            for check in run.checks.iter().flatten() {
                if let Err(why) = check_applicable(*check, cfg, run, space, model) {
                    return Err(fail(at("checks"), format!("{}: {why}", check.name())));
                }
            }
        }
        _ => {}
    }
    if let Some(p) = &run.proposal {
        if !matches!(
            run.mode,
            Mode::InexactProx | Mode::Habit | Mode::LambdaSweep
        ) {
            return Err(fail(
                at("proposal"),
                format!("not used by mode {}", run.mode.name()),
            ));
        }
        p.validate(space).map_err(|e| fail(at("proposal"), e))?;
    }
    Ok(())
}

/// Whether a probe check can run on this configuration, with the reason if not.
pub fn check_applicable(
    check: Check,
    cfg: &ExperimentConfig,
    run: &RunConfig,
    space: &SearchSpace,
    model: &ProximalModel,
) -> Result<(), String> {
    match check {
        Check::Nonexpansiveness => {
            if space.is_finite() {
                Err("needs a box space".into())
            } else if !model.objective.flags().convex {
                Err("objective must be convex".into())
            } else if !model.resistance.is_quadratic() {
                Err("resistance must be quadratic".into())
            } else if !model.distance.is_euclidean_in(space.dim()) {
                Err("quasi_distance must be euclidean".into())
            } else {
                Ok(())
            }
        }
        Check::Kl => {
            if model.objective.flags().kl_exponent.is_none() {
                Err("objective has no KL exponent".into())
            } else if kl_minimizer(cfg, run, space).is_none() {
                Err("set `minimizer` (no known minimizer for this objective on a box)".into())
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

/// Minimizer for the KL probe: explicit, the grid oracle, or the preset's center.
pub fn kl_minimizer(
    cfg: &ExperimentConfig,
    run: &RunConfig,
    space: &SearchSpace,
) -> Option<Vec<f64>> {
    if let Some(m) = &run.minimizer {
        return Some(m.clone());
    }
    if space.is_finite() {
        let model = cfg.build_model(space.dim()).ok()?;
        return vrprox::solve_global(&model.objective, space)
            .ok()
            .map(|(p, _)| p.into_inner());
    }
    match &cfg.objective {
        ObjectiveConfig::Quadratic { center, .. } | ObjectiveConfig::Absolute { center } => {
            Some(center.clone())
        }
        ObjectiveConfig::Rosenbrock { a, .. } => Some(vec![*a, a * a]),
        _ => None,
    }
}

fn check_len(field: &str, v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(fail(
            field,
            format!("has {} entries but the space has dimension {dim}", v.len()),
        ));
    }
    Ok(())
}

fn build_objective(cfg: &ObjectiveConfig, dim: usize) -> Result<Objective, CliError> {
    Ok(match cfg {
        ObjectiveConfig::Quadratic { center, weights } => {
            check_len("objective.center", center, dim)?;
            match weights {
                Some(w) => Objective::weighted_quadratic(center.clone(), w.clone())
                    .map_err(|e| fail("objective.weights", e))?,
                None => Objective::quadratic(center.clone()),
            }
        }
        ObjectiveConfig::Absolute { center } => {
            check_len("objective.center", center, dim)?;
            Objective::absolute(center.clone())
        }
        ObjectiveConfig::Rosenbrock { a, b } => {
            if dim != 2 {
                return Err(fail(
                    "objective.kind",
                    "rosenbrock needs a 2-dimensional space",
                ));
            }
            Objective::rosenbrock(*a, *b)
        }
        ObjectiveConfig::DoubleWell => Objective::double_well(dim),
        ObjectiveConfig::Linear { coefficients } => {
            check_len("objective.coefficients", coefficients, dim)?;
            Objective::linear(coefficients.clone())
        }
        ObjectiveConfig::Expr {
            expr,
            convex,
            lower_bound,
            kl_exponent,
        } => {
            let e = Expr::parse(expr).map_err(|e| fail("objective.expr", e))?;
            if e.dim() > dim {
                return Err(fail(
                    "objective.expr",
                    format!(
                        "reads coordinate {} but the space has dimension {dim}",
                        e.dim()
                    ),
                ));
            }
            if let Some(t) = kl_exponent {
                if !(0.0..1.0).contains(t) {
                    return Err(fail("objective.kl_exponent", "must lie in [0, 1)"));
                }
            }
            Objective::from_fn(format!("expr: {expr}"), move |x| e.eval(x)).with_flags(
                ObjectiveFlags {
                    convex: *convex,
                    lower_bound: *lower_bound,
                    kl_exponent: *kl_exponent,
                },
            )
        }
    })
}
