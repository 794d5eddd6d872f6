use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A real sequence indexed by step k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sequence {
    Constant(f64),
    Geometric {
        initial: f64,
        ratio: f64,
    },
    /// Explicit values; the last one repeats past the end.
    List(Vec<f64>),
}

impl Sequence {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            Sequence::Constant(c) => *c,
            Sequence::Geometric { initial, ratio } => {
                initial * ratio.powi(k.min(i32::MAX as usize) as i32)
            }
            Sequence::List(values) => values[k.min(values.len() - 1)],
        }
    }

    fn values_for_check(&self) -> Vec<f64> {
        match self {
            Sequence::Constant(c) => vec![*c],
            Sequence::Geometric { initial, ratio } => vec![*initial, *ratio],
            Sequence::List(v) => v.clone(),
        }
    }

    pub(crate) fn check_positive(&self, name: &'static str) -> Result<()> {
        if let Sequence::List(v) = self {
            if v.is_empty() {
                return Err(invalid(name, "list must not be empty"));
            }
        }
        if self
            .values_for_check()
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(invalid(name, "values must be positive and finite"));
        }
        Ok(())
    }
}

/// Per-step parameters λ_k, μ_k and ε_k of the proximal iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProximalSchedule {
    pub lambda: Sequence,
    pub mu: Sequence,
    pub epsilon: Sequence,
    /// λ_∞: every λ_k is clamped to at least this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_floor: Option<f64>,
    pub max_steps: usize,
}

/// ε₀ of the default summable error schedule ε₀·0.5^k.
pub const DEFAULT_EPSILON0: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 1000;

impl Default for ProximalSchedule {
    fn default() -> Self {
        ProximalSchedule {
            lambda: Sequence::Constant(1.0),
            mu: Sequence::Constant(1.0),
            epsilon: Sequence::Geometric {
                initial: DEFAULT_EPSILON0,
                ratio: 0.5,
            },
            lambda_floor: None,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

impl ProximalSchedule {
    /// Exact proximal iteration: μ_k ≡ 1, ε_k ≡ 0.
    pub fn exact(lambda: Sequence, max_steps: usize) -> Self {
        ProximalSchedule {
            lambda,
            mu: Sequence::Constant(1.0),
            epsilon: Sequence::Constant(0.0),
            lambda_floor: None,
            max_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda.check_positive("lambda")?;
        self.mu.check_positive("mu")?;
        match &self.mu {
            Sequence::Constant(c) if *c > 1.0 => return Err(invalid("mu", "must lie in (0, 1]")),
            Sequence::Geometric { initial, ratio } if *initial > 1.0 || *ratio > 1.0 => {
                return Err(invalid(
                    "mu",
                    "geometric mu needs initial ≤ 1 and ratio ≤ 1",
                ))
            }
            Sequence::List(v) if v.iter().any(|m| *m > 1.0) => {
                return Err(invalid("mu", "must lie in (0, 1]"))
            }
            _ => {}
        }
        let eps_ok = match &self.epsilon {
            Sequence::Constant(c) => c.is_finite() && *c >= 0.0,
            Sequence::Geometric { initial, ratio } => {
                initial.is_finite() && *initial >= 0.0 && ratio.is_finite() && *ratio > 0.0
            }
            Sequence::List(v) => !v.is_empty() && v.iter().all(|e| e.is_finite() && *e >= 0.0),
        };
        if !eps_ok {
            return Err(invalid("epsilon", "values must be finite and nonnegative"));
        }
        if let Some(floor) = self.lambda_floor {
            if !(floor.is_finite() && floor >= 0.0) {
                return Err(invalid("lambda_floor", "must be finite and nonnegative"));
            }
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps", "must be positive"));
        }
        Ok(())
    }

    pub fn apply_floor(&self, lambda: f64) -> f64 {
        match self.lambda_floor {
            Some(floor) => lambda.max(floor),
            None => lambda,
        }
    }

    pub fn lambda_at(&self, k: usize) -> f64 {
        self.apply_floor(self.lambda.at(k))
    }

    pub fn mu_at(&self, k: usize) -> f64 {
        self.mu.at(k)
    }

    pub fn epsilon_at(&self, k: usize) -> f64 {
        self.epsilon.at(k)
    }
}
