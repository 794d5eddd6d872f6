//! Experience-dependent weighting v(E^k) of the unsatisfied need.
//!
//! Minimizing v(E^k)·f(y) + η_k Γ(q) is the same problem as f(y) + λ_k Γ(q) with
//! λ_k = η_k / v(E^k), so experience enters the solvers only through λ_k.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::point::Point;
use crate::schedule::Sequence;

/// Realized history E^k = (x⁰, …, x^k) with the matching objective values.
#[derive(Clone, Copy, Debug)]
pub struct History<'a> {
    pub points: &'a [Point],
    pub values: &'a [f64],
}

impl History<'_> {
    /// Step index k of the last recorded point.
    pub fn step(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperienceWeight {
    Constant {
        v0: f64,
    },
    /// v₀·ρ^k.
    Geometric {
        v0: f64,
        rho: f64,
    },
    /// offset + slope·max(m, 0), where m is the mean of past improvements
    /// f(x^{i−1}) − f(x^i) weighted by decay^{k−i}.
    RecencyImprovement {
        offset: f64,
        slope: f64,
        decay: f64,
    },
}

impl ExperienceWeight {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            ExperienceWeight::Constant { v0 } if !ok(v0) => Err(invalid("v0", "must be positive")),
            ExperienceWeight::Geometric { v0, rho } if !ok(v0) || !ok(rho) => {
                Err(invalid("rho", "v0 and rho must be positive"))
            }
            ExperienceWeight::RecencyImprovement {
                offset,
                slope,
                decay,
            } if !ok(offset)
                || !(slope.is_finite() && slope >= 0.0)
                || !(decay > 0.0 && decay <= 1.0) =>
            {
                Err(invalid(
                    "recency-improvement",
                    "needs offset > 0, slope ≥ 0 and decay in (0, 1]",
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn weight(&self, history: &History<'_>) -> f64 {
        match *self {
            ExperienceWeight::Constant { v0 } => v0,
            ExperienceWeight::Geometric { v0, rho } => v0 * rho.powi(history.step() as i32),
            ExperienceWeight::RecencyImprovement {
                offset,
                slope,
                decay,
            } => {
                let values = history.values;
                let k = values.len().saturating_sub(1);
                let (mut num, mut den) = (0.0, 0.0);
                for i in 1..values.len() {
                    let w = decay.powi((k - i) as i32);
                    num += w * (values[i - 1] - values[i]);
                    den += w;
                }
                let mean = if den > 0.0 { num / den } else { 0.0 };
                offset + slope * mean.max(0.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperienceModel {
    pub weight: ExperienceWeight,
    /// Worthwhile-to-change ratio η_k.
    pub eta: Sequence,
}

impl ExperienceModel {
    pub fn new(weight: ExperienceWeight, eta: Sequence) -> Result<Self> {
        weight.validate()?;
        eta.check_positive("eta")?;
        Ok(ExperienceModel { weight, eta })
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        self.eta.check_positive("eta")
    }

    /// λ_k = η_k / v(E^k).
    pub fn proximal_ratio(&self, k: usize, history: &History<'_>) -> f64 {
        self.eta.at(k) / self.weight.weight(history)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(values: &[f64]) -> (Vec<Point>, Vec<f64>) {
        (
            values.iter().map(|_| Point::scalar(0.0)).collect(),
            values.to_vec(),
        )
    }

    #[test]
    fn constant_and_geometric() {
        let (p, v) = hist(&[1.0, 0.5, 0.25]);
        let h = History {
            points: &p,
            values: &v,
        };
        assert_eq!(ExperienceWeight::Constant { v0: 2.0 }.weight(&h), 2.0);
        assert_eq!(
            ExperienceWeight::Geometric { v0: 1.0, rho: 3.0 }.weight(&h),
            9.0
        );
        let m = ExperienceModel::new(
            ExperienceWeight::Constant { v0: 2.0 },
            Sequence::Constant(1.0),
        )
        .unwrap();
        assert_eq!(m.proximal_ratio(0, &h), 0.5);
    }

    #[test]
    fn recency_weighted_improvements() {
        let (p, v) = hist(&[4.0, 2.0, 1.0]);
        let h = History {
            points: &p,
            values: &v,
        };
        let w = ExperienceWeight::RecencyImprovement {
            offset: 1.0,
            slope: 1.0,
            decay: 0.5,
        };
        // improvements 2 (weight 0.5) and 1 (weight 1): mean 4/3
        assert!((w.weight(&h) - (1.0 + 2.0 / 1.5)).abs() < 1e-15);
        let (p0, v0) = hist(&[4.0]);
        assert_eq!(
            w.weight(&History {
                points: &p0,
                values: &v0
            }),
            1.0
        );
    }

    #[test]
    fn weights_stay_positive() {
        let (p, v) = hist(&[1.0, 3.0, 7.0]);
        let h = History {
            points: &p,
            values: &v,
        };
        let w = ExperienceWeight::RecencyImprovement {
            offset: 0.1,
            slope: 5.0,
            decay: 1.0,
        };
        assert!(w.weight(&h) > 0.0);
        assert!(ExperienceWeight::Constant { v0: 0.0 }.validate().is_err());
        assert!(ExperienceWeight::RecencyImprovement {
            offset: 1.0,
            slope: 1.0,
            decay: 1.5
        }
        .validate()
        .is_err());
    }
}
