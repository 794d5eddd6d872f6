//! Relative resistance to change Γ = U⁻¹∘D, applied to a cost to change.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::numdiff;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Resistance {
    Linear,
    Quadratic,
    /// Γ(t) = t^p with p > 0. Weak (flat in the small) when p > 1.
    Power(f64),
    Custom {
        name: String,
        gamma: ScalarFn,
        derivative: Option<ScalarFn>,
    },
}

impl fmt::Debug for Resistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resistance::Linear => write!(f, "Linear"),
            Resistance::Quadratic => write!(f, "Quadratic"),
            Resistance::Power(p) => write!(f, "Power({p})"),
            Resistance::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Resistance {
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid("exponent", "must be positive and finite"));
        }
        Ok(Resistance::Power(p))
    }

    pub fn custom(
        name: impl Into<String>,
        gamma: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Resistance::Custom {
            name: name.into(),
            gamma: Arc::new(gamma),
            derivative: None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Resistance::Linear => "linear".into(),
            Resistance::Quadratic => "quadratic".into(),
            Resistance::Power(p) => format!("power({p})"),
            Resistance::Custom { name, .. } => name.clone(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Resistance::Quadratic) || matches!(self, Resistance::Power(p) if *p == 2.0)
    }

    /// Presets flat enough in the small: Γ(t)/t → 0 as t → 0⁺.
    pub fn is_weak(&self) -> bool {
        match self {
            Resistance::Quadratic => true,
            Resistance::Power(p) => *p > 1.0,
            Resistance::Linear | Resistance::Custom { .. } => false,
        }
    }

    pub fn gamma(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return f64::INFINITY;
        }
        match self {
            Resistance::Linear => t,
            Resistance::Quadratic => t * t,
            Resistance::Power(p) => t.powf(*p),
            Resistance::Custom { gamma, .. } => gamma(t),
        }
    }

    /// Γ′(t); for t = 0 this is the right derivative.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Resistance::Linear => 1.0,
            Resistance::Quadratic => 2.0 * t,
            Resistance::Power(p) => {
                if t == 0.0 {
                    if *p > 1.0 {
                        0.0
                    } else if *p == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    p * t.powf(p - 1.0)
                }
            }
            Resistance::Custom {
                derivative: Some(d),
                ..
            } => d(t),
            Resistance::Custom { gamma, .. } => numdiff::scalar_derivative(|s| gamma(s), t),
        }
    }

    /// Numerical regularity check on [0, t_max] with `samples` equally spaced points.
    pub fn check_regularity(&self, t_max: f64, samples: usize) -> RegularityReport {
        let zero_at_origin = self.gamma(0.0) == 0.0;
        let n = samples.max(2);
        let mut increasing = true;
        let mut nonnegative = true;
        let mut prev = self.gamma(0.0);
        for i in 1..=n {
            let t = t_max * i as f64 / n as f64;
            let g = self.gamma(t);
            nonnegative &= g >= 0.0;
            if !(g > prev) {
                increasing = false;
            }
            prev = g;
        }
        let ratio = |t: f64| self.gamma(t) / t;
        let ratios = [ratio(1e-3), ratio(1e-6)];
        let flat_in_small = ratios[1] < ratios[0] && ratios[1] < 1.0;
        RegularityReport {
            zero_at_origin,
            nonnegative,
            strictly_increasing: increasing,
            flat_in_small,
            small_ratios: ratios,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub zero_at_origin: bool,
    pub nonnegative: bool,
    pub strictly_increasing: bool,
    /// Γ(t)/t decreases from t = 1e-3 to t = 1e-6 and is below 1 there.
    pub flat_in_small: bool,
    /// Γ(t)/t at t = 1e-3 and t = 1e-6.
    pub small_ratios: [f64; 2],
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        self.zero_at_origin && self.nonnegative && self.strictly_increasing
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_vanish_at_zero_and_increase() {
        for r in [
            Resistance::Linear,
            Resistance::Quadratic,
            Resistance::power(1.5).unwrap(),
        ] {
            let rep = r.check_regularity(10.0, 200);
            assert!(rep.is_regular(), "{r:?}");
        }
    }

    #[test]
    fn weak_presets_are_flat_in_the_small() {
        assert!(
            Resistance::Quadratic
                .check_regularity(1.0, 10)
                .flat_in_small
        );
        assert!(
            Resistance::power(1.5)
                .unwrap()
                .check_regularity(1.0, 10)
                .flat_in_small
        );
        assert!(!Resistance::Linear.check_regularity(1.0, 10).flat_in_small);
        let r = Resistance::Quadratic.check_regularity(1.0, 10);
        assert!((r.small_ratios[0] - 1e-3).abs() < 1e-18);
        assert!((r.small_ratios[1] - 1e-6).abs() < 1e-21);
    }

    #[test]
    fn derivatives() {
        assert_eq!(Resistance::Quadratic.derivative(0.01), 0.02);
        assert_eq!(Resistance::Linear.derivative(0.0), 1.0);
        assert_eq!(Resistance::power(3.0).unwrap().derivative(0.0), 0.0);
        let c = Resistance::custom("cube", |t| t * t * t);
        assert!((c.derivative(2.0) - 12.0).abs() < 1e-6);
    }

    #[test]
    fn infinite_cost_is_absorbing() {
        assert_eq!(Resistance::Quadratic.gamma(f64::INFINITY), f64::INFINITY);
        assert!(Resistance::power(-1.0).is_err());
    }
}
