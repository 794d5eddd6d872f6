//! Unsatisfied-need functions f: ℝⁿ → ℝ ∪ {+∞}.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numdiff;
use crate::point::Point;
use crate::space::Grid;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Structural facts about an objective. Lower semicontinuity is trusted, not checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveFlags {
    pub convex: bool,
    pub lower_bound: Option<f64>,
    /// Kurdyka–Łojasiewicz exponent θ ∈ [0, 1) near the minimizer, when known.
    pub kl_exponent: Option<f64>,
}

/// A proper objective with an optional analytic subgradient.
///
/// NaN never escapes [`Objective::value`]: it is mapped to +∞ (outside the domain).
#[derive(Clone)]
pub struct Objective {
    name: String,
    value: ValueFn,
    gradient: Option<GradFn>,
    flags: ObjectiveFlags,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("analytic_gradient", &self.gradient.is_some())
            .field("flags", &self.flags)
            .finish()
    }
}

impl Objective {
    pub fn from_fn(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Objective {
            name: name.into(),
            value: Arc::new(value),
            gradient: None,
            flags: ObjectiveFlags::default(),
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_flags(mut self, flags: ObjectiveFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Σᵢ (xᵢ − aᵢ)².
    pub fn quadratic(center: Vec<f64>) -> Self {
        let weights = vec![1.0; center.len()];
        Self::weighted_quadratic(center, weights).expect("unit weights are valid")
    }

    /// Σᵢ wᵢ (xᵢ − aᵢ)² with wᵢ > 0.
    pub fn weighted_quadratic(center: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != center.len() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("weights", "one positive weight per coordinate"));
        }
        let (c1, w1) = (center.clone(), weights.clone());
        Ok(Objective::from_fn("quadratic", move |x| {
            x.iter()
                .zip(c1.iter().zip(&w1))
                .map(|(v, (a, w))| w * (v - a) * (v - a))
                .sum()
        })
        .with_gradient(move |x| {
            x.iter()
                .zip(center.iter().zip(&weights))
                .map(|(v, (a, w))| 2.0 * w * (v - a))
                .collect()
        })
        .with_flags(ObjectiveFlags {
            convex: true,
            lower_bound: Some(0.0),
            kl_exponent: Some(0.5),
        }))
    }

    /// Σᵢ |xᵢ − aᵢ|. The gradient at a kink is the minimal-norm subgradient 0.
    pub fn absolute(center: Vec<f64>) -> Self {
        let c1 = center.clone();
        Objective::from_fn("absolute", move |x| {
            x.iter().zip(&c1).map(|(v, a)| (v - a).abs()).sum()
        })
        .with_gradient(move |x| {
            x.iter()
                .zip(&center)
                .map(|(v, a)| {
                    let d = v - a;
                    if d > 0.0 {
                        1.0
                    } else if d < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .with_flags(ObjectiveFlags {
            convex: true,
            lower_bound: Some(0.0),
            kl_exponent: Some(0.0),
        })
    }

    /// ⟨c, x⟩.
    pub fn linear(coefficients: Vec<f64>) -> Self {
        let c1 = coefficients.clone();
        Objective::from_fn("linear", move |x| crate::point::dot(&c1, x))
            .with_gradient(move |_| coefficients.clone())
            .with_flags(ObjectiveFlags {
                convex: true,
                lower_bound: None,
                kl_exponent: None,
            })
    }

    /// (a − x)² + b (y − x²)².
    pub fn rosenbrock(a: f64, b: f64) -> Self {
        Objective::from_fn("rosenbrock", move |x| {
            let (u, v) = (x[0], x[1]);
            (a - u) * (a - u) + b * (v - u * u) * (v - u * u)
        })
        .with_gradient(move |x| {
            let (u, v) = (x[0], x[1]);
            vec![
                -2.0 * (a - u) - 4.0 * b * u * (v - u * u),
                2.0 * b * (v - u * u),
            ]
        })
        .with_flags(ObjectiveFlags {
            convex: false,
            lower_bound: Some(0.0),
            kl_exponent: Some(0.5),
        })
    }

    /// Σᵢ (xᵢ⁴ − xᵢ²); minima at ±1/√2 per coordinate.
    pub fn double_well(dim: usize) -> Self {
        Objective::from_fn("double-well", |x| x.iter().map(|v| v.powi(4) - v * v).sum())
            .with_gradient(|x| x.iter().map(|v| 4.0 * v.powi(3) - 2.0 * v).collect())
            .with_flags(ObjectiveFlags {
                convex: false,
                lower_bound: Some(-0.25 * dim as f64),
                kl_exponent: Some(0.5),
            })
    }

    pub fn constant(c: f64) -> Self {
        Objective::from_fn("constant", move |_| c)
            .with_gradient(|x| vec![0.0; x.len()])
            .with_flags(ObjectiveFlags {
                convex: true,
                lower_bound: Some(c),
                kl_exponent: None,
            })
    }

    /// Lookup table over a finite grid; +∞ off the grid.
    pub fn table(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid("values", "one value per grid point"));
        }
        let lower_bound = values.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(
            Objective::from_fn("table", move |x| match grid.index_of(x) {
                Some(i) => values[i],
                None => f64::INFINITY,
            })
            .with_flags(ObjectiveFlags {
                convex: false,
                lower_bound: Some(lower_bound),
                kl_exponent: None,
            }),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> &ObjectiveFlags {
        &self.flags
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let v = (self.value)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    /// Analytic subgradient, or central differences when none is supplied.
    /// `None` when the finite-difference fallback is ill-conditioned.
    pub fn subgradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.gradient {
            Some(g) => {
                let v = g(x);
                v.iter().all(|c| c.is_finite()).then_some(v)
            }
            None => numdiff::central_gradient(|y| self.value(y), x),
        }
    }

    /// Checks the declared lower bound on the given points. Vacuously true without one.
    pub fn respects_lower_bound<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> bool {
        match self.flags.lower_bound {
            None => true,
            Some(lb) => points.into_iter().all(|p| self.value(p) >= lb),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_evaluate() {
        let q = Objective::quadratic(vec![0.7]);
        assert!((q.value(&[0.5]) - 0.04).abs() < 1e-15);
        assert_eq!(q.subgradient(&[1.7]).unwrap(), vec![2.0 * (1.7 - 0.7)]);
        assert_eq!(Objective::absolute(vec![0.0]).value(&[-3.0]), 3.0);
        assert_eq!(Objective::rosenbrock(1.0, 100.0).value(&[1.0, 1.0]), 0.0);
        assert_eq!(Objective::double_well(1).value(&[1.0]), 0.0);
        assert_eq!(Objective::linear(vec![2.0, -1.0]).value(&[1.0, 1.0]), 1.0);
    }

    #[test]
    fn nan_is_mapped_to_infinity() {
        let f = Objective::from_fn("nan", |_| f64::NAN);
        assert_eq!(f.value(&[0.0]), f64::INFINITY);
    }

    #[test]
    fn table_is_infinite_off_grid() {
        let g = Grid::uniform(&[0.0], &[1.0], &[3]).unwrap();
        let f = Objective::table(g, vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(f.value(&[0.5]), 1.0);
        assert_eq!(f.value(&[0.25]), f64::INFINITY);
        assert_eq!(f.flags().lower_bound, Some(1.0));
        assert!(f.subgradient(&[0.5]).is_none());
    }

    #[test]
    fn rosenbrock_gradient_matches_differences() {
        let f = Objective::rosenbrock(1.0, 100.0);
        let x = [-0.3, 0.8];
        let analytic = f.analytic_gradient(&x).unwrap();
        let fd = numdiff::central_gradient(|y| f.value(y), &x).unwrap();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn lower_bound_sampled() {
        let f = Objective::double_well(1);
        let pts: Vec<Point> = (-20..=20).map(|i| Point::scalar(i as f64 * 0.1)).collect();
        assert!(f.respects_lower_bound(&pts));
    }
}
