//! Costs to be able to change, modelled as quasi-distances.
//!
//! A quasi-distance satisfies q(x,x) = 0, q(x,y) = 0 ⟹ x = y and the triangle
//! inequality, but need not be symmetric.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::numdiff;
use crate::point::norm2_diff;
use crate::space::Grid;

type DistFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
type SlopeFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq)]
pub enum QuasiKind {
    Euclidean,
    Manhattan,
    Asymmetric {
        up: f64,
        down: f64,
    },
    /// max(‖x − y‖ − offset, 0). Violates separation; kept as a negative control.
    Shifted {
        offset: f64,
    },
    Table,
    Custom,
}

#[derive(Clone)]
pub struct QuasiDistance {
    kind: QuasiKind,
    eval: DistFn,
    /// Minimal-norm subgradient of y ↦ q(x, y).
    grad_y: Option<GradFn>,
    /// Upper estimate of ‖∂_y q(x, y)‖.
    slope_y: Option<SlopeFn>,
}

impl fmt::Debug for QuasiDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiDistance")
            .field("kind", &self.kind)
            .finish()
    }
}

impl QuasiDistance {
    pub fn from_fn(eval: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        QuasiDistance {
            kind: QuasiKind::Custom,
            eval: Arc::new(eval),
            grad_y: None,
            slope_y: None,
        }
    }

    pub fn euclidean() -> Self {
        QuasiDistance {
            kind: QuasiKind::Euclidean,
            eval: Arc::new(norm2_diff),
            grad_y: Some(Arc::new(|x, y| {
                let d = norm2_diff(x, y);
                if d == 0.0 {
                    vec![0.0; y.len()]
                } else {
                    y.iter().zip(x).map(|(b, a)| (b - a) / d).collect()
                }
            })),
            slope_y: Some(Arc::new(|_, _| 1.0)),
        }
    }

    pub fn manhattan() -> Self {
        let mut q = Self::asymmetric(1.0, 1.0).expect("unit weights are valid");
        q.kind = QuasiKind::Manhattan;
        q
    }

    /// q(x,y) = Σᵢ up·max(yᵢ − xᵢ, 0) + down·max(xᵢ − yᵢ, 0): moving up costs `up`
    /// per unit, moving down costs `down`.
    pub fn asymmetric(up: f64, down: f64) -> Result<Self> {
        if !(up > 0.0 && up.is_finite()) {
            return Err(invalid("up", "must be positive and finite"));
        }
        if !(down > 0.0 && down.is_finite()) {
            return Err(invalid("down", "must be positive and finite"));
        }
        Ok(QuasiDistance {
            kind: QuasiKind::Asymmetric { up, down },
            eval: Arc::new(move |x, y| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| up * (b - a).max(0.0) + down * (a - b).max(0.0))
                    .sum()
            }),
            grad_y: Some(Arc::new(move |x, y| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| {
                        if b > a {
                            up
                        } else if b < a {
                            -down
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })),
            slope_y: Some(Arc::new(move |x, y| {
                x.iter()
                    .zip(y)
                    .map(|(a, b)| {
                        let s = if b > a {
                            up
                        } else if b < a {
                            down
                        } else {
                            up.max(down)
                        };
                        s * s
                    })
                    .sum::<f64>()
                    .sqrt()
            })),
        })
    }

    pub fn shifted(offset: f64) -> Result<Self> {
        if !(offset > 0.0 && offset.is_finite()) {
            return Err(invalid("offset", "must be positive and finite"));
        }
        let mut q = QuasiDistance::from_fn(move |x, y| (norm2_diff(x, y) - offset).max(0.0));
        q.kind = QuasiKind::Shifted { offset };
        Ok(q)
    }

    /// Row-major table `costs[i * n + j] = q(point i, point j)` over a grid; +∞ off the grid.
    pub fn table(grid: Grid, costs: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if costs.len() != n * n {
            return Err(invalid(
                "costs",
                "need one entry per ordered pair of grid points",
            ));
        }
        let mut q =
            QuasiDistance::from_fn(move |x, y| match (grid.index_of(x), grid.index_of(y)) {
                (Some(i), Some(j)) => costs[i * n + j],
                _ => f64::INFINITY,
            });
        q.kind = QuasiKind::Table;
        Ok(q)
    }

    pub fn kind(&self) -> &QuasiKind {
        &self.kind
    }

    /// True when q coincides with the Euclidean norm distance in dimension `dim`.
    pub fn is_euclidean_in(&self, dim: usize) -> bool {
        match self.kind {
            QuasiKind::Euclidean => true,
            QuasiKind::Manhattan => dim == 1,
            _ => false,
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.eval)(x, y)
    }

    pub fn analytic_grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        self.grad_y.as_ref().map(|g| g(x, y))
    }

    /// Upper estimate of ‖∂_y q(x, ·)(y)‖, analytic when available, else one-sided differences.
    pub fn slope_bound_y(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        match &self.slope_y {
            Some(s) => Some(s(x, y)),
            None => numdiff::one_sided_slope_bound(|z| self.eval(x, z), y),
        }
    }
}

/// Shortest-path closure of a nonnegative weight matrix (Floyd–Warshall). The result
/// satisfies the triangle inequality; with exactly representable weights it does so
/// exactly in floating point.
pub fn shortest_path_closure(n: usize, weights: &mut [f64]) {
    assert_eq!(weights.len(), n * n);
    for i in 0..n {
        weights[i * n + i] = 0.0;
    }
    for k in 0..n {
        for i in 0..n {
            let ik = weights[i * n + k];
            if !ik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = ik + weights[k * n + j];
                if through < weights[i * n + j] {
                    weights[i * n + j] = through;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_costs_direction() {
        let q = QuasiDistance::asymmetric(2.0, 1.0).unwrap();
        assert_eq!(q.eval(&[0.0], &[1.0]), 2.0);
        assert_eq!(q.eval(&[1.0], &[0.0]), 1.0);
        assert_eq!(q.eval(&[1.0], &[1.0]), 0.0);
        assert_eq!(q.slope_bound_y(&[1.0], &[1.0]), Some(2.0));
        assert!(QuasiDistance::asymmetric(0.0, 1.0).is_err());
    }

    #[test]
    fn shifted_clamps_at_zero() {
        let q = QuasiDistance::shifted(0.1).unwrap();
        assert_eq!(q.eval(&[0.0], &[0.05]), 0.0);
        assert!((q.eval(&[0.0], &[1.0]) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn closure_repairs_triangle() {
        let mut w = vec![0.0, 5.0, 1.0, 0.0];
        shortest_path_closure(2, &mut w);
        assert_eq!(w, vec![0.0, 5.0, 1.0, 0.0]);
        let mut w3 = vec![0.0, 4.0, 1.0, 1.0, 0.0, 4.0, 4.0, 1.0, 0.0];
        shortest_path_closure(3, &mut w3);
        assert_eq!(w3[1], 2.0);
    }

    #[test]
    fn euclidean_grad_at_coincidence_is_zero() {
        let q = QuasiDistance::euclidean();
        assert_eq!(
            q.analytic_grad_y(&[1.0, 2.0], &[1.0, 2.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let g = q.analytic_grad_y(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_eq!(g, vec![0.6, 0.8]);
    }
}
