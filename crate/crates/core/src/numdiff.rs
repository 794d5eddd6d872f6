//! Central finite differences, h = 1e-6·(1 + ‖x‖).

use crate::point::norm2;

pub fn step_size(x: &[f64]) -> f64 {
    1e-6 * (1.0 + norm2(x))
}

/// Central-difference gradient. `None` when any probe value is non-finite.
pub fn central_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Option<Vec<f64>> {
    let h = step_size(x);
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return None;
        }
        grad.push(g);
    }
    Some(grad)
}

/// Upper estimate of the local slope: per coordinate, the larger of the two
/// one-sided difference magnitudes. Returns the Euclidean norm of that vector.
pub fn one_sided_slope_bound(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Option<f64> {
    let h = step_size(x);
    let centre = f(x);
    if !centre.is_finite() {
        return None;
    }
    let mut probe = x.to_vec();
    let mut sq = 0.0;
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        let s = ((up - centre).abs()).max((centre - down).abs()) / h;
        if !s.is_finite() {
            return None;
        }
        sq += s * s;
    }
    Some(sq.sqrt())
}

/// Derivative of a scalar function on [0, ∞): central away from 0, forward at 0.
pub fn scalar_derivative(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-6 * (1.0 + t.abs());
    if t >= h {
        (f(t + h) - f(t - h)) / (2.0 * h)
    } else {
        (f(t + h) - f(t)) / h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_quadratic() {
        let g = central_gradient(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0]).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-6);
        assert!((g[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn slope_bound_sees_kink() {
        let s = one_sided_slope_bound(|x| x[0].abs(), &[0.0]).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        let g = central_gradient(|x| x[0].abs(), &[0.0]).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn non_finite_abstains() {
        assert!(
            central_gradient(|x| if x[0] > 0.0 { f64::INFINITY } else { 0.0 }, &[0.0]).is_none()
        );
    }
}
