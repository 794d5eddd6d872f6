//! Projected gradient descent with spectral (Barzilai–Borwein) steps and Armijo
//! backtracking, run from several starts.
//!
//! Once the projected gradient drops below tolerance the iteration keeps polishing
//! while the projected gradient still shrinks. The polish is driven by gradients
//! rather than values, so it resolves minimizers past the √ε limit of value
//! comparisons.

use serde::{Deserialize, Serialize};

use crate::lowdisc::halton;
use crate::point::{dot, norm2, norm2_diff};
use crate::space::BoxSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerOptions {
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Total starts: the anchor plus `starts − 1` Halton points.
    pub starts: usize,
    pub polish_iterations: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions {
            gradient_tolerance: 1e-8,
            max_iterations: 10_000,
            starts: 5,
            polish_iterations: 50,
        }
    }
}

/// Feasible region of an inner problem.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Feasible<'a> {
    Box(&'a BoxSpace),
    /// Box ∩ closed Euclidean ball.
    BoxBall {
        bounds: &'a BoxSpace,
        center: &'a [f64],
        radius: f64,
    },
}

impl Feasible<'_> {
    pub(crate) fn project(&self, y: &mut [f64]) {
        match *self {
            Feasible::Box(b) => b.project(y),
            Feasible::BoxBall {
                bounds,
                center,
                radius,
            } => {
                let original = y.to_vec();
                bounds.project(y);
                if norm2_diff(y, center) <= radius {
                    return;
                }
                // Dykstra's alternating projections onto ball and box
                let mut x = original;
                let mut p = vec![0.0; x.len()];
                let mut q = vec![0.0; x.len()];
                for _ in 0..200 {
                    let prev = x.clone();
                    let mut b: Vec<f64> = x.iter().zip(&p).map(|(a, c)| a + c).collect();
                    project_ball(&mut b, center, radius);
                    for i in 0..x.len() {
                        p[i] = x[i] + p[i] - b[i];
                    }
                    let mut c: Vec<f64> = b.iter().zip(&q).map(|(a, d)| a + d).collect();
                    bounds.project(&mut c);
                    for i in 0..x.len() {
                        q[i] = b[i] + q[i] - c[i];
                    }
                    x = c;
                    if norm2_diff(&x, &prev) <= 1e-15 * (1.0 + norm2(&x)) {
                        break;
                    }
                }
                // exact feasibility for the ball (box already holds after the last step)
                project_ball(&mut x, center, radius);
                bounds.project(&mut x);
                y.copy_from_slice(&x);
            }
        }
    }

    fn bounds(&self) -> &BoxSpace {
        match self {
            Feasible::Box(b) => b,
            Feasible::BoxBall { bounds, .. } => bounds,
        }
    }
}

fn project_ball(y: &mut [f64], center: &[f64], radius: f64) {
    let d = norm2_diff(y, center);
    if d > radius {
        let s = radius / d;
        for (v, c) in y.iter_mut().zip(center) {
            *v = c + (*v - c) * s;
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct DescentOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub pg_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn projected_gradient_norm(feasible: &Feasible<'_>, y: &[f64], g: &[f64]) -> f64 {
    let mut z: Vec<f64> = y.iter().zip(g).map(|(a, b)| a - b).collect();
    feasible.project(&mut z);
    norm2_diff(&z, y)
}

pub(crate) fn projected_descent(
    value: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    feasible: &Feasible<'_>,
    start: &[f64],
    opts: &InnerOptions,
) -> DescentOutcome {
    let mut y = start.to_vec();
    feasible.project(&mut y);
    let mut v = value(&y);
    let stuck = |y: Vec<f64>, v: f64, it: usize| DescentOutcome {
        point: y,
        value: v,
        pg_norm: f64::INFINITY,
        iterations: it,
        converged: false,
    };
    if !v.is_finite() {
        return stuck(y, v, 0);
    }
    let Some(mut g) = grad(&y) else {
        return stuck(y, v, 0);
    };
    let mut pg = projected_gradient_norm(feasible, &y, &g);
    let inv_scale = |g: &[f64]| 1.0 / g.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    let mut alpha = inv_scale(&g);
    let mut polish_left = opts.polish_iterations;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if pg == 0.0 {
            break;
        }
        if pg <= opts.gradient_tolerance {
            if polish_left == 0 {
                break;
            }
            polish_left -= 1;
        }
        iterations += 1;
        let mut target: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        feasible.project(&mut target);
        let d: Vec<f64> = target.iter().zip(&y).map(|(a, b)| a - b).collect();
        let gd = dot(&g, &d);
        if !(gd < 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..64 {
            let mut trial: Vec<f64> = y.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            feasible.project(&mut trial);
            let vt = value(&trial);
            if vt <= v + 1e-4 * t * gd {
                accepted = Some((trial, vt));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, vt)) = accepted else { break };
        let Some(gt) = grad(&trial) else { break };
        let s: Vec<f64> = trial.iter().zip(&y).map(|(a, b)| a - b).collect();
        let ss = dot(&s, &s);
        if ss == 0.0 {
            break;
        }
        let dg: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &dg);
        alpha = if sy > 0.0 {
            (ss / sy).clamp(1e-30, 1e30)
        } else {
            inv_scale(&gt)
        };
        let pg_new = projected_gradient_norm(feasible, &trial, &gt);
        let polishing = pg <= opts.gradient_tolerance;
        if polishing && !(pg_new < pg) {
            // keep the better of the two
            if vt < v || (vt == v && pg_new < pg) {
                y = trial;
                v = vt;
                pg = pg_new;
            }
            break;
        }
        y = trial;
        v = vt;
        g = gt;
        pg = pg_new;
    }
    DescentOutcome {
        point: y,
        value: v,
        pg_norm: pg,
        iterations,
        converged: pg <= opts.gradient_tolerance,
    }
}

/// Whether `a` beats `b`. Values within rounding of each other are compared by
/// projected-gradient norm instead.
fn better(a: &DescentOutcome, b: &DescentOutcome) -> bool {
    let tol = 8.0 * f64::EPSILON * a.value.abs().max(b.value.abs());
    if a.value < b.value - tol {
        return true;
    }
    (a.value - b.value).abs() <= tol && a.pg_norm < b.pg_norm
}

/// Best outcome over the anchor start and `opts.starts − 1` Halton starts; ties keep
/// the earlier start.
pub(crate) fn multistart(
    value: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    feasible: &Feasible<'_>,
    anchor: &[f64],
    opts: &InnerOptions,
) -> DescentOutcome {
    let n = anchor.len();
    let mut best = projected_descent(value, grad, feasible, anchor, opts);
    let mut total = best.iterations;
    for i in 0..opts.starts.saturating_sub(1) {
        let start = feasible.bounds().from_unit(&halton(i as u64, n));
        let out = projected_descent(value, grad, feasible, &start, opts);
        total += out.iterations;
        if better(&out, &best) {
            best = out;
        }
    }
    best.iterations = total;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_quadratic_to_machine_precision() {
        let b = BoxSpace::new(vec![-10.0], vec![10.0]).unwrap();
        let f = |y: &[f64]| y[0] * y[0] + 0.1 * (y[0] - 2.0) * (y[0] - 2.0);
        let g = |y: &[f64]| Some(vec![2.0 * y[0] + 0.2 * (y[0] - 2.0)]);
        let out = projected_descent(&f, &g, &Feasible::Box(&b), &[2.0], &InnerOptions::default());
        let exact = 0.1 * 2.0 / 1.1;
        assert!(((out.point[0] - exact) / exact).abs() < 1e-14, "{out:?}");
        assert!(out.converged);
    }

    #[test]
    fn tiny_scale_still_moves() {
        let b = BoxSpace::new(vec![-10.0], vec![10.0]).unwrap();
        let x = 1e-9;
        let f = move |y: &[f64]| y[0] * y[0] + (y[0] - x) * (y[0] - x);
        let g = move |y: &[f64]| Some(vec![2.0 * y[0] + 2.0 * (y[0] - x)]);
        let out = projected_descent(&f, &g, &Feasible::Box(&b), &[x], &InnerOptions::default());
        assert!(
            ((out.point[0] - x / 2.0) / (x / 2.0)).abs() < 1e-12,
            "{out:?}"
        );
    }

    #[test]
    fn box_constraint_is_active() {
        let b = BoxSpace::new(vec![1.0], vec![3.0]).unwrap();
        let f = |y: &[f64]| y[0] * y[0];
        let g = |y: &[f64]| Some(vec![2.0 * y[0]]);
        let out = multistart(&f, &g, &Feasible::Box(&b), &[2.5], &InnerOptions::default());
        assert_eq!(out.point, vec![1.0]);
    }

    #[test]
    fn ball_projection() {
        let b = BoxSpace::new(vec![-10.0, -10.0], vec![10.0, 10.0]).unwrap();
        let c = [0.0, 0.0];
        let fea = Feasible::BoxBall {
            bounds: &b,
            center: &c,
            radius: 1.0,
        };
        let mut y = vec![3.0, 4.0];
        fea.project(&mut y);
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);

        let tight = BoxSpace::new(vec![0.5, -10.0], vec![10.0, 10.0]).unwrap();
        let fea = Feasible::BoxBall {
            bounds: &tight,
            center: &c,
            radius: 1.0,
        };
        let mut y = vec![-3.0, 0.1];
        fea.project(&mut y);
        assert!(y[0] >= 0.5 && norm2(&y) <= 1.0 + 1e-12, "{y:?}");
    }

    #[test]
    fn two_dimensional_rosenbrock_like_valley() {
        let b = BoxSpace::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
        let f = |y: &[f64]| (y[0] - 1.0).powi(2) + 10.0 * (y[1] - 2.0).powi(2);
        let g = |y: &[f64]| Some(vec![2.0 * (y[0] - 1.0), 20.0 * (y[1] - 2.0)]);
        let out = multistart(
            &f,
            &g,
            &Feasible::Box(&b),
            &[0.0, 0.0],
            &InnerOptions::default(),
        );
        assert!((out.point[0] - 1.0).abs() < 1e-10 && (out.point[1] - 2.0).abs() < 1e-10);
    }
}
