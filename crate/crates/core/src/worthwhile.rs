//! Worthwhile-to-change sets and variational traps.
//!
//! W_λ(x) = { y : f(x) − f(y) ≥ λ Γ(q(x, y)) }. A point x is a variational trap
//! at ratio λ when W_λ(x) = {x}: reaching it was worthwhile, leaving it is not.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lowdisc::halton;
use crate::model::ProximalModel;
use crate::point::Point;
use crate::space::{BoxSpace, Grid, SearchSpace};

/// Grids at least this large are filtered in parallel.
const PARALLEL_THRESHOLD: usize = 4096;

/// Membership test for W_λ(anchor).
///
/// The inequality is evaluated as f(y) + λΓ(q) ≤ f(anchor) using the same
/// floating-point expression as the proximal payoff, so a payoff minimizer is
/// always a member and set inclusions in λ hold exactly. Ties are members.
/// f(y) = +∞ is never worthwhile; f(anchor) = +∞ makes every finite-f y worthwhile.
pub fn is_worthwhile(model: &ProximalModel, lambda: f64, anchor: &[f64], y: &[f64]) -> bool {
    let fy = model.value(y);
    if fy == f64::INFINITY {
        return false;
    }
    let fx = model.value(anchor);
    if fx == f64::INFINITY {
        return true;
    }
    model.payoff(lambda, anchor, y) <= fx
}

/// Flat indices of W_λ(anchor) ∩ grid, in lexicographic order.
pub fn worthwhile_indices(
    model: &ProximalModel,
    lambda: f64,
    anchor: &[f64],
    grid: &Grid,
) -> Vec<usize> {
    let test = |i: &usize| is_worthwhile(model, lambda, anchor, &grid.point(*i));
    if grid.len() >= PARALLEL_THRESHOLD {
        (0..grid.len()).into_par_iter().filter(test).collect()
    } else {
        (0..grid.len()).filter(test).collect()
    }
}

#[derive(Clone, Debug)]
pub struct WorthwhileSpec {
    model: ProximalModel,
    lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapReport {
    pub point: Point,
    pub lambda: f64,
    pub is_trap: bool,
    /// A destination y ≠ point in W_λ(point).
    pub counterexample: Option<Point>,
    pub candidates_checked: usize,
    /// Sampled (continuous) detection; a trap verdict is then not a certificate.
    pub probabilistic: bool,
}

/// Sample budget for trap detection on continuous spaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrapSampling {
    /// Number of low-discrepancy points spread over the box.
    pub budget: usize,
}

impl Default for TrapSampling {
    fn default() -> Self {
        TrapSampling { budget: 256 }
    }
}

impl WorthwhileSpec {
    pub fn new(model: ProximalModel, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "must be positive and finite"));
        }
        Ok(WorthwhileSpec { model, lambda })
    }

    /// Spec with the experience-scaled ratio λ = η / v(E).
    pub fn from_experience(model: ProximalModel, eta: f64, weight: f64) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(invalid("weight", "experience weight must be positive"));
        }
        Self::new(model, eta / weight)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn model(&self) -> &ProximalModel {
        &self.model
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.model.clone(), lambda)
    }

    pub fn is_worthwhile(&self, anchor: &[f64], y: &[f64]) -> bool {
        is_worthwhile(&self.model, self.lambda, anchor, y)
    }

    /// Exact W_λ(anchor) over a finite grid, in lexicographic order.
    pub fn enumerate(&self, anchor: &Point, space: &SearchSpace) -> Result<Vec<Point>> {
        let grid = space.require_grid("enumerate_worthwhile")?;
        Ok(worthwhile_indices(&self.model, self.lambda, anchor, grid)
            .into_iter()
            .map(|i| grid.point(i))
            .collect())
    }

    pub fn detect_trap(&self, candidate: &Point, space: &SearchSpace) -> TrapReport {
        self.detect_trap_with(candidate, space, TrapSampling::default())
    }

    pub fn detect_trap_with(
        &self,
        candidate: &Point,
        space: &SearchSpace,
        sampling: TrapSampling,
    ) -> TrapReport {
        match space {
            SearchSpace::Grid(g) => self.trap_exhaustive(candidate, g),
            SearchSpace::Box(b) => self.trap_sampled(candidate, b, sampling),
        }
    }

    fn trap_exhaustive(&self, candidate: &Point, grid: &Grid) -> TrapReport {
        let mut checked = 0;
        let mut counterexample = None;
        for y in grid.points() {
            if y == *candidate {
                continue;
            }
            checked += 1;
            if self.is_worthwhile(candidate, &y) {
                counterexample = Some(y);
                break;
            }
        }
        self.report(candidate, counterexample, checked, false)
    }

    fn trap_sampled(&self, candidate: &Point, b: &BoxSpace, sampling: TrapSampling) -> TrapReport {
        let mut checked = 0;
        let mut counterexample = None;
        for y in trap_probe_points(candidate, b, sampling.budget) {
            if y == *candidate {
                continue;
            }
            checked += 1;
            if self.is_worthwhile(candidate, &y) {
                counterexample = Some(y);
                break;
            }
        }
        self.report(candidate, counterexample, checked, true)
    }

    fn report(
        &self,
        candidate: &Point,
        counterexample: Option<Point>,
        checked: usize,
        probabilistic: bool,
    ) -> TrapReport {
        TrapReport {
            point: candidate.clone(),
            lambda: self.lambda,
            is_trap: counterexample.is_none(),
            counterexample,
            candidates_checked: checked,
            probabilistic,
        }
    }
}

/// Local refinement first (axis moves at absolute and relative radii), then a
/// Halton cover of the whole box.
fn trap_probe_points(x: &Point, b: &BoxSpace, budget: usize) -> Vec<Point> {
    let n = x.dim();
    let scale = x.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let mut radii: Vec<(usize, f64)> = Vec::new();
    for d in 0..n {
        let width = b.upper()[d] - b.lower()[d];
        for j in 1..=12 {
            radii.push((d, width * 10f64.powi(-j)));
        }
        if scale > 0.0 {
            for j in 1..=24 {
                radii.push((d, scale * 0.5f64.powi(j)));
            }
        }
    }
    let mut out = Vec::with_capacity(radii.len() * 2 + budget);
    for (d, r) in radii {
        for sign in [-1.0, 1.0] {
            let mut y = x.clone().into_inner();
            y[d] += sign * r;
            b.project(&mut y);
            out.push(Point::new(y).expect("finite"));
        }
    }
    out.extend((0..budget as u64).map(|i| b.from_unit(&halton(i, n))));
    out
}

/// Trap reports at each λ of a strictly ascending list. Once a trap, the candidate
/// must stay a trap at every larger λ; a flip back is reported as an error.
pub fn trap_stability_sweep(
    model: &ProximalModel,
    candidate: &Point,
    space: &SearchSpace,
    lambdas: &[f64],
) -> Result<Vec<TrapReport>> {
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("lambdas", "must be strictly ascending"));
    }
    let mut reports: Vec<TrapReport> = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let spec = WorthwhileSpec::new(model.clone(), lambda)?;
        let report = spec.detect_trap(candidate, space);
        if let Some(prev) = reports.iter().rev().find(|r| r.is_trap) {
            if !report.is_trap {
                return Err(Error::TrapMonotonicity {
                    before: Box::new(prev.clone()),
                    after: Box::new(report),
                });
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Objective;
    use crate::quasi::QuasiDistance;
    use crate::resistance::Resistance;

    fn sq(lambda: f64) -> WorthwhileSpec {
        WorthwhileSpec::new(
            ProximalModel::new(
                Objective::quadratic(vec![0.0]),
                QuasiDistance::manhattan(),
                Resistance::Quadratic,
            ),
            lambda,
        )
        .unwrap()
    }

    fn grid5() -> SearchSpace {
        SearchSpace::grid(&[-2.0], &[2.0], &[5]).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(sq(1.0).is_worthwhile(&[2.0], &[2.0]));
        assert!(sq(1.0).is_worthwhile(&[2.0], &[1.0]));
        assert!(!sq(4.0).is_worthwhile(&[2.0], &[1.0]));
    }

    #[test]
    fn infinite_values() {
        let m = ProximalModel::new(
            Objective::from_fn("step", |x| if x[0] > 1.0 { f64::INFINITY } else { 0.0 }),
            QuasiDistance::euclidean(),
            Resistance::Quadratic,
        );
        assert!(is_worthwhile(&m, 1e9, &[2.0], &[0.0]));
        assert!(!is_worthwhile(&m, 1e-9, &[0.0], &[2.0]));
    }

    #[test]
    fn enumerate_requires_grid() {
        let space = SearchSpace::continuous(vec![-1.0], vec![1.0]).unwrap();
        assert!(matches!(
            sq(1.0).enumerate(&Point::scalar(0.0), &space),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn tiny_lambda_worthwhile_set() {
        let w = sq(1e-12).enumerate(&Point::scalar(2.0), &grid5()).unwrap();
        let xs: Vec<f64> = w.iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0, 2.0]);
        let big = sq(1e12).enumerate(&Point::scalar(2.0), &grid5()).unwrap();
        assert_eq!(big, vec![Point::scalar(2.0)]);
    }

    #[test]
    fn single_point_grid_is_vacuous_trap() {
        let space = SearchSpace::Grid(Grid::from_axes(vec![vec![1.5]]).unwrap());
        let r = sq(1.0).detect_trap(&Point::scalar(1.5), &space);
        assert!(r.is_trap);
        assert_eq!(r.candidates_checked, 0);
    }

    #[test]
    fn continuous_detection_finds_nearby_improvement() {
        let space = SearchSpace::continuous(vec![-10.0], vec![10.0]).unwrap();
        // W_1(a) = [0, a] for f = x², q = |x − y|, Γ = t²
        let r = sq(1.0).detect_trap(&Point::scalar(1e-9), &space);
        assert!(!r.is_trap);
        assert!(r.probabilistic);
        let origin = sq(1.0).detect_trap(&Point::scalar(0.0), &space);
        assert!(origin.is_trap);
    }

    #[test]
    fn sweep_rejects_unsorted_lambdas() {
        let m = sq(1.0).model().clone();
        assert!(trap_stability_sweep(&m, &Point::scalar(0.0), &grid5(), &[1.0, 1.0]).is_err());
    }
}
