//! Exact, W-constrained, localized and f-only proximal steps.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ProximalModel;
use crate::point::{norm2_diff, Point};
use crate::solvers::descent::{multistart, Feasible, InnerOptions};
use crate::solvers::grid::{
    argmin_first, constrained_prox_argmin_set, prox_argmin_set, worthwhile_min_set,
};
use crate::space::SearchSpace;

/// Which inner procedure produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerSolver {
    GridOracle,
    ProjectedGradient,
    WorthwhileSample,
    Neighbor,
    GradientStep,
    /// No candidate was produced (the step is a stay).
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxSolution {
    pub point: Point,
    /// Proximal payoff at `point`.
    pub payoff: f64,
    /// False when the inner descent stopped on its budget; `point` is then the
    /// best one found.
    pub converged: bool,
    pub iterations: usize,
    pub inner: InnerSolver,
}

impl ProxSolution {
    fn oracle(point: Point, payoff: f64) -> Self {
        ProxSolution {
            point,
            payoff,
            converged: true,
            iterations: 0,
            inner: InnerSolver::GridOracle,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid("lambda", "must be positive and finite"))
    }
}

fn continuous_step(
    model: &ProximalModel,
    lambda: f64,
    anchor: &Point,
    feasible: &Feasible<'_>,
    opts: &InnerOptions,
) -> ProxSolution {
    let value = |y: &[f64]| model.payoff(lambda, anchor, y);
    let grad = |y: &[f64]| model.payoff_gradient(lambda, anchor, y);
    let out = multistart(&value, &grad, feasible, anchor, opts);
    let at_anchor = model.payoff(lambda, anchor, anchor);
    let (point, payoff) = if out.value <= at_anchor {
        (
            Point::new(out.point).expect("projected point is finite"),
            out.value,
        )
    } else {
        (anchor.clone(), at_anchor)
    };
    ProxSolution {
        point,
        payoff,
        converged: out.converged,
        iterations: out.iterations,
        inner: InnerSolver::ProjectedGradient,
    }
}

/// Minimizer of f(y) + λΓ(q(anchor, y)) over the whole space.
pub fn exact_prox_step(
    model: &ProximalModel,
    lambda: f64,
    anchor: &Point,
    space: &SearchSpace,
    opts: &InnerOptions,
) -> Result<ProxSolution> {
    check_lambda(lambda)?;
    let anchor = space.locate(anchor)?;
    match space {
        SearchSpace::Grid(g) => {
            let set = prox_argmin_set(model, lambda, &anchor, g);
            let i = set[0];
            let p = g.point(i);
            let v = model.payoff(lambda, &anchor, &p);
            Ok(ProxSolution::oracle(p, v))
        }
        SearchSpace::Box(b) => Ok(continuous_step(
            model,
            lambda,
            &anchor,
            &Feasible::Box(b),
            opts,
        )),
    }
}

/// Minimizer of the proximal payoff over W_λ(anchor). On grids the argmin set
/// coincides with the unconstrained one; debug builds verify this.
pub fn exact_prox_step_constrained(
    model: &ProximalModel,
    lambda: f64,
    anchor: &Point,
    space: &SearchSpace,
) -> Result<ProxSolution> {
    check_lambda(lambda)?;
    let grid = space.require_grid("exact_prox_step_constrained")?;
    let anchor = space.locate(anchor)?;
    let set = constrained_prox_argmin_set(model, lambda, &anchor, grid);
    debug_assert_eq!(set, prox_argmin_set(model, lambda, &anchor, grid));
    let p = grid.point(set[0]);
    let v = model.payoff(lambda, &anchor, &p);
    Ok(ProxSolution::oracle(p, v))
}

/// Minimizer of f alone over W_λ(anchor). Its value never exceeds f at the exact
/// prox step (checked in debug builds).
pub fn min_over_worthwhile(
    model: &ProximalModel,
    lambda: f64,
    anchor: &Point,
    space: &SearchSpace,
) -> Result<(Point, f64)> {
    check_lambda(lambda)?;
    let grid = space.require_grid("min_over_worthwhile")?;
    let anchor = space.locate(anchor)?;
    let set = worthwhile_min_set(model, lambda, &anchor, grid);
    let p = grid.point(set[0]);
    let v = model.value(&p);
    debug_assert!({
        let x2 = grid.point(prox_argmin_set(model, lambda, &anchor, grid)[0]);
        v <= model.value(&x2)
    });
    Ok((p, v))
}

/// Minimizer of the proximal payoff over the Euclidean ball of `radius` around
/// the anchor, intersected with the space.
pub fn local_prox_step(
    model: &ProximalModel,
    lambda: f64,
    anchor: &Point,
    radius: f64,
    space: &SearchSpace,
    opts: &InnerOptions,
) -> Result<ProxSolution> {
    check_lambda(lambda)?;
    if !(radius > 0.0) {
        return Err(invalid("radius", "must be positive"));
    }
    let anchor = space.locate(anchor)?;
    match space {
        SearchSpace::Grid(g) => {
            let candidates = (0..g.len()).filter_map(|i| {
                let p = g.point(i);
                (norm2_diff(&p, &anchor) <= radius).then(|| (i, model.payoff(lambda, &anchor, &p)))
            });
            let (i, v) = argmin_first(candidates).expect("anchor lies in its own ball");
            Ok(ProxSolution::oracle(g.point(i), v))
        }
        SearchSpace::Box(b) => {
            let feasible = Feasible::BoxBall {
                bounds: b,
                center: &anchor,
                radius,
            };
            Ok(continuous_step(model, lambda, &anchor, &feasible, opts))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::Objective;
    use crate::quasi::QuasiDistance;
    use crate::resistance::Resistance;

    fn sq() -> ProximalModel {
        ProximalModel::new(
            Objective::quadratic(vec![0.0]),
            QuasiDistance::manhattan(),
            Resistance::Quadratic,
        )
    }

    fn grid5() -> SearchSpace {
        SearchSpace::grid(&[-2.0], &[2.0], &[5]).unwrap()
    }

    fn line() -> SearchSpace {
        SearchSpace::continuous(vec![-10.0], vec![10.0]).unwrap()
    }

    #[test]
    fn grid_prox_and_constrained_agree() {
        let a = Point::scalar(2.0);
        let s = exact_prox_step(&sq(), 1.0, &a, &grid5(), &InnerOptions::default()).unwrap();
        let c = exact_prox_step_constrained(&sq(), 1.0, &a, &grid5()).unwrap();
        assert_eq!(s.point[0], 1.0);
        assert_eq!(c.point, s.point);
    }

    #[test]
    fn min_over_worthwhile_example() {
        let (p, v) = min_over_worthwhile(&sq(), 1.0, &Point::scalar(2.0), &grid5()).unwrap();
        assert_eq!((p[0], v), (0.0, 0.0));
    }

    #[test]
    fn continuous_closed_form() {
        let s = exact_prox_step(
            &sq(),
            1.0,
            &Point::scalar(2.0),
            &line(),
            &InnerOptions::default(),
        )
        .unwrap();
        assert!((s.point[0] - 1.0).abs() < 1e-12, "{s:?}");
        assert!(s.converged);
    }

    #[test]
    fn huge_lambda_keeps_anchor() {
        let a = Point::scalar(2.0);
        let g = exact_prox_step(&sq(), 1e12, &a, &grid5(), &InnerOptions::default()).unwrap();
        assert_eq!(g.point, a);
    }

    #[test]
    fn local_step_hits_ball_boundary() {
        let a = Point::scalar(2.0);
        let s = local_prox_step(&sq(), 1.0, &a, 0.5, &line(), &InnerOptions::default()).unwrap();
        assert!((s.point[0] - 1.5).abs() < 1e-12, "{s:?}");
        assert!(local_prox_step(&sq(), 1.0, &a, 0.0, &line(), &InnerOptions::default()).is_err());
        let g = local_prox_step(&sq(), 1.0, &a, 0.5, &grid5(), &InnerOptions::default()).unwrap();
        assert_eq!(g.point, a);
    }

    #[test]
    fn rejects_bad_lambda_and_off_grid_anchor() {
        let opts = InnerOptions::default();
        assert!(exact_prox_step(&sq(), 0.0, &Point::scalar(2.0), &grid5(), &opts).is_err());
        assert!(exact_prox_step(&sq(), 1.0, &Point::scalar(0.3), &grid5(), &opts).is_err());
    }
}
