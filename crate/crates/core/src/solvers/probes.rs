//! Numerical probes of structural claims: non-expansiveness of the proximal map for
//! convex objectives, and the Kurdyka–Łojasiewicz inequality near a minimizer.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ProximalModel;
use crate::objective::Objective;
use crate::point::{norm2, norm2_diff, Point};
use crate::solvers::descent::InnerOptions;
use crate::solvers::prox::exact_prox_step;
use crate::space::SearchSpace;

/// Ratios above 1 + this count as expansion.
pub const EXPANSION_TOLERANCE: f64 = 1e-6;

/// Relative slack on the KL comparison when ∂f comes from finite differences.
pub const KL_NUMERIC_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub probe: String,
    /// Samples actually evaluated (degenerate ones are skipped).
    pub checked: usize,
    pub skipped: usize,
    pub passed: usize,
    /// Largest expansion ratio, or smallest KL margin. `None` when nothing was checked.
    pub worst: Option<f64>,
    pub witness: Option<Vec<Point>>,
}

impl ProbeReport {
    fn new(probe: &str) -> Self {
        ProbeReport {
            probe: probe.to_string(),
            checked: 0,
            skipped: 0,
            passed: 0,
            worst: None,
            witness: None,
        }
    }

    /// Every checked sample passed (vacuously true when none were checked).
    pub fn pass(&self) -> bool {
        self.passed == self.checked
    }
}

/// Max of ‖φ_λ(x′) − φ_λ(x)‖ / ‖x′ − x‖ over the pairs, where φ_λ is the exact
/// prox map on a box.
///
/// Refuses unless f is flagged convex, Γ is quadratic and q is the Euclidean norm.
pub fn nonexpansiveness_probe(
    model: &ProximalModel,
    lambda: f64,
    pairs: &[(Point, Point)],
    space: &SearchSpace,
    opts: &InnerOptions,
) -> Result<ProbeReport> {
    if !model.objective.flags().convex {
        return Err(Error::ProbeRefused(
            "objective is not flagged convex".into(),
        ));
    }
    if !model.resistance.is_quadratic() {
        return Err(Error::ProbeRefused("resistance must be quadratic".into()));
    }
    if !model.distance.is_euclidean_in(space.dim()) {
        return Err(Error::ProbeRefused(
            "cost to change must be the Euclidean norm".into(),
        ));
    }
    if space.is_finite() {
        return Err(Error::Unsupported(
            "non-expansiveness needs a continuous space; the grid prox map is discontinuous".into(),
        ));
    }
    let mut report = ProbeReport::new("nonexpansiveness");
    for (x, x2) in pairs {
        let d = norm2_diff(x, x2);
        if d == 0.0 {
            report.skipped += 1;
            continue;
        }
        let p = exact_prox_step(model, lambda, x, space, opts)?.point;
        let p2 = exact_prox_step(model, lambda, x2, space, opts)?.point;
        let ratio = norm2_diff(&p, &p2) / d;
        report.checked += 1;
        if ratio <= 1.0 + EXPANSION_TOLERANCE {
            report.passed += 1;
        } else if report.witness.is_none() {
            report.witness = Some(vec![x.clone(), x2.clone()]);
        }
        if report.worst.is_none_or(|w| ratio > w) {
            report.worst = Some(ratio);
        }
    }
    Ok(report)
}

/// Checks φ′(f(x) − f*)·‖∂f(x)‖ ≥ 1 with φ(s) = c·s^{1−θ} at each sample, θ taken
/// from the objective's KL flag and f* = f(minimizer).
///
/// The comparison is evaluated as c(1−θ)‖∂f‖ ≥ s^θ; the reported margin is
/// lhs/rhs − 1. Without an analytic gradient a sample passes at margin
/// ≥ −`KL_NUMERIC_TOLERANCE`.
pub fn kl_inequality_probe(
    objective: &Objective,
    minimizer: &Point,
    samples: &[Point],
    c: f64,
) -> Result<ProbeReport> {
    let theta = objective
        .flags()
        .kl_exponent
        .ok_or_else(|| Error::ProbeRefused("objective has no KL exponent".into()))?;
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::ProbeRefused(format!(
            "KL exponent {theta} outside [0, 1)"
        )));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(crate::error::invalid("c", "must be positive"));
    }
    let f_star = objective.value(minimizer);
    let slack = if objective.has_gradient() {
        0.0
    } else {
        KL_NUMERIC_TOLERANCE
    };
    let mut report = ProbeReport::new("kl-inequality");
    for x in samples {
        let s = objective.value(x) - f_star;
        if !(s > 0.0) || !s.is_finite() {
            report.skipped += 1;
            continue;
        }
        let Some(g) = objective.subgradient(x) else {
            report.skipped += 1;
            continue;
        };
        let lhs = c * (1.0 - theta) * norm2(&g);
        let rhs = if theta == 0.0 {
            1.0
        } else if theta == 0.5 {
            s.sqrt()
        } else {
            s.powf(theta)
        };
        report.checked += 1;
        if lhs >= rhs * (1.0 - slack) {
            report.passed += 1;
        } else if report.witness.is_none() {
            report.witness = Some(vec![x.clone()]);
        }
        let margin = lhs / rhs - 1.0;
        if report.worst.is_none_or(|w| margin < w) {
            report.worst = Some(margin);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::ObjectiveFlags;
    use crate::quasi::QuasiDistance;
    use crate::resistance::Resistance;

    fn line() -> SearchSpace {
        SearchSpace::continuous(vec![-10.0], vec![10.0]).unwrap()
    }

    fn pairs() -> Vec<(Point, Point)> {
        vec![
            (Point::scalar(1.0), Point::scalar(3.0)),
            (Point::scalar(-4.0), Point::scalar(2.5)),
            (Point::scalar(0.5), Point::scalar(0.5)),
        ]
    }

    #[test]
    fn quadratic_halves_distances() {
        let m = ProximalModel::new(
            Objective::quadratic(vec![0.0]),
            QuasiDistance::euclidean(),
            Resistance::Quadratic,
        );
        let r =
            nonexpansiveness_probe(&m, 1.0, &pairs(), &line(), &InnerOptions::default()).unwrap();
        assert_eq!((r.checked, r.skipped), (2, 1));
        assert!((r.worst.unwrap() - 0.5).abs() < 1e-10, "{r:?}");
        assert!(r.pass());
    }

    #[test]
    fn linear_objective_translates() {
        let m = ProximalModel::new(
            Objective::linear(vec![1.0]),
            QuasiDistance::euclidean(),
            Resistance::Quadratic,
        );
        let r =
            nonexpansiveness_probe(&m, 1.0, &pairs(), &line(), &InnerOptions::default()).unwrap();
        assert!((r.worst.unwrap() - 1.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn refuses_nonconvex() {
        let m = ProximalModel::new(
            Objective::double_well(1),
            QuasiDistance::euclidean(),
            Resistance::Quadratic,
        );
        let e = nonexpansiveness_probe(&m, 1.0, &pairs(), &line(), &InnerOptions::default());
        assert!(matches!(e, Err(Error::ProbeRefused(_))));
    }

    #[test]
    fn kl_quadratic_and_absolute() {
        let samples: Vec<Point> = [-3.0, -0.1, 0.0, 0.7, 5.0]
            .iter()
            .map(|&x| Point::scalar(x))
            .collect();
        let origin = Point::scalar(0.0);
        let q =
            kl_inequality_probe(&Objective::quadratic(vec![0.0]), &origin, &samples, 1.0).unwrap();
        assert_eq!((q.checked, q.skipped), (4, 1));
        assert!(q.pass() && q.worst.unwrap() >= 0.0, "{q:?}");
        let a =
            kl_inequality_probe(&Objective::absolute(vec![0.0]), &origin, &samples, 1.0).unwrap();
        assert!(a.pass());
        let weak =
            kl_inequality_probe(&Objective::quadratic(vec![0.0]), &origin, &samples, 0.5).unwrap();
        assert!(!weak.pass() && weak.witness.is_some());
    }

    #[test]
    fn kl_empty_is_vacuous() {
        let r = kl_inequality_probe(
            &Objective::quadratic(vec![0.0]),
            &Point::scalar(0.0),
            &[],
            1.0,
        )
        .unwrap();
        assert!(r.pass());
        assert_eq!(r.worst, None);
        let flagless =
            Objective::from_fn("g", |x| x[0] * x[0]).with_flags(ObjectiveFlags::default());
        assert!(kl_inequality_probe(&flagless, &Point::scalar(0.0), &[], 1.0).is_err());
    }
}
