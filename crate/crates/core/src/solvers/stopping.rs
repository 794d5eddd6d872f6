//! First-order stopping rule: halt once the marginal decrease of f no longer beats
//! the marginal resistance to change.

use serde::Serialize;

use crate::model::ProximalModel;
use crate::point::norm2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StopRuleCheck {
    pub fires: bool,
    pub subgradient_norm: Option<f64>,
    /// λ·factor times the marginal resistance estimate.
    pub resistance_bound: Option<f64>,
    /// The subgradient or the marginal resistance could not be computed; the rule
    /// abstains.
    pub abstained: bool,
}

/// ‖∂f‖ ≤ bound, with exact comparison.
pub fn stopping_rule_fires(subgradient: &[f64], resistance_bound: f64) -> bool {
    norm2(subgradient) <= resistance_bound
}

/// Evaluates the rule at `candidate` with bound factor·λ·‖∂_y Γ(q(anchor, ·))‖.
pub fn stopping_rule(
    model: &ProximalModel,
    lambda: f64,
    anchor: &[f64],
    candidate: &[f64],
    factor: f64,
) -> StopRuleCheck {
    let g = model.objective.subgradient(candidate);
    let m = model.marginal_resistance(anchor, candidate);
    match (g, m) {
        (Some(g), Some(m)) => {
            let bound = factor * lambda * m;
            StopRuleCheck {
                fires: stopping_rule_fires(&g, bound),
                subgradient_norm: Some(norm2(&g)),
                resistance_bound: Some(bound),
                abstained: false,
            }
        }
        (g, m) => StopRuleCheck {
            fires: false,
            subgradient_norm: g.map(|g| norm2(&g)),
            resistance_bound: m.map(|m| factor * lambda * m),
            abstained: true,
        },
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

    #[test]
    fn fires_at_equality() {
        let c = stopping_rule(&sq(), 1.0, &[0.02], &[0.01], 1.0);
        assert!(c.fires);
        assert_eq!(c.subgradient_norm, Some(0.02));
        assert_eq!(c.resistance_bound, Some(0.02));
    }

    #[test]
    fn at_anchor_needs_stationarity() {
        assert!(!stopping_rule(&sq(), 1.0, &[1.0], &[1.0], 1.0).fires);
        assert!(stopping_rule(&sq(), 1.0, &[0.0], &[0.0], 1.0).fires);
    }

    #[test]
    fn large_gradient_small_bound() {
        assert!(!stopping_rule(&sq(), 1e-6, &[5.0], &[4.0], 1.0).fires);
        assert!(!stopping_rule_fires(&[3.0, 4.0], 4.9));
    }

    #[test]
    fn abstains_when_fd_breaks() {
        let m = ProximalModel::new(
            Objective::from_fn("wall", |x| if x[0] > 0.0 { f64::INFINITY } else { -x[0] }),
            QuasiDistance::euclidean(),
            Resistance::Quadratic,
        );
        let c = stopping_rule(&m, 1.0, &[-1.0], &[0.0], 1.0);
        assert!(c.abstained && !c.fires);
    }
}
