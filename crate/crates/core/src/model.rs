//! The proximal payoff P_λ(x, y) = f(y) + λ·Γ(q(x, y)).

use crate::numdiff;
use crate::objective::Objective;
use crate::quasi::QuasiDistance;
use crate::resistance::Resistance;

/// Objective, cost to change and resistance profile bundled together. Every solver
/// and the worthwhile engine works on this triple.
#[derive(Clone, Debug)]
pub struct ProximalModel {
    pub objective: Objective,
    pub distance: QuasiDistance,
    pub resistance: Resistance,
}

impl ProximalModel {
    pub fn new(objective: Objective, distance: QuasiDistance, resistance: Resistance) -> Self {
        ProximalModel {
            objective,
            distance,
            resistance,
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.objective.value(y)
    }

    pub fn cost(&self, anchor: &[f64], y: &[f64]) -> f64 {
        self.distance.eval(anchor, y)
    }

    /// Γ(q(anchor, y)).
    pub fn resistance_cost(&self, anchor: &[f64], y: &[f64]) -> f64 {
        self.resistance.gamma(self.cost(anchor, y))
    }

    /// f(y) + λ·Γ(q(anchor, y)); +∞ is absorbing and Γ = 0 contributes nothing,
    /// so the payoff at the anchor is exactly f(anchor).
    pub fn payoff(&self, lambda: f64, anchor: &[f64], y: &[f64]) -> f64 {
        let fy = self.objective.value(y);
        if fy == f64::INFINITY {
            return f64::INFINITY;
        }
        let r = self.resistance_cost(anchor, y);
        if r == 0.0 {
            fy
        } else {
            fy + lambda * r
        }
    }

    /// Gradient in y of Γ(q(anchor, y)), analytic when q supplies one.
    pub fn resistance_gradient(&self, anchor: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        match self.distance.analytic_grad_y(anchor, y) {
            Some(gq) => {
                if gq.iter().all(|c| *c == 0.0) {
                    return Some(gq);
                }
                let slope = self.resistance.derivative(self.cost(anchor, y));
                let g: Vec<f64> = gq.iter().map(|c| slope * c).collect();
                g.iter().all(|c| c.is_finite()).then_some(g)
            }
            None => numdiff::central_gradient(|z| self.resistance_cost(anchor, z), y),
        }
    }

    pub fn payoff_gradient(&self, lambda: f64, anchor: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let gf = self.objective.subgradient(y)?;
        let gr = self.resistance_gradient(anchor, y)?;
        Some(gf.iter().zip(&gr).map(|(a, b)| a + lambda * b).collect())
    }

    /// Upper estimate of ‖∂_y Γ(q(anchor, ·))(y)‖ (without the λ factor).
    pub fn marginal_resistance(&self, anchor: &[f64], y: &[f64]) -> Option<f64> {
        let slope_q = self.distance.slope_bound_y(anchor, y)?;
        let d = self.resistance.derivative(self.cost(anchor, y));
        let m = if slope_q == 0.0 { 0.0 } else { d * slope_q };
        m.is_finite().then_some(m)
    }
}

/// f(y) + λ·Γ(q(anchor, y)) for loose components.
pub fn proximal_payoff(
    f: &Objective,
    q: &QuasiDistance,
    gamma: &Resistance,
    lambda: f64,
    anchor: &[f64],
    y: &[f64],
) -> f64 {
    let fy = f.value(y);
    if fy == f64::INFINITY {
        return f64::INFINITY;
    }
    let r = gamma.gamma(q.eval(anchor, y));
    if r == 0.0 {
        fy
    } else {
        fy + lambda * r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_model() -> ProximalModel {
        ProximalModel::new(
            Objective::quadratic(vec![0.0]),
            QuasiDistance::manhattan(),
            Resistance::Quadratic,
        )
    }

    #[test]
    fn payoff_at_anchor_is_objective() {
        let m = sq_model();
        assert_eq!(m.payoff(3.0, &[2.0], &[2.0]), 4.0);
    }

    #[test]
    fn payoff_hand_computed() {
        // f(1) + 1·Γ(|2 − 1|) = 1 + 1
        let m = sq_model();
        assert_eq!(m.payoff(1.0, &[2.0], &[1.0]), 2.0);
        assert_eq!(
            proximal_payoff(
                &m.objective,
                &m.distance,
                &m.resistance,
                1.0,
                &[2.0],
                &[1.0]
            ),
            2.0
        );
    }

    #[test]
    fn infinite_objective_propagates() {
        let m = ProximalModel::new(
            Objective::from_fn("inf", |_| f64::INFINITY),
            QuasiDistance::euclidean(),
            Resistance::Linear,
        );
        assert_eq!(m.payoff(1.0, &[0.0], &[1.0]), f64::INFINITY);
    }

    #[test]
    fn payoff_gradient_matches_first_order_condition() {
        let m = sq_model();
        // d/dy [y² + (y − 2)²] at y = 1 is 2 − 2 = 0
        assert_eq!(m.payoff_gradient(1.0, &[2.0], &[1.0]).unwrap(), vec![0.0]);
        assert_eq!(m.marginal_resistance(&[0.02], &[0.01]), Some(0.02));
        assert_eq!(m.marginal_resistance(&[1.0], &[1.0]), Some(0.0));
    }

    #[test]
    fn fd_fallback_for_custom_distance() {
        let m = ProximalModel::new(
            Objective::quadratic(vec![0.0]),
            QuasiDistance::from_fn(|x, y| (x[0] - y[0]).abs()),
            Resistance::Quadratic,
        );
        let g = m.resistance_gradient(&[2.0], &[1.0]).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-6);
    }
}
