//! Seeded random finite-grid instances and the brute-force property checks run on
//! them (prox equivalence, sandwich bound, trap monotonicity).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::ProximalModel;
use crate::objective::Objective;
use crate::point::Point;
use crate::quasi::{shortest_path_closure, QuasiDistance};
use crate::resistance::Resistance;
use crate::solvers::grid::{constrained_prox_argmin_set, prox_argmin_set, worthwhile_min_set};
use crate::space::{Grid, SearchSpace};
use crate::worthwhile::trap_stability_sweep;

pub const INSTANCE_LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Clone, Debug)]
pub struct GridInstance {
    pub seed: u64,
    pub grid: Grid,
    pub model: ProximalModel,
    pub lambda: f64,
    pub anchor: Point,
}

impl GridInstance {
    pub fn space(&self) -> SearchSpace {
        SearchSpace::Grid(self.grid.clone())
    }
}

/// A random instance on [0, 1] or [0, 1]²: table objective with values uniform in
/// [0, 10], table cost built from weights k/8 (k ∈ 1..=32) closed under shortest
/// paths, Γ linear or quadratic, λ ∈ {0.1, 1, 10} and a random anchor.
///
/// The dyadic weights make every path sum exact, so the triangle inequality holds
/// exactly and the cost is asymmetric in general.
pub fn random_grid_instance(seed: u64) -> GridInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = if rng.gen_bool(0.5) {
        let n = rng.gen_range(3..=12);
        Grid::uniform(&[0.0], &[1.0], &[n])
    } else {
        let a = rng.gen_range(2..=5);
        let b = rng.gen_range(2..=5);
        Grid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[a, b])
    }
    .expect("valid grid");
    let n = grid.len();
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=10.0)).collect();
    let mut costs: Vec<f64> = (0..n * n)
        .map(|_| rng.gen_range(1..=32) as f64 / 8.0)
        .collect();
    shortest_path_closure(n, &mut costs);
    let resistance = if rng.gen_bool(0.5) {
        Resistance::Linear
    } else {
        Resistance::Quadratic
    };
    let lambda = INSTANCE_LAMBDAS[rng.gen_range(0..INSTANCE_LAMBDAS.len())];
    let anchor = grid.point(rng.gen_range(0..n));
    let model = ProximalModel::new(
        Objective::table(grid.clone(), values).expect("one value per point"),
        QuasiDistance::table(grid.clone(), costs).expect("n² costs"),
        resistance,
    );
    GridInstance {
        seed,
        grid,
        model,
        lambda,
        anchor,
    }
}

/// Unconstrained and W-constrained prox argmin sets coincide.
pub fn check_prox_equivalence(inst: &GridInstance) -> bool {
    let a = prox_argmin_set(&inst.model, inst.lambda, &inst.anchor, &inst.grid);
    let b = constrained_prox_argmin_set(&inst.model, inst.lambda, &inst.anchor, &inst.grid);
    !a.is_empty() && a == b
}

/// inf f ≤ f(x₅) ≤ f(x₂), x₅ minimizing f over W and x₂ the exact prox step.
pub fn check_sandwich(inst: &GridInstance) -> bool {
    let g = &inst.grid;
    let m = &inst.model;
    let f_inf = g
        .points()
        .map(|p| m.value(&p))
        .fold(f64::INFINITY, f64::min);
    let x5 = g.point(worthwhile_min_set(m, inst.lambda, &inst.anchor, g)[0]);
    let x2 = g.point(prox_argmin_set(m, inst.lambda, &inst.anchor, g)[0]);
    f_inf <= m.value(&x5) && m.value(&x5) <= m.value(&x2)
}

/// λ values 10⁻⁶, 10⁻⁵, …, 10⁶.
pub fn monotonicity_lambdas() -> Vec<f64> {
    (-6..=6).map(|e| 10f64.powi(e)).collect()
}

/// Trap status of the anchor across ascending λ flips false→true at most once.
pub fn check_trap_monotonicity(inst: &GridInstance) -> bool {
    match trap_stability_sweep(
        &inst.model,
        &inst.anchor,
        &inst.space(),
        &monotonicity_lambdas(),
    ) {
        Ok(reports) => {
            let flips = reports
                .windows(2)
                .filter(|w| w[0].is_trap != w[1].is_trap)
                .count();
            flips <= 1 && reports.windows(2).all(|w| !w[0].is_trap || w[1].is_trap)
        }
        Err(_) => false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyTally {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    /// Seeds of failing instances.
    pub failing_seeds: Vec<u64>,
}

impl PropertyTally {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }

    /// "name: passed/total pass".
    pub fn summary_line(&self) -> String {
        format!("{}: {}/{} pass", self.name, self.passed, self.total)
    }
}

/// Runs `check` on instances seeded `base_seed, base_seed + 1, …`.
pub fn tally(
    name: &str,
    instances: usize,
    base_seed: u64,
    check: impl Fn(&GridInstance) -> bool,
) -> PropertyTally {
    let mut failing = Vec::new();
    for i in 0..instances as u64 {
        let seed = base_seed.wrapping_add(i);
        if !check(&random_grid_instance(seed)) {
            failing.push(seed);
        }
    }
    PropertyTally {
        name: name.to_string(),
        passed: instances - failing.len(),
        total: instances,
        failing_seeds: failing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::check_quasi_distance_axioms;

    #[test]
    fn instances_are_deterministic_and_valid() {
        let a = random_grid_instance(7);
        let b = random_grid_instance(7);
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.anchor, b.anchor);
        let r = check_quasi_distance_axioms(&a.model.distance, &a.space(), 1, 0).unwrap();
        assert!(r.exhaustive && r.all_passed(), "{r:?}");
    }

    #[test]
    fn checks_pass_on_a_few_seeds() {
        for s in 0..10 {
            let inst = random_grid_instance(s);
            assert!(check_prox_equivalence(&inst));
            assert!(check_sandwich(&inst));
            assert!(check_trap_monotonicity(&inst));
        }
        assert_eq!(tally("x", 3, 0, |_| true).summary_line(), "x: 3/3 pass");
    }
}
