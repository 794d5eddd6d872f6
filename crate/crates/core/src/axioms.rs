//! Checks that a cost to change is a quasi-distance.
//!
//! Small grids are checked exhaustively over all ordered pairs and triples; larger
//! grids and boxes are sampled with an explicit seed so failures are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::point::Point;
use crate::quasi::QuasiDistance;
use crate::space::SearchSpace;

/// q(x,y) at or below this counts as zero for separation and identity.
pub const ZERO_TOLERANCE: f64 = 1e-12;
/// Relative slack on the triangle inequality, absorbing rounding in computed sums.
pub const TRIANGLE_TOLERANCE: f64 = 1e-12;
/// Grids with at most this many ordered triples are checked exhaustively.
pub const EXHAUSTIVE_TRIPLE_CAP: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub passed: bool,
    pub checked: u64,
    /// Offending pair (x, y) or triple (x, y, z).
    pub witness: Option<Vec<Point>>,
}

impl AxiomCheck {
    fn new() -> Self {
        AxiomCheck {
            passed: true,
            checked: 0,
            witness: None,
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Vec<Point>) {
        self.checked += 1;
        if !ok && self.passed {
            self.passed = false;
            self.witness = Some(witness());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub exhaustive: bool,
    pub samples: usize,
    pub seed: u64,
    pub finiteness: AxiomCheck,
    pub nonnegativity: AxiomCheck,
    pub identity: AxiomCheck,
    pub separation: AxiomCheck,
    pub triangle: AxiomCheck,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.finiteness.passed
            && self.nonnegativity.passed
            && self.identity.passed
            && self.separation.passed
            && self.triangle.passed
    }
}

fn triangle_holds(xz: f64, xy: f64, yz: f64) -> bool {
    let rhs = xy + yz;
    xz <= rhs + TRIANGLE_TOLERANCE * (1.0 + rhs.abs())
}

pub fn check_quasi_distance_axioms(
    q: &QuasiDistance,
    space: &SearchSpace,
    samples: usize,
    seed: u64,
) -> Result<AxiomReport> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    let mut report = AxiomReport {
        exhaustive: false,
        samples,
        seed,
        finiteness: AxiomCheck::new(),
        nonnegativity: AxiomCheck::new(),
        identity: AxiomCheck::new(),
        separation: AxiomCheck::new(),
        triangle: AxiomCheck::new(),
    };
    match space {
        SearchSpace::Grid(g) if g.len().saturating_pow(3) <= EXHAUSTIVE_TRIPLE_CAP => {
            report.exhaustive = true;
            let pts: Vec<Point> = g.points().collect();
            exhaustive(q, &pts, &mut report);
        }
        _ => sampled(q, space, samples, seed, &mut report),
    }
    Ok(report)
}

fn exhaustive(q: &QuasiDistance, pts: &[Point], report: &mut AxiomReport) {
    let n = pts.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = q.eval(&pts[i], &pts[j]);
            d[i * n + j] = v;
            check_pair(report, &pts[i], &pts[j], i == j, v);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let xy = d[i * n + j];
            if !xy.is_finite() {
                continue;
            }
            for k in 0..n {
                let (xz, yz) = (d[i * n + k], d[j * n + k]);
                if !xz.is_finite() || !yz.is_finite() {
                    continue;
                }
                report.triangle.record(triangle_holds(xz, xy, yz), || {
                    vec![pts[i].clone(), pts[j].clone(), pts[k].clone()]
                });
            }
        }
    }
}

fn check_pair(report: &mut AxiomReport, x: &Point, y: &Point, same: bool, v: f64) {
    let pair = || vec![x.clone(), y.clone()];
    report.finiteness.record(v.is_finite(), pair);
    if !v.is_finite() {
        return;
    }
    report.nonnegativity.record(v >= 0.0, pair);
    if same {
        report.identity.record(v.abs() <= ZERO_TOLERANCE, pair);
    } else {
        report.separation.record(v > ZERO_TOLERANCE, pair);
    }
}

fn sampled(
    q: &QuasiDistance,
    space: &SearchSpace,
    samples: usize,
    seed: u64,
    report: &mut AxiomReport,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Point {
        match space {
            SearchSpace::Grid(g) => g.point(rng.gen_range(0..g.len())),
            SearchSpace::Box(b) => {
                let u: Vec<f64> = (0..b.dim()).map(|_| rng.gen::<f64>()).collect();
                b.from_unit(&u)
            }
        }
    };
    for _ in 0..samples {
        let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        check_pair(report, &x, &x, true, q.eval(&x, &x));
        let same_xy = x == y;
        let xy = q.eval(&x, &y);
        check_pair(report, &x, &y, same_xy, xy);
        if let SearchSpace::Box(b) = space {
            // nearby pairs probe separation at small scales
            for scale in [1e-3, 1e-6] {
                let mut near = y.clone().into_inner();
                for (c, (lo, hi)) in near.iter_mut().zip(b.lower().iter().zip(b.upper())) {
                    let step = scale * (hi - lo);
                    *c = if *c + step <= *hi {
                        *c + step
                    } else {
                        *c - step
                    };
                }
                let near = Point::new(near).expect("finite");
                let v = q.eval(&y, &near);
                check_pair(report, &y, &near, y == near, v);
            }
        }
        let (xz, yz) = (q.eval(&x, &z), q.eval(&y, &z));
        if xy.is_finite() && xz.is_finite() && yz.is_finite() {
            report.triangle.record(triangle_holds(xz, xy, yz), || {
                vec![x.clone(), y.clone(), z.clone()]
            });
        }
    }
}

/// Sampled check of c₁‖x − y‖ ≤ q(x, y) ≤ c₂‖x − y‖ (costs comparable to the
/// ambient norm).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparabilityReport {
    pub c1: f64,
    pub c2: f64,
    pub check: AxiomCheck,
}

pub fn check_comparability(
    q: &QuasiDistance,
    space: &SearchSpace,
    c1: f64,
    c2: f64,
    samples: usize,
    seed: u64,
) -> Result<ComparabilityReport> {
    if !(c1 > 0.0 && c2 >= c1) {
        return Err(invalid("c1/c2", "need 0 < c1 ≤ c2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = AxiomCheck::new();
    for _ in 0..samples {
        let (x, y) = match space {
            SearchSpace::Grid(g) => (
                g.point(rng.gen_range(0..g.len())),
                g.point(rng.gen_range(0..g.len())),
            ),
            SearchSpace::Box(b) => {
                let mut pick = || {
                    let u: Vec<f64> = (0..b.dim()).map(|_| rng.gen::<f64>()).collect();
                    b.from_unit(&u)
                };
                (pick(), pick())
            }
        };
        let r = x.distance(&y);
        let v = q.eval(&x, &y);
        check.record(c1 * r <= v && v <= c2 * r, || vec![x.clone(), y.clone()]);
    }
    Ok(ComparabilityReport { c1, c2, check })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_passes_on_grid() {
        let space = SearchSpace::grid(&[-1.0, 0.0], &[1.0, 2.0], &[4, 3]).unwrap();
        let r = check_quasi_distance_axioms(&QuasiDistance::euclidean(), &space, 1, 0).unwrap();
        assert!(r.exhaustive);
        assert!(r.all_passed(), "{r:?}");
    }

    #[test]
    fn broken_shift_fails_separation_with_first_witness() {
        let space = SearchSpace::grid(&[0.0], &[0.1], &[3]).unwrap();
        let r = check_quasi_distance_axioms(&QuasiDistance::shifted(0.1).unwrap(), &space, 1, 0)
            .unwrap();
        assert!(!r.separation.passed);
        let w = r.separation.witness.unwrap();
        assert_eq!((w[0][0], w[1][0]), (0.0, 0.05));
    }

    #[test]
    fn non_finite_is_reported_not_panicked() {
        let q = QuasiDistance::from_fn(|x, y| {
            if x[0] < y[0] {
                f64::INFINITY
            } else {
                x[0] - y[0]
            }
        });
        let space = SearchSpace::grid(&[0.0], &[1.0], &[3]).unwrap();
        let r = check_quasi_distance_axioms(&q, &space, 1, 0).unwrap();
        assert!(!r.finiteness.passed);
        assert!(r.finiteness.witness.is_some());
    }

    #[test]
    fn sampled_mode_is_deterministic() {
        let space = SearchSpace::continuous(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let q = QuasiDistance::asymmetric(3.0, 0.5).unwrap();
        let a = check_quasi_distance_axioms(&q, &space, 200, 9).unwrap();
        let b = check_quasi_distance_axioms(&q, &space, 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(!a.exhaustive);
        assert!(a.all_passed());
        assert!(check_quasi_distance_axioms(&q, &space, 0, 9).is_err());
    }

    #[test]
    fn comparability_bounds() {
        let space = SearchSpace::continuous(vec![-1.0], vec![1.0]).unwrap();
        let q = QuasiDistance::asymmetric(2.0, 1.0).unwrap();
        assert!(
            check_comparability(&q, &space, 1.0, 2.0, 100, 1)
                .unwrap()
                .check
                .passed
        );
        assert!(
            !check_comparability(&q, &space, 1.5, 2.0, 100, 1)
                .unwrap()
                .check
                .passed
        );
    }
}
