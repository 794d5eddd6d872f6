//! Proximal-point problems with quasi-distance costs to change and resistance
//! profiles Γ: worthwhile-to-change sets, variational traps, exact and inexact
//! proximal iterations, and habit-formation diagnostics.
//!
//! ```
//! use vrprox::{exact_prox_step, InnerOptions, Objective, Point, ProximalModel, QuasiDistance, Resistance, SearchSpace};
//!
//! let model = ProximalModel::new(Objective::quadratic(vec![0.0]), QuasiDistance::manhattan(), Resistance::Quadratic);
//! let space = SearchSpace::grid(&[-2.0], &[2.0], &[5]).unwrap();
//! let step = exact_prox_step(&model, 1.0, &Point::scalar(2.0), &space, &InnerOptions::default()).unwrap();
//! assert_eq!(step.point, Point::scalar(1.0));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod axioms;
pub mod dynamics;
pub mod error;
pub mod experience;
pub mod lowdisc;
pub mod model;
pub mod numdiff;
pub mod objective;
pub mod point;
pub mod quasi;
pub mod resistance;
pub mod schedule;
pub mod solvers;
pub mod space;
pub mod testbed;
pub mod worthwhile;

pub use axioms::{
    check_comparability, check_quasi_distance_axioms, AxiomCheck, AxiomReport, ComparabilityReport,
};
pub use dynamics::{
    lambda_sensitivity_sweep, run_habit_experiment, HabitDiagnostics, SweepRow, ToleranceHit,
};
pub use error::{Error, Result};
pub use experience::{ExperienceModel, ExperienceWeight, History};
pub use model::{proximal_payoff, ProximalModel};
pub use objective::{Objective, ObjectiveFlags};
pub use point::Point;
pub use quasi::{QuasiDistance, QuasiKind};
pub use resistance::{RegularityReport, Resistance};
pub use schedule::{ProximalSchedule, Sequence};
pub use solvers::*;
pub use space::{BoxSpace, Grid, SearchSpace};
pub use worthwhile::{
    is_worthwhile, trap_stability_sweep, worthwhile_indices, TrapReport, TrapSampling,
    WorthwhileSpec,
};
