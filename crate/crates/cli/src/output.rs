//! File writers. All outputs are UTF-8 with a fixed field order, so
//! identical runs give identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use vrprox::{HabitDiagnostics, SolverResult};

use crate::error::CliError;

/// Header of every `<run>.plot.csv`.
pub const PLOT_HEADER: [&str; 6] = [
    "k",
    "f",
    "step_cost",
    "cumulative_cost",
    "lambda_k",
    "worthwhile",
];

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// One `StepRecord` per line.
pub fn write_trajectory(result: &SolverResult, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    for step in &result.steps {
        serde_json::to_writer(&mut w, step).map_err(|e| CliError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// CSV with columns `k,f,step_cost,cumulative_cost,lambda_k,worthwhile`, one row per
/// step; `f` is the objective after the step.
pub fn emit_plot_data(
    result: &SolverResult,
    diagnostics: &HabitDiagnostics,
    path: &Path,
) -> Result<(), CliError> {
    if result.steps.is_empty() {
        return Err(CliError::Run {
            run: path.display().to_string(),
            message: "cannot plot an empty result".into(),
        });
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    let csv_err = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(PLOT_HEADER).map_err(csv_err)?;
    for (i, s) in result.steps.iter().enumerate() {
        let cumulative = diagnostics
            .cumulative_cost
            .get(i)
            .copied()
            .unwrap_or(f64::NAN);
        w.write_record([
            s.k.to_string(),
            s.f_after.to_string(),
            s.step_cost.to_string(),
            cumulative.to_string(),
            s.lambda_k.to_string(),
            s.worthwhile.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vrprox::*;

    fn quadratic_run(steps: usize) -> SolverResult {
        let m = ProximalModel::new(
            Objective::quadratic(vec![0.0]),
            QuasiDistance::manhattan(),
            Resistance::Quadratic,
        );
        let space = SearchSpace::continuous(vec![-10.0], vec![10.0]).unwrap();
        let sched = ProximalSchedule::exact(Sequence::Constant(1.0), steps);
        inexact_prox_run(
            &m,
            &sched,
            &Point::scalar(8.0),
            &space,
            &ProposalPolicy::ExactInnerMin,
            &RunOptions::default(),
        )
        .unwrap()
    }

    fn rows(path: &Path) -> Vec<csv::StringRecord> {
        let mut r = csv::Reader::from_path(path).unwrap();
        assert_eq!(r.headers().unwrap(), PLOT_HEADER.as_slice());
        r.records().map(|x| x.unwrap()).collect()
    }

    #[test]
    fn three_steps_give_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let r = quadratic_run(3);
        let d = HabitDiagnostics::from_result(&r, Some(0.0));
        let p = dir.path().join("a.plot.csv");
        emit_plot_data(&r, &d, &p).unwrap();
        let rows = rows(&p);
        assert_eq!(rows.len(), 3);
        // x: 8 → 4 → 2 → 1.
        assert_eq!(&rows[0][1], "16");
        assert_eq!(&rows[2][3], "7");
    }

    #[test]
    fn step_cost_column_is_geometric() {
        let dir = tempfile::tempdir().unwrap();
        let r = quadratic_run(30);
        let d = HabitDiagnostics::from_result(&r, Some(0.0));
        let p = dir.path().join("g.plot.csv");
        emit_plot_data(&r, &d, &p).unwrap();
        let costs: Vec<f64> = rows(&p).iter().map(|r| r[2].parse().unwrap()).collect();
        for w in costs.windows(2) {
            assert!((w[1] / w[0] - 0.5).abs() <= 1e-10);
        }
    }

    #[test]
    fn trap_at_start_is_one_zero_cost_row() {
        let dir = tempfile::tempdir().unwrap();
        let m = ProximalModel::new(
            Objective::quadratic(vec![0.0]),
            QuasiDistance::euclidean(),
            Resistance::Linear,
        );
        let space = SearchSpace::grid(&[-2.0], &[2.0], &[5]).unwrap();
        let sched = ProximalSchedule::exact(Sequence::Constant(1.0), 10);
        let r = inexact_prox_run(
            &m,
            &sched,
            &Point::scalar(0.0),
            &space,
            &ProposalPolicy::ExactInnerMin,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(r.stop_reason, StopReason::TrapReached);
        let d = HabitDiagnostics::from_result(&r, None);
        let p = dir.path().join("t.plot.csv");
        emit_plot_data(&r, &d, &p).unwrap();
        let rows = rows(&p);
        assert_eq!(rows.len(), 1);
        assert_eq!(&rows[0][2], "0");
    }

    #[test]
    fn unwritable_path_errors() {
        let r = quadratic_run(2);
        let d = HabitDiagnostics::from_result(&r, None);
        let err = emit_plot_data(&r, &d, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn trajectory_has_one_line_per_step() {
        let dir = tempfile::tempdir().unwrap();
        let r = quadratic_run(4);
        let p = dir.path().join("a.trajectory.jsonl");
        write_trajectory(&r, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let back: Vec<StepRecord> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(back, r.steps);
    }
}
