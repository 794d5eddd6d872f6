//! Brute-force oracles over finite grids. Ties resolve to the lowest grid index.

use crate::error::{Error, Result};
use crate::model::ProximalModel;
use crate::objective::Objective;
use crate::point::Point;
use crate::space::{Grid, SearchSpace};
use crate::worthwhile::worthwhile_indices;

/// First index attaining the minimum.
pub(crate) fn argmin_first(values: impl IntoIterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values {
        match best {
            Some((_, b)) if !(v < b) => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Every index attaining the minimum, ascending.
pub(crate) fn argmin_all(values: impl IntoIterator<Item = (usize, f64)>) -> Vec<usize> {
    let mut best = f64::INFINITY;
    let mut set = Vec::new();
    for (i, v) in values {
        if v < best {
            best = v;
            set.clear();
            set.push(i);
        } else if v == best {
            set.push(i);
        }
    }
    set
}

/// Global minimizer of f over a finite grid and its value.
pub fn solve_global(f: &Objective, space: &SearchSpace) -> Result<(Point, f64)> {
    let grid = space.require_grid("solve_global")?;
    let (i, v) = argmin_first((0..grid.len()).map(|i| (i, f.value(&grid.point(i)))))
        .ok_or(Error::EmptySpace)?;
    Ok((grid.point(i), v))
}

/// argmin over the grid of f(y) + λΓ(q(anchor, y)).
pub fn prox_argmin_set(
    model: &ProximalModel,
    lambda: f64,
    anchor: &[f64],
    grid: &Grid,
) -> Vec<usize> {
    argmin_all((0..grid.len()).map(|i| (i, model.payoff(lambda, anchor, &grid.point(i)))))
}

/// argmin over W_λ(anchor) ∩ grid of the same payoff.
pub fn constrained_prox_argmin_set(
    model: &ProximalModel,
    lambda: f64,
    anchor: &[f64],
    grid: &Grid,
) -> Vec<usize> {
    let members = worthwhile_indices(model, lambda, anchor, grid);
    argmin_all(
        members
            .into_iter()
            .map(|i| (i, model.payoff(lambda, anchor, &grid.point(i)))),
    )
}

/// argmin of f alone over W_λ(anchor) ∩ grid.
pub fn worthwhile_min_set(
    model: &ProximalModel,
    lambda: f64,
    anchor: &[f64],
    grid: &Grid,
) -> Vec<usize> {
    let members = worthwhile_indices(model, lambda, anchor, grid);
    argmin_all(
        members
            .into_iter()
            .map(|i| (i, model.value(&grid.point(i)))),
    )
}
