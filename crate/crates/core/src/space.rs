//! Search spaces: continuous boxes and finite grids.
//!
//! Grid points are ordered lexicographically by their per-axis indices with the
//! first axis most significant. Every tie-break in the crate follows this order.

use crate::error::{Error, Result};
use crate::point::Point;

/// Default cap on the number of points a finite grid may enumerate.
pub const DEFAULT_GRID_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BoxSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        Ok(BoxSpace { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Map a point of the unit cube into the box.
    pub fn from_unit(&self, u: &[f64]) -> Point {
        let coords = u
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| lo + t * (hi - lo))
            .collect();
        Point::new(coords).expect("box bounds are finite")
    }

    pub fn diameter(&self) -> f64 {
        crate::point::norm2_diff(&self.lower, &self.upper)
    }
}

/// A finite tensor grid. Each axis holds strictly ascending values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    /// Uniform grid with `resolution[d]` points on axis `d`, endpoints included.
    pub fn uniform(lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<Self> {
        Self::uniform_with_cap(lower, upper, resolution, DEFAULT_GRID_CAP)
    }

    pub fn uniform_with_cap(
        lower: &[f64],
        upper: &[f64],
        resolution: &[usize],
        cap: usize,
    ) -> Result<Self> {
        check_bounds(lower, upper)?;
        if resolution.len() != lower.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: resolution.len(),
            });
        }
        let axes = lower
            .iter()
            .zip(upper)
            .zip(resolution)
            .map(|((&lo, &hi), &n)| {
                if n < 2 {
                    return Err(Error::InvalidSpace(format!(
                        "uniform grid needs at least 2 points per axis, got {n}"
                    )));
                }
                let last = (n - 1) as f64;
                Ok((0..n)
                    .map(|i| {
                        if i + 1 == n {
                            hi
                        } else {
                            lo + (hi - lo) * (i as f64) / last
                        }
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::from_axes_with_cap(axes, cap)
    }

    /// Grid from explicit per-axis values.
    pub fn from_axes(axes: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_axes_with_cap(axes, DEFAULT_GRID_CAP)
    }

    pub fn from_axes_with_cap(axes: Vec<Vec<f64>>, cap: usize) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidSpace("grid needs at least one axis".into()));
        }
        for (d, axis) in axes.iter().enumerate() {
            if axis.is_empty() {
                return Err(Error::EmptySpace);
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpace(format!(
                    "axis {d} has a non-finite value"
                )));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidSpace(format!(
                    "axis {d} values must be strictly ascending"
                )));
            }
        }
        let mut len: usize = 1;
        for axis in &axes {
            len = len
                .checked_mul(axis.len())
                .filter(|&n| n <= cap)
                .ok_or_else(|| {
                    Error::InvalidSpace(format!("grid exceeds the enumeration cap of {cap} points"))
                })?;
        }
        let mut strides = vec![1; axes.len()];
        for d in (0..axes.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * axes[d + 1].len();
        }
        Ok(Grid { axes, strides, len })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Per-axis indices of a flat index.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let i = index / s;
                index %= s;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn point(&self, index: usize) -> Point {
        assert!(index < self.len, "grid index {index} out of range");
        let coords = self
            .multi_index(index)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis[i])
            .collect();
        Point::new(coords).expect("grid values are finite")
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    /// Flat index of the grid point matching `x`, allowing a relative slack of 1e-9
    /// per coordinate.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut multi = Vec::with_capacity(x.len());
        for (v, axis) in x.iter().zip(&self.axes) {
            let i = nearest_on_axis(axis, *v);
            let tol = 1e-9 * axis[i].abs().max(1.0);
            if (axis[i] - v).abs() > tol {
                return None;
            }
            multi.push(i);
        }
        Some(self.flat_index(&multi))
    }

    /// Flat index of the grid point nearest to `x`, coordinate by coordinate.
    pub fn nearest_index(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = x
            .iter()
            .zip(&self.axes)
            .map(|(v, axis)| nearest_on_axis(axis, *v))
            .collect();
        self.flat_index(&multi)
    }

    /// Flat indices of the ±1 neighbours along each axis, axis-major, minus before plus.
    pub fn neighbours(&self, index: usize) -> Vec<usize> {
        let multi = self.multi_index(index);
        let mut out = Vec::with_capacity(2 * multi.len());
        for d in 0..multi.len() {
            if multi[d] > 0 {
                out.push(index - self.strides[d]);
            }
            if multi[d] + 1 < self.axes[d].len() {
                out.push(index + self.strides[d]);
            }
        }
        out
    }

    pub fn lower(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a[0]).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a[a.len() - 1]).collect()
    }
}

fn nearest_on_axis(axis: &[f64], v: f64) -> usize {
    match axis.binary_search_by(|a| a.total_cmp(&v)) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) if i >= axis.len() => axis.len() - 1,
        Err(i) => {
            if (v - axis[i - 1]) <= (axis[i] - v) {
                i - 1
            } else {
                i
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchSpace {
    Box(BoxSpace),
    Grid(Grid),
}

impl SearchSpace {
    pub fn continuous(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        BoxSpace::new(lower, upper).map(SearchSpace::Box)
    }

    pub fn grid(lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<Self> {
        Grid::uniform(lower, upper, resolution).map(SearchSpace::Grid)
    }

    pub fn dim(&self) -> usize {
        match self {
            SearchSpace::Box(b) => b.dim(),
            SearchSpace::Grid(g) => g.dim(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            SearchSpace::Box(b) => b.contains(x),
            SearchSpace::Grid(g) => g.index_of(x).is_some(),
        }
    }

    pub fn as_grid(&self) -> Option<&Grid> {
        match self {
            SearchSpace::Grid(g) => Some(g),
            SearchSpace::Box(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SearchSpace::Grid(_))
    }

    /// Grid spaces snap `x` to the matching grid point; boxes require containment.
    pub fn locate(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        match self {
            SearchSpace::Box(b) if b.contains(x) => Ok(x.clone()),
            SearchSpace::Grid(g) => g.index_of(x).map(|i| g.point(i)).ok_or(Error::OutsideSpace),
            _ => Err(Error::OutsideSpace),
        }
    }

    pub(crate) fn require_grid(&self, op: &str) -> Result<&Grid> {
        self.as_grid().ok_or_else(|| {
            Error::Unsupported(format!(
                "{op} needs a finite grid; use the sampled variant on continuous spaces"
            ))
        })
    }
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.is_empty() {
        return Err(Error::InvalidSpace("dimension must be at least 1".into()));
    }
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch {
            expected: lower.len(),
            actual: upper.len(),
        });
    }
    for (d, (lo, hi)) in lower.iter().zip(upper).enumerate() {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidSpace(format!(
                "axis {d} bounds must be finite"
            )));
        }
        if lo >= hi {
            return Err(Error::InvalidSpace(format!(
                "axis {d}: lower bound {lo} must be below upper bound {hi}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_values_are_exact_on_dyadic_steps() {
        let g = Grid::uniform(&[-2.0], &[2.0], &[9]).unwrap();
        let xs: Vec<f64> = g.points().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn lexicographic_order_first_axis_major() {
        let g = Grid::uniform(&[0.0, 0.0], &[1.0, 2.0], &[2, 3]).unwrap();
        let pts: Vec<Vec<f64>> = g.points().map(|p| p.into_inner()).collect();
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[1], vec![0.0, 1.0]);
        assert_eq!(pts[3], vec![1.0, 0.0]);
        for i in 0..g.len() {
            assert_eq!(g.index_of(&g.point(i)), Some(i));
        }
    }

    #[test]
    fn bounds_and_cap_are_enforced() {
        assert!(BoxSpace::new(vec![1.0], vec![1.0]).is_err());
        assert!(BoxSpace::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(Grid::uniform_with_cap(&[0.0, 0.0], &[1.0, 1.0], &[100, 100], 9_999).is_err());
        assert!(Grid::from_axes(vec![vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn single_point_grid() {
        let g = Grid::from_axes(vec![vec![3.0]]).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.neighbours(0).is_empty());
    }

    #[test]
    fn neighbours_and_nearest() {
        let g = Grid::uniform(&[0.0, 0.0], &[2.0, 2.0], &[3, 3]).unwrap();
        let centre = g.index_of(&[1.0, 1.0]).unwrap();
        assert_eq!(g.neighbours(centre).len(), 4);
        assert_eq!(
            g.nearest_index(&[1.4, -5.0]),
            g.index_of(&[1.0, 0.0]).unwrap()
        );
        assert_eq!(g.index_of(&[0.5, 0.0]), None);
    }
}
