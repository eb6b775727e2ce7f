//! Regular rectangular discretization of the search domain.
//!
//! Points include both endpoints of every axis. Cells are flattened in
//! row-major order: the last axis varies fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize) -> Self {
        Self { lower, upper, points }
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    /// Coordinate of point `j`. Computed as `lower + span * j / (n - 1)` so that
    /// rational grid points such as `1.0` on `[-4, 6]/501` come out exact.
    pub fn coordinate(&self, j: usize) -> f64 {
        if j + 1 == self.points {
            return self.upper;
        }
        self.lower + (self.upper - self.lower) * j as f64 / (self.points - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
    cell_volume: f64,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("at least one axis is required".into()));
        }
        for (k, a) in axes.iter().enumerate() {
            if !(a.lower.is_finite() && a.upper.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {k} has non-finite bounds")));
            }
            if a.lower >= a.upper {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: lower {} must be below upper {}",
                    a.lower, a.upper
                )));
            }
            if a.points < 2 {
                return Err(Error::InvalidGrid(format!("axis {k} needs at least 2 points")));
            }
        }
        let mut strides = vec![1; axes.len()];
        for k in (0..axes.len() - 1).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].points;
        }
        let len = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.points))
            .ok_or_else(|| Error::InvalidGrid("cell count overflows".into()))?;
        let cell_volume: f64 = axes.iter().map(Axis::spacing).product();
        if !(cell_volume.is_finite() && cell_volume > 0.0) {
            return Err(Error::InvalidGrid(format!("cell volume {cell_volume} is not usable")));
        }
        Ok(Self { axes, strides, len, cell_volume })
    }

    /// One-dimensional grid with `n` points over `[lower, upper]`.
    pub fn line(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lower, upper, n)])
    }

    /// Same axis repeated `dims` times.
    pub fn cube(lower: f64, upper: f64, n: usize, dims: usize) -> Result<Self> {
        Self::new(vec![Axis::new(lower, upper, n); dims])
    }

    /// Grid of unit spacing with `n` points on `[0, n-1]`, used for tables.
    pub fn indexed(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("indexed grid needs at least 2 cells, got {n}")));
        }
        Self::line(0.0, (n - 1) as f64, n)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::spacing).collect()
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims());
        multi.iter().zip(&self.strides).map(|(j, s)| j * s).sum()
    }

    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.len);
        self.strides
            .iter()
            .map(|s| {
                let j = index / s;
                index %= s;
                j
            })
            .collect()
    }

    pub fn coordinate(&self, index: usize) -> Vec<f64> {
        self.unflatten(index)
            .into_iter()
            .zip(&self.axes)
            .map(|(j, a)| a.coordinate(j))
            .collect()
    }

    /// Flat index of the grid point nearest to `x` (clamped to the domain).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let multi: Vec<usize> = self
            .axes
            .iter()
            .zip(x)
            .map(|(a, &v)| {
                let t = ((v - a.lower) / a.spacing()).round();
                t.clamp(0.0, (a.points - 1) as f64) as usize
            })
            .collect();
        self.flatten(&multi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spacing_and_volume() {
        let g = Grid::line(0.0, 1.0, 11).unwrap();
        assert!((g.cell_volume() - 0.1).abs() < 1e-15);
        let g = Grid::cube(0.0, 1.0, 2, 2).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.cell_volume(), 1.0);
    }

    #[test]
    fn optimum_is_on_grid() {
        let g = Grid::line(-4.0, 6.0, 501).unwrap();
        assert_eq!(g.coordinate(250), vec![1.0]);
        let g = Grid::cube(-4.0, 6.0, 101, 2).unwrap();
        assert_eq!(g.coordinate(g.flatten(&[50, 50])), vec![1.0, 1.0]);
        assert_eq!(g.coordinate(g.len() - 1), vec![6.0, 6.0]);
    }

    #[test]
    fn row_major_order() {
        let g = Grid::cube(0.0, 1.0, 2, 2).unwrap();
        assert_eq!(g.coordinate(2), vec![1.0, 0.0]);
        assert_eq!(g.unflatten(1), vec![0, 1]);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(Grid::line(1.0, 1.0, 5).is_err());
        assert!(Grid::line(0.0, 1.0, 1).is_err());
        assert!(Grid::line(0.0, f64::INFINITY, 3).is_err());
        assert!(Grid::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn index_bijection(points in prop::collection::vec(2usize..7, 1..4), seed in any::<usize>()) {
            let axes = points.iter().map(|&n| Axis::new(-1.0, 2.0, n)).collect();
            let g = Grid::new(axes).unwrap();
            let i = seed % g.len();
            prop_assert_eq!(g.flatten(&g.unflatten(i)), i);
            for i in 0..g.len() {
                prop_assert_eq!(g.flatten(&g.unflatten(i)), i);
            }
        }
    }
}
