//! Target objectives `q(x)` and their grid samplings.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Shifted Rastrigin function with its global minimum `0` at `x = (1, ..., 1)`.
pub fn rastrigin(x: &[f64]) -> f64 {
    let sum: f64 = x
        .iter()
        .map(|&xi| {
            let d = xi - 1.0;
            d * d - 10.0 * (PI * d).cos()
        })
        .sum();
    sum + 10.0 * x.len() as f64
}

/// `0` on the negative half-space of the first coordinate, `1` elsewhere.
pub fn step(x: &[f64]) -> f64 {
    if x[0] < 0.0 {
        0.0
    } else {
        1.0
    }
}

/// Piecewise-constant bowl `sum ceil(2 |x_i - 1|)`: discontinuous, with a
/// unique minimum at `x = (1, ..., 1)`.
pub fn staircase(x: &[f64]) -> f64 {
    x.iter().map(|&xi| (2.0 * (xi - 1.0).abs()).ceil()).sum()
}

/// Built-in objectives addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    Rastrigin,
    Step,
    Staircase,
    Constant,
}

impl Builtin {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "rastrigin" => Some(Self::Rastrigin),
            "step" => Some(Self::Step),
            "staircase" => Some(Self::Staircase),
            "constant" => Some(Self::Constant),
            _ => None,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Self::Rastrigin => rastrigin(x),
            Self::Step => step(x),
            Self::Staircase => staircase(x),
            Self::Constant => 1.0,
        }
    }

    /// Domain used when a configuration names the objective without a grid.
    pub fn default_grid(self, dims: usize) -> Result<Grid> {
        match dims {
            0 => Err(Error::InvalidGrid("objective needs at least one dimension".into())),
            1 => Grid::line(-4.0, 6.0, 501),
            _ => Grid::cube(-4.0, 6.0, 101, dims),
        }
    }
}

/// An objective tabulated on a grid, with cached extremes.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    values: Vec<f64>,
    grid: Arc<Grid>,
    min: f64,
    max: f64,
    argmin: Vec<usize>,
}

impl PotentialField {
    /// Samples `f` at every grid coordinate.
    pub fn sample<F>(f: F, grid: Arc<Grid>) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let x = grid.coordinate(i);
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::NonFiniteObjective { coordinate: x, value: v });
            }
            values.push(v);
        }
        Ok(Self::build(values, grid))
    }

    /// Wraps a table of values in flattened cell order.
    pub fn from_table(values: Vec<f64>, grid: Arc<Grid>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective { coordinate: grid.coordinate(i), value: values[i] });
        }
        Ok(Self::build(values, grid))
    }

    fn build(values: Vec<f64>, grid: Arc<Grid>) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmin = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == min)
            .map(|(i, _)| i)
            .collect();
        Self { values, grid, min, max, argmin }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn argmin(&self) -> &[usize] {
        &self.argmin
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }

    /// Smallest positive difference between two distinct table values.
    pub fn smallest_gap(&self) -> Option<f64> {
        smallest_gap(&self.values)
    }
}

pub fn smallest_gap(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > 0.0)
        .min_by(f64::total_cmp)
}

/// Parses one value per line. Blank lines and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| Error::Parse {
            line: n + 1,
            message: format!("{line:?}: {e}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse { line: n + 1, message: format!("value {v} is not finite") });
        }
        out.push(v);
    }
    Ok(out)
}
