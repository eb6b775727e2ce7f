//! The conserved driver distribution and its readouts.
//!
//! A [`DriverState`] holds densities `h_i` over grid cells. The cell masses
//! `h_i * dV` always sum to one; the budget `nu` scales them into the
//! discrete masses `p_i = nu * h_i * dV` used by the growth transform.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::objectives::PotentialField;

/// Tolerance on `|sum h dV - 1|` accepted by constructors.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DriverState {
    values: Vec<f64>,
    budget: f64,
    grid: Arc<Grid>,
    step: u64,
}

/// Location readout of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub index: usize,
    pub coordinate: Vec<f64>,
    pub mass: f64,
    /// Another cell carries exactly the same density.
    pub tie: bool,
}

fn check_budget(budget: f64) -> Result<()> {
    if budget.is_finite() && budget > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("budget nu must be positive and finite, got {budget}")))
    }
}

impl DriverState {
    /// Equal density on every cell.
    pub fn uniform(grid: Arc<Grid>, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        let denom = grid.len() as f64 * grid.cell_volume();
        if !denom.is_finite() || denom <= 0.0 {
            return Err(Error::InvalidGrid(format!("total volume {denom} is not usable")));
        }
        let h = 1.0 / denom;
        Ok(Self { values: vec![h; grid.len()], budget, grid, step: 0 })
    }

    /// Strictly positive random densities, reproducible for a fixed seed.
    pub fn random(grid: Arc<Grid>, budget: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // (0, 1]: never exactly zero, since zeros are absorbing.
        let raw: Vec<f64> = (0..grid.len()).map(|_| 1.0 - rng.gen::<f64>()).collect();
        Self::normalize(raw, grid, budget)
    }

    /// Rescales nonnegative weights so that `sum h dV = 1`.
    pub fn normalize(values: Vec<f64>, grid: Arc<Grid>, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValues(format!(
                "entry {i} is {} (need finite and nonnegative)",
                values[i]
            )));
        }
        let total: f64 = values.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidValues(format!("weights sum to {total}; nothing to normalize")));
        }
        let scale = 1.0 / (total * grid.cell_volume());
        let values = values.into_iter().map(|v| v * scale).collect();
        Ok(Self { values, budget, grid, step: 0 })
    }

    /// Wraps densities that must already satisfy the simplex constraint.
    pub fn from_densities(values: Vec<f64>, grid: Arc<Grid>, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidValues(format!("density {i} is {}", values[i])));
        }
        let s = Self { values, budget, grid, step: 0 };
        let err = (s.total_mass() - 1.0).abs();
        if err > NORMALIZATION_TOL {
            return Err(Error::InvalidValues(format!("masses sum to 1 + {err:e}")));
        }
        Ok(s)
    }

    /// All mass on one cell.
    pub fn vertex(grid: Arc<Grid>, budget: f64, cell: usize) -> Result<Self> {
        let mut values = vec![0.0; grid.len()];
        if cell >= values.len() {
            return Err(Error::InvalidValues(format!("cell {cell} out of range")));
        }
        values[cell] = 1.0 / grid.cell_volume();
        Self::from_densities(values, grid, budget)
    }

    pub(crate) fn from_parts_unchecked(values: Vec<f64>, budget: f64, grid: Arc<Grid>, step: u64) -> Self {
        Self { values, budget, grid, step }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn with_budget(mut self, budget: f64) -> Result<Self> {
        check_budget(budget)?;
        self.budget = budget;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        let dv = self.grid.cell_volume();
        self.values.iter().map(move |h| h * dv)
    }

    /// `sum h dV`, which should be one.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Budgeted masses `p_i = nu h_i dV` that sum to `nu`.
    pub fn budgeted_masses(&self) -> Vec<f64> {
        let s = self.budget * self.grid.cell_volume();
        self.values.iter().map(|h| s * h).collect()
    }

    pub fn max_mass(&self) -> f64 {
        self.masses().fold(0.0, f64::max)
    }

    /// Shannon entropy of the cell masses (natural log, `0 log 0 = 0`).
    pub fn entropy(&self) -> f64 {
        let e: f64 = self
            .masses()
            .filter(|&m| m > 0.0)
            .map(|m| -m * m.ln())
            .sum();
        e.max(0.0)
    }

    /// Cell with the largest density; ties go to the lowest index.
    pub fn argmax(&self) -> Readout {
        let mut best = 0;
        let mut tie = false;
        for (i, &h) in self.values.iter().enumerate().skip(1) {
            if h > self.values[best] {
                best = i;
                tie = false;
            } else if h == self.values[best] {
                tie = true;
            }
        }
        Readout {
            index: best,
            coordinate: self.grid.coordinate(best),
            mass: self.values[best] * self.grid.cell_volume(),
            tie,
        }
    }

    /// `<q> = sum q_i m_i`.
    pub fn expected_value(&self, field: &PotentialField) -> Result<f64> {
        if !self.same_grid(field.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(self.masses().zip(field.values()).map(|(m, q)| m * q).sum())
    }

    pub(crate) fn same_grid(&self, other: &Grid) -> bool {
        std::ptr::eq(self.grid.as_ref(), other) || self.grid.as_ref() == other
    }
}
