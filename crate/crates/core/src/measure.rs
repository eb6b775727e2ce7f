//! Readout of the optimum location from a converged driver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::state::DriverState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    #[default]
    Argmax,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Measurement {
    #[serde(default)]
    pub mode: MeasurementMode,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Measurement {
    pub fn argmax() -> Self {
        Self { mode: MeasurementMode::Argmax, seed: None }
    }

    pub fn sample(seed: u64) -> Self {
        Self { mode: MeasurementMode::Sample, seed: Some(seed) }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self.seed.unwrap_or(0))
    }
}

/// Draws cells with probability equal to their mass.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn draw_cell(&mut self, state: &DriverState) -> usize {
        let total: f64 = state.values().iter().sum();
        let target = self.rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, &h) in state.values().iter().enumerate() {
            if h > 0.0 {
                acc += h;
                last_positive = i;
                if target < acc {
                    return i;
                }
            }
        }
        // rounding can leave target just above the running sum
        last_positive
    }

    pub fn draw(&mut self, state: &DriverState) -> Vec<f64> {
        state.grid().coordinate(self.draw_cell(state))
    }
}

/// `draws` sampled cell indices; identical for identical seeds.
pub fn sample_cells(state: &DriverState, measurement: &Measurement, draws: usize) -> Vec<usize> {
    let mut s = measurement.sampler();
    (0..draws).map(|_| s.draw_cell(state)).collect()
}

/// Single readout coordinate according to the measurement mode.
pub fn measure(state: &DriverState, measurement: &Measurement) -> Vec<f64> {
    match measurement.mode {
        MeasurementMode::Argmax => state.argmax().coordinate,
        MeasurementMode::Sample => measurement.sampler().draw(state),
    }
}
