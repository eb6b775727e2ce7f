//! Ground truth for checking the dynamics.
//!
//! Nothing here calls into [`crate::dynamics`]: the argmin is an exhaustive
//! scan and the replay re-derives the recursion in double-double arithmetic.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::dynamics::{DynamicsConfig, LFunctional, LambdaPolicy};
use crate::error::{Error, Result};
use crate::objectives::PotentialField;
use crate::state::DriverState;

/// Largest instance accepted by [`high_precision_replay`].
pub const REPLAY_MAX_CELLS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub argmin: Vec<usize>,
    pub argmin_coordinates: Vec<Vec<f64>>,
    pub q_min: f64,
    /// Smallest positive difference between any two values; zero for constant fields.
    pub gap: f64,
    /// Lowest-indexed minimizer.
    pub predicted_cell: usize,
    pub tie: bool,
}

impl OracleReport {
    /// Whether the state's readout lands in the argmin set.
    pub fn agrees_with(&self, state: &DriverState) -> bool {
        self.argmin.binary_search(&state.argmax().index).is_ok()
    }
}

/// Exact argmin set by linear scan.
pub fn brute_force_argmin(field: &PotentialField) -> OracleReport {
    let q = field.values();
    let mut q_min = f64::INFINITY;
    let mut argmin = Vec::new();
    for (i, &v) in q.iter().enumerate() {
        if v < q_min {
            q_min = v;
            argmin.clear();
            argmin.push(i);
        } else if v == q_min {
            argmin.push(i);
        }
    }
    let mut gap = f64::INFINITY;
    for (i, &a) in q.iter().enumerate() {
        for &b in &q[i + 1..] {
            let d = (a - b).abs();
            if d > 0.0 && d < gap {
                gap = d;
            }
        }
    }
    if !gap.is_finite() {
        gap = 0.0;
    }
    OracleReport {
        argmin_coordinates: argmin.iter().map(|&i| field.grid().coordinate(i)).collect(),
        predicted_cell: argmin[0],
        tie: argmin.len() > 1,
        argmin,
        q_min,
        gap,
    }
}

fn tf(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// Re-evaluates `steps` steps of the dynamics in double-double precision.
///
/// The budget is held at `config.nu`; a budget schedule is rejected.
pub fn high_precision_replay(
    initial: &DriverState,
    field: &PotentialField,
    config: &DynamicsConfig,
    steps: u64,
) -> Result<DriverState> {
    let n = field.values().len();
    if n > REPLAY_MAX_CELLS {
        return Err(Error::TooLarge { cells: n, max: REPLAY_MAX_CELLS });
    }
    if initial.len() != n || initial.grid().as_ref() != field.grid().as_ref() {
        return Err(Error::GridMismatch);
    }
    if config.nu_schedule.is_some() {
        return Err(Error::InvalidConfig("replay does not follow budget schedules".into()));
    }
    config.validate()?;

    let LFunctional::ShiftedAffine { sigma } = config.l;
    let sigma = tf(sigma);
    let nu = tf(config.nu);
    let dv = tf(field.grid().cell_volume());
    let alpha = tf(config.dt) / (tf(config.dt) + tf(config.tau));
    let keep = tf(1.0) - alpha;
    let q: Vec<TwoFloat> = field.values().iter().map(|&v| tf(v)).collect();

    let lambda = match config.lambda {
        LambdaPolicy::Fixed { value } => tf(value),
        LambdaPolicy::Auto { margin } => {
            let mut worst = -sigma * q[0];
            for &qi in &q[1..] {
                let v = -sigma * qi;
                if v > worst {
                    worst = v;
                }
            }
            let scaled = worst / nu;
            let base = if scaled > tf(0.0) { scaled } else { tf(0.0) };
            base + tf(margin)
        }
    };

    let mut h: Vec<TwoFloat> = initial.values().iter().map(|&v| tf(v)).collect();
    let mut k = vec![tf(0.0); n];
    for step in 0..steps {
        let mut z = tf(0.0);
        for i in 0..n {
            if h[i] == tf(0.0) {
                k[i] = tf(0.0);
                continue;
            }
            let f = (nu * h[i] + sigma * q[i]) / nu + lambda;
            if f <= tf(0.0) {
                return Err(Error::CertificateViolated { cell: i, factor: f.into(), step: step + 1 });
            }
            k[i] = h[i] * f;
            z += k[i];
        }
        z *= dv;
        for i in 0..n {
            h[i] = keep * h[i] + alpha * (k[i] / z);
        }
    }
    let values: Vec<f64> = h.into_iter().map(f64::from).collect();
    DriverState::from_densities(values, initial.grid().clone(), config.nu)
}
