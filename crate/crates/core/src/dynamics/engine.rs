use rayon::prelude::*;

use super::update::{energy_raw, fill_interaction, normalizer};
use super::{resolve_lambda, DynamicsConfig, LambdaPolicy};
use crate::error::{Error, Result};
use crate::objectives::PotentialField;
use crate::state::DriverState;

const PAR_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Largest cell mass reached `stop_mass`.
    MassThreshold,
    /// Per-step change fell to `stop_change`.
    Stationary,
    MaxSteps,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::MassThreshold => "mass_threshold",
            Self::Stationary => "stationary",
            Self::MaxSteps => "max_steps",
        }
    }
}

/// Diagnostics of one state along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub time: f64,
    pub entropy: f64,
    pub max_mass: f64,
    pub argmax_index: usize,
    pub argmax: Vec<f64>,
    pub expected_q: f64,
    pub energy: f64,
    /// `|sum h dV - 1|`.
    pub mass_error: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: DriverState,
    pub trace: Vec<TraceRow>,
    pub stop: StopReason,
    pub lambda: f64,
    pub nu: f64,
}

fn trace_row(state: &DriverState, field: &PotentialField, config: &DynamicsConfig) -> Result<TraceRow> {
    let r = state.argmax();
    Ok(TraceRow {
        step: state.step(),
        time: state.step() as f64 * config.dt,
        entropy: state.entropy(),
        max_mass: r.mass,
        argmax_index: r.index,
        argmax: r.coordinate,
        expected_q: state.expected_value(field)?,
        energy: energy_raw(state.values(), field.values(), state.budget(), state.grid().cell_volume(), &config.l),
        mass_error: (state.total_mass() - 1.0).abs(),
    })
}

/// Integrates the dynamics from `initial` until a stop rule fires.
///
/// `observer` sees the initial state and every subsequent one, in order.
/// Results do not depend on whether `config.parallel` is set: only
/// elementwise work is distributed and every reduction runs in index order.
pub fn run<F>(initial: DriverState, field: &PotentialField, config: &DynamicsConfig, mut observer: F) -> Result<RunOutcome>
where
    F: FnMut(&DriverState, &TraceRow),
{
    config.validate()?;
    if !initial.same_grid(field.grid()) {
        return Err(Error::GridMismatch);
    }
    let mut nu = config.nu;
    let mut lambda = resolve_lambda(&config.lambda, field, nu, &config.l)?;
    let mut state = initial.with_budget(nu)?;
    let dv = state.grid().cell_volume();
    let alpha = config.alpha();
    let n = state.len();
    let q = field.values();

    let mut k = vec![0.0; n];
    // the fixed-lambda certificate must hold before the first step
    fill_interaction(&mut k, state.values(), q, nu, lambda, &config.l, false, 0)?;

    let mut trace = Vec::new();
    let row = trace_row(&state, field, config)?;
    observer(&state, &row);
    let mut stop = (row.max_mass >= config.stop_mass).then_some(StopReason::MassThreshold);
    trace.push(row);

    let mut values = state.values().to_vec();
    let mut step = state.step();
    let start = step;
    while stop.is_none() {
        if let Some(s) = config.nu_schedule {
            if step > start && (step - start) % s.every == 0 && nu > s.floor {
                nu = (nu * s.factor).max(s.floor);
                if let LambdaPolicy::Auto { .. } = config.lambda {
                    lambda = resolve_lambda(&config.lambda, field, nu, &config.l)?;
                }
            }
        }
        fill_interaction(&mut k, &values, q, nu, lambda, &config.l, config.parallel, step + 1)?;
        let z = normalizer(&k)?;
        let update = |(h, &ki): (&mut f64, &f64)| -> f64 {
            let g = ki / z / dv;
            let next = *h + alpha * (g - *h);
            let change = (next - *h).abs();
            *h = next;
            change
        };
        let max_change = if config.parallel && n >= 2 * PAR_CHUNK {
            values
                .par_chunks_mut(PAR_CHUNK)
                .zip(k.par_chunks(PAR_CHUNK))
                .map(|(hc, kc)| hc.iter_mut().zip(kc).map(update).fold(0.0, f64::max))
                .collect::<Vec<_>>()
                .into_iter()
                .fold(0.0, f64::max)
        } else {
            values.iter_mut().zip(&k).map(update).fold(0.0, f64::max)
        } * dv;
        step += 1;

        state = DriverState::from_parts_unchecked(values.clone(), nu, state.grid().clone(), step);
        let row = trace_row(&state, field, config)?;
        observer(&state, &row);
        stop = if row.max_mass >= config.stop_mass {
            Some(StopReason::MassThreshold)
        } else if max_change <= config.stop_change {
            Some(StopReason::Stationary)
        } else if step - start >= config.max_steps {
            Some(StopReason::MaxSteps)
        } else {
            None
        };
        trace.push(row);
    }
    Ok(RunOutcome { state, trace, stop: stop.unwrap_or(StopReason::MaxSteps), lambda, nu })
}
