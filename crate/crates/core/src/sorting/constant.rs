use super::{lambda_for_bounds, tick, AgentNetwork, Event, EventKind, MessageStats, SortConfig, TickParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ConstantSortResult {
    /// Agent ids in activation order.
    pub order: Vec<usize>,
    /// Tick of each activation, aligned with `order`.
    pub timestamps: Vec<u64>,
    /// Length of the ramp; the run's duration regardless of `N`.
    pub total_ticks: u64,
    pub last_activation: u64,
    pub events: Vec<Event>,
    pub stats: MessageStats,
}

impl ConstantSortResult {
    pub fn sorted_values(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| values[i]).collect()
    }
}

/// Single run with the budget ramped as `nu(t) = nu0 + rate t`.
///
/// After every tick an active agent whose mass reaches
/// `min(2 / N_active, theta_cap)` is activated and leaves the pool; the
/// remaining agents rescale their masses. The last agent activates on the
/// tick after it is alone. Two agents crossing on one tick, or agents left
/// over when the ramp ends, is an [`Error::Unresolved`].
pub fn constant_time_sort(values: &[f64], config: &SortConfig) -> Result<ConstantSortResult> {
    config.validate()?;
    let mut net = AgentNetwork::new(values)?;
    let (lo, hi) = match config.bounds {
        Some(b) => b,
        None => (
            values.iter().copied().fold(f64::INFINITY, f64::min),
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    };
    if let Some(v) = values.iter().find(|&&v| v < lo || v > hi) {
        return Err(Error::InvalidValues(format!("value {v} outside bounds ({lo}, {hi})")));
    }
    let alpha = config.alpha();
    let l = config.l();
    let mut order = Vec::with_capacity(values.len());
    let mut timestamps = Vec::with_capacity(values.len());
    let mut events = Vec::new();

    for t in 0..config.ramp_ticks {
        let active = net.active_count();
        if active == 0 {
            break;
        }
        let nu = config.nu0 + config.rate * t as f64;
        let lambda = lambda_for_bounds(lo, hi, nu, config.sigma, config.margin);
        tick(&mut net, &TickParams { nu, lambda, alpha, l })?;

        let threshold = if active == 1 { 0.0 } else { (2.0 / active as f64).min(config.theta_cap) };
        let crossed: Vec<usize> = net
            .agents()
            .iter()
            .filter(|a| a.is_active() && a.mass() >= threshold)
            .map(|a| a.id())
            .collect();
        match crossed.as_slice() {
            [] => {}
            [id] => {
                let id = *id;
                net.mark_activated(id);
                let now = net.ticks();
                events.push(Event { tick: now, agent: id, kind: EventKind::Activate });
                order.push(id);
                timestamps.push(now);
                net.deactivate(id);
            }
            many => {
                return Err(Error::Unresolved(format!(
                    "agents {many:?} crossed the activation threshold together on tick {}; lower the ramp rate",
                    net.ticks()
                )));
            }
        }
    }
    let left = net.active_count();
    if left > 0 {
        return Err(Error::Unresolved(format!(
            "{left} of {} agents never activated within {} ticks",
            values.len(),
            config.ramp_ticks
        )));
    }
    Ok(ConstantSortResult {
        last_activation: timestamps.last().copied().unwrap_or(0),
        order,
        timestamps,
        total_ticks: config.ramp_ticks,
        events,
        stats: net.stats(),
    })
}
