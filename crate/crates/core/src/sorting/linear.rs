use serde::Serialize;

use super::{lambda_for_bounds, tick, AgentNetwork, Event, EventKind, MessageStats, SortConfig, TickParams};
use crate::error::{Error, Result};
use crate::objectives::smallest_gap;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub winner: usize,
    pub value: f64,
    pub ticks: u64,
    pub active: usize,
    pub nu: f64,
    pub lambda: f64,
    /// Messages exchanged during the round.
    pub messages: u64,
}

#[derive(Debug, Clone)]
pub struct LinearSortResult {
    /// Agent ids in extraction order.
    pub order: Vec<usize>,
    pub rounds: Vec<RoundLog>,
    pub events: Vec<Event>,
    pub stats: MessageStats,
}

impl LinearSortResult {
    pub fn sorted_values(&self, values: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| values[i]).collect()
    }

    pub fn max_round_ticks(&self) -> u64 {
        self.rounds.iter().map(|r| r.ticks).max().unwrap_or(0)
    }
}

/// Sorts by repeatedly letting the network converge on its current
/// extremum, recording it, and deactivating it.
///
/// Each round restarts from uniform mass over the remaining agents with a
/// budget of a tenth of their smallest value gap (unless `config.nu` is set).
pub fn linear_sort(values: &[f64], config: &SortConfig) -> Result<LinearSortResult> {
    config.validate()?;
    let mut net = AgentNetwork::new(values)?;
    let alpha = config.alpha();
    let l = config.l();
    let mut order = Vec::with_capacity(values.len());
    let mut rounds = Vec::with_capacity(values.len());
    let mut events = Vec::new();

    for round in 0..values.len() {
        let remaining: Vec<f64> = net.agents().iter().filter(|a| a.is_active()).map(|a| a.value()).collect();
        let gap = smallest_gap(&remaining).unwrap_or(0.0);
        let nu = match (config.nu, gap > 0.0) {
            (Some(nu), _) => nu,
            (None, true) => 0.1 * gap,
            (None, false) => 1.0,
        };
        let lo = remaining.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = remaining.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lambda = lambda_for_bounds(lo, hi, nu, config.sigma, config.margin);
        let params = TickParams { nu, lambda, alpha, l };
        net.reset_uniform();

        let before = net.stats().total;
        let mut ticks = 0;
        let winner = loop {
            if let Some(w) = net.agents().iter().find(|a| a.is_active() && a.mass() >= config.theta_win) {
                break w.id();
            }
            if ticks == config.t_round {
                return Err(Error::RoundExhausted { round, ticks, gap });
            }
            tick(&mut net, &params)?;
            ticks += 1;
        };
        events.push(Event { tick: net.ticks(), agent: winner, kind: EventKind::Win });
        events.push(Event { tick: net.ticks(), agent: winner, kind: EventKind::Deactivate });
        rounds.push(RoundLog {
            round,
            winner,
            value: values[winner],
            ticks,
            active: remaining.len(),
            nu,
            lambda,
            messages: net.stats().total - before,
        });
        order.push(winner);
        net.deactivate(winner);
    }
    Ok(LinearSortResult { order, rounds, events, stats: net.stats() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descending_with_positive_sigma() {
        let cfg = SortConfig { sigma: 1.0, ..SortConfig::linear() };
        let r = linear_sort(&[3.0, 1.0, 2.0], &cfg).unwrap();
        assert_eq!(r.sorted_values(&[3.0, 1.0, 2.0]), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn ascending_with_negative_sigma() {
        let r = linear_sort(&[3.0, 1.0, 2.0], &SortConfig::linear()).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
        assert_eq!(r.rounds.len(), 3);
        assert_eq!(r.rounds[2].ticks, 0);
    }

    #[test]
    fn message_identity() {
        let v = [0.5, 0.1, 0.9, 0.3, 0.7];
        let r = linear_sort(&v, &SortConfig::linear()).unwrap();
        let expected: u64 = r.rounds.iter().map(|x| 2 * x.active as u64 * x.ticks).sum();
        assert_eq!(r.stats.total, expected);
        assert_eq!(r.rounds.iter().map(|x| x.messages).sum::<u64>(), expected);
    }

    #[test]
    fn duplicate_minimum_exhausts_round() {
        let cfg = SortConfig { t_round: 500, ..SortConfig::linear() };
        let err = linear_sort(&[0.2, 0.2, 0.9], &cfg).unwrap_err();
        assert!(matches!(err, Error::RoundExhausted { round: 0, ticks: 500, .. }));
    }

    #[test]
    fn empty_and_single() {
        assert!(linear_sort(&[], &SortConfig::linear()).unwrap().order.is_empty());
        assert_eq!(linear_sort(&[7.0], &SortConfig::linear()).unwrap().order, vec![0]);
    }
}
