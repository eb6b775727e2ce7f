//! Decentralized sorting on top of the growth-transform update.
//!
//! Each [`Agent`] owns one value and one mass. A tick is two messages per
//! active agent: the agent sends its interaction weight `K_i` up to the
//! substrate, the substrate broadcasts the sum `Z` back, and each agent
//! moves its own mass towards `K_i / Z`. Agents never see each other.
//!
//! * [`linear_sort`] extracts one extremum per round and deactivates it.
//! * [`constant_time_sort`] runs a single budget ramp during which agents
//!   activate one after another in value order.

mod agent;
mod constant;
mod linear;

use serde::{Deserialize, Serialize};

use crate::dynamics::LFunctional;
use crate::error::{Error, Result};

pub use agent::{Agent, TickParams};
pub use constant::{constant_time_sort, ConstantSortResult};
pub use linear::{linear_sort, LinearSortResult, RoundLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortMode {
    Linear,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SortConfig {
    pub tau: f64,
    pub dt: f64,
    pub margin: f64,
    /// `-1` extracts minima first, `+1` maxima.
    pub sigma: f64,
    /// Linear mode: mass that makes an agent the round winner.
    pub theta_win: f64,
    /// Linear mode: tick budget of a single round.
    pub t_round: u64,
    /// Linear mode: fixed budget instead of the per-round gap heuristic.
    pub nu: Option<f64>,
    /// Constant mode: budget at tick zero.
    pub nu0: f64,
    /// Constant mode: budget increase per tick.
    pub rate: f64,
    /// Constant mode: length of the ramp in ticks.
    pub ramp_ticks: u64,
    /// Constant mode: cap on the activation threshold `2 / N_active`.
    pub theta_cap: f64,
    /// Constant mode: a-priori bounds on the values; the data range if unset.
    pub bounds: Option<(f64, f64)>,
}

impl Default for SortConfig {
    fn default() -> Self {
        Self::linear()
    }
}

impl SortConfig {
    pub fn linear() -> Self {
        Self {
            tau: 1.0,
            dt: 1.0,
            margin: 1.0,
            sigma: -1.0,
            theta_win: 0.99,
            t_round: 50_000,
            nu: None,
            nu0: 2.0,
            rate: 1e-3,
            ramp_ticks: 1_000,
            theta_cap: 0.99,
            bounds: None,
        }
    }

    pub fn constant() -> Self {
        Self { tau: 9.0, dt: 1.0, ..Self::linear() }
    }

    pub fn alpha(&self) -> f64 {
        self.dt / (self.tau + self.dt)
    }

    pub fn l(&self) -> LFunctional {
        LFunctional::ShiftedAffine { sigma: self.sigma }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tau > 0.0 && self.dt > 0.0 && self.dt <= self.tau && self.tau.is_finite()) {
            return bad(format!("need 0 < dt <= tau, got dt = {}, tau = {}", self.dt, self.tau));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        self.l().validate()?;
        for (name, t) in [("theta_win", self.theta_win), ("theta_cap", self.theta_cap)] {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {t}"));
            }
        }
        if self.t_round == 0 || self.ramp_ticks == 0 {
            return bad("t_round and ramp_ticks must be positive".into());
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu.is_finite()) {
                return bad(format!("nu must be positive, got {nu}"));
            }
        }
        if !(self.nu0 > 0.0 && self.nu0.is_finite()) {
            return bad(format!("nu0 must be positive, got {}", self.nu0));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("invalid bounds ({lo}, {hi})"));
            }
        }
        Ok(())
    }
}

/// Message accounting of an [`AgentNetwork`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MessageStats {
    pub ticks: u64,
    /// Messages sent during the most recent tick.
    pub last_tick: u64,
    /// Agent to substrate.
    pub up: u64,
    /// Substrate to agent.
    pub down: u64,
    pub total: u64,
}

/// Sorting event, one row of the event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub tick: u64,
    pub agent: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Round winner in linear mode.
    Win,
    /// Threshold crossing in constant mode.
    Activate,
    /// Agent leaves the optimization.
    Deactivate,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Win => "win",
            Self::Activate => "activate",
            Self::Deactivate => "deactivate",
        }
    }
}

/// Agents plus the summing substrate.
#[derive(Debug, Clone)]
pub struct AgentNetwork {
    agents: Vec<Agent>,
    substrate: f64,
    tick: u64,
    stats: MessageStats,
}

impl AgentNetwork {
    /// All agents active with uniform mass.
    pub fn new(values: &[f64]) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValues(format!("value {i} is {}", values[i])));
        }
        let share = 1.0 / values.len() as f64;
        let agents = values.iter().enumerate().map(|(id, &v)| Agent::new(id, v, share)).collect();
        Ok(Self { agents, substrate: 0.0, tick: 0, stats: MessageStats::default() })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn active_count(&self) -> usize {
        self.agents.iter().filter(|a| a.is_active()).count()
    }

    pub fn active_mass(&self) -> f64 {
        self.agents.iter().filter(|a| a.is_active()).map(Agent::mass).sum()
    }

    /// Last broadcast sum.
    pub fn substrate(&self) -> f64 {
        self.substrate
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    pub fn stats(&self) -> MessageStats {
        self.stats
    }

    /// Uniform mass over the active agents.
    pub fn reset_uniform(&mut self) {
        let n = self.active_count();
        for a in &mut self.agents {
            a.set_mass(if a.is_active() && n > 0 { 1.0 / n as f64 } else { 0.0 });
        }
    }

    /// Removes agent `id` and rescales the rest so active mass stays one.
    ///
    /// The departing mass is broadcast and every remaining agent rescales
    /// its own mass locally.
    pub fn deactivate(&mut self, id: usize) {
        let leaving = self.agents[id].mass();
        self.agents[id].deactivate();
        let rest = 1.0 - leaving;
        if rest > 0.0 {
            for a in self.agents.iter_mut().filter(|a| a.is_active()) {
                a.set_mass(a.mass() / rest);
            }
        } else {
            self.reset_uniform();
        }
    }

    pub(crate) fn mark_activated(&mut self, id: usize) {
        self.agents[id].mark_activated(self.tick);
    }
}

/// One synchronous round of agent/substrate exchange.
pub fn tick(network: &mut AgentNetwork, params: &TickParams) -> Result<()> {
    let mut z = 0.0;
    let mut senders = 0u64;
    for a in network.agents.iter_mut().filter(|a| a.is_active()) {
        z += a.emit(params)?;
        senders += 1;
    }
    if senders == 0 {
        return Err(Error::InvalidValues("tick needs at least one active agent".into()));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::AnnihilatedMass);
    }
    network.substrate = z;
    for a in network.agents.iter_mut().filter(|a| a.is_active()) {
        a.absorb(z, params);
    }
    network.tick += 1;
    let s = &mut network.stats;
    s.ticks += 1;
    s.up += senders;
    s.down += senders;
    s.total += 2 * senders;
    s.last_tick = 2 * senders;
    Ok(())
}

pub fn message_stats(network: &AgentNetwork) -> MessageStats {
    network.stats
}

/// Per-agent `lambda` certifying positive factors for values in `[lo, hi]`.
pub(crate) fn lambda_for_bounds(lo: f64, hi: f64, nu: f64, sigma: f64, margin: f64) -> f64 {
    let worst = (-sigma * lo).max(-sigma * hi);
    (worst / nu).max(0.0) + margin
}
