//! Growth-transform dynamics on the conservation manifold.
//!
//! One step maps the driver `h` to `g(h) = K / sum(K dV)` with the
//! interaction `K_i = h_i ((1/nu) L(q_i, nu h_i) + lambda)` and then moves a
//! fraction `alpha = dt / (tau + dt)` of the way towards it:
//!
//! ```text
//! h' = (1 - alpha) h + alpha g(h)
//! ```
//!
//! which is the implicit-form discretization of `tau dh/dt + h = g(h)`.
//! Because `h'` is a convex combination of two normalized states, it stays
//! on the simplex without renormalization.

mod engine;
mod update;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::PotentialField;

pub use engine::{run, RunOutcome, StopReason, TraceRow};
pub use update::{
    auxiliary_gain, discrete_growth_update, energy, growth_map, homotopy_step, interaction,
};

/// Coupling between the objective and the driver, increasing in `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LFunctional {
    /// `L(q, nu h) = nu h + sigma q`. `sigma < 0` drives mass to the minimum of
    /// `q`, `sigma > 0` to the maximum.
    ShiftedAffine { sigma: f64 },
}

impl Default for LFunctional {
    fn default() -> Self {
        Self::minimizing()
    }
}

impl LFunctional {
    pub fn minimizing() -> Self {
        Self::ShiftedAffine { sigma: -1.0 }
    }

    pub fn maximizing() -> Self {
        Self::ShiftedAffine { sigma: 1.0 }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            Self::ShiftedAffine { sigma } => sigma,
        }
    }

    #[inline]
    pub fn eval(&self, q: f64, nu_h: f64) -> f64 {
        match *self {
            Self::ShiftedAffine { sigma } => nu_h + sigma * q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sigma();
        if s.is_finite() && s != 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("L sigma must be finite and nonzero, got {s}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPolicy {
    Auto { margin: f64 },
    Fixed { value: f64 },
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        Self::Auto { margin: 1.0 }
    }
}

/// Optional geometric decrease of the budget during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuSchedule {
    pub factor: f64,
    pub every: u64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub tau: f64,
    pub dt: f64,
    pub nu: f64,
    pub lambda: LambdaPolicy,
    pub l: LFunctional,
    pub max_steps: u64,
    /// Stop once the largest cell mass reaches this value.
    pub stop_mass: f64,
    /// Stop once `max_i |h'_i - h_i| dV` falls to this value.
    pub stop_change: f64,
    pub nu_schedule: Option<NuSchedule>,
    /// Evaluate the elementwise parts of a step on the rayon pool.
    pub parallel: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            dt: 0.1,
            nu: 1e-2,
            lambda: LambdaPolicy::default(),
            l: LFunctional::default(),
            max_steps: 100_000,
            stop_mass: 0.99,
            stop_change: 1e-12,
            nu_schedule: None,
            parallel: false,
        }
    }
}

impl DynamicsConfig {
    pub fn alpha(&self) -> f64 {
        self.dt / (self.tau + self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.dt > self.tau {
            return bad(format!("dt {} exceeds tau {}", self.dt, self.tau));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        match self.lambda {
            LambdaPolicy::Auto { margin } if !(margin.is_finite() && margin > 0.0) => {
                return bad(format!("lambda margin must be positive, got {margin}"));
            }
            LambdaPolicy::Fixed { value } if !(value.is_finite() && value >= 0.0) => {
                return bad(format!("fixed lambda must be finite and nonnegative, got {value}"));
            }
            _ => {}
        }
        self.l.validate()?;
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if !(self.stop_mass > 0.0 && self.stop_mass <= 1.0) {
            return bad(format!("stop_mass must lie in (0, 1], got {}", self.stop_mass));
        }
        if !(self.stop_change.is_finite() && self.stop_change >= 0.0) {
            return bad(format!("stop_change must be nonnegative, got {}", self.stop_change));
        }
        if let Some(s) = self.nu_schedule {
            if !(s.factor > 0.0 && s.factor < 1.0) || s.every == 0 || !(s.floor > 0.0 && s.floor.is_finite()) {
                return bad(format!("invalid nu schedule {s:?}"));
            }
        }
        Ok(())
    }
}

/// Smallest `lambda` of the form `max(0, max_i(-sigma q_i) / nu) + margin`.
///
/// With this value every factor `(1/nu) L(q_i, nu h) + lambda` is at least
/// `margin` for all `h >= 0`, so `K_i > 0` on the support of any reachable
/// state.
pub fn lambda_auto(field: &PotentialField, nu: f64, l: &LFunctional, margin: f64) -> Result<f64> {
    if !(field.min().is_finite() && field.max().is_finite()) {
        return Err(Error::InvalidValues("objective has non-finite extremes".into()));
    }
    let s = l.sigma();
    // -sigma q is linear in q, so the extremes of q bound it.
    let worst = (-s * field.min()).max(-s * field.max());
    let lambda = (worst / nu).max(0.0) + margin;
    if !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda overflowed for nu = {nu}")));
    }
    Ok(lambda)
}

/// Resolves the lambda policy for a field and budget.
pub fn resolve_lambda(policy: &LambdaPolicy, field: &PotentialField, nu: f64, l: &LFunctional) -> Result<f64> {
    match *policy {
        LambdaPolicy::Auto { margin } => lambda_auto(field, nu, l, margin),
        LambdaPolicy::Fixed { value } => Ok(value),
    }
}

/// Budget heuristic for tabulated objectives: a tenth of the smallest
/// nonzero gap between values. `None` for constant tables.
pub fn nu_from_gap(field: &PotentialField) -> Option<f64> {
    field.smallest_gap().map(|g| 0.1 * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn table(v: &[f64]) -> PotentialField {
        PotentialField::from_table(v.to_vec(), Arc::new(Grid::indexed(v.len()).unwrap())).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let l = LFunctional::minimizing();
        assert_eq!(lambda_auto(&table(&[0.0, 1.0, 2.0]), 1.0, &l, 1.0).unwrap(), 3.0);
        assert_eq!(lambda_auto(&table(&[-3.0, -1.0, 0.0]), 1.0, &l, 1.0).unwrap(), 1.0);
        assert_eq!(lambda_auto(&table(&[-3.0, -1.0]), 1.0, &l, 1.0).unwrap(), 1.0);
        // maximizing flips which extreme is adverse
        let up = LFunctional::maximizing();
        assert_eq!(lambda_auto(&table(&[-2.0, 1.0]), 0.5, &up, 1.0).unwrap(), 5.0);
        assert_eq!(lambda_auto(&table(&[3.0, 1.0, 2.0]), 1.0, &up, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn fixed_lambda_passes_through() {
        let f = table(&[0.0, 1.0]);
        let l = LFunctional::minimizing();
        assert_eq!(resolve_lambda(&LambdaPolicy::Fixed { value: 7.5 }, &f, 1.0, &l).unwrap(), 7.5);
    }

    #[test]
    fn l_is_increasing_in_h() {
        for l in [LFunctional::minimizing(), LFunctional::maximizing()] {
            for q in [-2.0, 0.0, 3.5] {
                assert!(l.eval(q, 0.2) > l.eval(q, 0.1));
            }
        }
    }

    #[test]
    fn config_validation() {
        let ok = DynamicsConfig::default();
        ok.validate().unwrap();
        assert!((ok.alpha() - 1.0 / 11.0).abs() < 1e-15);
        let mut c = ok.clone();
        c.dt = 2.0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.nu = 0.0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.l = LFunctional::ShiftedAffine { sigma: 0.0 };
        assert!(c.validate().is_err());
        let mut c = ok;
        c.lambda = LambdaPolicy::Auto { margin: 0.0 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn gap_budget() {
        assert!((nu_from_gap(&table(&[0.0, 1.0, 2.5])).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(nu_from_gap(&table(&[2.0, 2.0])), None);
    }
}
