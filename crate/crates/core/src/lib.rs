//! Global optimization with a growth-transform dynamical system.
//!
//! A driver distribution over a discretized domain evolves on the
//! probability simplex under the influence of an objective `q(x)` and
//! concentrates into a single cell at the global minimum. The same update,
//! read as a protocol between agents and a summing substrate, yields the
//! decentralized sorting procedures in [`sorting`].

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod measure;
pub mod objectives;
pub mod oracle;
pub mod sorting;
pub mod state;

pub use dynamics::{DynamicsConfig, LFunctional, LambdaPolicy, RunOutcome, StopReason};
pub use error::{Error, Result};
pub use grid::{Axis, Grid};
pub use measure::Measurement;
pub use objectives::{Builtin, PotentialField};
pub use oracle::{brute_force_argmin, OracleReport};
pub use state::{DriverState, Readout};
