//! Experiment configuration files (JSON, `schema_version` 1).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use growthflow::dynamics::{nu_from_gap, NuSchedule};
use growthflow::objectives::parse_values;
use growthflow::sorting::{SortConfig, SortMode};
use growthflow::{Axis, Builtin, DynamicsConfig, Grid, LFunctional, LambdaPolicy, Measurement, PotentialField};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Budget for continuous objectives when the configuration leaves it out.
pub const DEFAULT_CONTINUOUS_NU: f64 = 1e-2;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub dynamics: DynamicsSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub measurement: Measurement,
    #[serde(default)]
    pub snapshots: Vec<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub sort: Option<SortSpec>,
}

/// Overrides applied on top of the defaults of the chosen sort mode.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SortSpec {
    pub tau: Option<f64>,
    pub dt: Option<f64>,
    pub margin: Option<f64>,
    pub sigma: Option<f64>,
    pub theta_win: Option<f64>,
    pub t_round: Option<u64>,
    pub nu: Option<f64>,
    pub nu0: Option<f64>,
    pub rate: Option<f64>,
    pub ramp_ticks: Option<u64>,
    pub theta_cap: Option<f64>,
    pub bounds: Option<(f64, f64)>,
}

impl SortSpec {
    pub fn apply(&self, mut c: SortConfig) -> SortConfig {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(tau, dt, margin, sigma, theta_win, t_round, nu0, rate, ramp_ticks, theta_cap);
        if self.nu.is_some() {
            c.nu = self.nu;
        }
        if self.bounds.is_some() {
            c.bounds = self.bounds;
        }
        c
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub dims: Option<usize>,
    /// CSV table, one value per line in flattened cell order.
    #[serde(default)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub tau: Option<f64>,
    pub dt: Option<f64>,
    pub nu: Option<f64>,
    pub lambda: Option<LambdaPolicy>,
    pub sigma: Option<f64>,
    pub max_steps: Option<u64>,
    pub stop_mass: Option<f64>,
    pub stop_change: Option<f64>,
    pub nu_schedule: Option<NuSchedule>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitSpec {
    #[default]
    Uniform,
    Random,
}

enum Objective {
    Builtin(Builtin),
    Table(Vec<f64>),
}

/// Everything `optimize` and `oracle` need, fully validated.
pub struct Prepared {
    pub field: PotentialField,
    pub dynamics: DynamicsConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {} (expected {SCHEMA_VERSION})", cfg.schema_version);
        }
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(obj) = cfg.objective.as_mut() {
            if let Some(t) = obj.table.as_mut() {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
        }
        Ok(cfg)
    }

    pub fn prepare(&self) -> Result<Prepared> {
        let spec = self.objective.as_ref().context("config has no objective")?;
        let (objective, grid) = match (&spec.builtin, &spec.table) {
            (Some(name), None) => {
                let b = Builtin::parse(name).with_context(|| format!("unknown builtin objective {name:?}"))?;
                let grid = match &self.grid {
                    Some(g) => Grid::new(g.axes.clone())?,
                    None => b.default_grid(spec.dims.unwrap_or(1))?,
                };
                if let Some(d) = spec.dims {
                    if d != grid.dims() {
                        bail!("objective dims {d} disagree with grid dims {}", grid.dims());
                    }
                }
                (Objective::Builtin(b), grid)
            }
            (None, Some(path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading table {}", path.display()))?;
                let values = parse_values(&text).with_context(|| format!("parsing table {}", path.display()))?;
                let grid = match &self.grid {
                    Some(g) => Grid::new(g.axes.clone())?,
                    None => Grid::indexed(values.len())?,
                };
                (Objective::Table(values), grid)
            }
            _ => bail!("objective needs exactly one of \"builtin\" or \"table\""),
        };
        let grid = Arc::new(grid);
        let field = match &objective {
            Objective::Builtin(b) => PotentialField::sample(|x| b.eval(x), grid)?,
            Objective::Table(v) => PotentialField::from_table(v.clone(), grid)?,
        };
        let nu = match (self.dynamics.nu, &objective) {
            (Some(nu), _) => nu,
            (None, Objective::Table(_)) => nu_from_gap(&field).unwrap_or(DEFAULT_CONTINUOUS_NU),
            (None, Objective::Builtin(_)) => DEFAULT_CONTINUOUS_NU,
        };
        let d = &self.dynamics;
        let base = DynamicsConfig::default();
        let dynamics = DynamicsConfig {
            tau: d.tau.unwrap_or(base.tau),
            dt: d.dt.unwrap_or(base.dt),
            nu,
            lambda: d.lambda.unwrap_or(base.lambda),
            l: d.sigma.map(|sigma| LFunctional::ShiftedAffine { sigma }).unwrap_or(base.l),
            max_steps: d.max_steps.unwrap_or(base.max_steps),
            stop_mass: d.stop_mass.unwrap_or(base.stop_mass),
            stop_change: d.stop_change.unwrap_or(base.stop_change),
            nu_schedule: d.nu_schedule,
            parallel: false,
        };
        dynamics.validate()?;
        Ok(Prepared { field, dynamics })
    }

}

pub fn sort_config(spec: Option<&SortSpec>, mode: SortMode) -> Result<SortConfig> {
    let base = match mode {
        SortMode::Linear => SortConfig::linear(),
        SortMode::Constant => SortConfig::constant(),
    };
    let cfg = spec.map_or(base.clone(), |s| s.apply(base));
    cfg.validate()?;
    Ok(cfg)
}
