use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use growthflow::dynamics::{interaction, resolve_lambda, run};
use growthflow::measure::measure;
use growthflow::objectives::parse_values;
use growthflow::oracle::brute_force_argmin;
use growthflow::sorting::{constant_time_sort, linear_sort, Event, SortMode};
use growthflow::{DriverState, Error, Measurement};
use log::{info, warn};
use serde_json::json;

use crate::config::{sort_config, ExperimentConfig, InitSpec};
use crate::output::{num, write_file, Csv};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_DISAGREE: u8 = 2;
pub const EXIT_UNRESOLVED: u8 = 3;

const DEFAULT_OUT: &str = "out";

fn out_dir(flag: Option<&Path>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub fn optimize(config: &Path, out: Option<&Path>, seed: Option<u64>, extra_snapshots: &[u64], parallel: bool) -> Result<u8> {
    let cfg = ExperimentConfig::load(config)?;
    let seed = seed.unwrap_or(cfg.seed);
    let mut prepared = cfg.prepare()?;
    prepared.dynamics.parallel = parallel;
    let field = &prepared.field;
    let grid = field.grid().clone();
    let initial = match cfg.init {
        InitSpec::Uniform => DriverState::uniform(grid.clone(), prepared.dynamics.nu)?,
        InitSpec::Random => DriverState::random(grid.clone(), prepared.dynamics.nu, seed)?,
    };
    let snapshots: BTreeSet<u64> = cfg.snapshots.iter().chain(extra_snapshots).copied().collect();
    let d = &prepared.dynamics;
    interaction(&initial, field, resolve_lambda(&d.lambda, field, d.nu, &d.l)?, &d.l)?;
    let dir = out_dir(out, Some(&cfg));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    info!("optimizing {} cells, nu = {}", grid.len(), prepared.dynamics.nu);

    let coord_header: Vec<String> = (0..grid.dims()).map(|k| format!("x_{k}")).collect();
    let mut dumps = Vec::new();
    let outcome = run(initial, field, &prepared.dynamics, |state, row| {
        if snapshots.contains(&row.step) {
            let mut header = coord_header.clone();
            header.push("h".into());
            let mut csv = Csv::with_header(&header);
            for (i, &h) in state.values().iter().enumerate() {
                let mut fields: Vec<String> = grid.coordinate(i).into_iter().map(num).collect();
                fields.push(num(h));
                csv.row(&fields);
            }
            dumps.push((row.step, csv.finish()));
        }
    })?;
    for (step, text) in &dumps {
        write_file(&dir.join(format!("snapshot_{step}.csv")), text)?;
    }
    let last = outcome.state.step();
    for s in snapshots.iter().filter(|&&s| s > last) {
        warn!("snapshot step {s} is past the final step {last}; not written");
    }

    let mut header = vec!["step".to_string(), "time".into(), "entropy".into(), "max_mass".into()];
    header.extend((0..grid.dims()).map(|k| format!("argmax_{k}")));
    header.extend(["expected_q".to_string(), "energy".into()]);
    let mut trace = Csv::with_header(&header);
    for r in &outcome.trace {
        let mut f = vec![r.step.to_string(), num(r.time), num(r.entropy), num(r.max_mass)];
        f.extend(r.argmax.iter().map(|&x| num(x)));
        f.extend([num(r.expected_q), num(r.energy)]);
        trace.row(&f);
    }
    write_file(&dir.join("trace.csv"), &trace.finish())?;

    let oracle = brute_force_argmin(field);
    let readout = outcome.state.argmax();
    let agreement = oracle.agrees_with(&outcome.state);
    let measurement = Measurement { seed: cfg.measurement.seed.or(Some(seed)), ..cfg.measurement };
    let final_row = outcome.trace.last().expect("trace holds the initial state");
    let report = json!({
        "argmax": readout.coordinate,
        "argmax_index": readout.index,
        "q_at_argmax": field.values()[readout.index],
        "max_mass": readout.mass,
        "tie": readout.tie,
        "oracle_agreement": agreement,
        "oracle_argmin": oracle.argmin_coordinates,
        "q_min": oracle.q_min,
        "stop_reason": outcome.stop.as_str(),
        "steps": last,
        "lambda": outcome.lambda,
        "nu": outcome.nu,
        "entropy": final_row.entropy,
        "expected_q": final_row.expected_q,
        "energy": final_row.energy,
        "measurement": {
            "mode": measurement.mode,
            "seed": measurement.seed,
            "coordinate": measure(&outcome.state, &measurement),
        },
    });
    write_file(&dir.join("report.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if agreement {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "readout {:?} is not in the oracle argmin set {:?}",
            readout.coordinate, oracle.argmin_coordinates
        );
        Ok(EXIT_DISAGREE)
    }
}

fn event_log(events: &[Event]) -> String {
    let mut csv = Csv::with_header(&["tick", "agent", "event"]);
    for e in events {
        csv.row(&[e.tick.to_string(), e.agent.to_string(), e.kind.as_str().to_string()]);
    }
    csv.finish()
}

pub fn sort(values_path: &Path, mode: SortMode, config: Option<&Path>, out: Option<&Path>) -> Result<u8> {
    let cfg = config.map(ExperimentConfig::load).transpose()?;
    let sort_cfg = sort_config(cfg.as_ref().and_then(|c| c.sort.as_ref()), mode)?;
    let text = fs::read_to_string(values_path).with_context(|| format!("reading {}", values_path.display()))?;
    let values = parse_values(&text).with_context(|| format!("parsing {}", values_path.display()))?;

    let result = match mode {
        SortMode::Linear => linear_sort(&values, &sort_cfg).map(|r| {
            let rounds: Vec<_> = r
                .rounds
                .iter()
                .map(|x| json!({"round": x.round, "winner": x.winner, "ticks": x.ticks, "active": x.active, "messages": x.messages, "nu": x.nu, "lambda": x.lambda}))
                .collect();
            let stats = json!({
                "mode": "linear",
                "rounds": rounds,
                "max_round_ticks": r.max_round_ticks(),
                "ticks": r.stats.ticks,
                "messages": r.stats,
            });
            (r.order, r.events, stats)
        }),
        SortMode::Constant => constant_time_sort(&values, &sort_cfg).map(|r| {
            let stats = json!({
                "mode": "constant",
                "total_ticks": r.total_ticks,
                "last_activation": r.last_activation,
                "timestamps": r.timestamps,
                "messages": r.stats,
            });
            (r.order, r.events, stats)
        }),
    };
    let (order, events, stats) = match result {
        Ok(x) => x,
        Err(e @ (Error::Unresolved(_) | Error::RoundExhausted { .. })) => {
            eprintln!("error: {e}");
            return Ok(EXIT_UNRESOLVED);
        }
        Err(e) => return Err(e.into()),
    };

    let dir = out_dir(out, cfg.as_ref());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut ordering = Csv::with_header(&["rank", "agent", "value"]);
    for (rank, &id) in order.iter().enumerate() {
        ordering.row(&[rank.to_string(), id.to_string(), num(values[id])]);
    }
    write_file(&dir.join("ordering.csv"), &ordering.finish())?;
    write_file(&dir.join("events.csv"), &event_log(&events))?;
    write_file(&dir.join("messages.json"), &(serde_json::to_string_pretty(&stats)? + "\n"))?;

    let mut reference = values.clone();
    reference.sort_by(f64::total_cmp);
    if sort_cfg.sigma > 0.0 {
        reference.reverse();
    }
    let got: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    if got == reference {
        Ok(EXIT_OK)
    } else {
        eprintln!("ordering {got:?} differs from reference {reference:?}");
        Ok(EXIT_DISAGREE)
    }
}

pub fn oracle(config: &Path) -> Result<u8> {
    let cfg = ExperimentConfig::load(config)?;
    let prepared = cfg.prepare()?;
    let report = brute_force_argmin(&prepared.field);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(EXIT_OK)
}
