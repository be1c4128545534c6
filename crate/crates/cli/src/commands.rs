//! The four experiment commands. Each is a pure function of the resolved
//! experiment and writes CSV files into the output directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use reinsure_core::simulate::{draw_scenario, estimate_value, path_rng, simulate_path};
use reinsure_core::strategy::{apriori_bounds, certainty_equivalent_retention};
use reinsure_core::{FilterState, Model, Scenario};

use crate::config::Experiment;
use crate::error::CliError;
use crate::output::{fmt_num, CsvWriter};

pub const MIN_VALUE_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    FilterDemo,
    Bounds,
    Surplus,
    ValueCompare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FilterDemo => "filter-demo",
            Command::Bounds => "bounds",
            Command::Surplus => "surplus",
            Command::ValueCompare => "value-compare",
        }
    }
}

/// Runs `command` and returns the files written.
pub fn run(command: Command, exp: &Experiment, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    match command {
        Command::FilterDemo => filter_demo(exp, out).map(|p| vec![p]),
        Command::Bounds => bounds(exp, out),
        Command::Surplus => surplus(exp, out),
        Command::ValueCompare => value_compare(exp, out).map(|p| vec![p]),
    }
}

/// The single scenario used by the path commands for `seed`.
pub fn scenario_for_seed(exp: &Experiment, seed: u64) -> Result<Scenario, CliError> {
    let settings = &exp.settings;
    let mut rng = path_rng(seed, 0);
    Ok(draw_scenario(&exp.model, settings.pin_lambda, settings.pin_alpha.as_deref(), &mut rng)?)
}

/// Filter state at each of the sorted `times`, including events at or
/// before each time.
pub fn filter_on_grid(model: &Model, scenario: &Scenario, times: &[f64]) -> Result<Vec<FilterState>, CliError> {
    let prior = &model.intensity;
    let mut state = FilterState::initial(prior, &model.thinning);
    let mut events = scenario.events.iter().peekable();
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        while let Some(event) = events.next_if(|e| e.time <= t) {
            state = state.propagate(event.time - state.t, prior)?;
            state = state.jump_update(event.set, prior)?;
        }
        state = state.propagate(t - state.t, prior)?;
        states.push(state.clone());
    }
    Ok(states)
}

fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| if k + 1 == points { horizon } else { horizon * k as f64 / (points - 1) as f64 })
        .collect()
}

fn filter_demo(exp: &Experiment, out: &Path) -> Result<PathBuf, CliError> {
    let model = &exp.model;
    let scenario = scenario_for_seed(exp, exp.settings.seed)?;
    let horizon = model.params.horizon;
    let steps = ((horizon / exp.settings.dt_max).ceil() as usize).max(1);
    // uniform rows plus one row per event, events after coincident grid rows
    let mut rows: Vec<(f64, u32)> = uniform_grid(horizon, steps + 1).into_iter().map(|t| (t, 0)).collect();
    rows.extend(scenario.events.iter().map(|e| (e.time, e.set.mask())));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut states = Vec::with_capacity(rows.len());
    let prior = &model.intensity;
    let mut state = FilterState::initial(prior, &model.thinning);
    let mut next_event = scenario.events.iter();
    for &(t, mask) in &rows {
        state = state.propagate(t - state.t, prior)?;
        if mask != 0 {
            let event = next_event.next().expect("event rows match events");
            state = state.jump_update(event.set, prior)?;
        }
        states.push(state.clone());
    }

    let m = model.intensity.len();
    let l = model.subsets();
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|j| format!("p_{j}")));
    header.push("lambda_hat".into());
    header.extend((1..=l).map(|k| format!("q_{k}")));
    header.push("event".into());
    let mut csv = CsvWriter::create(&out.join("filter.csv"), &header)?;
    for (&(t, mask), state) in rows.iter().zip(&states) {
        let mut fields = vec![fmt_num(t)];
        fields.extend(state.p().iter().map(|x| fmt_num(*x)));
        fields.push(fmt_num(state.lambda_hat(prior)));
        fields.extend(state.q().iter().map(|x| x.to_string()));
        fields.push(mask.to_string());
        csv.row(&fields)?;
    }
    csv.finish()
}

pub const BOUNDS_HEADER: [&str; 4] = ["t", "apriori_lower", "apriori_upper", "b_ce"];

fn bounds(exp: &Experiment, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let model = &exp.model;
    let times = uniform_grid(model.params.horizon, exp.grid);
    let limits = times
        .iter()
        .map(|t| apriori_bounds(&model.claims, &model.params, &model.intensity, *t))
        .collect::<Result<Vec<_>, _>>()?;
    let header: Vec<String> = BOUNDS_HEADER.iter().map(|s| s.to_string()).collect();
    let mut written = Vec::new();
    for &seed in &exp.bound_seeds {
        let scenario = scenario_for_seed(exp, seed)?;
        let states = filter_on_grid(model, &scenario, &times)?;
        let mut csv = CsvWriter::create(&out.join(format!("bounds_seed{seed}.csv")), &header)?;
        for ((t, state), limit) in times.iter().zip(&states).zip(&limits) {
            let b_ce = certainty_equivalent_retention(model, *t, state)?;
            csv.row(&[fmt_num(*t), fmt_num(limit.lower), fmt_num(limit.upper), fmt_num(b_ce)])?;
        }
        written.push(csv.finish()?);
    }
    Ok(written)
}

/// File-name-safe, unique labels in strategy order.
pub fn file_labels(labels: &[&str]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    labels
        .iter()
        .map(|label| {
            let clean: String = label
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
                .collect();
            let count = seen.entry(clean.clone()).or_insert(0);
            *count += 1;
            if *count == 1 {
                clean
            } else {
                format!("{clean}_{count}")
            }
        })
        .collect()
}

fn surplus(exp: &Experiment, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let scenario = scenario_for_seed(exp, exp.settings.seed)?;
    let labels: Vec<&str> = exp.strategies.iter().map(|(l, _)| l.as_str()).collect();
    let header: Vec<String> = ["t", "X", "b", "xi", "event"].iter().map(|s| s.to_string()).collect();
    let mut written = Vec::new();
    for (name, (_, spec)) in file_labels(&labels).iter().zip(&exp.strategies) {
        let path = simulate_path(&exp.model, &scenario, spec, exp.settings.dt_max)?;
        let mut csv = CsvWriter::create(&out.join(format!("surplus_{name}.csv")), &header)?;
        for k in 0..path.len() {
            csv.row(&[
                fmt_num(path.grid[k]),
                fmt_num(path.x[k]),
                fmt_num(path.b[k]),
                fmt_num(path.xi[k]),
                path.event[k].to_string(),
            ])?;
        }
        written.push(csv.finish()?);
    }
    Ok(written)
}

pub const VALUE_HEADER: [&str; 5] = ["strategy", "n_paths", "mean_utility", "std_err", "entropic_risk"];

fn value_compare(exp: &Experiment, out: &Path) -> Result<PathBuf, CliError> {
    if exp.strategies.len() < 2 {
        return Err(CliError::config("strategies", "value-compare needs at least 2 strategies"));
    }
    if exp.settings.n_paths < MIN_VALUE_PATHS {
        return Err(CliError::config(
            "simulate.n_paths",
            format!("value-compare needs at least {MIN_VALUE_PATHS} paths, got {}", exp.settings.n_paths),
        ));
    }
    let header: Vec<String> = VALUE_HEADER.iter().map(|s| s.to_string()).collect();
    let mut csv = CsvWriter::create(&out.join("value.csv"), &header)?;
    for (label, spec) in &exp.strategies {
        let value = estimate_value(&exp.model, spec, &exp.settings)?;
        csv.row(&[
            label.replace(',', ";"),
            value.n_paths.to_string(),
            fmt_num(value.mean_utility),
            fmt_num(value.std_err),
            fmt_num(value.entropic_risk),
        ])?;
    }
    csv.finish()
}
