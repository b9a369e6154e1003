//! Named, config-driven experiments: solver runs written to disk as CSV and
//! JSON, cross-solver comparison reports and phase portraits.
//!
//! Layout of a run with output root `out`:
//!
//! ```text
//! out/<experiment>/config.json
//! out/<experiment>/report.json
//! out/<experiment>/<solver>/observables.csv   t,obs_name,value,stderr
//! out/<experiment>/<solver>/events.json
//! out/<experiment>/<solver>/wigner_t<t>.json
//! ```

mod compare;
mod config;
mod experiments;
pub mod models;
mod portrait;
mod selftest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::Event;
use crate::gaussian::WignerGrid;

pub use compare::{compare, compare_dirs, read_observables, write_observables, MetricTolerance, ObservableMetric, ToleranceSpec};
pub use config::{
    default_config, registered, supported_solvers, BoseHubbardParams, CatParams, CustomParams, DampedParams, Experiment,
    ExperimentConfig, ExperimentInfo, LimitCycleParams, ModelSpec, Solver, SolverTolerances, TimeGrid, REGISTRY,
};
pub use portrait::{portrait, portrait_preset, run_portrait, write_portrait, Portrait, PortraitConfig, PORTRAIT_PRESETS};
pub use selftest::selftest;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "WIGNERFLOW_OUT";

/// A sampled observable; `stderr` is zero for deterministic solvers and NaN
/// where no estimate exists.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub name: String,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Observable {
    pub fn exact(name: impl Into<String>, values: Vec<f64>) -> Self {
        let stderr = vec![0.0; values.len()];
        Observable {
            name: name.into(),
            values,
            stderr,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub grid: WignerGrid,
}

/// Output of one solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverRun {
    pub solver: Solver,
    pub times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub frames: Vec<Frame>,
    pub events: Vec<Event>,
    pub runtime_s: f64,
}

impl SolverRun {
    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        self.observable(name)
            .map(|o| o.values.as_slice())
            .ok_or_else(|| Error::Invalid(format!("{} run has no observable `{name}`", self.solver.name())))
    }

    pub fn frame(&self, t: f64) -> Option<&Frame> {
        self.frames.iter().find(|f| (f.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// A named pass/fail test of one number against a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            threshold,
            passed: value <= threshold,
            detail: detail.into(),
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            threshold,
            passed: value >= threshold,
            detail: detail.into(),
        }
    }
}

/// Everything an experiment produced, before anything is written.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub model: ModelSpec,
    pub runs: Vec<SolverRun>,
    pub metrics: Vec<ObservableMetric>,
    pub checks: Vec<Check>,
}

impl ExperimentOutput {
    pub fn run(&self, solver: Solver) -> Option<&SolverRun> {
        self.runs.iter().find(|r| r.solver == solver)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn report(&self) -> ComparisonReport {
        ComparisonReport {
            experiment: self.config.experiment.name().to_string(),
            seed: self.config.seed,
            model: self.model.clone(),
            passed: self.checks.iter().all(|c| c.passed) && self.metrics.iter().all(|m| m.passed != Some(false)),
            checks: self.checks.clone(),
            metrics: self.metrics.clone(),
            runtime_s: self.runs.iter().map(|r| (r.solver.name().to_string(), r.runtime_s)).collect(),
            event_counts: self.runs.iter().map(|r| (r.solver.name().to_string(), r.events.len())).collect(),
        }
    }
}

/// Summary written to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub experiment: String,
    pub seed: u64,
    pub model: ModelSpec,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: Vec<ObservableMetric>,
    pub runtime_s: BTreeMap<String, f64>,
    pub event_counts: BTreeMap<String, usize>,
}

/// Runs every selected solver of the experiment and evaluates its checks.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    experiments::execute(config)
}

/// Output root: the config's `output_dir`, else `$WIGNERFLOW_OUT`, else `./out`.
pub fn output_root(config: &ExperimentConfig) -> PathBuf {
    config
        .output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Writes all artifacts of `output` below `root` and returns the experiment directory.
pub fn write_output(output: &ExperimentOutput, root: &Path) -> Result<PathBuf> {
    let dir = root.join(output.config.experiment.name());
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.json"), output.config.to_json()?)?;
    for run in &output.runs {
        let sdir = dir.join(run.solver.name());
        std::fs::create_dir_all(&sdir)?;
        write_observables(run, &sdir.join("observables.csv"))?;
        std::fs::write(sdir.join("events.json"), serde_json::to_string_pretty(&run.events)?)?;
        for f in &run.frames {
            f.grid.write(&sdir.join(frame_file_name(f.t)))?;
        }
    }
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&output.report())?)?;
    Ok(dir)
}

pub fn frame_file_name(t: f64) -> String {
    format!("wigner_t{t:.3}.json")
}

/// `execute` followed by `write_output`.
pub fn run(config: &ExperimentConfig) -> Result<(ComparisonReport, PathBuf)> {
    let output = execute(config)?;
    let dir = write_output(&output, &output_root(config))?;
    Ok((output.report(), dir))
}

pub(crate) fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests;
