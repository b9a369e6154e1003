use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Solver, SolverRun};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    obs_name: String,
    value: f64,
    stderr: f64,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

/// Writes `t,obs_name,value,stderr`, time-major in observable order.
pub fn write_observables(run: &SolverRun, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for (k, &t) in run.times.iter().enumerate() {
        for o in &run.observables {
            w.serialize(Row {
                t,
                obs_name: o.name.clone(),
                value: o.values[k],
                stderr: o.stderr[k],
            })
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an `observables.csv` back. The solver is taken from the parent
/// directory name when it is one of the known solvers.
pub fn read_observables(path: &Path) -> Result<SolverRun> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut times: Vec<f64> = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut data: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in r.deserialize() {
        let row: Row = row.map_err(csv_err)?;
        if times.last().is_none_or(|&t| t != row.t) {
            if times.last().is_some_and(|&t| row.t < t) {
                return Err(Error::Invalid(format!("{}: times not sorted", path.display())));
            }
            times.push(row.t);
        }
        let entry = data.entry(row.obs_name.clone()).or_insert_with(|| {
            order.push(row.obs_name.clone());
            (Vec::new(), Vec::new())
        });
        entry.0.push(row.value);
        entry.1.push(row.stderr);
    }
    let mut observables = Vec::new();
    for name in order {
        let (values, stderr) = data.remove(&name).unwrap_or_default();
        if values.len() != times.len() {
            return Err(Error::Invalid(format!(
                "{}: observable `{name}` has {} samples for {} times",
                path.display(),
                values.len(),
                times.len()
            )));
        }
        observables.push(super::Observable { name, values, stderr });
    }
    let solver = path
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|n| n.to_str())
        .and_then(Solver::from_name)
        .unwrap_or(Solver::Semiclassical);
    Ok(SolverRun {
        solver,
        times,
        observables,
        frames: Vec::new(),
        events: Vec::new(),
        runtime_s: 0.0,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricTolerance {
    #[serde(default)]
    pub sup: Option<f64>,
    #[serde(default)]
    pub rms: Option<f64>,
}

/// Tolerance file of `compare`: per-observable limits with a fallback.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub default: Option<MetricTolerance>,
    #[serde(default)]
    pub observables: BTreeMap<String, MetricTolerance>,
}

impl ToleranceSpec {
    pub fn sup(value: f64) -> Self {
        ToleranceSpec {
            default: Some(MetricTolerance {
                sup: Some(value),
                rms: None,
            }),
            observables: BTreeMap::new(),
        }
    }

    pub fn for_observable(&self, name: &str) -> Option<MetricTolerance> {
        self.observables.get(name).copied().or(self.default)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Error of observable `a - b` over the common time range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableMetric {
    pub observable: String,
    pub solver_a: String,
    pub solver_b: String,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub sup: f64,
    pub rms: f64,
    /// RMS of `b` over the same samples, for relative errors.
    pub reference_rms: f64,
    pub tolerance: Option<MetricTolerance>,
    pub passed: Option<bool>,
}

impl ObservableMetric {
    pub fn relative_rms(&self) -> f64 {
        self.rms / self.reference_rms
    }
}

/// Linear interpolation of samples `(ts, vs)` at `t` inside their range.
fn interpolate(ts: &[f64], vs: &[f64], t: f64) -> f64 {
    let k = ts.partition_point(|&s| s < t);
    if k < ts.len() && ts[k] == t {
        return vs[k];
    }
    let (k0, k1) = (k - 1, k);
    let w = (t - ts[k0]) / (ts[k1] - ts[k0]);
    vs[k0] + w * (vs[k1] - vs[k0])
}

/// Compares observables at the sample times of `a`, resampling `b` by
/// linear interpolation. `window` restricts the times further.
pub fn compare(
    a: &SolverRun,
    b: &SolverRun,
    observables: &[&str],
    window: Option<(f64, f64)>,
    tol: &ToleranceSpec,
) -> Result<Vec<ObservableMetric>> {
    let (Some(&a0), Some(&a1), Some(&b0), Some(&b1)) = (a.times.first(), a.times.last(), b.times.first(), b.times.last()) else {
        return Err(Error::DisjointTimes);
    };
    let (mut lo, mut hi) = (a0.max(b0), a1.min(b1));
    if let Some((w0, w1)) = window {
        lo = lo.max(w0);
        hi = hi.min(w1);
    }
    let idx: Vec<usize> = (0..a.times.len()).filter(|&k| a.times[k] >= lo && a.times[k] <= hi).collect();
    if lo > hi || idx.is_empty() {
        return Err(Error::DisjointTimes);
    }
    let mut out = Vec::with_capacity(observables.len());
    for &name in observables {
        let va = a.values(name)?;
        let vb = b.values(name)?;
        let (mut sup, mut sq, mut ref_sq) = (0.0f64, 0.0, 0.0);
        for &k in &idx {
            let rb = interpolate(&b.times, vb, a.times[k]);
            let d = (va[k] - rb).abs();
            sup = if d.is_nan() { f64::NAN } else { sup.max(d) };
            sq += d * d;
            ref_sq += rb * rb;
        }
        let n = idx.len() as f64;
        let rms = (sq / n).sqrt();
        let tolerance = tol.for_observable(name);
        let passed = tolerance.map(|t| t.sup.is_none_or(|s| sup <= s) && t.rms.is_none_or(|r| rms <= r));
        out.push(ObservableMetric {
            observable: name.to_string(),
            solver_a: a.solver.name().to_string(),
            solver_b: b.solver.name().to_string(),
            t_min: a.times[idx[0]],
            t_max: a.times[*idx.last().unwrap()],
            samples: idx.len(),
            sup,
            rms,
            reference_rms: (ref_sq / n).sqrt(),
            tolerance,
            passed,
        });
    }
    Ok(out)
}

/// Compares two directories holding `observables.csv`, over the observables
/// present in both.
pub fn compare_dirs(dir_a: &Path, dir_b: &Path, tol: &ToleranceSpec) -> Result<Vec<ObservableMetric>> {
    let a = read_observables(&dir_a.join("observables.csv"))?;
    let b = read_observables(&dir_b.join("observables.csv"))?;
    let names: Vec<&str> = a
        .observables
        .iter()
        .map(|o| o.name.as_str())
        .filter(|n| b.observable(n).is_some())
        .collect();
    if names.is_empty() {
        return Err(Error::Invalid("no common observables".into()));
    }
    compare(&a, &b, &names, None, tol)
}
