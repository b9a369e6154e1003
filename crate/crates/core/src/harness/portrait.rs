use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ModelSpec, SolverTolerances, TimeGrid};
use super::models;
use crate::error::{Error, Result};
use crate::gaussian::GridSpec;
use crate::ode::Dopri5;
use crate::semiclassical::{LindbladModel, RealFlow};
use crate::symbols::Chart;

/// Centre flow of a single-mode model: drift field on a grid plus trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitConfig {
    pub name: String,
    pub model: ModelSpec,
    /// Points at which the drift `dX/dt` is sampled.
    pub field: GridSpec,
    /// Initial centres `[q, p]` of the trajectories.
    pub starts: Vec<[f64; 2]>,
    pub times: TimeGrid,
    /// Trajectories leaving this radius are cut off.
    #[serde(default = "default_escape")]
    pub escape_radius: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: SolverTolerances,
}

fn default_escape() -> f64 {
    50.0
}

impl PortraitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Portrait {
    /// Rows `(q, p, dq/dt, dp/dt)`.
    pub field: Vec<[f64; 4]>,
    /// One list of `(t, q, p)` per start, possibly cut short.
    pub trajectories: Vec<Vec<[f64; 3]>>,
}

/// Samples the centre drift and integrates the centre equation from each start.
pub fn portrait(model: &LindbladModel, field: &GridSpec, starts: &[[f64; 2]], times: &TimeGrid, escape_radius: f64, tol: SolverTolerances) -> Result<Portrait> {
    field.validate()?;
    let model = model.to_chart(Chart::RealQP)?;
    if model.num_modes != 1 {
        return Err(Error::Invalid("portraits need a single-mode model".into()));
    }
    let flow = RealFlow::new(&model)?;
    let mut rows = Vec::with_capacity(field.nq * field.np);
    for j in 0..field.np {
        for i in 0..field.nq {
            let (q, p) = (field.q(i), field.p(j));
            let d = flow.drift_x(&[q, p])?;
            rows.push([q, p, d[0], d[1]]);
        }
    }
    let sys = (2usize, |_t: f64, y: &[f64], dy: &mut [f64]| {
        let d = flow.drift_x(y).expect("two coordinates");
        dy.copy_from_slice(d.as_slice());
    });
    let grid = times.times();
    let mut trajectories = Vec::with_capacity(starts.len());
    for s in starts {
        let mut path = vec![[0.0, s[0], s[1]]];
        let mut stepper = Dopri5::new(&sys, 0.0, s, tol.ode())?;
        for &t in &grid[1..] {
            match stepper.advance_to(t) {
                Ok(y) if y[0].hypot(y[1]) <= escape_radius => path.push([t, y[0], y[1]]),
                _ => break,
            }
        }
        trajectories.push(path);
    }
    Ok(Portrait { field: rows, trajectories })
}

/// Writes `field.csv` (`q,p,dq,dp`) and `trajectories.csv` (`traj,t,q,p`) under `dir`.
pub fn write_portrait(p: &Portrait, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    let mut w = csv::Writer::from_path(dir.join("field.csv")).map_err(err)?;
    w.write_record(["q", "p", "dq", "dp"]).map_err(err)?;
    for r in &p.field {
        w.serialize(r).map_err(err)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("trajectories.csv")).map_err(err)?;
    w.write_record(["traj", "t", "q", "p"]).map_err(err)?;
    for (k, path) in p.trajectories.iter().enumerate() {
        for pt in path {
            w.serialize((k, pt[0], pt[1], pt[2])).map_err(err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub const PORTRAIT_PRESETS: &[&str] = &["nonlinear_flow", "limit_cycle", "harmonic"];

fn ring(radius: f64, count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
            [radius * th.cos(), radius * th.sin()]
        })
        .collect()
}

pub fn portrait_preset(name: &str) -> Result<PortraitConfig> {
    let (model, field, starts, times) = match name {
        "nonlinear_flow" => (
            models::nonlinear_flow(0.1),
            GridSpec::square(3.0, 21),
            ring(2.0, 16),
            TimeGrid { t_end: 5.0, steps: 200 },
        ),
        "limit_cycle" => {
            let mut starts = ring(0.3, 6);
            starts.extend(ring(5.0, 6));
            (
                models::limit_cycle(1.0, 0.1, 0.01, 0.15),
                GridSpec::square(5.0, 21),
                starts,
                TimeGrid { t_end: 300.0, steps: 3000 },
            )
        }
        "harmonic" => (models::harmonic(), GridSpec::square(3.0, 21), ring(2.0, 4), TimeGrid { t_end: 6.3, steps: 126 }),
        other => return Err(Error::Config(format!("unknown portrait `{other}` (expected one of {PORTRAIT_PRESETS:?})"))),
    };
    Ok(PortraitConfig {
        name: name.to_string(),
        model,
        field,
        starts,
        times,
        escape_radius: default_escape(),
        output_dir: None,
        tolerances: SolverTolerances::default(),
    })
}

/// Computes the portrait of `cfg` and writes it to `<root>/portraits/<name>/`.
pub fn run_portrait(cfg: &PortraitConfig, root: &Path) -> Result<PathBuf> {
    let model = cfg.model.build()?;
    let p = portrait(&model, &cfg.field, &cfg.starts, &cfg.times, cfg.escape_radius, cfg.tolerances)?;
    let dir = root.join("portraits").join(&cfg.name);
    write_portrait(&p, &dir)?;
    std::fs::write(dir.join("config.json"), cfg.to_json()?)?;
    Ok(dir)
}
