use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GridSpec;
use crate::ode::Tolerances;
use crate::semiclassical::LindbladModel;
use crate::symbols::Chart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Semiclassical,
    Doubled,
    Master,
    Jumps,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Semiclassical => "semiclassical",
            Solver::Doubled => "doubled",
            Solver::Master => "master",
            Solver::Jumps => "jumps",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Solver::Semiclassical, Solver::Doubled, Solver::Master, Solver::Jumps]
            .into_iter()
            .find(|s| s.name() == name)
    }
}

/// Hamiltonian and Lindblad operators as Weyl symbols in the textual notation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub chart: Chart,
    pub num_modes: usize,
    pub hamiltonian: String,
    #[serde(default)]
    pub lindblads: Vec<String>,
}

impl ModelSpec {
    /// Parses the symbols (`hbar = 1`).
    pub fn build(&self) -> Result<LindbladModel> {
        let ls: Vec<&str> = self.lindblads.iter().map(String::as_str).collect();
        LindbladModel::parse(self.chart, self.num_modes, 1.0, &self.hamiltonian, &ls)
            .map_err(|e| Error::Config(format!("model text: {e}")))
    }
}

/// Uniform output grid `t_k = k t_end / steps`, `k = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.t_end * k as f64 / self.steps as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverTolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        SolverTolerances { rtol: 1e-10, atol: 1e-12 }
    }
}

impl SolverTolerances {
    pub fn ode(&self) -> Tolerances {
        Tolerances::new(self.rtol, self.atol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampedParams {
    pub omega: f64,
    pub gamma: f64,
    /// Initial coherent amplitude `[Re a, Im a]`.
    pub a0: [f64; 2],
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitCycleParams {
    pub omega: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Linear gain rate of the `a^dagger` Lindblad operator.
    pub gain: f64,
    pub a0: [f64; 2],
    pub n_max: usize,
    /// The master equation stops here; the semiclassical run covers the full grid.
    pub master_t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoseHubbardParams {
    pub j: f64,
    /// Initial total particle number, spread evenly over the sites.
    pub n0: f64,
    pub u_n0: f64,
    pub gamma: f64,
    /// Initial phase of each site; the number of sites is its length.
    pub phases: Vec<f64>,
    pub n_max: usize,
    pub n_traj: usize,
    /// Semiclassical and quantum numbers are compared pointwise up to here.
    pub compare_until: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatParams {
    pub beta: f64,
    pub gamma: f64,
    /// Packet centres `[q, p]`.
    pub centres: Vec<[f64; 2]>,
    /// Complex amplitudes `[re, im]`, one per centre.
    pub coeffs: Vec<[f64; 2]>,
    /// Position-space width `A = [Re A, Im A]`, `Im A > 0`.
    pub width: [f64; 2],
    pub n_max: usize,
    /// Mean trajectories are compared up to here.
    pub compare_until: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomParams {
    pub model: ModelSpec,
    /// Initial coherent amplitudes `[Re a, Im a]`, one per mode.
    pub a0: Vec<[f64; 2]>,
    pub n_max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Experiment {
    DampedOscillator(DampedParams),
    LimitCycle(LimitCycleParams),
    BoseHubbardLosses(BoseHubbardParams),
    CatAnharmonic(CatParams),
    CatExact(CatParams),
    Custom(CustomParams),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::DampedOscillator(_) => "damped_oscillator",
            Experiment::LimitCycle(_) => "limit_cycle",
            Experiment::BoseHubbardLosses(_) => "bose_hubbard_losses",
            Experiment::CatAnharmonic(_) => "cat_anharmonic",
            Experiment::CatExact(_) => "cat_exact",
            Experiment::Custom(_) => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub solvers: Vec<Solver>,
    pub times: TimeGrid,
    /// Times at which Wigner grids are written; added to the output grid.
    #[serde(default)]
    pub frames: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Output root; `<root>/<experiment>/<solver>/...`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: SolverTolerances,
    /// Named thresholds of the experiment's checks.
    #[serde(default)]
    pub acceptance: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.times.t_end > 0.0) || !self.times.t_end.is_finite() || self.times.steps == 0 {
            return bad(format!("invalid time grid {:?}", self.times));
        }
        if self.solvers.is_empty() {
            return bad("no solver selected".into());
        }
        let supported = supported_solvers(&self.experiment);
        for s in &self.solvers {
            if !supported.contains(s) {
                return bad(format!("solver `{}` is not available for `{}`", s.name(), self.experiment.name()));
            }
        }
        if let Some(f) = self.frames.iter().find(|f| !(**f >= 0.0 && **f <= self.times.t_end)) {
            return bad(format!("frame time {f} outside [0, {}]", self.times.t_end));
        }
        if !self.frames.is_empty() && self.grid.is_none() {
            return bad("frames requested without a grid".into());
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        if !(self.tolerances.rtol > 0.0 && self.tolerances.atol > 0.0) {
            return bad("integration tolerances must be positive".into());
        }
        let known = acceptance_keys(&self.experiment);
        if let Some(k) = self.acceptance.keys().find(|k| !known.contains(&k.as_str())) {
            return bad(format!("unknown acceptance key `{k}` (expected one of {known:?})"));
        }
        match &self.experiment {
            Experiment::CatAnharmonic(p) | Experiment::CatExact(p) => {
                if p.centres.is_empty() || p.centres.len() != p.coeffs.len() {
                    return bad("cat needs one coefficient per centre".into());
                }
                if !(p.width[1] > 0.0) {
                    return bad("width needs Im A > 0".into());
                }
            }
            Experiment::BoseHubbardLosses(p) => {
                if p.phases.is_empty() || p.n_traj == 0 || !(p.n0 > 0.0) {
                    return bad("Bose-Hubbard needs sites, trajectories and particles".into());
                }
            }
            Experiment::LimitCycle(p) => {
                if !(p.master_t_end > 0.0 && p.master_t_end <= self.times.t_end) {
                    return bad("master_t_end must lie in (0, t_end]".into());
                }
            }
            Experiment::Custom(p) => {
                if p.a0.len() != p.model.num_modes {
                    return bad("custom: one initial amplitude per mode".into());
                }
                p.model.build()?;
            }
            Experiment::DampedOscillator(_) => {}
        }
        Ok(())
    }

    /// Output grid merged with the frame times.
    pub fn output_times(&self) -> Vec<f64> {
        let mut t = self.times.times();
        t.extend(&self.frames);
        t.sort_by(f64::total_cmp);
        t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.times.t_end);
        t
    }

    /// Threshold of a named check, falling back to the registered default.
    pub fn threshold(&self, key: &str) -> f64 {
        self.acceptance.get(key).copied().unwrap_or_else(|| {
            registered(self.experiment.name())
                .and_then(|info| info.acceptance.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
                .unwrap_or(f64::NAN)
        })
    }
}

pub fn supported_solvers(e: &Experiment) -> &'static [Solver] {
    use Solver::*;
    match e {
        Experiment::DampedOscillator(_) | Experiment::LimitCycle(_) | Experiment::Custom(_) => &[Semiclassical, Master],
        Experiment::BoseHubbardLosses(_) => &[Semiclassical, Jumps, Master],
        Experiment::CatAnharmonic(_) | Experiment::CatExact(_) => &[Semiclassical, Doubled, Master],
    }
}

fn acceptance_keys(e: &Experiment) -> Vec<&'static str> {
    registered(e.name())
        .map(|info| info.acceptance.iter().map(|(k, _)| *k).collect())
        .unwrap_or_default()
}

/// A registered experiment: what it produces and the thresholds of its checks.
#[derive(Clone, Debug)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// The plotted quantities it reproduces.
    pub artifacts: &'static str,
    pub acceptance: &'static [(&'static str, f64)],
}

pub const REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "damped_oscillator",
        description: "Damped harmonic oscillator from a coherent state; the Gaussian propagation is exact here",
        artifacts: "centre and width trajectories of both solvers",
        acceptance: &[("max_centre_error", 1e-6), ("max_width_error", 1e-6), ("min_physicality", -1e-9)],
    },
    ExperimentInfo {
        name: "limit_cycle",
        description: "Oscillator with linear and two-photon loss and linear gain, relaxing onto a limit cycle",
        artifacts: "Wigner snapshots of both solvers and the long-time covariance element alpha(t)",
        acceptance: &[
            ("ring_error", 1e-6),
            ("alpha_rel_error", 0.1),
            ("alpha_window", 15.0),
            ("slope_window", 15.0),
            ("plateau_slope_ratio", 0.1),
            ("min_physicality", -1e-9),
        ],
    },
    ExperimentInfo {
        name: "bose_hubbard_losses",
        description: "Two-site Bose-Hubbard model with two-body losses, mean field against quantum jumps",
        artifacts: "total number, population imbalance and first-order coherence g1 between the sites",
        acceptance: &[("stderr_multiple", 3.0), ("g1_drop", 0.05), ("min_physicality", -1e-9)],
    },
    ExperimentInfo {
        name: "cat_anharmonic",
        description: "Cat state in a damped anharmonic oscillator, complex Gaussian superposition against the master equation",
        artifacts: "Wigner snapshots of the superposition and the mean position and momentum",
        acceptance: &[
            ("mean_rel_rms", 0.05),
            ("max_y", 1e-10),
            ("lobe_error", 1e-8),
            ("min_physicality", -1e-9),
        ],
    },
    ExperimentInfo {
        name: "cat_exact",
        description: "Cat state in a damped harmonic oscillator, where the superposition propagation is exact",
        artifacts: "Wigner snapshots of both solvers",
        acceptance: &[("grid_sup_error", 1e-5), ("mean_rel_rms", 1e-6), ("min_physicality", -1e-9)],
    },
    ExperimentInfo {
        name: "custom",
        description: "User-supplied model text propagated from a coherent state",
        artifacts: "centre, covariance and number trajectories",
        acceptance: &[("max_centre_error", f64::INFINITY), ("min_physicality", -1e-9)],
    },
];

pub fn registered(name: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name)
}

fn acceptance_map(name: &str) -> BTreeMap<String, f64> {
    registered(name)
        .map(|info| {
            info.acceptance
                .iter()
                .filter(|(_, v)| v.is_finite())
                .map(|(k, v)| (k.to_string(), *v))
                .collect()
        })
        .unwrap_or_default()
}

fn cat_params(beta: f64) -> CatParams {
    CatParams {
        beta,
        gamma: 0.3,
        centres: vec![[4.0, 3.0], [4.0, -3.0]],
        coeffs: vec![[1.0, 0.0], [1.0, 0.0]],
        // unit-width packets: A = i, so every lobe starts with G = I
        width: [0.0, 1.0],
        n_max: 60,
        compare_until: 1.0,
    }
}

/// Default configuration of a registered experiment.
pub fn default_config(name: &str) -> Result<ExperimentConfig> {
    use Solver::*;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (experiment, solvers, times, frames, grid) = match name {
        "damped_oscillator" => (
            Experiment::DampedOscillator(DampedParams {
                omega: 1.0,
                gamma: 0.1,
                a0: [2.0, 0.0],
                n_max: 40,
            }),
            vec![Semiclassical, Master],
            TimeGrid { t_end: 20.0, steps: 200 },
            vec![],
            None,
        ),
        "limit_cycle" => (
            Experiment::LimitCycle(LimitCycleParams {
                omega: 1.0,
                gamma1: 0.1,
                gamma2: 0.01,
                gain: 0.15,
                a0: [4.0 * s, 4.0 * s],
                n_max: 40,
                master_t_end: 150.0,
            }),
            vec![Semiclassical, Master],
            TimeGrid { t_end: 500.0, steps: 500 },
            vec![13.0, 50.0, 150.0],
            Some(GridSpec::square(8.0, 200)),
        ),
        "bose_hubbard_losses" => (
            Experiment::BoseHubbardLosses(BoseHubbardParams {
                j: 1.0,
                n0: 20.0,
                u_n0: 1.0,
                gamma: 0.05,
                phases: vec![std::f64::consts::FRAC_PI_2, 0.0],
                n_max: 25,
                n_traj: 5000,
                compare_until: 2.0,
            }),
            vec![Semiclassical, Jumps],
            TimeGrid { t_end: 5.0, steps: 50 },
            vec![],
            None,
        ),
        "cat_anharmonic" => (
            Experiment::CatAnharmonic(cat_params(0.1)),
            vec![Semiclassical, Doubled, Master],
            TimeGrid { t_end: 2.5, steps: 50 },
            vec![0.0, 0.5, 1.5, 2.5],
            Some(GridSpec::square(8.0, 200)),
        ),
        "cat_exact" => (
            Experiment::CatExact(cat_params(0.0)),
            vec![Doubled, Master],
            TimeGrid { t_end: 2.5, steps: 50 },
            vec![0.0, 0.5, 1.5, 2.5],
            Some(GridSpec::square(8.0, 200)),
        ),
        "custom" => (
            Experiment::Custom(CustomParams {
                model: ModelSpec {
                    chart: Chart::RealQP,
                    num_modes: 1,
                    hamiltonian: "0.5*q1^2 + 0.5*p1^2".into(),
                    lindblads: vec!["sqrt(0.05)*(q1 + i p1)".into()],
                },
                a0: vec![[1.0, 0.0]],
                n_max: 30,
            }),
            vec![Semiclassical, Master],
            TimeGrid { t_end: 10.0, steps: 100 },
            vec![],
            None,
        ),
        other => return Err(Error::Config(format!("unknown experiment `{other}`"))),
    };
    Ok(ExperimentConfig {
        experiment,
        solvers,
        times,
        frames,
        grid,
        output_dir: None,
        seed: 0,
        tolerances: SolverTolerances::default(),
        acceptance: acceptance_map(name),
    })
}
