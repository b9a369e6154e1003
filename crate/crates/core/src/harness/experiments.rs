use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::compare::{compare, ObservableMetric, ToleranceSpec};
use super::config::{BoseHubbardParams, CatParams, CustomParams, DampedParams, Experiment, ExperimentConfig, LimitCycleParams};
use super::{models, timed, Check, ExperimentOutput, Frame, ModelSpec, Observable, Solver, SolverRun};
use crate::doubled::{propagate_superposition, CompiledK};
use crate::error::Result;
use crate::events::Event;
use crate::gaussian::{cat_decompose, coherent, g_from_a, mode_transform, physicality_min_eig, GaussianMoments};
use crate::linalg::{self, CMatrix};
use crate::quantum::{
    grid_resolution_warning, integrate_master, quantum_jump, superposition_state, wigner_of_density, DensityMatrix,
    FockSpace, JumpOptions, MasterOptions, QuantumModel,
};
use crate::semiclassical::{integrate, integrate_complex, LindbladModel, SemiclassicalState};
use crate::symbols::Chart;

/// Relative round-off allowed in monotonicity checks.
const MONOTONE_SLACK: f64 = 1e-9;

pub(super) fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut out = match &cfg.experiment {
        Experiment::DampedOscillator(p) => damped(cfg, p)?,
        Experiment::LimitCycle(p) => limit_cycle(cfg, p)?,
        Experiment::BoseHubbardLosses(p) => bose_hubbard(cfg, p)?,
        Experiment::CatAnharmonic(p) => cat(cfg, p, false)?,
        Experiment::CatExact(p) => cat(cfg, p, true)?,
        Experiment::Custom(p) => custom(cfg, p)?,
    };
    out.runs.sort_by_key(|r| r.solver);
    Ok(out)
}

fn output(cfg: &ExperimentConfig, model: ModelSpec) -> ExperimentOutput {
    ExperimentOutput {
        config: cfg.clone(),
        model,
        runs: Vec::new(),
        metrics: Vec::new(),
        checks: Vec::new(),
    }
}

fn wants(cfg: &ExperimentConfig, s: Solver) -> bool {
    cfg.solvers.contains(&s)
}

fn real_model(spec: &ModelSpec) -> Result<LindbladModel> {
    spec.build()?.to_chart(Chart::RealQP)
}

fn indexed(name: &str, j: usize, n: usize) -> String {
    if n == 1 {
        name.to_string()
    } else {
        format!("{name}{}", j + 1)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real-chart covariance `<{dx, dx}>/2` from the mode-chart blocks.
fn real_covariance(m: &GaussianMoments) -> DMatrix<f64> {
    let n = m.mean_a.len();
    let al = &m.blocks.alpha_block;
    let be = &m.blocks.beta_block;
    let mut sigma = CMatrix::zeros(2 * n, 2 * n);
    sigma.view_mut((0, 0), (n, n)).copy_from(&al.map(|v| v.conj()));
    sigma.view_mut((0, n), (n, n)).copy_from(&be.map(|v| v.conj()));
    sigma.view_mut((n, 0), (n, n)).copy_from(be);
    sigma.view_mut((n, n), (n, n)).copy_from(al);
    let t = mode_transform(n);
    linalg::symmetrize(&linalg::re(&(t.adjoint() * sigma * t))) * 0.5
}

/// Per-time moment observables shared by the Gaussian and Fock-space solvers:
/// centres, populations, the covariance blocks and, for one mode, the width
/// matrix `G = (hbar/2) cov^{-1}`.
struct MomentTable {
    n: usize,
    cols: Vec<Observable>,
}

impl MomentTable {
    fn new(n: usize) -> Self {
        MomentTable { n, cols: Vec::new() }
    }

    fn col(&mut self, name: String) -> &mut Observable {
        if let Some(k) = self.cols.iter().position(|o| o.name == name) {
            return &mut self.cols[k];
        }
        self.cols.push(Observable::exact(name, Vec::new()));
        self.cols.last_mut().unwrap()
    }

    fn push(&mut self, name: String, v: f64) {
        let o = self.col(name);
        o.values.push(v);
        o.stderr.push(0.0);
    }

    fn add(&mut self, m: &GaussianMoments) -> Result<()> {
        let n = self.n;
        let s = std::f64::consts::SQRT_2;
        for j in 0..n {
            self.push(indexed("q", j, n), s * m.mean_a[j].re);
            self.push(indexed("p", j, n), s * m.mean_a[j].im);
        }
        for j in 0..n {
            self.push(indexed("n", j, n), m.population(j));
            self.push(indexed("abs2", j, n), m.mean_a[j].norm_sqr());
        }
        for i in 0..n {
            for j in i..n {
                let tag = if n == 1 { String::new() } else { format!("{}{}", i + 1, j + 1) };
                let a = m.blocks.alpha_block[(i, j)];
                let b = m.blocks.beta_block[(i, j)];
                self.push(format!("alpha{tag}"), a.re);
                if i != j {
                    self.push(format!("alpha{tag}_im"), a.im);
                }
                self.push(format!("beta{tag}_re"), b.re);
                self.push(format!("beta{tag}_im"), b.im);
            }
        }
        if n == 1 {
            let g = linalg::inverse(&real_covariance(m), "covariance")? * 0.5;
            self.push("g_qq".into(), g[(0, 0)]);
            self.push("g_qp".into(), g[(0, 1)]);
            self.push("g_pp".into(), g[(1, 1)]);
        }
        Ok(())
    }

    fn finish(self) -> Vec<Observable> {
        self.cols
    }
}

fn semiclassical_observables(states: &[SemiclassicalState]) -> Result<Vec<Observable>> {
    let n = states.first().map_or(1, |s| s.x.len() / 2);
    let mut table = MomentTable::new(n);
    for s in states {
        table.add(&s.moments(1.0)?)?;
    }
    let mut obs = table.finish();
    obs.push(Observable::exact(
        "physicality",
        states.iter().map(|s| s.min_eig_physicality).collect(),
    ));
    Ok(obs)
}

fn master_observables(states: &[DensityMatrix], space: &FockSpace) -> Result<Vec<Observable>> {
    let mut table = MomentTable::new(space.num_modes());
    for s in states {
        table.add(&s.moments(space)?)?;
    }
    let mut obs = table.finish();
    obs.push(Observable::exact("purity", states.iter().map(|s| s.purity()).collect()));
    Ok(obs)
}

fn min_physicality_check(cfg: &ExperimentConfig, run: &SolverRun) -> Option<Check> {
    let v = run.observable("physicality")?;
    let min = v.values.iter().copied().fold(f64::INFINITY, f64::min);
    Some(Check::at_least(
        "min_physicality",
        min,
        cfg.threshold("min_physicality"),
        format!("min eig(G^-1 + i Omega) along the {} run", run.solver.name()),
    ))
}

fn semiclassical_run(cfg: &ExperimentConfig, model: &LindbladModel, init: SemiclassicalState, times: &[f64]) -> Result<SolverRun> {
    let (traj, secs) = timed(|| integrate(model, &init, times, cfg.tolerances.ode()))?;
    let mut frames = Vec::new();
    if let Some(spec) = cfg.grid {
        for &ft in &cfg.frames {
            if let Some(k) = frame_index(times, ft) {
                let grid = traj.states[k].to_gaussian(1.0)?.eval_grid(spec)?;
                frames.push(Frame { t: times[k], grid });
            }
        }
    }
    Ok(SolverRun {
        solver: Solver::Semiclassical,
        times: times.to_vec(),
        observables: semiclassical_observables(&traj.states)?,
        frames,
        events: traj.events,
        runtime_s: secs,
    })
}

fn master_frames(cfg: &ExperimentConfig, space: &FockSpace, times: &[f64], states: &[DensityMatrix], events: &mut Vec<Event>) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    let Some(spec) = cfg.grid else {
        return Ok(frames);
    };
    if space.num_modes() != 1 {
        return Ok(frames);
    }
    if !cfg.frames.is_empty() {
        events.extend(grid_resolution_warning(space.n_max(0), &spec));
    }
    for &ft in &cfg.frames {
        if let Some(k) = frame_index(times, ft) {
            frames.push(Frame {
                t: times[k],
                grid: wigner_of_density(&states[k], spec)?,
            });
        }
    }
    Ok(frames)
}

fn master_run(cfg: &ExperimentConfig, qm: &QuantumModel, psi: &DVector<Complex64>, times: &[f64]) -> Result<SolverRun> {
    let rho0 = DensityMatrix::from_pure(&(psi / c(psi.norm(), 0.0)));
    let (traj, secs) = timed(|| integrate_master(&rho0, qm, times, MasterOptions::default()))?;
    let mut events = traj.events;
    let frames = master_frames(cfg, &qm.space, times, &traj.states, &mut events)?;
    Ok(SolverRun {
        solver: Solver::Master,
        times: times.to_vec(),
        observables: master_observables(&traj.states, &qm.space)?,
        frames,
        events,
        runtime_s: secs,
    })
}

fn coherent_state(a0: &[[f64; 2]]) -> Result<SemiclassicalState> {
    let amps: Vec<Complex64> = a0.iter().map(|a| c(a[0], a[1])).collect();
    Ok(SemiclassicalState::from_gaussian(0.0, &coherent(&amps, 1.0)?))
}

fn metrics_between(
    out: &ExperimentOutput,
    a: Solver,
    b: Solver,
    names: &[&str],
    window: Option<(f64, f64)>,
    tol: &ToleranceSpec,
) -> Result<Vec<ObservableMetric>> {
    match (out.run(a), out.run(b)) {
        (Some(ra), Some(rb)) => compare(ra, rb, names, window, tol),
        _ => Ok(Vec::new()),
    }
}

fn damped(cfg: &ExperimentConfig, p: &DampedParams) -> Result<ExperimentOutput> {
    let spec = models::damped_oscillator(p.omega, p.gamma);
    let model = real_model(&spec)?;
    gaussian_vs_master(cfg, spec, &model, &[p.a0], p.n_max)
}

fn custom(cfg: &ExperimentConfig, p: &CustomParams) -> Result<ExperimentOutput> {
    let model = real_model(&p.model)?;
    gaussian_vs_master(cfg, p.model.clone(), &model, &p.a0, p.n_max)
}

fn gaussian_vs_master(cfg: &ExperimentConfig, spec: ModelSpec, model: &LindbladModel, a0: &[[f64; 2]], n_max: usize) -> Result<ExperimentOutput> {
    let times = cfg.output_times();
    let mut out = output(cfg, spec);
    if wants(cfg, Solver::Semiclassical) {
        out.runs.push(semiclassical_run(cfg, model, coherent_state(a0)?, &times)?);
    }
    if wants(cfg, Solver::Master) {
        let space = FockSpace::uniform(model.num_modes, n_max)?;
        let qm = QuantumModel::from_model(model, space.clone())?;
        let psi = space.coherent(&a0.iter().map(|a| c(a[0], a[1])).collect::<Vec<_>>())?;
        out.runs.push(master_run(cfg, &qm, &psi, &times)?);
    }
    let n = model.num_modes;
    let centre: Vec<String> = (0..n).flat_map(|j| [indexed("q", j, n), indexed("p", j, n)]).collect();
    let centre: Vec<&str> = centre.iter().map(String::as_str).collect();
    let ctol = cfg.threshold("max_centre_error");
    let mut metrics = metrics_between(&out, Solver::Semiclassical, Solver::Master, &centre, None, &ToleranceSpec::sup(ctol))?;
    if let Some(m) = metrics.iter().map(|m| m.sup).reduce(f64::max) {
        out.checks.push(Check::at_most("max_centre_error", m, ctol, "sup |X_semiclassical - <x>_master|"));
    }
    if n == 1 && cfg.acceptance_or_default("max_width_error") {
        let wtol = cfg.threshold("max_width_error");
        let w = metrics_between(&out, Solver::Semiclassical, Solver::Master, &["g_qq", "g_qp", "g_pp"], None, &ToleranceSpec::sup(wtol))?;
        if let Some(m) = w.iter().map(|m| m.sup).reduce(f64::max) {
            out.checks.push(Check::at_most("max_width_error", m, wtol, "sup |G_semiclassical - G_master|"));
        }
        metrics.extend(w);
    }
    out.metrics = metrics;
    if let Some(ch) = out.run(Solver::Semiclassical).and_then(|r| min_physicality_check(cfg, r)) {
        out.checks.push(ch);
    }
    Ok(out)
}

/// Least-squares slope of `values` against `times` over `t >= t_from`.
fn slope(times: &[f64], values: &[f64], t_from: f64) -> f64 {
    let pts: Vec<(f64, f64)> = times.iter().zip(values).filter(|(t, _)| **t >= t_from).map(|(t, v)| (*t, *v)).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    num / den
}

fn limit_cycle(cfg: &ExperimentConfig, p: &LimitCycleParams) -> Result<ExperimentOutput> {
    let spec = models::limit_cycle(p.omega, p.gamma1, p.gamma2, p.gain);
    let model = real_model(&spec)?;
    let times = cfg.output_times();
    let mut out = output(cfg, spec);
    if wants(cfg, Solver::Semiclassical) {
        out.runs.push(semiclassical_run(cfg, &model, coherent_state(&[p.a0])?, &times)?);
    }
    if wants(cfg, Solver::Master) {
        let mt: Vec<f64> = times.iter().copied().filter(|&t| t <= p.master_t_end * (1.0 + 1e-12)).collect();
        let space = FockSpace::uniform(1, p.n_max)?;
        let qm = QuantumModel::from_model(&model, space.clone())?;
        let psi = space.coherent(&[c(p.a0[0], p.a0[1])])?;
        out.runs.push(master_run(cfg, &qm, &psi, &mt)?);
    }
    if let Some(sc) = out.run(Solver::Semiclassical) {
        let ring = (p.gain - p.gamma1) / (2.0 * p.gamma2);
        let last = *sc.values("abs2")?.last().unwrap();
        out.checks.push(Check::at_most(
            "ring_error",
            (last - ring).abs(),
            cfg.threshold("ring_error"),
            format!("| |a(t_end)|^2 - {ring} |"),
        ));
    }
    let window = cfg.threshold("alpha_window");
    out.metrics = metrics_between(&out, Solver::Semiclassical, Solver::Master, &["alpha", "q", "p", "n"], None, &ToleranceSpec::default())?;
    let mut new = Vec::new();
    if let (Some(sc), Some(qm)) = (out.run(Solver::Semiclassical), out.run(Solver::Master)) {
        let (a_sc, a_q) = (sc.values("alpha")?, qm.values("alpha")?);
        let mut worst = 0.0f64;
        for (k, &t) in qm.times.iter().enumerate() {
            if t <= window {
                worst = worst.max((a_sc[k] - a_q[k]).abs() / a_q[k].abs());
            }
        }
        new.push(Check::at_most(
            "alpha_rel_error",
            worst,
            cfg.threshold("alpha_rel_error"),
            format!("max |alpha_sc - alpha_q| / alpha_q for t <= {window}"),
        ));
        let t_end = *qm.times.last().unwrap();
        let from = t_end - cfg.threshold("slope_window");
        let s_sc = slope(&sc.times[..qm.times.len()], &a_sc[..qm.times.len()], from);
        let s_q = slope(&qm.times, a_q, from);
        new.push(Check::at_least(
            "alpha_growth",
            s_sc,
            f64::MIN_POSITIVE,
            format!("semiclassical d(alpha)/dt over [{from}, {t_end}] is positive"),
        ));
        new.push(Check::at_most(
            "alpha_plateau",
            (s_q / s_sc).abs(),
            cfg.threshold("plateau_slope_ratio"),
            format!("quantum slope {s_q:.3e} relative to semiclassical {s_sc:.3e} over [{from}, {t_end}]"),
        ));
    }
    out.checks.extend(new);
    if let Some(ch) = out.run(Solver::Semiclassical).and_then(|r| min_physicality_check(cfg, r)) {
        out.checks.push(ch);
    }
    Ok(out)
}

fn bose_hubbard(cfg: &ExperimentConfig, p: &BoseHubbardParams) -> Result<ExperimentOutput> {
    let m = p.phases.len();
    let u = p.u_n0 / p.n0;
    let spec = models::bose_hubbard(m, p.j, u, p.gamma);
    let model_c = spec.build()?;
    let model = model_c.to_chart(Chart::RealQP)?;
    let times = cfg.output_times();
    let amp = (p.n0 / m as f64).sqrt();
    let a0: Vec<Complex64> = p.phases.iter().map(|&ph| Complex64::from_polar(amp, ph)).collect();
    let mut out = output(cfg, spec);
    if wants(cfg, Solver::Semiclassical) {
        let init = SemiclassicalState::from_gaussian(0.0, &coherent(&a0, 1.0)?).to_complex();
        let (traj, secs) = timed(|| integrate_complex(&model_c, &init, &times, cfg.tolerances.ode(), false))?;
        let mut pops = vec![Vec::new(); m];
        let (mut total, mut imb, mut g1, mut total_w, mut phys) = (vec![], vec![], vec![], vec![], vec![]);
        for s in &traj.states {
            let a = s.mode_amplitudes();
            for (j, pj) in pops.iter_mut().enumerate() {
                pj.push(a[j].norm_sqr());
            }
            total.push(a.iter().map(|v| v.norm_sqr()).sum());
            imb.push(if m > 1 { a[0].norm_sqr() - a[1].norm_sqr() } else { 0.0 });
            let mom = s.moments()?;
            g1.push(if m > 1 { mom.g1(0, 1) } else { 1.0 });
            total_w.push((0..m).map(|j| mom.population(j)).sum());
            phys.push(s.to_real().min_eig_physicality);
        }
        let mut obs = vec![Observable::exact("N", total), Observable::exact("sz2", imb)];
        for (j, pj) in pops.into_iter().enumerate() {
            obs.push(Observable::exact(format!("n{}", j + 1), pj));
        }
        obs.push(Observable::exact("g1", g1));
        obs.push(Observable::exact("N_gaussian", total_w));
        obs.push(Observable::exact("physicality", phys));
        out.runs.push(SolverRun {
            solver: Solver::Semiclassical,
            times: times.clone(),
            observables: obs,
            frames: Vec::new(),
            events: Vec::new(),
            runtime_s: secs,
        });
    }
    let space = FockSpace::uniform(m, p.n_max)?;
    let need_quantum = wants(cfg, Solver::Jumps) || wants(cfg, Solver::Master);
    let qm = if need_quantum { Some(QuantumModel::from_model(&model, space.clone())?) } else { None };
    if let (true, Some(qm)) = (wants(cfg, Solver::Jumps), &qm) {
        let psi = space.coherent(&a0)?;
        let opts = JumpOptions {
            n_traj: p.n_traj,
            seed: cfg.seed,
            ..Default::default()
        };
        let (ens, secs) = timed(|| quantum_jump(qm, &psi, &times, opts))?;
        let nan = vec![f64::NAN; times.len()];
        let (n, ne) = ens.total_number();
        let mut obs = vec![Observable {
            name: "N".into(),
            values: n,
            stderr: ne,
        }];
        let (s, se) = if m > 1 { ens.imbalance(0, 1) } else { (vec![0.0; times.len()], vec![0.0; times.len()]) };
        obs.push(Observable {
            name: "sz2".into(),
            values: s,
            stderr: se,
        });
        for j in 0..m {
            let (v, e) = ens.population(j);
            obs.push(Observable {
                name: format!("n{}", j + 1),
                values: v,
                stderr: e,
            });
        }
        obs.push(Observable {
            name: "g1".into(),
            values: if m > 1 { ens.g1(0, 1) } else { vec![1.0; times.len()] },
            stderr: nan,
        });
        out.runs.push(SolverRun {
            solver: Solver::Jumps,
            times: times.clone(),
            observables: obs,
            frames: Vec::new(),
            events: ens.events.clone(),
            runtime_s: secs,
        });
    }
    if let (true, Some(qm)) = (wants(cfg, Solver::Master), &qm) {
        let psi = space.coherent(&a0)?;
        let mut run = master_run(cfg, qm, &psi, &times)?;
        let len = times.len();
        let total: Vec<f64> = (0..len)
            .map(|k| (0..m).map(|j| run.values(&indexed("n", j, m)).map(|v| v[k]).unwrap_or(0.0)).sum())
            .collect();
        run.observables.push(Observable::exact("N", total));
        if m > 1 {
            let (n1, n2) = (run.values("n1")?.to_vec(), run.values("n2")?.to_vec());
            run.observables.push(Observable::exact("sz2", n1.iter().zip(&n2).map(|(a, b)| a - b).collect()));
        }
        out.runs.push(run);
    }
    let names: Vec<String> = ["N", "sz2", "g1"].iter().map(|s| s.to_string()).chain((1..=m).map(|j| format!("n{j}"))).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    out.metrics = metrics_between(&out, Solver::Semiclassical, Solver::Jumps, &names, None, &ToleranceSpec::default())?;
    out.metrics
        .extend(metrics_between(&out, Solver::Semiclassical, Solver::Master, &["N", "sz2"], None, &ToleranceSpec::default())?);
    if let (Some(sc), Some(q)) = (out.run(Solver::Semiclassical), out.run(Solver::Jumps)) {
        let k_max = cfg.threshold("stderr_multiple");
        let mut checks = Vec::new();
        for (name, label) in [("N", "total number"), ("sz2", "population imbalance 2 S_z")] {
            let (a, b) = (sc.values(name)?, q.observable(name).unwrap());
            // t = 0 is deterministic: its stderr is round-off only
            let worst = times
                .iter()
                .enumerate()
                .filter(|(k, &t)| t > 0.0 && t <= p.compare_until && b.stderr[*k] > 0.0)
                .map(|(k, _)| (a[k] - b.values[k]).abs() / b.stderr[k])
                .fold(0.0f64, f64::max);
            checks.push(Check::at_most(
                &format!("{name}_within_stderr"),
                worst,
                k_max,
                format!("max |semiclassical - jumps| / stderr of the {label} for 0 < t <= {}", p.compare_until),
            ));
        }
        let g = q.values("g1")?;
        checks.push(Check::at_least(
            "g1_drop",
            g[0] - g[g.len() - 1],
            cfg.threshold("g1_drop"),
            "g1(0) - g1(t_end) of the jump ensemble",
        ));
        let rise = max_rise(q.values("N")?);
        checks.push(Check::at_most("N_monotone", rise, 0.0, "largest increase of the ensemble mean N between samples"));
        out.checks.extend(checks);
    }
    if let Some(ch) = out.run(Solver::Semiclassical).and_then(|r| min_physicality_check(cfg, r)) {
        out.checks.push(ch);
    }
    Ok(out)
}

/// Largest increase between consecutive samples beyond relative round-off.
fn max_rise(v: &[f64]) -> f64 {
    v.windows(2)
        .map(|w| w[1] - w[0] - MONOTONE_SLACK * w[0].abs())
        .fold(0.0f64, f64::max)
}

fn cat(cfg: &ExperimentConfig, p: &CatParams, exact: bool) -> Result<ExperimentOutput> {
    let spec = models::damped_anharmonic(p.beta, p.gamma);
    let model = real_model(&spec)?;
    let times = cfg.output_times();
    let mut out = output(cfg, spec);
    let width = CMatrix::from_element(1, 1, c(p.width[0], p.width[1]));
    let g0 = g_from_a(&width)?;
    let coeffs: Vec<Complex64> = p.coeffs.iter().map(|v| c(v[0], v[1])).collect();
    let nlobes = p.centres.len();
    if wants(cfg, Solver::Semiclassical) {
        let mut obs = Vec::new();
        let mut events = Vec::new();
        let mut phys = vec![f64::INFINITY; times.len()];
        let (_, secs) = timed(|| {
            for (l, ctr) in p.centres.iter().enumerate() {
                let init = SemiclassicalState::new(0.0, DVector::from_column_slice(ctr), g0.clone());
                let traj = integrate(&model, &init, &times, cfg.tolerances.ode())?;
                events.extend(traj.events);
                let st = &traj.states;
                for (k, s) in st.iter().enumerate() {
                    phys[k] = phys[k].min(s.min_eig_physicality);
                }
                obs.extend(lobe_observables(l, st.iter().map(|s| (s.x.clone(), s.g.clone()))));
            }
            Ok(())
        })?;
        obs.push(Observable::exact("physicality", phys));
        out.runs.push(SolverRun {
            solver: Solver::Semiclassical,
            times: times.clone(),
            observables: obs,
            frames: Vec::new(),
            events,
            runtime_s: secs,
        });
    }
    if wants(cfg, Solver::Doubled) {
        let centres: Vec<(Vec<f64>, Vec<f64>)> = p.centres.iter().map(|v| (vec![v[0]], vec![v[1]])).collect();
        let state = cat_decompose(&centres, &coeffs, &width, 1.0)?;
        let k = CompiledK::from_model(&model)?;
        let (traj, secs) = timed(|| propagate_superposition(&k, &state, 0.0, &times, cfg.tolerances.ode()))?;
        let (mut q, mut pm, mut cross, mut ymax, mut phys) = (vec![], vec![], vec![], vec![], vec![]);
        let mut lobes: Vec<Vec<(DVector<f64>, DMatrix<f64>)>> = vec![Vec::new(); nlobes];
        for s in &traj.states {
            let mean = s.mean()?;
            q.push(mean[0]);
            pm.push(mean[1]);
            cross.push(s.cross().map(|c| c.peak_magnitude()).sum::<f64>() * s.normalization);
            let mut y = 0.0f64;
            let mut ph = f64::INFINITY;
            for (comp, &(i, _)) in s.components.iter().zip(&s.pairs).filter(|(_, (i, j))| i == j) {
                y = y.max(comp.y.amax());
                let g = linalg::symmetrize(&linalg::im(&comp.b)) * 0.5;
                ph = ph.min(physicality_min_eig(&g));
                lobes[i].push((comp.x.clone(), g));
            }
            ymax.push(y);
            phys.push(ph);
        }
        let mut obs = vec![
            Observable::exact("q", q),
            Observable::exact("p", pm),
            Observable::exact("cross_weight", cross),
            Observable::exact("raw_norm", traj.raw_norms.clone()),
            Observable::exact("max_y_diagonal", ymax),
            Observable::exact("physicality", phys),
        ];
        for (l, lobe) in lobes.into_iter().enumerate() {
            obs.extend(lobe_observables(l, lobe.into_iter()));
        }
        let mut frames = Vec::new();
        if let Some(spec) = cfg.grid {
            for &ft in &cfg.frames {
                if let Some(k) = frame_index(&times, ft) {
                    frames.push(Frame {
                        t: times[k],
                        grid: traj.states[k].eval_grid(spec)?,
                    });
                }
            }
        }
        out.runs.push(SolverRun {
            solver: Solver::Doubled,
            times: times.clone(),
            observables: obs,
            frames,
            events: traj.events,
            runtime_s: secs,
        });
    }
    if wants(cfg, Solver::Master) {
        let centres: Vec<(f64, f64)> = p.centres.iter().map(|v| (v[0], v[1])).collect();
        let (psi, lost) = superposition_state(&centres, &coeffs, c(p.width[0], p.width[1]), p.n_max)?;
        let space = FockSpace::uniform(1, p.n_max)?;
        let qm = QuantumModel::from_model(&model, space)?;
        let mut run = master_run(cfg, &qm, &psi, &times)?;
        if lost > crate::quantum::LEAKAGE_THRESHOLD {
            run.events.push(Event::new(
                0.0,
                crate::events::EventKind::TruncationLeakage,
                format!("initial state lost norm {lost:e} to truncation"),
            ));
        }
        out.runs.push(run);
    }
    let until = p.compare_until;
    let mtol = cfg.threshold("mean_rel_rms");
    let means = metrics_between(&out, Solver::Doubled, Solver::Master, &["q", "p"], Some((0.0, until)), &ToleranceSpec::default())?;
    if let Some(worst) = means.iter().map(|m| m.relative_rms()).reduce(f64::max) {
        out.checks.push(Check::at_most(
            "mean_rel_rms",
            worst,
            mtol,
            format!("max over q, p of RMS(doubled - master) / RMS(master) for t <= {until}"),
        ));
    }
    out.metrics = means;
    out.metrics
        .extend(metrics_between(&out, Solver::Doubled, Solver::Master, &["q", "p"], None, &ToleranceSpec::default())?);
    let mut new = Vec::new();
    if let Some(d) = out.run(Solver::Doubled) {
        new.push(Check::at_most(
            "cross_weight_monotone",
            max_rise(d.values("cross_weight")?),
            0.0,
            "largest increase of the normalized interference-term peak between samples",
        ));
        if !exact {
            let y = d.values("max_y_diagonal")?.iter().copied().fold(0.0, f64::max);
            new.push(Check::at_most("max_y", y, cfg.threshold("max_y"), "max |Y| of the diagonal components"));
        }
    }
    out.checks.extend(new);
    if let (false, Some(sc), Some(d)) = (exact, out.run(Solver::Semiclassical), out.run(Solver::Doubled)) {
        let names: Vec<String> = (0..nlobes)
            .flat_map(|l| ["q", "p", "g_qq", "g_qp", "g_pp"].map(|s| format!("lobe{}_{s}", l + 1)))
            .collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let lobe = compare(d, sc, &names, None, &ToleranceSpec::sup(cfg.threshold("lobe_error")))?;
        let worst = lobe.iter().map(|m| m.sup).fold(0.0, f64::max);
        out.checks.push(Check::at_most(
            "lobe_error",
            worst,
            cfg.threshold("lobe_error"),
            "sup |(X, G)_doubled - (X, G)_semiclassical| over the diagonal components",
        ));
        out.metrics.extend(lobe);
    }
    if exact {
        if let (Some(d), Some(m)) = (out.run(Solver::Doubled), out.run(Solver::Master)) {
            let mut worst = 0.0f64;
            for f in &d.frames {
                if let Some(g) = m.frame(f.t) {
                    worst = worst.max(f.grid.sup_diff(&g.grid)?);
                }
            }
            if !d.frames.is_empty() {
                out.checks.push(Check::at_most(
                    "grid_sup_error",
                    worst,
                    cfg.threshold("grid_sup_error"),
                    "max over frames of sup |W_doubled - W_master| on the grid",
                ));
            }
        }
    }
    for s in [Solver::Semiclassical, Solver::Doubled] {
        if let Some(ch) = out.run(s).and_then(|r| min_physicality_check(cfg, r)) {
            out.checks.push(Check {
                name: format!("min_physicality_{}", s.name()),
                ..ch
            });
        }
    }
    Ok(out)
}

fn frame_index(times: &[f64], ft: f64) -> Option<usize> {
    times.iter().position(|&t| (t - ft).abs() <= 1e-12 * ft.max(1.0))
}

fn lobe_observables(l: usize, states: impl Iterator<Item = (DVector<f64>, DMatrix<f64>)>) -> Vec<Observable> {
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for (x, g) in states {
        for (col, v) in cols.iter_mut().zip([x[0], x[1], g[(0, 0)], g[(0, 1)], g[(1, 1)]]) {
            col.push(v);
        }
    }
    ["q", "p", "g_qq", "g_qp", "g_pp"]
        .iter()
        .zip(cols)
        .map(|(s, v)| Observable::exact(format!("lobe{}_{s}", l + 1), v))
        .collect()
}

impl ExperimentConfig {
    /// True when the experiment registers the named check.
    pub(crate) fn acceptance_or_default(&self, key: &str) -> bool {
        self.threshold(key).is_finite()
    }
}
