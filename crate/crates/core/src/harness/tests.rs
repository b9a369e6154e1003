use super::*;

fn small_damped() -> ExperimentConfig {
    let mut cfg = default_config("damped_oscillator").unwrap();
    if let Experiment::DampedOscillator(p) = &mut cfg.experiment {
        p.n_max = 20;
        p.a0 = [1.0, 0.0];
    }
    cfg.times = TimeGrid { t_end: 4.0, steps: 8 };
    cfg
}

fn run_of(times: Vec<f64>, name: &str, values: Vec<f64>) -> SolverRun {
    SolverRun {
        solver: Solver::Semiclassical,
        times,
        observables: vec![Observable::exact(name, values)],
        frames: vec![],
        events: vec![],
        runtime_s: 0.0,
    }
}

#[test]
fn every_registered_default_validates_and_round_trips() {
    for info in REGISTRY {
        let cfg = default_config(info.name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment.name(), info.name);
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        for (key, _) in info.acceptance {
            assert!(!cfg.threshold(key).is_nan(), "{}: {key}", info.name);
        }
    }
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    let text = default_config("cat_exact").unwrap().to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let cases: [&dyn Fn(&mut serde_json::Value); 5] = [
        &|v| v["extra"] = 1.into(),
        &|v| v["experiment"]["extra"] = 1.into(),
        &|v| v["times"]["extra"] = 1.into(),
        &|v| v["grid"]["extra"] = 1.into(),
        &|v| v["acceptance"]["not_a_check"] = 1.into(),
    ];
    for edit in cases {
        let mut bad = v.clone();
        edit(&mut bad);
        assert!(ExperimentConfig::from_json(&bad.to_string()).is_err(), "{bad}");
    }
    let mut unknown = v.clone();
    unknown["experiment"]["name"] = "nope".into();
    assert!(ExperimentConfig::from_json(&unknown.to_string()).is_err());
}

#[test]
fn invalid_configs_are_reported() {
    let mut cfg = small_damped();
    cfg.solvers = vec![Solver::Doubled];
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    let mut cfg = small_damped();
    cfg.frames = vec![1.0];
    assert!(cfg.validate().is_err());
    let mut cfg = default_config("custom").unwrap();
    if let Experiment::Custom(p) = &mut cfg.experiment {
        p.model.hamiltonian = "q1 +* p1".into();
    }
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn frames_are_merged_into_the_time_grid() {
    let mut cfg = small_damped();
    cfg.frames = vec![1.0, 1.3];
    cfg.grid = Some(crate::gaussian::GridSpec::square(4.0, 10));
    let t = cfg.output_times();
    assert_eq!(t.len(), 10);
    assert!(t.contains(&1.3));
    assert!(t.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn identical_runs_compare_to_zero() {
    let a = run_of(vec![0.0, 1.0, 2.0], "x", vec![1.0, -2.0, 3.0]);
    let m = compare(&a, &a, &["x"], None, &ToleranceSpec::sup(0.0)).unwrap();
    assert_eq!(m[0].sup, 0.0);
    assert_eq!(m[0].rms, 0.0);
    assert_eq!(m[0].passed, Some(true));
}

#[test]
fn compare_resamples_and_rejects_disjoint_ranges() {
    let a = run_of(vec![0.0, 0.5, 1.0], "x", vec![0.0, 0.5, 1.0]);
    let b = run_of(vec![0.0, 1.0], "x", vec![0.0, 2.0]);
    let m = compare(&a, &b, &["x"], None, &ToleranceSpec::default()).unwrap();
    assert!((m[0].sup - 1.0).abs() < 1e-15);
    assert!((m[0].rms - (1.25f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(m[0].passed, None);
    let late = run_of(vec![2.0, 3.0], "x", vec![0.0, 0.0]);
    assert!(matches!(compare(&a, &late, &["x"], None, &ToleranceSpec::default()), Err(Error::DisjointTimes)));
    let w = compare(&a, &b, &["x"], Some((0.6, 1.0)), &ToleranceSpec::default()).unwrap();
    assert_eq!(w[0].samples, 1);
    assert!(compare(&a, &b, &["y"], None, &ToleranceSpec::default()).is_err());
}

#[test]
fn observables_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut run = run_of(vec![0.0, 0.1, 0.30000000000000004], "x", vec![1.0 / 3.0, -2e-300, 7.0]);
    run.observables.push(Observable {
        name: "y".into(),
        values: vec![1.0, 2.0, 3.0],
        stderr: vec![0.1, f64::NAN, 0.3],
    });
    let path = dir.path().join("observables.csv");
    write_observables(&run, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,obs_name,value,stderr\n"));
    let back = read_observables(&path).unwrap();
    assert_eq!(back.times, run.times);
    assert_eq!(back.observables[0], run.observables[0]);
    assert!(back.observables[1].stderr[1].is_nan());
}

#[test]
fn damped_oscillator_run_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_damped();
    cfg.output_dir = Some(dir.path().to_path_buf());
    let (report, exp_dir) = run(&cfg).unwrap();
    assert!(report.passed, "{report:#?}");
    assert!(report.checks.iter().any(|c| c.name == "max_centre_error"));
    for f in ["report.json", "config.json", "semiclassical/observables.csv", "master/observables.csv", "master/events.json"] {
        assert!(exp_dir.join(f).exists(), "{f}");
    }
    let stored: ComparisonReport =
        serde_json::from_str(&std::fs::read_to_string(exp_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(stored.checks, report.checks);
    // metrics are recomputable from the stored trajectories
    let again = compare_dirs(&exp_dir.join("semiclassical"), &exp_dir.join("master"), &ToleranceSpec::default()).unwrap();
    for m in &report.metrics {
        let r = again.iter().find(|x| x.observable == m.observable).unwrap();
        assert_eq!(r.sup, m.sup);
    }
}

#[test]
fn reruns_produce_identical_csv() {
    let mut cfg = default_config("bose_hubbard_losses").unwrap();
    if let Experiment::BoseHubbardLosses(p) = &mut cfg.experiment {
        p.n0 = 4.0;
        p.u_n0 = 0.2;
        p.n_max = 6;
        p.n_traj = 40;
        p.compare_until = 0.5;
    }
    cfg.times = TimeGrid { t_end: 0.5, steps: 5 };
    cfg.seed = 11;
    let read = |root: &std::path::Path| std::fs::read(root.join("bose_hubbard_losses/jumps/observables.csv")).unwrap();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_output(&execute(&cfg).unwrap(), d1.path()).unwrap();
    write_output(&execute(&cfg).unwrap(), d2.path()).unwrap();
    assert_eq!(read(d1.path()), read(d2.path()));
    cfg.seed = 12;
    let d3 = tempfile::tempdir().unwrap();
    write_output(&execute(&cfg).unwrap(), d3.path()).unwrap();
    assert_ne!(read(d1.path()), read(d3.path()));
}

#[test]
fn cat_exact_small_grid_agrees() {
    let mut cfg = default_config("cat_exact").unwrap();
    if let Experiment::CatExact(p) = &mut cfg.experiment {
        p.n_max = 50;
        p.centres = vec![[2.0, 1.5], [2.0, -1.5]];
    }
    cfg.times = TimeGrid { t_end: 1.0, steps: 10 };
    cfg.frames = vec![0.0, 1.0];
    cfg.grid = Some(crate::gaussian::GridSpec::square(6.0, 40));
    let out = execute(&cfg).unwrap();
    for c in &out.checks {
        assert!(c.passed, "{c:?}");
    }
    assert!(out.check("grid_sup_error").unwrap().value < 1e-8);
    assert_eq!(out.run(Solver::Doubled).unwrap().frames.len(), 2);
}

#[test]
fn custom_model_text_runs() {
    let cfg = default_config("custom").unwrap();
    let out = execute(&ExperimentConfig {
        times: TimeGrid { t_end: 2.0, steps: 4 },
        ..cfg
    })
    .unwrap();
    // linear Lindblad and quadratic Hamiltonian: the Gaussian result is exact
    assert!(out.check("max_centre_error").unwrap().value < 1e-6);
}

#[test]
fn nonlinear_flow_portrait_moves_on_straight_lines() {
    let cfg = portrait_preset("nonlinear_flow").unwrap();
    let model = cfg.model.build().unwrap();
    let p = portrait(&model, &cfg.field, &cfg.starts, &cfg.times, cfg.escape_radius, cfg.tolerances).unwrap();
    assert_eq!(p.field.len(), 21 * 21);
    for row in &p.field {
        let [q, pp, dq, dp] = *row;
        assert!((dq + 0.2 * q * q * pp).abs() < 1e-12 && (dp + 0.2 * q * pp * pp).abs() < 1e-12);
    }
    for path in &p.trajectories {
        let ratio = path[0][2] / path[0][1];
        for pt in path {
            assert!((pt[2] / pt[1] - ratio).abs() < 1e-8 * ratio.abs().max(1.0));
        }
    }
    // the unstable direction q = -p leaves the escape radius in finite time
    assert!(p.trajectories.iter().any(|t| t.len() < cfg.times.steps + 1));
}

#[test]
fn limit_cycle_portrait_reaches_the_ring() {
    let cfg = portrait_preset("limit_cycle").unwrap();
    let model = cfg.model.build().unwrap();
    let p = portrait(&model, &cfg.field, &cfg.starts, &cfg.times, cfg.escape_radius, cfg.tolerances).unwrap();
    for path in &p.trajectories {
        let last = path.last().unwrap();
        let abs2 = 0.5 * (last[1] * last[1] + last[2] * last[2]);
        assert!((abs2 - 2.5).abs() < 1e-2, "{abs2}");
    }
    let dir = tempfile::tempdir().unwrap();
    write_portrait(&p, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    assert!(text.starts_with("traj,t,q,p\n"));
}

#[test]
fn harmonic_portrait_is_circular() {
    let cfg = portrait_preset("harmonic").unwrap();
    let model = cfg.model.build().unwrap();
    let p = portrait(&model, &cfg.field, &cfg.starts, &cfg.times, cfg.escape_radius, cfg.tolerances).unwrap();
    for path in &p.trajectories {
        let r0 = path[0][1].hypot(path[0][2]);
        assert!(path.iter().all(|pt| (pt[1].hypot(pt[2]) - r0).abs() < 1e-8));
    }
}

#[test]
fn selftest_passes() {
    for c in selftest().unwrap() {
        assert!(c.passed, "{c:?}");
    }
}
