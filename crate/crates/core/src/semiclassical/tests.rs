use super::*;
use crate::symbols::{parse_symbol, weyl_of_normal_ordered, Chart, PolySymbol, Sign};
use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn qp_model(h: &str, ls: &[&str]) -> LindbladModel {
    LindbladModel::parse(Chart::RealQP, 1, 1.0, h, ls).unwrap()
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, degree: u16, real: bool) -> PolySymbol {
    let mut terms = Vec::new();
    for _ in 0..6 {
        let e: Vec<u16> = (0..2 * n).map(|_| rng.random_range(0..=degree)).collect();
        if e.iter().sum::<u16>() > degree {
            continue;
        }
        let re = rng.random_range(-1.0..1.0);
        let im = if real { 0.0 } else { rng.random_range(-1.0..1.0) };
        terms.push((e, c(re, im)));
    }
    PolySymbol::from_terms(Chart::RealQP, n, terms).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, n: usize) -> LindbladModel {
    let h = random_poly(rng, n, 4, true);
    let ls = (0..2).map(|_| random_poly(rng, n, 3, false)).collect();
    LindbladModel::new(1.0, h, ls).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
    &a * a.transpose() + DMatrix::identity(d, d)
}

#[test]
fn hamiltonian_drift_of_oscillator() {
    let m = qp_model("0.5*q1^2 + 0.5*p1^2", &[]);
    let v = drift_x(&m, &[0.3, -1.2]).unwrap();
    assert_eq!(v.as_slice(), &[-1.2, -0.3]);
}

#[test]
fn nonlinear_lindblad_drift() {
    let g = 0.1f64;
    let l = format!("{} * (q1^2 + i*p1^2)", g.sqrt());
    let m = qp_model("0", &[&l]);
    let (q, p) = (0.7, -1.3);
    let v = drift_x(&m, &[q, p]).unwrap();
    assert_abs_diff_eq!(v[0], -2.0 * g * q * q * p, epsilon = 1e-14);
    assert_abs_diff_eq!(v[1], -2.0 * g * q * p * p, epsilon = 1e-14);
}

#[test]
fn two_mode_drift_without_hamiltonian() {
    let g = 0.3f64;
    let l = format!("{} * (q1 + i*p2)", g.sqrt());
    let m = LindbladModel::parse(Chart::RealQP, 2, 1.0, "0", &[&l]).unwrap();
    let x = [0.5, -0.4, 1.1, 0.9];
    let v = drift_x(&m, &x).unwrap();
    let expected = [0.0, -g * x[0], -g * x[3], 0.0];
    for (a, b) in v.iter().zip(expected) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
    }
}

#[test]
fn damped_oscillator_drift_matrices_and_fixed_width() {
    let (w, g) = (1.3, 0.2);
    let m = qp_model(
        &format!("{} * (q1^2 + p1^2)", w / 2.0),
        &[&format!("{} * (q1 + i*p1)", (g / 2.0f64).sqrt())],
    );
    let dm = drift_matrices(&m, &[0.4, 0.1]).unwrap();
    let omega = crate::symbols::SymplecticForm::new(2).into_matrix();
    let lambda = DMatrix::identity(2, 2) * w - &omega * (g / 2.0);
    assert!((&dm.lambda - lambda).abs().max() < 1e-15);
    assert!((&dm.d - DMatrix::identity(2, 2) * (g / 2.0)).abs().max() < 1e-15);
    let gdot = rhs_g(&m, &[0.4, 0.1], &DMatrix::identity(2, 2)).unwrap();
    assert!(gdot.abs().max() < 1e-15);
}

#[test]
fn width_rhs_special_cases() {
    let omega = crate::symbols::SymplecticForm::new(2).into_matrix();
    let id = DMatrix::identity(2, 2);
    let r = rhs_g_from(&omega, &DMatrix::zeros(2, 2), &id, &id);
    assert!((r + &id * 2.0).abs().max() < 1e-15);

    let m = qp_model("q1^2 + 0.3*q1 p1 + 2*p1^2", &[]);
    let dm = drift_matrices(&m, &[0.0, 0.0]).unwrap();
    assert!(dm.d.iter().all(|&v| v == 0.0));
    let g = DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.8]);
    let expected = &dm.lambda * &omega * &g - &g * &omega * &dm.lambda;
    assert!((rhs_g(&m, &[0.0, 0.0], &g).unwrap() - expected).abs().max() < 1e-14);
}

#[test]
fn real_lindblad_gives_decoherence_only() {
    let m = qp_model("0.5*q1^2 + 0.5*p1^2 + 0.2*q1^4", &["0.7*q1 + 0.2*p1^2"]);
    let h = qp_model("0.5*q1^2 + 0.5*p1^2 + 0.2*q1^4", &[]);
    let x = [0.8, -0.6];
    assert_eq!(drift_x(&m, &x).unwrap(), drift_x(&h, &x).unwrap());
    let dm = drift_matrices(&m, &x).unwrap();
    let hess = drift_matrices(&h, &x).unwrap().lambda;
    assert!((dm.lambda - hess).abs().max() < 1e-15);
    let gl = DVector::from_vec(vec![0.7, 0.4 * x[1]]);
    assert!((dm.d - &gl * gl.transpose()).abs().max() < 1e-15);
}

#[test]
fn width_equation_trace_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let m = random_model(&mut rng, 1);
        let flow = RealFlow::new(&m).unwrap();
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = random_spd(&mut rng, 2);
        let gdot = flow.rhs_g(&x, &g).unwrap();
        let lhs = (g.clone().try_inverse().unwrap() * gdot).trace();
        let omega = crate::symbols::SymplecticForm::new(2).into_matrix();
        let pt: Vec<Complex64> = x.iter().map(|&v| c(v, 0.0)).collect();
        let mut rhs = 0.0;
        for l in &m.lindblads {
            let lbar = l.conj();
            rhs += 2.0 * lbar.poisson(l).unwrap().eval(&pt).unwrap().im;
            let gl = eval_vec(&l.grad(), &pt);
            let glb = eval_vec(&lbar.grad(), &pt);
            let m = linalg::to_complex(&(&omega * &g * &omega));
            rhs += 2.0 * glb.dot(&(m * gl)).re;
        }
        assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn complex_chart_matches_real_chart() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1usize, 2] {
        for _ in 0..10 {
            let m = random_model(&mut rng, n);
            let mc = m.to_chart(Chart::ComplexAAbar).unwrap();
            let x = DVector::from_fn(2 * n, |_, _| rng.random_range(-1.0..1.0));
            let g = random_spd(&mut rng, 2 * n);
            let real = SemiclassicalState::new(0.0, x.clone(), g.clone());
            let cs = real.to_complex();
            let t = mode_transform(n);
            let dx = drift_x(&m, x.as_slice()).unwrap();
            let dxc = drift_complex(&mc, cs.xc.as_slice()).unwrap();
            let expected = &t * dx.map(|v| c(v, 0.0));
            assert!((dxc - &expected).norm() < 1e-10 * (1.0 + expected.norm()));
            let dg = rhs_g(&m, x.as_slice(), &g).unwrap();
            let dgc = rhs_g_complex(&mc, cs.xc.as_slice(), &cs.gc).unwrap();
            let expected = &t * linalg::to_complex(&dg) * t.adjoint();
            let err = (dgc - &expected).norm();
            assert!(err < 1e-10 * (1.0 + expected.norm()), "n={n}: width mismatch {err}");
        }
    }
}

#[test]
fn limit_cycle_mode_equation() {
    let (w, g1, g2, a): (f64, f64, f64, f64) = (1.0, 0.1, 0.01, 0.15);
    let h = weyl_of_normal_ordered(0, 1, 1, 1, 1.0).scale(w);
    let ls = vec![
        parse_symbol(&format!("{} * a1", g1.sqrt()), Chart::ComplexAAbar, 1).unwrap(),
        parse_symbol(&format!("{} * a1^2", g2.sqrt()), Chart::ComplexAAbar, 1).unwrap(),
        parse_symbol(&format!("{} * a1bar", a.sqrt()), Chart::ComplexAAbar, 1).unwrap(),
    ];
    let m = LindbladModel::new(1.0, h, ls).unwrap();
    let z = c(0.7, -1.1);
    let v = drift_complex(&m, &[z, z.conj()]).unwrap();
    let expected = -c(0.0, w) * z + 0.5 * (a - g1) * z - g2 * z.norm_sqr() * z;
    assert!((v[0] - expected).norm() < 1e-14);
    assert!((v[1] - expected.conj()).norm() < 1e-14);
}

#[test]
fn bose_hubbard_mode_equations() {
    let (j, u, g): (f64, f64, f64) = (1.0, 0.05, 0.05);
    let h = format!(
        "-{j}*(a1bar a2 + a2bar a1) + {h}*(a1^2 a1bar^2 - 2*a1 a1bar + 0.5) + {h}*(a2^2 a2bar^2 - 2*a2 a2bar + 0.5)",
        h = u / 2.0
    );
    let l1 = format!("{} * a1^2", g.sqrt());
    let l2 = format!("{} * a2^2", g.sqrt());
    let m = LindbladModel::parse(Chart::ComplexAAbar, 2, 1.0, &h, &[&l1, &l2]).unwrap();
    let (a1, a2) = (c(0.3, 2.1), c(-1.2, 0.4));
    let v = drift_complex(&m, &[a1, a2, a1.conj(), a2.conj()]).unwrap();
    let i = c(0.0, 1.0);
    let e1 = i * j * a2 - i * u * (a1.norm_sqr() - 1.0) * a1 - g * a1.norm_sqr() * a1;
    let e2 = i * j * a1 - i * u * (a2.norm_sqr() - 1.0) * a2 - g * a2.norm_sqr() * a2;
    assert!((v[0] - e1).norm() < 1e-13);
    assert!((v[1] - e2).norm() < 1e-13);
}

#[test]
fn complex_width_fixed_point_under_linear_damping() {
    let m = LindbladModel::parse(Chart::ComplexAAbar, 1, 1.0, "0.8*a1 a1bar", &["0.5*a1"]).unwrap();
    let s = SemiclassicalState::new(0.0, DVector::from_vec(vec![1.0, 0.5]), DMatrix::identity(2, 2)).to_complex();
    let r = rhs_g_complex(&m, s.xc.as_slice(), &s.gc).unwrap();
    assert!(r.norm() < 1e-15);
    let free = LindbladModel::parse(Chart::ComplexAAbar, 1, 1.0, "0.8*a1 a1bar", &[]).unwrap();
    let dm = ComplexFlow::new(&free).unwrap().drift_matrices(s.xc.as_slice()).unwrap();
    assert_eq!(dm.gamma, CMatrix::zeros(2, 2));
    assert_eq!(dm.xi, CMatrix::zeros(2, 2));
    assert!((dm.k[(0, 1)] - c(0.0, 0.8)).norm() < 1e-15);
}

#[test]
fn classifies_flows() {
    let g = 0.3f64;
    let l = parse_symbol(&format!("{} * (q1 + i*p1)", g.sqrt()), Chart::RealQP, 1).unwrap();
    match classify_flow(&l).unwrap() {
        FlowClass::GradientHolomorphic { sign, potential } => {
            assert_eq!(sign, Sign::Minus);
            let expected = parse_symbol(&format!("-{} * (q1^2 + p1^2)", g / 2.0), Chart::RealQP, 1).unwrap();
            assert!(potential.max_abs_diff(&expected) < 1e-15);
        }
        other => panic!("unexpected {other:?}"),
    }
    let conj = parse_symbol("q1 - i*p1", Chart::RealQP, 1).unwrap();
    assert!(matches!(
        classify_flow(&conj).unwrap(),
        FlowClass::GradientHolomorphic { sign: Sign::Plus, .. }
    ));
    let (a, b) = (0.5, 2.0);
    let general = parse_symbol(&format!("{a}*q1 + {b}i*p1"), Chart::RealQP, 1).unwrap();
    match classify_flow(&general).unwrap() {
        FlowClass::GeneralGradient { potential } => {
            let expected = parse_symbol(&format!("-{} * (q1^2 + p1^2)", a * b / 2.0), Chart::RealQP, 1).unwrap();
            assert!(potential.max_abs_diff(&expected) < 1e-14);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(classify_flow(&parse_symbol("q1", Chart::RealQP, 1).unwrap()).unwrap(), FlowClass::Vanishing);
    assert_eq!(
        classify_flow(&parse_symbol("2i*p1^2", Chart::RealQP, 1).unwrap()).unwrap(),
        FlowClass::Vanishing
    );
    match classify_flow(&parse_symbol("q1 + i*q1^2", Chart::RealQP, 1).unwrap()).unwrap() {
        FlowClass::Hamiltonian { generator } => {
            // flow (0, q^2) = Omega grad F with F = -q^3/3
            let expected = parse_symbol("-1/3 * q1^3", Chart::RealQP, 1).unwrap();
            assert!(generator.max_abs_diff(&expected) < 1e-15);
        }
        other => panic!("unexpected {other:?}"),
    }
    let general = parse_symbol("q1^2 + i*p1 + i*q1 p1^2", Chart::RealQP, 1).unwrap();
    assert_eq!(classify_flow(&general).unwrap(), FlowClass::General);
}

#[test]
fn harmonic_orbit_is_periodic() {
    let m = qp_model("0.5*q1^2 + 0.5*p1^2", &[]);
    let s0 = SemiclassicalState::new(0.0, DVector::from_vec(vec![1.0, 0.5]), DMatrix::identity(2, 2));
    let tr = integrate(&m, &s0, &[2.0 * PI], Tolerances::default()).unwrap();
    assert!((&tr.states[0].x - &s0.x).norm() < 1e-8);
    assert!(tr.events.is_empty());
}

#[test]
fn damped_amplitude_decays_exponentially() {
    let (w, g): (f64, f64) = (1.0, 0.2);
    let m = LindbladModel::parse(
        Chart::ComplexAAbar,
        1,
        1.0,
        &format!("{w}*a1 a1bar"),
        &[&format!("{}*a1", g.sqrt())],
    )
    .unwrap();
    let a0 = c(2.0, 0.0);
    let s0 = SemiclassicalState::new(0.0, DVector::from_vec(vec![SQRT_2 * a0.re, SQRT_2 * a0.im]), DMatrix::identity(2, 2))
        .to_complex();
    let times: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    let tr = integrate_complex(&m, &s0, &times, Tolerances::default(), false).unwrap();
    for s in &tr.states {
        let exact = a0 * (-g * s.t / 2.0).exp() * c(0.0, -w * s.t).exp();
        assert!((s.xc[0] - exact).norm() < 1e-8);
        let real = s.to_real();
        assert!((&real.g - DMatrix::identity(2, 2)).abs().max() < 1e-8);
    }
}

#[test]
fn limit_cycle_radius() {
    let (g1, g2, a): (f64, f64, f64) = (0.1, 0.01, 0.15);
    let m = LindbladModel::parse(
        Chart::ComplexAAbar,
        1,
        1.0,
        "a1 a1bar - 0.5",
        &[&format!("{}*a1", g1.sqrt()), &format!("{}*a1^2", g2.sqrt()), &format!("{}*a1bar", a.sqrt())],
    )
    .unwrap();
    let s0 = SemiclassicalState::new(0.0, DVector::from_vec(vec![0.3, 0.0]), DMatrix::identity(2, 2)).to_complex();
    let tr = integrate_complex(&m, &s0, &[400.0], Tolerances::default(), true).unwrap();
    assert!((tr.states[0].xc[0].norm_sqr() - 2.5).abs() < 1e-6);
}

#[test]
fn physicality_is_monitored() {
    let m = qp_model("0.5*q1^2 + 0.5*p1^2 + 0.1*q1^4", &["0.3*(q1 + i*p1)", "0.2*q1^2"]);
    let s0 = SemiclassicalState::new(0.0, DVector::from_vec(vec![2.0, 0.0]), DMatrix::identity(2, 2));
    let times: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let tr = integrate(&m, &s0, &times, Tolerances::default()).unwrap();
    assert!(tr.states.iter().all(|s| s.is_physical()));
    assert!(tr.events.is_empty());
}

#[test]
fn rejects_bad_inputs() {
    let m = qp_model("q1^2", &[]);
    assert!(matches!(drift_x(&m, &[1.0]), Err(Error::DimensionMismatch { .. })));
    let mc = m.to_chart(Chart::ComplexAAbar).unwrap();
    assert!(matches!(drift_x(&mc, &[1.0, 0.0]), Err(Error::UnsupportedChart { .. })));
    let s0 = SemiclassicalState::new(1.0, DVector::zeros(2), DMatrix::identity(2, 2));
    assert!(integrate(&m, &s0, &[0.5], Tolerances::default()).is_err());
    let heavy = LindbladModel::parse(Chart::ComplexAAbar, 1, 0.5, "a1 a1bar", &[]).unwrap();
    assert!(matches!(ComplexFlow::new(&heavy), Err(Error::UnsupportedHbar(_))));
}
