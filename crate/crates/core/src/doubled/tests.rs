use super::*;
use crate::gaussian::cat_decompose;
use crate::ode::Tolerances;
use crate::semiclassical::{drift_x, rhs_g};
use crate::symbols::SymplecticForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize, degree: u16, real: bool, min_degree: u16) -> PolySymbol {
    let mut terms = Vec::new();
    for _ in 0..6 {
        let e: Vec<u16> = (0..2 * n).map(|_| rng.random_range(0..=degree)).collect();
        let total: u16 = e.iter().sum();
        if total > degree || total < min_degree {
            continue;
        }
        let im = if real { 0.0 } else { rng.random_range(-1.0..1.0) };
        terms.push((e, c(rng.random_range(-1.0..1.0), im)));
    }
    PolySymbol::from_terms(Chart::RealQP, n, terms).unwrap()
}

fn random_model(rng: &mut ChaCha8Rng, n: usize, h_deg: u16, l_deg: u16) -> LindbladModel {
    let h = random_poly(rng, n, h_deg, true, 0);
    let ls = (0..2).map(|_| random_poly(rng, n, l_deg, false, 1)).collect();
    LindbladModel::new(1.0, h, ls).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
    &a * a.transpose() + DMatrix::identity(d, d)
}

fn damped_model(beta: f64, gamma: f64) -> LindbladModel {
    LindbladModel::parse(
        Chart::RealQP,
        1,
        1.0,
        &format!("0.5*q1^2 + 0.5*p1^2 + {}*q1^4", beta / 4.0),
        &[&format!("{} * (q1 + i*p1)", (gamma / 2.0f64).sqrt())],
    )
    .unwrap()
}

#[test]
fn generator_convention_matches_closed_form() {
    convention_self_test().unwrap();
}

#[test]
fn hamiltonian_only_symbol_is_real() {
    let m = LindbladModel::parse(Chart::RealQP, 1, 1.0, "q1^2 + 0.4*q1 p1 + p1^2", &[]).unwrap();
    let k = build_k(&m).unwrap();
    assert!(k.k0.has_real_coefficients());
    assert!(k.k1.is_zero());
}

#[test]
fn parity_and_sign_of_generator() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1usize, 2] {
        for _ in 0..5 {
            let m = random_model(&mut rng, n, 4, 2);
            let k = build_k(&m).unwrap();
            let d = 2 * n;
            for (e, v) in k.k0.terms() {
                let ydeg: u16 = e[d..].iter().sum();
                if ydeg % 2 == 0 {
                    assert!(v.re.abs() < 1e-12, "Re K0 must be odd in y");
                } else {
                    assert!(v.im.abs() < 1e-12, "Im K0 must be even in y");
                }
            }
            let im = k.k0.imag_part().unwrap();
            let at_zero: Vec<(usize, Complex64)> = (d..2 * d).map(|i| (i, c(0.0, 0.0))).collect();
            for g in im.grad() {
                assert!(g.partial_eval(&at_zero).max_coefficient() < 1e-12);
            }
            for _ in 0..50 {
                let pt: Vec<f64> = (0..2 * d).map(|_| rng.random_range(-2.0..2.0)).collect();
                assert!(im.eval_real(&pt).unwrap().re <= 1e-12);
            }
        }
    }
}

#[test]
fn linear_lindblad_imaginary_part_is_quadratic_in_y() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_model(&mut rng, 2, 2, 1);
    let k = build_k(&m).unwrap();
    let dmat = chord::linear_diffusion(&m).unwrap();
    for _ in 0..20 {
        let pt: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = DVector::from_column_slice(&pt[4..]);
        let im = k.k0.eval_real(&pt).unwrap().im;
        assert!((im + 0.5 * y.dot(&(&dmat * &y))).abs() < 1e-12);
    }
}

#[test]
fn reduces_to_semiclassical_flow_at_zero_momentum() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for n in [1usize, 2] {
        for _ in 0..5 {
            let m = random_model(&mut rng, n, 4, 3);
            let k = CompiledK::from_model(&m).unwrap();
            let d = 2 * n;
            let x = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let g = random_spd(&mut rng, d);
            let comp = ComplexGaussian {
                hbar: 1.0,
                x: x.clone(),
                y: DVector::zeros(d),
                b: linalg::to_complex(&g) * c(0.0, 2.0),
                alpha: c(0.0, 0.0),
                weight: c(1.0, 0.0),
                log_prefactor: c(0.0, 0.0),
            };
            let der = rhs_component(&k, &comp).unwrap();
            assert!(der.y.norm() < 1e-12);
            let dx = drift_x(&m, x.as_slice()).unwrap();
            assert!((&der.x - &dx).norm() < 1e-11 * (1.0 + dx.norm()));
            let dg = rhs_g(&m, x.as_slice(), &g).unwrap();
            let from_b = (&der.b * c(0.0, -0.5)).map(|v| v.re);
            assert!((&from_b - &dg).norm() < 1e-11 * (1.0 + dg.norm()));
            assert!(der.b.iter().all(|v| v.re.abs() < 1e-11 * (1.0 + dg.norm())));
        }
    }
}

#[test]
fn free_rotation_of_both_centres() {
    let m = LindbladModel::parse(Chart::RealQP, 1, 1.0, "0.5*q1^2 + 0.5*p1^2", &[]).unwrap();
    let k = CompiledK::from_model(&m).unwrap();
    let comp = ComplexGaussian {
        hbar: 1.0,
        x: DVector::from_vec(vec![1.0, 0.5]),
        y: DVector::from_vec(vec![-0.3, 0.8]),
        b: DMatrix::from_row_slice(2, 2, &[c(0.1, 1.5), c(0.2, 0.1), c(0.2, 0.1), c(-0.1, 0.9)]),
        alpha: c(0.0, 0.0),
        weight: c(1.0, 0.0),
        log_prefactor: c(0.0, 0.0),
    };
    let t = 1.7f64;
    let (out, ev) = propagate_component(&k, &comp, 0.0, &[t], Tolerances::new(1e-12, 1e-14)).unwrap();
    assert!(ev.is_empty());
    // exp(Omega t) = [[cos, sin], [-sin, cos]]
    let rot = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
    assert!((&out[0].x - &rot * &comp.x).norm() < 1e-9);
    assert!((&out[0].y - &rot * &comp.y).norm() < 1e-9);
}

#[test]
fn component_integrals_are_conserved_for_quadratic_generators() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let models = vec![
        damped_model(0.0, 0.3),
        LindbladModel::parse(Chart::RealQP, 1, 1.0, "0.5*q1^2 + 0.5*p1^2", &["0.6*q1"]).unwrap(),
        random_model(&mut rng, 1, 2, 1),
    ];
    let centres = vec![(vec![1.0], vec![1.5]), (vec![-0.5], vec![-1.0])];
    let a = CMatrix::from_element(1, 1, c(0.3, 1.2));
    let state = cat_decompose(&centres, &[c(1.0, 0.0), c(0.0, 1.0)], &a, 1.0).unwrap();
    for m in &models {
        let k = CompiledK::from_model(m).unwrap();
        for comp in &state.components {
            let i0 = comp.integral().unwrap();
            let (out, _) = propagate_component(&k, comp, 0.0, &[0.5, 2.0], Tolerances::new(1e-11, 1e-13)).unwrap();
            for s in &out {
                let i1 = s.integral().unwrap();
                assert!((i1 - i0).norm() < 1e-8 * (1.0 + i0.norm()), "{i0} -> {i1}");
            }
        }
    }
}

#[test]
fn cross_components_decay_and_stay_conjugate() {
    let m = damped_model(0.1, 0.3);
    let k = CompiledK::from_model(&m).unwrap();
    let centres = vec![(vec![4.0], vec![3.0]), (vec![4.0], vec![-3.0])];
    let one = c(1.0, 0.0);
    let a = CMatrix::from_element(1, 1, c(0.0, 1.0));
    let state = cat_decompose(&centres, &[one, one], &a, 1.0).unwrap();
    let times: Vec<f64> = (1..=20).map(|k| 0.05 * k as f64).collect();
    let tr = propagate_superposition(&k, &state, 0.0, &times, Tolerances::default()).unwrap();
    let mut prev = state.components[1].peak_magnitude() * state.normalization;
    for s in &tr.states {
        let (c01, c10) = (&s.components[1], &s.components[2]);
        let pt = [3.7, 0.4];
        assert!((c01.eval(&pt) - c10.eval(&pt).conj()).norm() < 1e-9);
        let mag = c01.peak_magnitude() * s.normalization;
        assert!(mag <= prev * (1.0 + 1e-9), "cross weight grew: {prev} -> {mag}");
        prev = mag;
        assert!((s.integral().unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(tr.events.is_empty());
}

#[test]
fn chord_equations_match_component_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let n = rng.random_range(1..=2usize);
        let m = random_model(&mut rng, n, 2, 1);
        let k = CompiledK::from_model(&m).unwrap();
        let d = 2 * n;
        let g = random_spd(&mut rng, d);
        let br = DMatrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        let b = linalg::to_complex(&linalg::symmetrize(&br)) + linalg::to_complex(&g) * c(0.0, 1.0);
        let comp = ComplexGaussian {
            hbar: 1.0,
            x: DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
            y: DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
            b: b.clone(),
            alpha: c(0.0, 0.0),
            weight: c(1.0, 0.0),
            log_prefactor: c(0.0, 0.0),
        };
        let der = rhs_component(&k, &comp).unwrap();
        let chord = chord_from_component(&comp).unwrap();
        let cd = chord_rhs(&m, &chord).unwrap();
        // d(-B^{-1})/dt = B^{-1} Bdot B^{-1}
        let binv = linalg::inverse_c(&b, "B").unwrap();
        let dminus = &binv * &der.b * &binv;
        let scale = 1.0 + der.b.norm();
        assert!((&cd.x - &der.x).norm() < 1e-12 * scale);
        assert!((&cd.y - &der.y).norm() < 1e-12 * scale);
        assert!((&cd.nmat - linalg::re(&dminus)).norm() < 1e-12 * scale);
        assert!((&cd.mmat - linalg::im(&dminus)).norm() < 1e-12 * scale);
    }
}

#[test]
fn chord_width_relation_at_zero_momentum() {
    let g = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.9]);
    let comp = ComplexGaussian {
        hbar: 1.0,
        x: DVector::zeros(2),
        y: DVector::zeros(2),
        b: linalg::to_complex(&g) * c(0.0, 2.0),
        alpha: c(0.0, 0.0),
        weight: c(1.0, 0.0),
        log_prefactor: c(0.0, 0.0),
    };
    let chord = chord_from_component(&comp).unwrap();
    let mi = linalg::inverse(&chord.mmat, "M").unwrap() * 0.5;
    assert!((mi - g).norm() < 1e-13);
    assert!(chord.nmat.norm() < 1e-15);
}

#[test]
fn chord_rejects_nonlinear_lindblads() {
    let m = LindbladModel::parse(Chart::RealQP, 1, 1.0, "q1^2", &["q1", "q1^2"]).unwrap();
    let chord = ChordGaussian {
        x: DVector::zeros(2),
        y: DVector::zeros(2),
        nmat: DMatrix::zeros(2, 2),
        mmat: DMatrix::identity(2, 2),
        norm: c(1.0, 0.0),
    };
    assert!(matches!(chord_rhs(&m, &chord), Err(Error::NonlinearLindblad(1))));
}

#[test]
fn metric_inverse_of_purely_imaginary_width() {
    let b = linalg::to_complex(&DMatrix::identity(2, 2)) * c(0.0, 2.0);
    let gi = metric_inverse(&b).unwrap();
    let omega = SymplecticForm::new(4).into_matrix();
    assert_eq!(gi.nrows(), omega.nrows());
    assert!((gi.view((0, 0), (2, 2)).into_owned() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
    assert!((gi.view((2, 2), (2, 2)).into_owned() - DMatrix::identity(2, 2) * 2.0).norm() < 1e-15);
}
