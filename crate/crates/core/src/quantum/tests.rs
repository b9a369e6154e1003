use super::*;
use crate::gaussian::{cat_decompose, coherent, GridSpec, WignerGrid};
use crate::ode::{integrate, Tolerances};
use crate::symbols::parse_symbol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dense(op: &CsrMatrix<Complex64>) -> CMatrix {
    to_dense(op)
}

fn random_density(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

fn damped(omega: f64, gamma: f64) -> LindbladModel {
    LindbladModel::parse(
        Chart::ComplexAAbar,
        1,
        1.0,
        &format!("{omega} * a1 a1bar"),
        &[&format!("{} * a1", gamma.sqrt())],
    )
    .unwrap()
    .to_chart(Chart::RealQP)
    .unwrap()
}

#[test]
fn lowering_operator_and_commutator() {
    let space = FockSpace::uniform(1, 6).unwrap();
    let a = dense(space.lowering(0));
    for i in 0..7 {
        for j in 0..7 {
            let expect = if j == i + 1 { (j as f64).sqrt() } else { 0.0 };
            assert!((a[(i, j)] - c(expect, 0.0)).norm() < 1e-15);
        }
    }
    let comm = &a * a.adjoint() - a.adjoint() * &a;
    for i in 0..6 {
        for j in 0..7 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((comm[(i, j)] - c(expect, 0.0)).norm() < 1e-14);
        }
    }
    assert!((comm[(6, 6)] - c(-6.0, 0.0)).norm() < 1e-14);
}

#[test]
fn two_mode_lowering_operators_commute() {
    let space = FockSpace::new(&[3, 4]).unwrap();
    assert_eq!(space.dim(), 20);
    let (a1, a2) = (dense(space.lowering(0)), dense(space.lowering(1)));
    assert!(crate::linalg::max_abs_c(&(&a1 * &a2 - &a2 * &a1)) < 1e-14);
    assert!(crate::linalg::max_abs_c(&(&a1 * a2.adjoint() - a2.adjoint() * &a1)) < 1e-14);
    let idx = space.index(&[2, 3]);
    assert_eq!(space.occupation(idx), vec![2, 3]);
}

#[test]
fn number_operator_and_vacuum_variance() {
    let space = FockSpace::uniform(1, 10).unwrap();
    let n = dense(&space.quantize_normal(&parse_symbol("a1bar a1", Chart::ComplexAAbar, 1).unwrap()).unwrap());
    for k in 0..11 {
        assert!((n[(k, k)].re - k as f64).abs() < 1e-14);
    }
    let q = dense(&space.quantize_weyl(&parse_symbol("q1", Chart::RealQP, 1).unwrap(), 1.0).unwrap());
    let q2 = &q * &q;
    assert!((q2[(0, 0)].re - 0.5).abs() < 1e-15);
    let q2w = dense(&space.quantize_weyl(&parse_symbol("q1^2", Chart::RealQP, 1).unwrap(), 1.0).unwrap());
    // agree away from the truncation edge
    assert!(crate::linalg::max_abs_c(&(q2.view((0, 0), (9, 9)) - q2w.view((0, 0), (9, 9)))) < 1e-13);
    assert!(matches!(
        space.quantize_weyl(&parse_symbol("q1", Chart::RealQP, 1).unwrap(), 0.5),
        Err(Error::UnsupportedHbar(_))
    ));
}

#[test]
fn normal_ordering_of_weyl_symbols() {
    let w = parse_symbol("a1bar a1", Chart::ComplexAAbar, 1).unwrap();
    let n = normal_order(&w, 1.0).unwrap();
    let expect = parse_symbol("a1bar a1 + 0.5", Chart::ComplexAAbar, 1).unwrap();
    assert!(n.max_abs_diff(&expect) < 1e-14);
    // |a|^4 - 2|a|^2 + 1/2 is the Weyl symbol of a^dagger^2 a^2
    let w = parse_symbol("a1^2 a1bar^2 - 2 a1 a1bar + 0.5", Chart::ComplexAAbar, 1).unwrap();
    let n = normal_order(&w, 1.0).unwrap();
    let expect = parse_symbol("a1^2 a1bar^2", Chart::ComplexAAbar, 1).unwrap();
    assert!(n.max_abs_diff(&expect) < 1e-14, "{n}");
}

#[test]
fn bose_hubbard_operator_is_hermitian_and_matches_direct_assembly() {
    let (j, u) = (1.0, 0.05);
    let weyl = parse_symbol(
        &format!(
            "-{j}*(a1bar a2 + a2bar a1) + {h}*(a1^2 a1bar^2 - 2 a1 a1bar + 0.5) + {h}*(a2^2 a2bar^2 - 2 a2 a2bar + 0.5)",
            h = u / 2.0
        ),
        Chart::ComplexAAbar,
        2,
    )
    .unwrap();
    let space = FockSpace::uniform(2, 5).unwrap();
    let h = dense(&space.quantize_weyl(&weyl, 1.0).unwrap());
    assert!(crate::linalg::max_abs_c(&(&h - h.adjoint())) < 1e-13);
    let direct = parse_symbol(
        &format!("-{j}*(a1bar a2 + a2bar a1) + {h}*(a1^2 a1bar^2 + a2^2 a2bar^2)", h = u / 2.0),
        Chart::ComplexAAbar,
        2,
    )
    .unwrap();
    let hd = dense(&space.quantize_normal(&direct).unwrap());
    assert!(crate::linalg::max_abs_c(&(&h - &hd)) < 1e-13);
    // block sparse: hopping preserves the total number
    for r in 0..space.dim() {
        for col in 0..space.dim() {
            let nr: usize = space.occupation(r).iter().sum();
            let nc: usize = space.occupation(col).iter().sum();
            if nr != nc {
                assert_eq!(h[(r, col)], c(0.0, 0.0));
            }
        }
    }
}

#[test]
fn lindblad_rhs_examples() {
    let space = FockSpace::uniform(1, 1).unwrap();
    let gamma: f64 = 0.7;
    let a = dense(space.lowering(0)) * c(gamma.sqrt(), 0.0);
    let mut rho = CMatrix::zeros(2, 2);
    rho[(1, 1)] = c(1.0, 0.0);
    let h = CMatrix::zeros(2, 2);
    let out = lindblad_rhs(&rho, &h, &[a], 1.0).unwrap();
    assert!((out[(0, 0)] - c(gamma, 0.0)).norm() < 1e-15);
    assert!((out[(1, 1)] - c(-gamma, 0.0)).norm() < 1e-15);
    assert!(out[(0, 1)].norm() < 1e-15 && out[(1, 0)].norm() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let d = 6;
        let rho = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = random_density(&mut rng, d) * c(3.0, 0.0);
        let ls: Vec<CMatrix> = (0..2)
            .map(|_| CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect();
        let out = lindblad_rhs(&rho, &h, &ls, 1.0).unwrap();
        assert!(out.trace().norm() < 1e-12);
        let herm = random_density(&mut rng, d);
        let unitary = lindblad_rhs(&herm, &h, &[], 1.0).unwrap();
        let comm = &h * &herm - &herm * &h;
        assert!(crate::linalg::max_abs_c(&(&comm + comm.adjoint())) < 1e-12);
        assert!(crate::linalg::max_abs_c(&(&unitary + comm * c(0.0, 1.0))) < 1e-12);
    }
}

#[test]
fn master_equation_matches_generic_integration() {
    let model = LindbladModel::parse(Chart::RealQP, 1, 1.0, "0.5*q1^2 + 0.5*p1^2 + 0.05*q1^4", &["0.3*(q1 + i p1)", "0.2*q1^2"]).unwrap();
    let space = FockSpace::uniform(1, 12).unwrap();
    let qm = QuantumModel::from_model(&model, space.clone()).unwrap();
    let psi = space.coherent(&[c(0.8, 0.3)]).unwrap();
    let rho0 = DensityMatrix::from_pure(&(psi.clone() / c(psi.norm(), 0.0)));
    let tr = integrate_master(&rho0, &qm, &[0.5, 1.0], MasterOptions::default()).unwrap();

    let h = dense(&qm.hamiltonian);
    let ls: Vec<CMatrix> = qm.lindblads.iter().map(dense).collect();
    let d = space.dim();
    let sys = (2 * d * d, |_t: f64, y: &[f64], dy: &mut [f64]| {
        let rho = CMatrix::from_iterator(d, d, y.chunks_exact(2).map(|v| c(v[0], v[1])));
        let out = lindblad_rhs(&rho, &h, &ls, 1.0).unwrap();
        for (k, v) in out.iter().enumerate() {
            dy[2 * k] = v.re;
            dy[2 * k + 1] = v.im;
        }
    });
    let y0: Vec<f64> = rho0.matrix.iter().flat_map(|v| [v.re, v.im]).collect();
    let ys = integrate(&sys, 0.0, &y0, &[0.5, 1.0], Tolerances::new(1e-11, 1e-14)).unwrap();
    for (state, y) in tr.states.iter().zip(&ys) {
        let rho = CMatrix::from_iterator(d, d, y.chunks_exact(2).map(|v| c(v[0], v[1])));
        assert!(crate::linalg::max_abs_c(&(&state.matrix - &rho)) < 1e-8);
        assert!(state.hermiticity_error() < 1e-15);
        assert!((state.trace().re - 1.0).abs() < 1e-8);
    }
}

#[test]
fn damped_oscillator_mean_decays_exactly() {
    let (omega, gamma) = (1.0, 0.1);
    let space = FockSpace::uniform(1, 40).unwrap();
    let qm = QuantumModel::from_model(&damped(omega, gamma), space.clone()).unwrap();
    let a0 = c(2.0, 0.0);
    let psi = space.coherent(&[a0]).unwrap();
    let rho0 = DensityMatrix::from_pure(&psi);
    let times = [1.0, 5.0, 10.0];
    let tr = integrate_master(&rho0, &qm, &times, MasterOptions::default()).unwrap();
    for (t, s) in times.iter().zip(&tr.states) {
        let expect = a0 * (c(-gamma / 2.0, -omega) * *t).exp();
        let m = s.moments(&space).unwrap();
        assert!((m.mean_a[0] - expect).norm() < 1e-7, "t={t}: {} vs {expect}", m.mean_a[0]);
        // coherent states stay coherent under linear damping
        assert!((m.blocks.alpha_block[(0, 0)].re - 1.0).abs() < 1e-7);
        assert!(s.min_eigenvalue() > -1e-8);
    }
    assert!(tr.events.is_empty(), "{:?}", tr.events);
}

#[test]
fn vacuum_is_fixed_under_damping() {
    let space = FockSpace::uniform(1, 10).unwrap();
    let qm = QuantumModel::from_model(&damped(1.0, 0.5), space.clone()).unwrap();
    let rho0 = DensityMatrix::from_pure(&space.vacuum());
    let tr = integrate_master(&rho0, &qm, &[3.0], MasterOptions::default()).unwrap();
    assert!((tr.states[0].purity() - 1.0).abs() < 1e-12);
}

#[test]
fn leakage_is_reported() {
    let space = FockSpace::uniform(1, 8).unwrap();
    let qm = QuantumModel::from_model(&damped(1.0, 0.1), space.clone()).unwrap();
    let psi = space.coherent(&[c(2.0, 0.0)]).unwrap();
    let rho0 = DensityMatrix::from_pure(&(psi.clone() / c(psi.norm(), 0.0)));
    let tr = integrate_master(&rho0, &qm, &[0.1], MasterOptions::default()).unwrap();
    assert!(tr.events.iter().any(|e| e.kind == crate::events::EventKind::TruncationLeakage));
}

#[test]
fn moments_of_simple_states() {
    let space = FockSpace::uniform(1, 30).unwrap();
    let vac = DensityMatrix::from_pure(&space.vacuum()).moments(&space).unwrap();
    assert!(vac.mean_a[0].norm() < 1e-15);
    assert!((vac.blocks.alpha_block[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    let a0 = c(1.2, -0.7);
    let coh = DensityMatrix::from_pure(&space.coherent(&[a0]).unwrap());
    let m = coh.moments(&space).unwrap();
    assert!((m.mean_a[0] - a0).norm() < 1e-12);
    let g = coherent(&[a0], 1.0).unwrap().moments();
    assert!((m.blocks.alpha_block[(0, 0)] - g.blocks.alpha_block[(0, 0)]).norm() < 1e-10);
    assert!((m.blocks.beta_block[(0, 0)] - g.blocks.beta_block[(0, 0)]).norm() < 1e-10);
}

#[test]
fn gaussian_coefficients_match_coherent_state() {
    let (q0, p0) = (1.3, -0.4);
    let v = gaussian_coefficients(q0, p0, c(0.0, 1.0), 30).unwrap();
    let alpha = c(q0, p0) / 2f64.sqrt();
    let phase = c(0.0, -0.5 * p0 * q0).exp();
    let w = coherent_coefficients(alpha, 30) * phase;
    assert!((v - w).norm() < 1e-13);
}

#[test]
fn squeezed_packet_coefficients_are_normalized_with_correct_means() {
    let space = FockSpace::uniform(1, 80).unwrap();
    let (q0, p0) = (1.0, 0.5);
    let v = gaussian_coefficients(q0, p0, c(0.4, 1.7), 80).unwrap();
    assert!((v.norm() - 1.0).abs() < 1e-10);
    let rho = DensityMatrix::from_pure(&v);
    let x = rho.mean_qp(&space);
    assert!((x[0] - q0).abs() < 1e-10 && (x[1] - p0).abs() < 1e-10);
}

#[test]
fn wigner_of_vacuum_and_single_photon() {
    let space = FockSpace::uniform(1, 5).unwrap();
    let spec = GridSpec::square(4.0, 41);
    let vac = wigner_of_density(&DensityMatrix::from_pure(&space.vacuum()), spec).unwrap();
    let expect = WignerGrid::from_fn(spec, |q, p| (-(q * q + p * p)).exp() / std::f64::consts::PI).unwrap();
    assert!(vac.sup_diff(&expect).unwrap() < 1e-15);
    let one = DensityMatrix::from_pure(&space.fock_state(&[1]).unwrap());
    let w = wigner_of_density(&one, spec).unwrap();
    // centre cell of an odd grid sits at the origin
    assert!((w.values[(20, 20)] + 1.0 / std::f64::consts::PI).abs() < 1e-14);
    assert!((w.integral() - 1.0).abs() < 1e-6);
}

#[test]
fn wigner_of_coherent_state_matches_gaussian() {
    let space = FockSpace::uniform(1, 50).unwrap();
    let a0 = c(1.5, -2.0);
    let rho = DensityMatrix::from_pure(&space.coherent(&[a0]).unwrap());
    let spec = GridSpec::square(6.0, 60);
    let w = wigner_of_density(&rho, spec).unwrap();
    let g = coherent(&[a0], 1.0).unwrap().eval_grid(spec).unwrap();
    assert!(w.sup_diff(&g).unwrap() < 1e-8);
}

#[test]
fn cat_state_in_fock_basis_matches_component_decomposition() {
    let centres = [(4.0, 3.0), (4.0, -3.0)];
    let coeffs = [c(1.0, 0.0), c(1.0, 0.0)];
    let (psi, lost) = superposition_state(&centres, &coeffs, c(0.0, 1.0), 60).unwrap();
    assert!(lost < 1e-12);
    let space = FockSpace::uniform(1, 60).unwrap();
    let rho = DensityMatrix::from_pure(&psi);
    let x = rho.mean_qp(&space);
    assert!((x[0] - 4.0).abs() < 1e-6 && x[1].abs() < 1e-12);
    let spec = GridSpec::square(8.0, 80);
    let w = wigner_of_density(&rho, spec).unwrap();
    let cat = cat_decompose(
        &[(vec![4.0], vec![3.0]), (vec![4.0], vec![-3.0])],
        &coeffs,
        &CMatrix::from_element(1, 1, c(0.0, 1.0)),
        1.0,
    )
    .unwrap();
    let g = cat.eval_grid(spec).unwrap();
    assert!(w.sup_diff(&g).unwrap() < 1e-10);
}

#[test]
fn jumps_without_lindblads_follow_schrodinger() {
    let model = LindbladModel::parse(Chart::RealQP, 1, 1.0, "0.5*q1^2 + 0.5*p1^2 + 0.1*q1^4", &[]).unwrap();
    let space = FockSpace::uniform(1, 20).unwrap();
    let qm = QuantumModel::from_model(&model, space.clone()).unwrap();
    let psi = space.coherent(&[c(0.5, 0.5)]).unwrap();
    let opts = JumpOptions {
        n_traj: 8,
        seed: 3,
        tol: Tolerances::new(1e-11, 1e-13),
        ..Default::default()
    };
    let times = [0.0, 0.5, 1.0];
    let ens = quantum_jump(&qm, &psi, &times, opts).unwrap();
    let (mean, err) = ens.population(0);
    assert!(err.iter().all(|&e| e < 1e-12));
    assert!(ens.jump_counts.iter().all(|&k| k == 0));
    let rho0 = DensityMatrix::from_pure(&(psi.clone() / c(psi.norm(), 0.0)));
    let tr = integrate_master(&rho0, &qm, &times, MasterOptions::default()).unwrap();
    let n = space.number(0);
    for (m, s) in mean.iter().zip(&tr.states) {
        assert!((m - s.expect(&n).re).abs() < 1e-8);
    }
}

#[test]
fn jump_ensemble_reproduces_exponential_decay() {
    let gamma = 0.4;
    let space = FockSpace::uniform(1, 20).unwrap();
    let qm = QuantumModel::from_model(&damped(1.0, gamma), space.clone()).unwrap();
    let a0 = c(1.5, 0.0);
    let psi = space.coherent(&[a0]).unwrap();
    let times = [0.0, 1.0, 2.0, 4.0];
    let opts = JumpOptions {
        n_traj: 400,
        seed: 11,
        ..Default::default()
    };
    let ens = quantum_jump(&qm, &psi, &times, opts).unwrap();
    let (mean, err) = ens.population(0);
    for ((t, m), e) in times.iter().zip(&mean).zip(&err) {
        let expect = a0.norm_sqr() * (-gamma * t).exp();
        // a coherent start stays coherent, so the spread is tiny; allow for the integrator
        assert!((m - expect).abs() <= 3.0 * e + 1e-6, "t={t}: {m} vs {expect} (stderr {e})");
    }
    // same seed, same output
    let again = quantum_jump(&qm, &psi, &times, opts).unwrap();
    assert_eq!(again.samples, ens.samples);
}

#[test]
fn two_level_jumps_agree_with_master_equation() {
    let gamma = 1.0;
    let space = FockSpace::uniform(1, 1).unwrap();
    let qm = QuantumModel::from_model(&damped(0.3, gamma), space.clone()).unwrap();
    let psi = space.fock_state(&[1]).unwrap();
    let times = [0.25, 0.5, 1.0, 2.0];
    let ens = quantum_jump(
        &qm,
        &psi,
        &times,
        JumpOptions {
            n_traj: 1000,
            seed: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let tr = integrate_master(&DensityMatrix::from_pure(&psi), &qm, &times, MasterOptions::default()).unwrap();
    let (mean, err) = ens.population(0);
    for ((m, e), s) in mean.iter().zip(&err).zip(&tr.states) {
        let exact = s.matrix[(1, 1)].re;
        assert!((m - exact).abs() <= 3.0 * e + 1e-9);
    }
}

#[test]
fn two_mode_jump_observables() {
    let model = LindbladModel::parse(
        Chart::ComplexAAbar,
        2,
        1.0,
        "-(a1bar a2 + a2bar a1) + 0.05*(a1^2 a1bar^2 - 2 a1 a1bar + 0.5 + a2^2 a2bar^2 - 2 a2 a2bar + 0.5)",
        &["0.3*a1^2", "0.3*a2^2"],
    )
    .unwrap()
    .to_chart(Chart::RealQP)
    .unwrap();
    let space = FockSpace::uniform(2, 8).unwrap();
    let qm = QuantumModel::from_model(&model, space.clone()).unwrap();
    let psi = space.coherent(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
    let times = [0.0, 0.5];
    let ens = quantum_jump(
        &qm,
        &psi,
        &times,
        JumpOptions {
            n_traj: 300,
            seed: 9,
            ..Default::default()
        },
    )
    .unwrap();
    let g1 = ens.g1(0, 1);
    assert!((g1[0] - 1.0).abs() < 1e-3);
    let rho0 = DensityMatrix::from_pure(&(psi.clone() / c(psi.norm(), 0.0)));
    let tr = integrate_master(&rho0, &qm, &times, MasterOptions::default()).unwrap();
    let (n, err) = ens.total_number();
    let exact = tr.states[1].expect(&space.number(0)).re + tr.states[1].expect(&space.number(1)).re;
    assert!((n[1] - exact).abs() <= 3.0 * err[1] + 1e-9, "{} vs {exact}", n[1]);
    let coh = ens.coherence(0, 1)[0];
    let m = tr.states[0].moments(&space).unwrap();
    assert!((coh - m.number(0, 1)).norm() < 1e-9);
    assert!((ens.coherence(1, 0)[0] - coh.conj()).norm() < 1e-15);
}
