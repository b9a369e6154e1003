//! Lindblad master equation for dense density matrices.

use num_complex::Complex64;

use super::{fock, DensityMatrix, QuantumModel, LEAKAGE_THRESHOLD};
use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::linalg::CMatrix;
use crate::ode::{Dopri5, OdeSystem, Tolerances};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(1/(i hbar)) [H, rho] + sum_k (L_k rho L_k^dagger - {L_k^dagger L_k, rho}/2)`.
pub fn lindblad_rhs(rho: &CMatrix, h: &CMatrix, ls: &[CMatrix], hbar: f64) -> Result<CMatrix> {
    let d = rho.nrows();
    if !rho.is_square() || h.shape() != (d, d) || ls.iter().any(|l| l.shape() != (d, d)) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h.nrows(),
        });
    }
    let mut out = (h * rho - rho * h) * (-I / hbar);
    for l in ls {
        let ld = l.adjoint();
        let ldl = &ld * l;
        out += l * rho * &ld - (&ldl * rho + rho * &ldl) * Complex64::new(0.5, 0.0);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug)]
pub struct MasterOptions {
    pub tol: Tolerances,
    /// Trace drift beyond which the state is renormalized (and an event logged).
    pub trace_tol: f64,
    /// Eigenvalue below which a positivity event is logged.
    pub positivity_tol: f64,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions {
            tol: Tolerances::new(1e-10, 1e-13),
            trace_tol: 1e-10,
            positivity_tol: -1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MasterTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub events: Vec<Event>,
}

/// Right-hand side for Hermitian `rho`, written as `M + M^dagger` with
/// `M = -i Heff rho + sum_k L_k rho L_k^dagger / 2`, so every stage of the
/// integrator is exactly Hermitian.
struct MasterSystem {
    d: usize,
    heff: CMatrix,
    ls: Vec<CMatrix>,
    ls_adj: Vec<CMatrix>,
}

impl MasterSystem {
    fn unpack(&self, y: &[f64]) -> CMatrix {
        CMatrix::from_iterator(self.d, self.d, y.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])))
    }
}

fn pack(m: &CMatrix, out: &mut [f64]) {
    for (k, v) in m.iter().enumerate() {
        out[2 * k] = v.re;
        out[2 * k + 1] = v.im;
    }
}

impl OdeSystem for MasterSystem {
    fn dim(&self) -> usize {
        2 * self.d * self.d
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let rho = self.unpack(y);
        let mut m = &self.heff * &rho * -I;
        for (l, ld) in self.ls.iter().zip(&self.ls_adj) {
            m += l * &rho * ld * Complex64::new(0.5, 0.0);
        }
        let d = self.d;
        for c in 0..d {
            for r in 0..d {
                let v = m[(r, c)] + m[(c, r)].conj();
                let k = 2 * (c * d + r);
                dy[k] = v.re;
                dy[k + 1] = v.im;
            }
        }
    }
}

/// Integrates the master equation and samples `rho` at `times` (sorted,
/// `>= 0`, starting from `rho0` at `t = 0`).
pub fn integrate_master(
    rho0: &DensityMatrix,
    model: &QuantumModel,
    times: &[f64],
    opts: MasterOptions,
) -> Result<MasterTrajectory> {
    super::require_unit_hbar(rho0.hbar)?;
    let d = model.space.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.dim(),
        });
    }
    let ls: Vec<CMatrix> = model.lindblads.iter().map(fock::to_dense).collect();
    let sys = MasterSystem {
        d,
        heff: fock::to_dense(&model.effective_hamiltonian()),
        ls_adj: ls.iter().map(|l| l.adjoint()).collect(),
        ls,
    };
    let mut events = Vec::new();
    let mut leaking = vec![false; model.space.num_modes()];
    let mut check_leakage = |t: f64, rho: &CMatrix, events: &mut Vec<Event>| {
        for (j, p) in model.space.top_populations(rho).into_iter().enumerate() {
            if p > LEAKAGE_THRESHOLD && !leaking[j] {
                leaking[j] = true;
                events.push(Event::new(
                    t,
                    EventKind::TruncationLeakage,
                    format!("mode {j}: top Fock level population {p:e}"),
                ));
            }
        }
    };
    let start = (&rho0.matrix + rho0.matrix.adjoint()) * Complex64::new(0.5, 0.0);
    check_leakage(0.0, &start, &mut events);
    let mut y0 = vec![0.0; sys.dim()];
    pack(&start, &mut y0);
    let mut stepper = Dopri5::new(&sys, 0.0, &y0, opts.tol)?;
    let mut states = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for &t in times {
        if !(t >= prev) {
            return Err(Error::Invalid("output times must be sorted and >= 0".into()));
        }
        prev = t;
        let mut rho = sys.unpack(stepper.advance_to(t)?);
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > opts.trace_tol {
            rho /= Complex64::new(tr, 0.0);
            events.push(Event::new(t, EventKind::TraceDrift, format!("trace {tr} renormalized")));
            let mut y = vec![0.0; sys.dim()];
            pack(&rho, &mut y);
            stepper.reset(t, &y);
        }
        check_leakage(t, &rho, &mut events);
        let state = DensityMatrix { matrix: rho, hbar: 1.0 };
        let min_eig = state.min_eigenvalue();
        if min_eig < opts.positivity_tol {
            events.push(Event::new(
                t,
                EventKind::PhysicalityViolation,
                format!("density matrix eigenvalue {min_eig:e}"),
            ));
        }
        states.push(state);
    }
    Ok(MasterTrajectory {
        times: times.to_vec(),
        states,
        events,
    })
}
