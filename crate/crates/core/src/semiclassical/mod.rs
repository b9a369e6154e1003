//! Semiclassical propagation of Gaussian Wigner functions under Lindblad
//! dynamics: centre `X` and width `G` in the real chart, `(Xc, Gc)` in the
//! mode chart.

mod classify;
mod flow;
mod model;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::gaussian::{mode_transform, physicality_min_eig, GaussianMoments, GaussianWigner, PHYSICALITY_TOL};
use crate::linalg::{self, CMatrix, CVector};
use crate::ode::{Dopri5, OdeSystem, Tolerances};

pub use classify::{classify_flow, lindblad_flow, FlowClass};
pub use flow::{
    drift_complex, drift_matrices, drift_x, rhs_g, rhs_g_complex, ComplexDriftMatrices, ComplexFlow, DriftMatrices,
    RealFlow,
};
pub(crate) use flow::{eval_mat, eval_vec};
#[cfg(test)]
pub(crate) use flow::rhs_g_from;
pub use model::LindbladModel;

/// Smallest eigenvalue allowed when a width matrix has to be repaired.
const CLAMP_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SemiclassicalState {
    pub t: f64,
    pub x: DVector<f64>,
    pub g: DMatrix<f64>,
    /// Smallest eigenvalue of `G^{-1} + i Omega`.
    pub min_eig_physicality: f64,
}

impl SemiclassicalState {
    pub fn new(t: f64, x: DVector<f64>, g: DMatrix<f64>) -> Self {
        let min_eig_physicality = physicality_min_eig(&g);
        SemiclassicalState {
            t,
            x,
            g,
            min_eig_physicality,
        }
    }

    pub fn from_gaussian(t: f64, w: &GaussianWigner) -> Self {
        Self::new(t, w.centre().clone(), w.width().clone())
    }

    pub fn to_gaussian(&self, hbar: f64) -> Result<GaussianWigner> {
        GaussianWigner::new(hbar, self.x.clone(), self.g.clone())
    }

    pub fn moments(&self, hbar: f64) -> Result<GaussianMoments> {
        let ginv = linalg::inverse(&self.g, "G")?;
        Ok(GaussianMoments::from_real(&self.x, &(ginv * (0.5 * hbar))))
    }

    pub fn is_physical(&self) -> bool {
        self.min_eig_physicality >= PHYSICALITY_TOL
    }

    /// Complex-chart coordinates `Xc = T X`, `Gc = T G T^dagger`.
    pub fn to_complex(&self) -> ComplexState {
        let n = self.x.len() / 2;
        let t = mode_transform(n);
        ComplexState {
            t: self.t,
            xc: &t * self.x.map(|v| Complex64::new(v, 0.0)),
            gc: &t * linalg::to_complex(&self.g) * t.adjoint(),
        }
    }
}

/// Gaussian state in the mode chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexState {
    pub t: f64,
    /// `(a, abar)`.
    pub xc: CVector,
    pub gc: CMatrix,
}

impl ComplexState {
    pub fn num_modes(&self) -> usize {
        self.xc.len() / 2
    }

    pub fn to_real(&self) -> SemiclassicalState {
        let n = self.num_modes();
        let t = mode_transform(n);
        let x = (t.adjoint() * &self.xc).map(|v| v.re);
        let g = linalg::symmetrize(&linalg::re(&(t.adjoint() * &self.gc * &t)));
        SemiclassicalState::new(self.t, x, g)
    }

    /// Moments with `hbar = 1`: `Sigma = Gc^{-1}`.
    pub fn moments(&self) -> Result<GaussianMoments> {
        Ok(self.to_real().moments(1.0)?)
    }

    pub fn mode_amplitudes(&self) -> &[Complex64] {
        &self.xc.as_slice()[..self.num_modes()]
    }
}

/// Output of an integration: states at the requested times plus diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub events: Vec<Event>,
}

impl<S> Default for Trajectory<S> {
    fn default() -> Self {
        Trajectory {
            states: Vec::new(),
            events: Vec::new(),
        }
    }
}

struct RealSystem<'a> {
    flow: &'a RealFlow,
}

impl OdeSystem for RealSystem<'_> {
    fn dim(&self) -> usize {
        let d = self.flow.dim();
        d + d * d
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.flow.dim();
        let x = &y[..d];
        let g = linalg::symmetrize(&DMatrix::from_column_slice(d, d, &y[d..]));
        let xdot = self.flow.drift_x(x).expect("dimension fixed at construction");
        let gdot = self.flow.rhs_g(x, &g).expect("dimension fixed at construction");
        dy[..d].copy_from_slice(xdot.as_slice());
        dy[d..].copy_from_slice(gdot.as_slice());
    }
}

fn check_times(t0: f64, times: &[f64]) -> Result<()> {
    let mut prev = t0;
    for &t in times {
        if !(t >= prev) || !t.is_finite() {
            return Err(Error::Invalid(format!("output times must be sorted and >= {t0}")));
        }
        prev = t;
    }
    Ok(())
}

/// Clamps the spectrum of a symmetric matrix from below.
fn clamp_spectrum(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = linalg::symmetrize(g).symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(CLAMP_FLOOR));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Integrates the real-chart centre and width equations and samples the
/// solution at `times`.
pub fn integrate(
    model: &LindbladModel,
    initial: &SemiclassicalState,
    times: &[f64],
    tol: Tolerances,
) -> Result<Trajectory<SemiclassicalState>> {
    let flow = RealFlow::new(model)?;
    let d = flow.dim();
    if initial.x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: initial.x.len(),
        });
    }
    check_times(initial.t, times)?;
    let sys = RealSystem { flow: &flow };
    let mut y0 = initial.x.as_slice().to_vec();
    y0.extend_from_slice(initial.g.as_slice());
    let mut stepper = Dopri5::new(&sys, initial.t, &y0, tol)?;
    let mut traj = Trajectory::default();
    for &t in times {
        let y = stepper.advance_to(t)?.to_vec();
        let x = DVector::from_column_slice(&y[..d]);
        let mut g = linalg::symmetrize(&DMatrix::from_column_slice(d, d, &y[d..]));
        if !linalg::is_positive_definite(&g) {
            g = clamp_spectrum(&g);
            traj.events.push(Event::new(t, EventKind::EigenvalueClamp, "width matrix clamped to positive definite"));
            let mut y = x.as_slice().to_vec();
            y.extend_from_slice(g.as_slice());
            stepper.reset(t, &y);
        }
        let state = SemiclassicalState::new(t, x, g);
        if !state.is_physical() {
            traj.events.push(Event::new(
                t,
                EventKind::PhysicalityViolation,
                format!("min eig(G^-1 + i Omega) = {:e}", state.min_eig_physicality),
            ));
        }
        traj.states.push(state);
    }
    Ok(traj)
}

struct ComplexSystem<'a> {
    flow: &'a ComplexFlow,
    centre_only: bool,
}

fn unpack(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn pack(z: &[Complex64], out: &mut [f64]) {
    for (i, v) in z.iter().enumerate() {
        out[2 * i] = v.re;
        out[2 * i + 1] = v.im;
    }
}

impl OdeSystem for ComplexSystem<'_> {
    fn dim(&self) -> usize {
        let d = self.flow.dim();
        if self.centre_only {
            2 * d
        } else {
            2 * (d + d * d)
        }
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let d = self.flow.dim();
        let z = unpack(y);
        let xc = &z[..d];
        let xdot = self.flow.drift(xc).expect("dimension fixed at construction");
        pack(xdot.as_slice(), &mut dy[..2 * d]);
        if !self.centre_only {
            let gc = CMatrix::from_column_slice(d, d, &z[d..]);
            let gdot = self.flow.rhs_gc(xc, &gc).expect("dimension fixed at construction");
            pack(gdot.as_slice(), &mut dy[2 * d..]);
        }
    }
}

/// Integrates the mode-chart equations. With `centre_only` the width is not
/// evolved and the returned states carry the initial `Gc`.
pub fn integrate_complex(
    model: &LindbladModel,
    initial: &ComplexState,
    times: &[f64],
    tol: Tolerances,
    centre_only: bool,
) -> Result<Trajectory<ComplexState>> {
    let flow = ComplexFlow::new(model)?;
    let d = flow.dim();
    if initial.xc.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: initial.xc.len(),
        });
    }
    check_times(initial.t, times)?;
    let sys = ComplexSystem {
        flow: &flow,
        centre_only,
    };
    let mut z0 = initial.xc.as_slice().to_vec();
    if !centre_only {
        z0.extend_from_slice(initial.gc.as_slice());
    }
    let mut y0 = vec![0.0; 2 * z0.len()];
    pack(&z0, &mut y0);
    let mut stepper = Dopri5::new(&sys, initial.t, &y0, tol)?;
    let mut traj = Trajectory::default();
    for &t in times {
        let z = unpack(stepper.advance_to(t)?);
        let xc = CVector::from_column_slice(&z[..d]);
        let gc = if centre_only {
            initial.gc.clone()
        } else {
            CMatrix::from_column_slice(d, d, &z[d..])
        };
        traj.states.push(ComplexState { t, xc, gc });
    }
    Ok(traj)
}

#[cfg(test)]
mod tests;
