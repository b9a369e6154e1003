//! Wigner function of a single-mode density matrix in the Fock basis.

use std::f64::consts::{FRAC_1_PI, FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::gaussian::{GridSpec, WignerGrid};
use crate::linalg::CMatrix;

/// `W(q, p) = sum_{mn} rho_mn W_mn(q, p)` (`hbar = 1`).
///
/// The Fock kernels `W_mn`, proportional to associated Laguerre polynomials
/// times `exp(-(q^2 + p^2))`, are generated by the three-term recursion in
/// `m` and `n` at each point, which stays stable for large cut-offs.
pub fn wigner_of_density(rho: &DensityMatrix, spec: GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    super::require_unit_hbar(rho.hbar)?;
    if rho.dim() == 0 {
        return Err(Error::Invalid("empty density matrix".into()));
    }
    let m = &rho.matrix;
    let sqrt: Vec<f64> = (0..m.nrows()).map(|k| (k as f64).sqrt()).collect();
    let mut work = vec![Complex64::new(0.0, 0.0); m.nrows()];
    let mut out = WignerGrid::from_fn(spec, |_, _| 0.0)?;
    for j in 0..spec.np {
        for i in 0..spec.nq {
            out.values[(j, i)] = wigner_point(m, spec.q(i), spec.p(j), &sqrt, &mut work);
        }
    }
    Ok(out)
}

fn wigner_point(rho: &CMatrix, q: f64, p: f64, sqrt: &[f64], w: &mut [Complex64]) -> f64 {
    let dim = rho.nrows();
    let a = Complex64::new(q, p) * FRAC_1_SQRT_2;
    w[0] = Complex64::new((-2.0 * a.norm_sqr()).exp() * FRAC_1_PI, 0.0);
    let mut total = rho[(0, 0)].re * w[0].re;
    for n in 1..dim {
        w[n] = 2.0 * a * w[n - 1] / sqrt[n];
        total += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for mm in 1..dim {
        let mut temp = w[mm];
        w[mm] = (2.0 * a.conj() * temp - sqrt[mm] * w[mm - 1]) / sqrt[mm];
        total += (rho[(mm, mm)] * w[mm]).re;
        for n in mm + 1..dim {
            let next = (2.0 * a * w[n - 1] - sqrt[mm] * temp) / sqrt[n];
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho[(mm, n)] * w[n]).re;
        }
    }
    total
}

/// Warns when the grid step cannot resolve the fastest oscillation of the
/// highest retained Fock state, whose radial wavelength is about
/// `pi / sqrt(2 n_max + 1)`.
pub fn grid_resolution_warning(n_max: usize, spec: &GridSpec) -> Option<Event> {
    let wavelength = PI / ((2 * n_max + 1) as f64).sqrt();
    let step = spec.dq().max(spec.dp());
    (step > 0.5 * wavelength).then(|| {
        Event::new(
            0.0,
            EventKind::GridBoundary,
            format!("grid step {step} does not resolve wavelength {wavelength:.4} of Fock level {n_max}"),
        )
    })
}
