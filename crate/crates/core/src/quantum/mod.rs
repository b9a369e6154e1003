//! Exact reference dynamics in a truncated Fock basis (`hbar = 1`): master
//! equation, quantum jumps, moments and Wigner functions of density matrices.

mod fock;
mod jumps;
mod master;
mod wigner;

use nalgebra_sparse::CsrMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceBlocks, GaussianMoments};
use crate::linalg::{self, CMatrix, CVector};
use crate::semiclassical::LindbladModel;
use crate::symbols::{Chart, PolySymbol};

pub use fock::{coherent_coefficients, gaussian_coefficients, normal_order, to_dense, FockSpace};
pub use jumps::{quantum_jump, JumpEnsemble, JumpOptions};
pub use master::{integrate_master, lindblad_rhs, MasterOptions, MasterTrajectory};
pub use wigner::{grid_resolution_warning, wigner_of_density};

pub(crate) use fock::require_unit_hbar;

/// Population of a highest Fock level above which truncation is reported.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;

/// Hamiltonian and Lindblad operators as truncated matrices.
#[derive(Clone, Debug)]
pub struct QuantumModel {
    pub space: FockSpace,
    pub hamiltonian: CsrMatrix<Complex64>,
    pub lindblads: Vec<CsrMatrix<Complex64>>,
}

impl QuantumModel {
    /// Quantizes the Weyl symbols of `model` on `space`.
    pub fn from_model(model: &LindbladModel, space: FockSpace) -> Result<Self> {
        require_unit_hbar(model.hbar)?;
        if space.num_modes() != model.num_modes {
            return Err(Error::DimensionMismatch {
                expected: model.num_modes,
                got: space.num_modes(),
            });
        }
        let hamiltonian = space.quantize_weyl(&model.hamiltonian, model.hbar)?;
        let lindblads = model
            .lindblads
            .iter()
            .map(|l| space.quantize_weyl(l, model.hbar))
            .collect::<Result<_>>()?;
        Ok(QuantumModel {
            space,
            hamiltonian,
            lindblads,
        })
    }

    /// `H - (i/2) sum_k L_k^dagger L_k`.
    pub fn effective_hamiltonian(&self) -> CsrMatrix<Complex64> {
        let mut heff = self.hamiltonian.clone();
        let half_i = Complex64::new(0.0, -0.5);
        for l in &self.lindblads {
            let mut ld = l.transpose();
            ld.values_mut().iter_mut().for_each(|v| *v = v.conj());
            let ldl = &ld * l;
            heff = &heff + &(ldl * half_i);
        }
        heff
    }
}

/// Density matrix over a product Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
    pub hbar: f64,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(DensityMatrix { matrix, hbar: 1.0 })
    }

    /// `|psi><psi|` (not renormalized).
    pub fn from_pure(psi: &CVector) -> Self {
        DensityMatrix {
            matrix: psi * psi.adjoint(),
            hbar: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `max |rho - rho^dagger|`.
    pub fn hermiticity_error(&self) -> f64 {
        linalg::max_abs_c(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.matrix)[0]
    }

    /// `Tr(rho op)`.
    pub fn expect(&self, op: &CsrMatrix<Complex64>) -> Complex64 {
        fock::trace_product(&self.matrix, op)
    }

    /// Mode means and covariance blocks, consistent with
    /// [`GaussianMoments::from_real`].
    pub fn moments(&self, space: &FockSpace) -> Result<GaussianMoments> {
        if space.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: self.dim(),
            });
        }
        let n = space.num_modes();
        let mean_a: Vec<Complex64> = (0..n).map(|j| self.expect(space.lowering(j))).collect();
        let mut alpha = CMatrix::zeros(n, n);
        let mut beta = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                // <a_i^dagger a_j> and <a_i^dagger a_j^dagger> = conj <a_j a_i>
                let mut e = vec![0u16; 2 * n];
                e[j] += 1;
                e[n + i] += 1;
                let num = self.expect(&space.quantize_normal(&PolySymbol::monomial(Chart::ComplexAAbar, n, e, 1.0)?)?);
                let mut e = vec![0u16; 2 * n];
                e[i] += 1;
                e[j] += 1;
                let aa = self.expect(&space.quantize_normal(&PolySymbol::monomial(Chart::ComplexAAbar, n, e, 1.0)?)?);
                let delta = if i == j { 1.0 } else { 0.0 };
                alpha[(i, j)] = 2.0 * num + delta - 2.0 * mean_a[i].conj() * mean_a[j];
                beta[(i, j)] = 2.0 * aa.conj() - 2.0 * (mean_a[i] * mean_a[j]).conj();
            }
        }
        Ok(GaussianMoments {
            mean_a,
            blocks: CovarianceBlocks {
                alpha_block: alpha,
                beta_block: beta,
            },
        })
    }

    /// `(<q_1>, ..., <q_n>, <p_1>, ..., <p_n>)`.
    pub fn mean_qp(&self, space: &FockSpace) -> Vec<f64> {
        let n = space.num_modes();
        let a: Vec<Complex64> = (0..n).map(|j| self.expect(space.lowering(j))).collect();
        let s = std::f64::consts::SQRT_2;
        a.iter().map(|v| s * v.re).chain(a.iter().map(|v| s * v.im)).collect()
    }
}

/// Pure single-mode state `sum_j c_j phi_j` with
/// `phi_j(q) = (Im A / pi)^{1/4} exp(i [A (q - q_j)^2 / 2 + p_j (q - q_j)])`,
/// normalized in the truncated space. Also returns the norm lost to
/// truncation before renormalization.
pub fn superposition_state(centres: &[(f64, f64)], coeffs: &[Complex64], a: Complex64, n_max: usize) -> Result<(CVector, f64)> {
    if centres.len() != coeffs.len() || centres.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: centres.len(),
            got: coeffs.len(),
        });
    }
    let mut psi = CVector::zeros(n_max + 1);
    for (&(q, p), &c) in centres.iter().zip(coeffs) {
        psi += gaussian_coefficients(q, p, a, n_max)? * c;
    }
    // exact norm from the Gaussian overlaps
    let mut exact = Complex64::new(0.0, 0.0);
    for (&(qi, pi), &ci) in centres.iter().zip(coeffs) {
        for (&(qj, pj), &cj) in centres.iter().zip(coeffs) {
            exact += ci.conj() * cj * gaussian_overlap((qi, pi), (qj, pj), a);
        }
    }
    let norm2 = psi.norm_squared();
    let lost = (1.0 - norm2 / exact.re).max(0.0);
    psi /= Complex64::new(norm2.sqrt(), 0.0);
    Ok((psi, lost))
}

/// `<phi_i | phi_j>` for two packets of the same width `A`.
fn gaussian_overlap((qi, pi): (f64, f64), (qj, pj): (f64, f64), a: Complex64) -> Complex64 {
    // integrand exp(-s q^2 / 2 + b q + c) with s = 2 Im A
    let i = Complex64::new(0.0, 1.0);
    let s = 2.0 * a.im;
    let b = i * (a * qj - a.conj() * qi) * -1.0 + i * (pj - pi);
    let c = 0.5 * i * (a * qj * qj - a.conj() * qi * qi) - i * (pj * qj - pi * qi);
    let pref = (a.im / std::f64::consts::PI).sqrt();
    pref * (2.0 * std::f64::consts::PI / s).sqrt() * (b * b / (2.0 * s) + c).exp()
}

#[cfg(test)]
mod tests;
