//! Small dense linear-algebra helpers shared by the propagators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn re(m: &CMatrix) -> DMatrix<f64> {
    m.map(|v| v.re)
}

pub fn im(m: &CMatrix) -> DMatrix<f64> {
    m.map(|v| v.im)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn symmetrize_c(m: &CMatrix) -> CMatrix {
    (m + m.transpose()) * Complex64::new(0.5, 0.0)
}

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetrize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.clone().cholesky().is_some()
}

pub fn inverse(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

pub fn inverse_c(m: &CMatrix, what: &'static str) -> Result<CMatrix> {
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

/// Principal branch of `det(-i B)^{1/2}` for complex symmetric `B` with
/// positive-definite imaginary part.
///
/// Writing `Im B = L L^T` and `S = L^{-1} Re B L^{-T}`, the determinant
/// factorises as `det(Im B) prod_k (1 - i s_k)` over the eigenvalues of `S`;
/// every factor has positive real part, so the square root is taken factor
/// by factor without crossing a branch cut.
pub fn sqrt_det_minus_i(b: &CMatrix) -> Result<Complex64> {
    let p = im(b);
    let chol = p
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite("imaginary part of width matrix"))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("Cholesky factor"))?;
    let s = &linv * re(b) * linv.transpose();
    let det_p: f64 = l.diagonal().iter().map(|d| d * d).product();
    let mut acc = Complex64::new(det_p.sqrt(), 0.0);
    for lam in symmetrize(&s).symmetric_eigenvalues().iter() {
        acc *= Complex64::new(1.0, -lam).sqrt();
    }
    Ok(acc)
}
