//! Gaussian and complex-Gaussian Wigner functions.
//!
//! Phase-space vectors use the block layout `(q_1..q_n, p_1..p_n)`.

mod grid;

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::symbols::SymplecticForm;

pub use grid::{GridSpec, WignerGrid};

/// Tolerance used for the Robertson-Schrodinger physicality check.
pub const PHYSICALITY_TOL: f64 = -1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Real Gaussian Wigner function
/// `W(x) = sqrt(det G) / (pi hbar)^n exp(-(x - X).G(x - X) / hbar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianWigner {
    hbar: f64,
    x: DVector<f64>,
    g: DMatrix<f64>,
}

impl GaussianWigner {
    pub fn new(hbar: f64, x: DVector<f64>, g: DMatrix<f64>) -> Result<Self> {
        let d = x.len();
        if d == 0 || d % 2 != 0 {
            return Err(Error::Invalid(format!("phase-space dimension {d} must be even and positive")));
        }
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: g.nrows(),
            });
        }
        if !(hbar > 0.0) {
            return Err(Error::Invalid(format!("hbar must be positive, got {hbar}")));
        }
        let asym = linalg::max_abs(&(&g - g.transpose()));
        if asym > 1e-12 * linalg::max_abs(&g).max(1.0) {
            return Err(Error::Invalid(format!("width matrix not symmetric (asymmetry {asym:e})")));
        }
        let g = linalg::symmetrize(&g);
        if !linalg::is_positive_definite(&g) {
            return Err(Error::NotPositiveDefinite("Gaussian width matrix G"));
        }
        Ok(GaussianWigner { hbar, x, g })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn num_modes(&self) -> usize {
        self.x.len() / 2
    }

    pub fn centre(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn width(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// Covariance matrix `<{dx_j, dx_k}>/2 = (hbar/2) (G^{-1})_{jk}`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let ginv = linalg::inverse(&self.g, "G").expect("G is positive definite");
        ginv * (0.5 * self.hbar)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        let n = self.num_modes();
        let d = DVector::from_column_slice(point) - &self.x;
        let quad = d.dot(&(&self.g * &d));
        self.g.determinant().sqrt() / (PI * self.hbar).powi(n as i32) * (-quad / self.hbar).exp()
    }

    /// The same state as a complex Gaussian with `B = 2iG`, `Y = 0`.
    pub fn to_complex(&self) -> ComplexGaussian {
        let n = self.num_modes();
        let weight = self.g.determinant().sqrt() / (PI * self.hbar).powi(n as i32);
        ComplexGaussian {
            hbar: self.hbar,
            x: self.x.clone(),
            y: DVector::zeros(2 * n),
            b: linalg::to_complex(&self.g) * (2.0 * I),
            alpha: Complex64::new(0.0, 0.0),
            weight: Complex64::new(weight, 0.0),
            log_prefactor: Complex64::new(0.0, 0.0),
        }
    }

    pub fn moments(&self) -> GaussianMoments {
        GaussianMoments::from_real(&self.x, &self.covariance())
    }

    pub fn check_physical(&self) -> PhysicalityReport {
        check_physical(&self.g)
    }
}

/// Outcome of the uncertainty-relation check on `G^{-1} + i Omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityReport {
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Smallest eigenvalue of the Hermitian matrix `G^{-1} + i Omega`.
pub fn physicality_min_eig(g: &DMatrix<f64>) -> f64 {
    let ginv = match g.clone().try_inverse() {
        Some(m) => m,
        None => return f64::NEG_INFINITY,
    };
    let omega = SymplecticForm::new(g.nrows()).into_matrix();
    let m = linalg::to_complex(&ginv) + linalg::to_complex(&omega) * I;
    linalg::hermitian_eigenvalues(&m)[0]
}

pub fn check_physical(g: &DMatrix<f64>) -> PhysicalityReport {
    let min_eigenvalue = physicality_min_eig(g);
    PhysicalityReport {
        min_eigenvalue,
        pass: min_eigenvalue >= PHYSICALITY_TOL,
    }
}

/// Coherent state with mode amplitudes `a0`, using `a = (q + i p)/sqrt(2)`.
pub fn coherent(a0: &[Complex64], hbar: f64) -> Result<GaussianWigner> {
    let n = a0.len();
    if n == 0 {
        return Err(Error::Invalid("coherent state needs at least one mode".into()));
    }
    let mut x = DVector::zeros(2 * n);
    for (j, a) in a0.iter().enumerate() {
        x[j] = SQRT_2 * a.re;
        x[j + n] = SQRT_2 * a.im;
    }
    GaussianWigner::new(hbar, x, DMatrix::identity(2 * n, 2 * n))
}

/// Phase-space width matrix of the position-space Gaussian with complex
/// width `A` (symmetric, `Im A > 0`).
pub fn g_from_a(a: &CMatrix) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let ra = linalg::re(a);
    let ia = linalg::symmetrize(&linalg::im(a));
    if !linalg::is_positive_definite(&ia) {
        return Err(Error::NotPositiveDefinite("imaginary part of A"));
    }
    let iinv = linalg::inverse(&ia, "Im A")?;
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n))
        .copy_from(&(&ia + &ra * &iinv * &ra));
    g.view_mut((0, n), (n, n)).copy_from(&(-&ra * &iinv));
    g.view_mut((n, 0), (n, n)).copy_from(&(-&iinv * &ra));
    g.view_mut((n, n), (n, n)).copy_from(&iinv);
    Ok(linalg::symmetrize(&g))
}

/// Complex Gaussian component
/// `weight e^{l} exp((i/hbar)[(x - X).B(x - X)/2 + Y.(x - X) + alpha])`.
///
/// `weight` carries superposition coefficients and normalization.
/// `log_prefactor` (`l`) absorbs the evolution of the `(det B)^{1/4}`
/// amplitude under the doubled-space flow.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGaussian {
    pub hbar: f64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub b: CMatrix,
    pub alpha: Complex64,
    pub weight: Complex64,
    pub log_prefactor: Complex64,
}

impl ComplexGaussian {
    /// Checks symmetry of `B` and positivity of `Im B`.
    pub fn validate(&self) -> Result<()> {
        let d = self.x.len();
        if self.y.len() != d || self.b.nrows() != d || self.b.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.b.nrows(),
            });
        }
        let asym = linalg::max_abs_c(&(&self.b - self.b.transpose()));
        if asym > 1e-12 * linalg::max_abs_c(&self.b).max(1.0) {
            return Err(Error::Invalid(format!("B not symmetric (asymmetry {asym:e})")));
        }
        if !linalg::is_positive_definite(&linalg::symmetrize(&linalg::im(&self.b))) {
            return Err(Error::NotPositiveDefinite("imaginary part of B"));
        }
        Ok(())
    }

    pub fn num_modes(&self) -> usize {
        self.x.len() / 2
    }

    /// Concatenated doubled-space centre `Z = (X, Y)`.
    pub fn z(&self) -> DVector<f64> {
        let d = self.x.len();
        let mut z = DVector::zeros(2 * d);
        z.rows_mut(0, d).copy_from(&self.x);
        z.rows_mut(d, d).copy_from(&self.y);
        z
    }

    /// Overall complex amplitude multiplying the exponential at `x = X`.
    pub fn amplitude(&self) -> Complex64 {
        self.weight * self.log_prefactor.exp() * (I * self.alpha / self.hbar).exp()
    }

    /// Modulus of the component at its centre.
    pub fn peak_magnitude(&self) -> f64 {
        self.amplitude().norm()
    }

    pub fn eval(&self, point: &[f64]) -> Complex64 {
        let d = DVector::from_column_slice(point) - &self.x;
        let dc = d.map(|v| Complex64::new(v, 0.0));
        let quad = dc.dot(&(&self.b * &dc));
        let lin = self.y.dot(&d);
        let phase = I / self.hbar * (0.5 * quad + lin + self.alpha);
        self.weight * (self.log_prefactor + phase).exp()
    }

    /// Exact integral over phase space.
    pub fn integral(&self) -> Result<Complex64> {
        let n = self.num_modes();
        let binv = linalg::inverse_c(&self.b, "B")?;
        let yc = self.y.map(|v| Complex64::new(v, 0.0));
        let ybiy = yc.dot(&(&binv * &yc));
        let root = linalg::sqrt_det_minus_i(&self.b)?;
        let gauss = (2.0 * PI * self.hbar).powi(n as i32) / root * (-I / (2.0 * self.hbar) * ybiy).exp();
        Ok(self.amplitude() * gauss)
    }

    /// Exact integrals of `1`, `x_k` and `x_j x_k` over phase space.
    pub fn raw_moments(&self) -> Result<(Complex64, DVector<Complex64>, CMatrix)> {
        let total = self.integral()?;
        let binv = linalg::inverse_c(&self.b, "B")?;
        let yc = self.y.map(|v| Complex64::new(v, 0.0));
        let shift = -(&binv * &yc);
        let mean = self.x.map(|v| Complex64::new(v, 0.0)) + &shift;
        let second = &binv * (I * self.hbar) + &shift * shift.transpose();
        let xc = self.x.map(|v| Complex64::new(v, 0.0));
        let full = second + &xc * shift.transpose() + &shift * xc.transpose() + &xc * xc.transpose();
        Ok((total, mean * total, full * total))
    }
}

/// Finite superposition of complex Gaussian components; the Wigner function
/// is `normalization * Re sum_c psi_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpositionState {
    pub components: Vec<ComplexGaussian>,
    /// Index pairs `(i, j)` of the underlying pure-state superposition.
    pub pairs: Vec<(usize, usize)>,
    pub normalization: f64,
}

impl SuperpositionState {
    pub fn hbar(&self) -> f64 {
        self.components[0].hbar
    }

    pub fn num_modes(&self) -> usize {
        self.components[0].num_modes()
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.normalization * self.components.iter().map(|c| c.eval(point)).sum::<Complex64>().re
    }

    /// Exact integral of the unnormalized component sum.
    pub fn raw_integral(&self) -> Result<f64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in &self.components {
            acc += c.integral()?;
        }
        Ok(acc.re)
    }

    /// Integral of the Wigner function with the current normalization.
    pub fn integral(&self) -> Result<f64> {
        Ok(self.normalization * self.raw_integral()?)
    }

    /// Rescales so the Wigner function integrates to one.
    pub fn normalize(&mut self) -> Result<f64> {
        let total = self.raw_integral()?;
        if !(total.abs() > 0.0) || !total.is_finite() {
            return Err(Error::Invalid(format!("cannot normalize state with integral {total}")));
        }
        self.normalization = 1.0 / total;
        Ok(total)
    }

    /// Phase-space means `<x_k>` under the current normalization.
    pub fn mean(&self) -> Result<DVector<f64>> {
        let d = self.components[0].x.len();
        let mut acc = DVector::<Complex64>::zeros(d);
        let mut norm = Complex64::new(0.0, 0.0);
        for c in &self.components {
            let (t, m, _) = c.raw_moments()?;
            norm += t;
            acc += m;
        }
        Ok(acc.map(|v| v.re / norm.re))
    }

    /// Components with `i = j` (the Gaussian lobes).
    pub fn diagonal(&self) -> impl Iterator<Item = &ComplexGaussian> {
        self.components
            .iter()
            .zip(&self.pairs)
            .filter(|(_, (i, j))| i == j)
            .map(|(c, _)| c)
    }

    /// Components with `i != j` (interference terms).
    pub fn cross(&self) -> impl Iterator<Item = &ComplexGaussian> {
        self.components
            .iter()
            .zip(&self.pairs)
            .filter(|(_, (i, j))| i != j)
            .map(|(c, _)| c)
    }
}

/// Wigner-function decomposition of `sum_j c_j phi_j`, where `phi_j` are
/// position-space Gaussians of width `A` centred at `(q_j, p_j)`.
pub fn cat_decompose(
    centres: &[(Vec<f64>, Vec<f64>)],
    coeffs: &[Complex64],
    a: &CMatrix,
    hbar: f64,
) -> Result<SuperpositionState> {
    if centres.is_empty() {
        return Err(Error::Invalid("superposition needs at least one centre".into()));
    }
    if coeffs.len() != centres.len() {
        return Err(Error::DimensionMismatch {
            expected: centres.len(),
            got: coeffs.len(),
        });
    }
    let n = a.nrows();
    for (q, p) in centres {
        if q.len() != n || p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: q.len().max(p.len()),
            });
        }
    }
    let g = g_from_a(a)?;
    let b = linalg::to_complex(&g) * (2.0 * I);
    let scale = (PI * hbar).powi(n as i32);
    let mut components = Vec::new();
    let mut pairs = Vec::new();
    for (i, (qi, pi)) in centres.iter().enumerate() {
        for (j, (qj, pj)) in centres.iter().enumerate() {
            let mut x = DVector::zeros(2 * n);
            let mut y = DVector::zeros(2 * n);
            let mut alpha = 0.0;
            for k in 0..n {
                x[k] = 0.5 * (qi[k] + qj[k]);
                x[k + n] = 0.5 * (pi[k] + pj[k]);
                y[k] = pj[k] - pi[k];
                y[k + n] = qi[k] - qj[k];
                alpha += 0.5 * (pi[k] + pj[k]) * (qi[k] - qj[k]);
            }
            components.push(ComplexGaussian {
                hbar,
                x,
                y,
                b: b.clone(),
                alpha: Complex64::new(alpha, 0.0),
                weight: coeffs[i].conj() * coeffs[j] / scale,
                log_prefactor: Complex64::new(0.0, 0.0),
            });
            pairs.push((i, j));
        }
    }
    let mut state = SuperpositionState {
        components,
        pairs,
        normalization: 1.0,
    };
    state.normalize()?;
    Ok(state)
}

/// Blocks of the complex-chart covariance `Sigma = [[conj(alpha), conj(beta)], [beta, alpha]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceBlocks {
    pub alpha_block: CMatrix,
    pub beta_block: CMatrix,
}

/// First and second moments of a Gaussian state in mode variables.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMoments {
    /// `<a_j>`.
    pub mean_a: Vec<Complex64>,
    pub blocks: CovarianceBlocks,
}

impl GaussianMoments {
    /// From real-chart means and symmetrized covariance `<{dx, dx}>/2`.
    pub fn from_real(x: &DVector<f64>, cov: &DMatrix<f64>) -> Self {
        let n = x.len() / 2;
        let t = mode_transform(n);
        // Sigma = 2 T cov T^dagger equals hbar T G^{-1} T^dagger
        let sigma = &t * linalg::to_complex(cov) * t.adjoint() * Complex64::new(2.0, 0.0);
        let mean_a = (0..n)
            .map(|j| Complex64::new(x[j], x[j + n]) / SQRT_2)
            .collect();
        GaussianMoments {
            mean_a,
            blocks: CovarianceBlocks {
                alpha_block: sigma.view((n, n), (n, n)).into_owned(),
                beta_block: sigma.view((n, 0), (n, n)).into_owned(),
            },
        }
    }

    /// `<a_i^dagger a_j>`.
    pub fn number(&self, i: usize, j: usize) -> Complex64 {
        let delta = if i == j { 1.0 } else { 0.0 };
        (self.blocks.alpha_block[(i, j)] + 2.0 * self.mean_a[i].conj() * self.mean_a[j] - delta) * 0.5
    }

    pub fn population(&self, j: usize) -> f64 {
        self.number(j, j).re
    }

    /// First-order coherence `|<a_i^dagger a_j>| / sqrt(<n_i><n_j>)`.
    pub fn g1(&self, i: usize, j: usize) -> f64 {
        self.number(i, j).norm() / (self.population(i) * self.population(j)).sqrt()
    }
}

/// Unitary `T = (1/sqrt 2) [[I, iI], [I, -iI]]` mapping `(q, p)` to `(a, abar)`.
pub fn mode_transform(n: usize) -> CMatrix {
    let s = Complex64::new(1.0 / SQRT_2, 0.0);
    let mut t = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        t[(j, j)] = s;
        t[(j, j + n)] = I * s;
        t[(j + n, j)] = s;
        t[(j + n, j + n)] = -I * s;
    }
    t
}
