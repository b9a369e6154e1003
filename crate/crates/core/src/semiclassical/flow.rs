//! Right-hand sides of the centre and width equations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::LindbladModel;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::symbols::{Chart, PolySymbol, SymplecticForm};

const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn eval_vec(polys: &[PolySymbol], pt: &[Complex64]) -> CVector {
    CVector::from_iterator(polys.len(), polys.iter().map(|p| p.eval(pt).expect("dimension checked")))
}

pub(crate) fn eval_mat(polys: &[Vec<PolySymbol>], pt: &[Complex64]) -> CMatrix {
    let d = polys.len();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = polys[i][j].eval(pt).expect("dimension checked");
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn real_point(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `Lambda` and `D` of the width equation.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftMatrices {
    pub lambda: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

struct RealTerm {
    l: PolySymbol,
    grad_l: Vec<PolySymbol>,
    grad_lbar: Vec<PolySymbol>,
    hess_lbar: Vec<Vec<PolySymbol>>,
}

/// Real-chart flow with all symbolic derivatives precomputed.
pub struct RealFlow {
    dim: usize,
    omega: DMatrix<f64>,
    grad_h: Vec<PolySymbol>,
    hess_h: Vec<Vec<PolySymbol>>,
    terms: Vec<RealTerm>,
}

impl RealFlow {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        model.require_chart(Chart::RealQP, "real-chart semiclassical flow")?;
        let terms = model
            .lindblads
            .iter()
            .map(|l| {
                let lbar = l.conj();
                RealTerm {
                    l: l.clone(),
                    grad_l: l.grad(),
                    grad_lbar: lbar.grad(),
                    hess_lbar: lbar.hessian(),
                }
            })
            .collect();
        Ok(RealFlow {
            dim: model.dim(),
            omega: SymplecticForm::new(model.dim()).into_matrix(),
            grad_h: model.hamiltonian.grad(),
            hess_h: model.hamiltonian.hessian(),
            terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Lindblad contribution `Omega sum_k Im(L_k grad conj(L_k))` to the centre drift.
    pub fn lindblad_drift(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check(x)?;
        let pt = real_point(x);
        let mut v = DVector::zeros(self.dim);
        for t in &self.terms {
            let l = t.l.eval(&pt)?;
            v += eval_vec(&t.grad_lbar, &pt).map(|g| (l * g).im);
        }
        Ok(&self.omega * v)
    }

    /// `Xdot = Omega grad H + Omega sum_k Im(L_k grad conj(L_k))`.
    pub fn drift_x(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check(x)?;
        let pt = real_point(x);
        let gh = eval_vec(&self.grad_h, &pt).map(|v| v.re);
        Ok(&self.omega * gh + self.lindblad_drift(x)?)
    }

    pub fn drift_matrices(&self, x: &[f64]) -> Result<DriftMatrices> {
        self.check(x)?;
        let pt = real_point(x);
        let mut lambda = eval_mat(&self.hess_h, &pt).map(|v| v.re);
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let l = t.l.eval(&pt)?;
            lambda += eval_mat(&t.hess_lbar, &pt).map(|v| (l * v).im);
            let gl = eval_vec(&t.grad_l, &pt);
            let glb = eval_vec(&t.grad_lbar, &pt);
            let outer = &gl * glb.transpose();
            lambda += linalg::im(&outer);
            d += linalg::re(&outer);
        }
        Ok(DriftMatrices {
            lambda,
            d: linalg::symmetrize(&d),
        })
    }

    /// `Gdot = Lambda Omega G - G Omega Lambda^T + 2 G Omega D Omega G`, symmetrized.
    pub fn rhs_g(&self, x: &[f64], g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let DriftMatrices { lambda, d } = self.drift_matrices(x)?;
        Ok(rhs_g_from(&self.omega, &lambda, &d, g))
    }
}

pub(crate) fn rhs_g_from(omega: &DMatrix<f64>, lambda: &DMatrix<f64>, d: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let go = g * omega;
    let m = lambda * omega * g - &go * lambda.transpose() + (&go * d * omega * g) * 2.0;
    linalg::symmetrize(&m)
}

struct ComplexTerm {
    l: PolySymbol,
    lbar: PolySymbol,
    grad_l: Vec<PolySymbol>,
    grad_lbar: Vec<PolySymbol>,
    hess_l: Vec<Vec<PolySymbol>>,
    hess_lbar: Vec<Vec<PolySymbol>>,
}

/// Complex-chart flow in the variables `Xc = (a, abar)`, with `hbar = 1`.
pub struct ComplexFlow {
    dim: usize,
    omega: CMatrix,
    grad_h: Vec<PolySymbol>,
    hess_h: Vec<Vec<PolySymbol>>,
    terms: Vec<ComplexTerm>,
}

/// `K`, `Gamma` and `Xi` of the complex-chart width equation.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexDriftMatrices {
    pub k: CMatrix,
    pub gamma: CMatrix,
    pub xi: CMatrix,
}

impl ComplexFlow {
    pub fn new(model: &LindbladModel) -> Result<Self> {
        model.require_chart(Chart::ComplexAAbar, "complex-chart semiclassical flow")?;
        if model.hbar != 1.0 {
            return Err(Error::UnsupportedHbar(model.hbar));
        }
        let terms = model
            .lindblads
            .iter()
            .map(|l| {
                let lbar = l.conj();
                ComplexTerm {
                    grad_l: l.grad(),
                    grad_lbar: lbar.grad(),
                    hess_l: l.hessian(),
                    hess_lbar: lbar.hessian(),
                    l: l.clone(),
                    lbar,
                }
            })
            .collect();
        Ok(ComplexFlow {
            dim: model.dim(),
            omega: linalg::to_complex(&SymplecticForm::new(model.dim()).into_matrix()),
            grad_h: model.hamiltonian.grad(),
            hess_h: model.hamiltonian.hessian(),
            terms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, xc: &[Complex64]) -> Result<()> {
        if xc.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xc.len(),
            });
        }
        Ok(())
    }

    /// `Xc_dot = -i Omega grad H + (1/2) Omega sum_k (conj(L_k) grad L_k - L_k grad conj(L_k))`.
    pub fn drift(&self, xc: &[Complex64]) -> Result<CVector> {
        self.check(xc)?;
        let mut v = eval_vec(&self.grad_h, xc) * (-I);
        for t in &self.terms {
            let l = t.l.eval(xc)?;
            let lb = t.lbar.eval(xc)?;
            v += (eval_vec(&t.grad_l, xc) * lb - eval_vec(&t.grad_lbar, xc) * l) * Complex64::new(0.5, 0.0);
        }
        Ok(&self.omega * v)
    }

    pub fn drift_matrices(&self, xc: &[Complex64]) -> Result<ComplexDriftMatrices> {
        self.check(xc)?;
        let n = self.dim / 2;
        let mut k = eval_mat(&self.hess_h, xc) * I;
        let mut gamma = CMatrix::zeros(self.dim, self.dim);
        let mut xi = CMatrix::zeros(self.dim, self.dim);
        let half = Complex64::new(0.5, 0.0);
        for t in &self.terms {
            let l = t.l.eval(xc)?;
            let lb = t.lbar.eval(xc)?;
            k += (eval_mat(&t.hess_lbar, xc) * l - eval_mat(&t.hess_l, xc) * lb) * half;
            let gl = eval_vec(&t.grad_l, xc);
            let glb = eval_vec(&t.grad_lbar, xc);
            let a = &gl * glb.transpose();
            let b = &glb * gl.transpose();
            gamma += (&a - &b) * half;
            xi += a + b;
        }
        let mut swap = CMatrix::zeros(self.dim, self.dim);
        for j in 0..n {
            swap[(j, j + n)] = Complex64::new(1.0, 0.0);
            swap[(j + n, j)] = Complex64::new(1.0, 0.0);
        }
        Ok(ComplexDriftMatrices {
            k,
            gamma,
            xi: xi * swap,
        })
    }

    /// `Gc_dot = Gc Omega (K - Gamma) - (conj(K) + conj(Gamma)) Omega Gc + Gc Omega Xi Omega Gc`.
    pub fn rhs_gc(&self, xc: &[Complex64], gc: &CMatrix) -> Result<CMatrix> {
        let ComplexDriftMatrices { k, gamma, xi } = self.drift_matrices(xc)?;
        let w = &self.omega;
        Ok(gc * w * (&k - &gamma) - (k.conjugate() + gamma.conjugate()) * w * gc + gc * w * xi * w * gc)
    }
}

/// Real-chart drift of the centre.
pub fn drift_x(model: &LindbladModel, x: &[f64]) -> Result<DVector<f64>> {
    RealFlow::new(model)?.drift_x(x)
}

pub fn drift_matrices(model: &LindbladModel, x: &[f64]) -> Result<DriftMatrices> {
    RealFlow::new(model)?.drift_matrices(x)
}

pub fn rhs_g(model: &LindbladModel, x: &[f64], g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    RealFlow::new(model)?.rhs_g(x, g)
}

pub fn drift_complex(model: &LindbladModel, xc: &[Complex64]) -> Result<CVector> {
    ComplexFlow::new(model)?.drift(xc)
}

pub fn rhs_g_complex(model: &LindbladModel, xc: &[Complex64], gc: &CMatrix) -> Result<CMatrix> {
    ComplexFlow::new(model)?.rhs_gc(xc, gc)
}
