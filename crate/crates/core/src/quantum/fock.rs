//! Truncated Fock spaces and quantization of polynomial symbols.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::symbols::{weyl_of_normal_monomial, Chart, PolySymbol};

/// Tensor product of single-mode spaces `span{|0>, ..., |n_max>}`. Mode 0 is
/// the slowest-varying index of the product basis.
#[derive(Clone, Debug)]
pub struct FockSpace {
    dims: Vec<usize>,
    strides: Vec<usize>,
    lowering: Vec<CsrMatrix<Complex64>>,
}

impl FockSpace {
    pub fn new(n_max: &[usize]) -> Result<Self> {
        if n_max.is_empty() {
            return Err(Error::Invalid("Fock space needs at least one mode".into()));
        }
        let dims: Vec<usize> = n_max.iter().map(|&n| n + 1).collect();
        let mut strides = vec![1; dims.len()];
        for j in (0..dims.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * dims[j + 1];
        }
        let mut space = FockSpace {
            dims,
            strides,
            lowering: Vec::new(),
        };
        space.lowering = (0..n_max.len())
            .map(|j| {
                let mut e = vec![0u16; 2 * n_max.len()];
                e[j] = 1;
                space.quantize_monomial(&e, Complex64::new(1.0, 0.0))
            })
            .collect();
        Ok(space)
    }

    pub fn uniform(num_modes: usize, n_max: usize) -> Result<Self> {
        Self::new(&vec![n_max; num_modes])
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    pub fn n_max(&self, mode: usize) -> usize {
        self.dims[mode] - 1
    }

    /// Dimension of the product space.
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, occupation: &[usize]) -> usize {
        occupation.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }

    pub fn occupation(&self, index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.dims)
            .map(|(s, d)| (index / s) % d)
            .collect()
    }

    /// Lowering operator of `mode`: `sqrt(k)` on the first superdiagonal of
    /// the mode factor.
    pub fn lowering(&self, mode: usize) -> &CsrMatrix<Complex64> {
        &self.lowering[mode]
    }

    pub fn number(&self, mode: usize) -> CsrMatrix<Complex64> {
        let mut e = vec![0u16; 2 * self.num_modes()];
        e[mode] = 1;
        e[mode + self.num_modes()] = 1;
        self.quantize_monomial(&e, Complex64::new(1.0, 0.0))
    }

    /// `c prod_j (a_j^dagger)^{m_j} a_j^{k_j}` with `exponents = (k, m)`, the
    /// layout of a `ComplexAAbar` monomial. Products of truncated matrices in
    /// this order equal the projection of the exact operator.
    fn quantize_monomial(&self, exponents: &[u16], c: Complex64) -> CsrMatrix<Complex64> {
        let n = self.num_modes();
        let dim = self.dim();
        let mut coo = CooMatrix::new(dim, dim);
        for col in 0..dim {
            let mut occ = self.occupation(col);
            let mut amp = c;
            let mut ok = true;
            for j in 0..n {
                let (k, m) = (exponents[j] as usize, exponents[j + n] as usize);
                if occ[j] < k || occ[j] - k + m > self.n_max(j) {
                    ok = false;
                    break;
                }
                for l in 0..k {
                    amp *= ((occ[j] - l) as f64).sqrt();
                }
                occ[j] -= k;
                for l in 1..=m {
                    amp *= ((occ[j] + l) as f64).sqrt();
                }
                occ[j] += m;
            }
            if ok {
                coo.push(self.index(&occ), col, amp);
            }
        }
        CsrMatrix::from(&coo)
    }

    /// Operator of a normal-ordered expression: a `ComplexAAbar` polynomial
    /// in which `abar_j` stands for `a_j^dagger` placed to the left.
    pub fn quantize_normal(&self, expr: &PolySymbol) -> Result<CsrMatrix<Complex64>> {
        if expr.chart() != Chart::ComplexAAbar {
            return Err(Error::ChartMismatch(expr.chart(), Chart::ComplexAAbar));
        }
        if expr.num_modes() != self.num_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes(),
                got: expr.num_modes(),
            });
        }
        let dim = self.dim();
        let mut acc = CsrMatrix::zeros(dim, dim);
        for (e, &c) in expr.terms() {
            acc = &acc + &self.quantize_monomial(e, c);
        }
        Ok(acc)
    }

    /// Operator whose Weyl symbol is `symbol` (either phase-space chart).
    pub fn quantize_weyl(&self, symbol: &PolySymbol, hbar: f64) -> Result<CsrMatrix<Complex64>> {
        require_unit_hbar(hbar)?;
        let normal = normal_order(&symbol.chart_transform(Chart::ComplexAAbar)?, hbar)?;
        self.quantize_normal(&normal)
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn fock_state(&self, occupation: &[usize]) -> Result<CVector> {
        if occupation.len() != self.num_modes() || occupation.iter().enumerate().any(|(j, &n)| n > self.n_max(j)) {
            return Err(Error::Invalid(format!("occupation {occupation:?} outside the truncated space")));
        }
        let mut v = CVector::zeros(self.dim());
        v[self.index(occupation)] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// Product of single-mode states given by their Fock coefficients.
    pub fn product_state(&self, factors: &[CVector]) -> Result<CVector> {
        if factors.len() != self.num_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes(),
                got: factors.len(),
            });
        }
        for (j, f) in factors.iter().enumerate() {
            if f.len() != self.dims[j] {
                return Err(Error::DimensionMismatch {
                    expected: self.dims[j],
                    got: f.len(),
                });
            }
        }
        Ok(CVector::from_fn(self.dim(), |idx, _| {
            self.occupation(idx)
                .iter()
                .zip(factors)
                .map(|(&n, f)| f[n])
                .product()
        }))
    }

    /// Truncated product coherent state (not renormalized, so the missing
    /// norm measures the truncation loss).
    pub fn coherent(&self, a0: &[Complex64]) -> Result<CVector> {
        if a0.len() != self.num_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes(),
                got: a0.len(),
            });
        }
        let factors: Vec<CVector> = a0
            .iter()
            .enumerate()
            .map(|(j, &a)| coherent_coefficients(a, self.n_max(j)))
            .collect();
        self.product_state(&factors)
    }

    /// Population of the highest retained level of each mode.
    pub fn top_populations(&self, rho: &CMatrix) -> Vec<f64> {
        let mut out = vec![0.0; self.num_modes()];
        for idx in 0..self.dim() {
            let occ = self.occupation(idx);
            for (j, o) in out.iter_mut().enumerate() {
                if occ[j] == self.n_max(j) {
                    *o += rho[(idx, idx)].re;
                }
            }
        }
        out
    }

    /// Same as [`FockSpace::top_populations`] for a pure state.
    pub fn top_populations_pure(&self, psi: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_modes()];
        for (idx, v) in psi.iter().enumerate() {
            let occ = self.occupation(idx);
            for (j, o) in out.iter_mut().enumerate() {
                if occ[j] == self.n_max(j) {
                    *o += v.norm_sqr();
                }
            }
        }
        out
    }
}

pub(crate) fn require_unit_hbar(hbar: f64) -> Result<()> {
    if hbar != 1.0 {
        return Err(Error::UnsupportedHbar(hbar));
    }
    Ok(())
}

/// Rewrites a Weyl symbol in the complex chart as the normal-ordered
/// expression of the same operator, by repeatedly removing the Weyl symbol of
/// the leading normal-ordered monomial.
pub fn normal_order(weyl: &PolySymbol, hbar: f64) -> Result<PolySymbol> {
    if weyl.chart() != Chart::ComplexAAbar {
        return Err(Error::ChartMismatch(weyl.chart(), Chart::ComplexAAbar));
    }
    let n = weyl.num_modes();
    let eps = 1e-14 * weyl.max_coefficient().max(1.0);
    let mut rest = weyl.clone().pruned(eps);
    let mut out = PolySymbol::zero(Chart::ComplexAAbar, n);
    while !rest.is_zero() {
        let (e, c) = rest
            .terms()
            .max_by_key(|(e, _)| e.iter().map(|&v| v as usize).sum::<usize>())
            .map(|(e, &c)| (e.clone(), c))
            .expect("nonzero symbol has a term");
        let annihilation: Vec<u32> = e[..n].iter().map(|&v| v as u32).collect();
        let creation: Vec<u32> = e[n..].iter().map(|&v| v as u32).collect();
        let w = weyl_of_normal_monomial(&creation, &annihilation, hbar).scale(c);
        out = &out + &PolySymbol::monomial(Chart::ComplexAAbar, n, e, c)?;
        rest = (&rest - &w).pruned(eps);
    }
    Ok(out)
}

/// Fock coefficients `exp(-|a|^2/2) a^n / sqrt(n!)` for `n <= n_max`.
pub fn coherent_coefficients(a: Complex64, n_max: usize) -> CVector {
    let mut v = CVector::zeros(n_max + 1);
    v[0] = Complex64::new((-0.5 * a.norm_sqr()).exp(), 0.0);
    for k in 1..=n_max {
        v[k] = v[k - 1] * a / (k as f64).sqrt();
    }
    v
}

/// Fock coefficients (`hbar = 1`) of the normalized wave packet
/// `(Im A / pi)^{1/4} exp(i [A (q - q0)^2 / 2 + p0 (q - q0)])`.
///
/// `c_0` is the analytic overlap with the ground state; higher coefficients
/// follow from `(p - A q) phi = (p0 - A q0) phi` written in `a, a^dagger`.
pub fn gaussian_coefficients(q0: f64, p0: f64, a: Complex64, n_max: usize) -> Result<CVector> {
    if a.im <= 0.0 {
        return Err(Error::NotPositiveDefinite("imaginary part of A"));
    }
    let i = Complex64::new(0.0, 1.0);
    let pi = std::f64::consts::PI;
    let s = 1.0 - i * a;
    let b = i * (p0 - a * q0);
    let gauss = (2.0 * pi / s).sqrt() * (b * b / (2.0 * s)).exp();
    let c0 = (a.im / pi).powf(0.25) * pi.powf(-0.25) * gauss * (i * (0.5 * a * q0 * q0 - p0 * q0)).exp();
    let mut v = CVector::zeros(n_max + 1);
    v[0] = c0;
    let rhs = std::f64::consts::SQRT_2 * (p0 - a * q0);
    for k in 0..n_max {
        let prev = if k == 0 { Complex64::new(0.0, 0.0) } else { v[k - 1] };
        v[k + 1] = ((i - a) * (k as f64).sqrt() * prev - rhs * v[k]) / ((i + a) * ((k + 1) as f64).sqrt());
    }
    Ok(v)
}

/// Dense copy of a sparse operator.
pub fn to_dense(op: &CsrMatrix<Complex64>) -> CMatrix {
    DMatrix::from(op)
}

/// `y = op x` without allocation.
pub(crate) fn spmv(op: &CsrMatrix<Complex64>, x: &[Complex64], y: &mut [Complex64]) {
    let (offsets, cols, vals) = (op.row_offsets(), op.col_indices(), op.values());
    for (r, out) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in offsets[r]..offsets[r + 1] {
            acc += vals[k] * x[cols[k]];
        }
        *out = acc;
    }
}

/// `<x| op |x>` for an unnormalized `x`.
pub(crate) fn sandwich(op: &CsrMatrix<Complex64>, x: &[Complex64]) -> Complex64 {
    let (offsets, cols, vals) = (op.row_offsets(), op.col_indices(), op.values());
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..op.nrows() {
        let mut row = Complex64::new(0.0, 0.0);
        for k in offsets[r]..offsets[r + 1] {
            row += vals[k] * x[cols[k]];
        }
        acc += x[r].conj() * row;
    }
    acc
}

/// `Tr(rho op)`.
pub(crate) fn trace_product(rho: &CMatrix, op: &CsrMatrix<Complex64>) -> Complex64 {
    let (offsets, cols, vals) = (op.row_offsets(), op.col_indices(), op.values());
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..op.nrows() {
        for k in offsets[r]..offsets[r + 1] {
            acc += vals[k] * rho[(cols[k], r)];
        }
    }
    acc
}
