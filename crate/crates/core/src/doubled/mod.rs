//! Doubled phase space: the Lindblad generator acting on Wigner functions as
//! a non-Hermitian symbol `K(x, y)`, and propagation of complex Gaussian
//! components under it.

mod chord;
mod propagate;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::ComplexGaussian;
use crate::linalg::{self, CMatrix};
use crate::semiclassical::{eval_mat, eval_vec, LindbladModel};
use crate::symbols::{parse_symbol, Chart, PolySymbol, Sign};

pub use chord::{chord_from_component, chord_rhs, ChordDerivative, ChordGaussian};
pub use propagate::{propagate_component, propagate_superposition, SuperpositionTrajectory, MIN_IM_B_EIG};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Leading terms of the doubled-space symbol, `K = K0 + hbar K1 + O(hbar^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledSymbol {
    pub k0: PolySymbol,
    pub k1: PolySymbol,
}

impl DoubledSymbol {
    pub fn num_modes(&self) -> usize {
        self.k0.num_modes()
    }
}

/// Builds `K` from a real-chart model.
///
/// With `A(+-) = A(x +- Omega y / 2)` the generator symbol is
/// `K = H(-) - H(+) + i sum_k [L_k(-) *2 conj(L_k)(+) - (conj(L_k) * L_k)(-)/2 - (conj(L_k) * L_k)(+)/2]`,
/// where `*2` is the star product on the doubled space. Orders 0 and 1 in
/// `hbar` are extracted exactly from the polynomial star products.
pub fn build_k(model: &LindbladModel) -> Result<DoubledSymbol> {
    model.require_chart(Chart::RealQP, "build_k")?;
    let n = model.num_modes;
    let h_minus = model.hamiltonian.double_lift(Sign::Minus)?;
    let h_plus = model.hamiltonian.double_lift(Sign::Plus)?;
    let mut k0 = &h_minus - &h_plus;
    let mut k1 = PolySymbol::zero(Chart::DoubledXY, n);
    let half = Complex64::new(0.5, 0.0);
    for l in &model.lindblads {
        let lbar = l.conj();
        let l_minus = l.double_lift(Sign::Minus)?;
        let lbar_plus = lbar.double_lift(Sign::Plus)?;
        let sandwich0 = l_minus.moyal_order(&lbar_plus, 0)?;
        let sandwich1 = l_minus.moyal_order(&lbar_plus, 1)?;
        let anti0 = lbar.moyal_order(l, 0)?;
        let anti1 = lbar.moyal_order(l, 1)?;
        let lifted = |s: &PolySymbol| -> Result<PolySymbol> {
            Ok((&s.double_lift(Sign::Minus)? + &s.double_lift(Sign::Plus)?).scale(half))
        };
        k0 = &k0 + &(&sandwich0 - &lifted(&anti0)?).scale(I);
        k1 = &k1 + &(&sandwich1 - &lifted(&anti1)?).scale(I);
    }
    let scale = k0.max_coefficient().max(k1.max_coefficient()).max(1.0);
    Ok(DoubledSymbol {
        k0: k0.pruned(1e-15 * scale),
        k1: k1.pruned(1e-15 * scale),
    })
}

/// Checks the generator convention against the closed form for a damped
/// anharmonic oscillator,
/// `K0 = (Omega x).y - (beta/4)(xq yp^3 + 4 xq^3 yp) - (gamma/2) x.y - (i gamma/4) y.y`,
/// `K1 = i gamma / 2`.
pub fn convention_self_test() -> Result<()> {
    let (beta, gamma) = (0.1, 0.3);
    let model = LindbladModel::parse(
        Chart::RealQP,
        1,
        1.0,
        &format!("0.5*q1^2 + 0.5*p1^2 + {}*q1^4", beta / 4.0),
        &[&format!("{} * (q1 + i*p1)", (gamma / 2.0f64).sqrt())],
    )?;
    let k = build_k(&model)?;
    let k0 = parse_symbol(
        &format!(
            "xp1 yq1 - xq1 yp1 - {b}*(xq1 yp1^3 + 4*xq1^3 yp1) - {g}*(xq1 yq1 + xp1 yp1) - {gi}i*(yq1^2 + yp1^2)",
            b = beta / 4.0,
            g = gamma / 2.0,
            gi = gamma / 4.0
        ),
        Chart::DoubledXY,
        1,
    )?;
    let k1 = PolySymbol::constant(Chart::DoubledXY, 1, Complex64::new(0.0, gamma / 2.0));
    let (e0, e1) = (k.k0.max_abs_diff(&k0), k.k1.max_abs_diff(&k1));
    if e0 > 1e-13 || e1 > 1e-13 {
        return Err(Error::Invalid(format!(
            "doubled symbol convention check failed: |dK0| = {e0:e}, |dK1| = {e1:e}"
        )));
    }
    Ok(())
}

/// `K0` with its first and second derivatives precomputed.
pub struct CompiledK {
    n: usize,
    hbar: f64,
    k0: PolySymbol,
    k1: PolySymbol,
    grad: Vec<PolySymbol>,
    hess: Vec<Vec<PolySymbol>>,
}

/// Local data of `K0` at a doubled-space point.
pub(crate) struct KLocal {
    pub value: Complex64,
    pub k1: Complex64,
    pub grad: DVector<Complex64>,
    pub hess: CMatrix,
}

impl CompiledK {
    pub fn new(k: &DoubledSymbol, hbar: f64) -> Self {
        CompiledK {
            n: k.num_modes(),
            hbar,
            grad: k.k0.grad(),
            hess: k.k0.hessian(),
            k0: k.k0.clone(),
            k1: k.k1.clone(),
        }
    }

    pub fn from_model(model: &LindbladModel) -> Result<Self> {
        Ok(Self::new(&build_k(model)?, model.hbar))
    }

    pub fn num_modes(&self) -> usize {
        self.n
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub(crate) fn local(&self, x: &[f64], y: &[f64]) -> KLocal {
        let pt: Vec<Complex64> = x.iter().chain(y).map(|&v| Complex64::new(v, 0.0)).collect();
        KLocal {
            value: self.k0.eval(&pt).expect("dimension checked by caller"),
            k1: self.k1.eval(&pt).expect("dimension checked by caller"),
            grad: eval_vec(&self.grad, &pt),
            hess: eval_mat(&self.hess, &pt),
        }
    }
}

/// Time derivative of a complex Gaussian component.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentDerivative {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub b: CMatrix,
    pub alpha: Complex64,
    /// Derivative of the log amplitude, `Tr(Bdot B^{-1}) / 4`.
    pub log_prefactor: Complex64,
}

/// Inverse of the metric built from `B`:
/// `[[Bi^-1, Bi^-1 Br], [Br Bi^-1, Bi + Br Bi^-1 Br]]`.
pub fn metric_inverse(b: &CMatrix) -> Result<DMatrix<f64>> {
    let d = b.nrows();
    let br = linalg::re(b);
    let bi = linalg::symmetrize(&linalg::im(b));
    if !linalg::is_positive_definite(&bi) {
        return Err(Error::NotPositiveDefinite("imaginary part of B"));
    }
    let bii = linalg::inverse(&bi, "Im B")?;
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&bii);
    m.view_mut((0, d), (d, d)).copy_from(&(&bii * &br));
    m.view_mut((d, 0), (d, d)).copy_from(&(&br * &bii));
    m.view_mut((d, d), (d, d)).copy_from(&(&bi + &br * &bii * &br));
    Ok(m)
}

/// Equations of motion of a component `(Z, B, alpha)` under `K`.
pub fn rhs_component(k: &CompiledK, comp: &ComplexGaussian) -> Result<ComponentDerivative> {
    let d = 2 * k.n;
    if comp.x.len() != d || comp.y.len() != d || comp.b.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: comp.x.len(),
        });
    }
    let hbar = k.hbar;
    let local = k.local(comp.x.as_slice(), comp.y.as_slice());
    let ginv = metric_inverse(&comp.b)?;
    let grad_re = local.grad.map(|v| v.re);
    let grad_im = local.grad.map(|v| v.im);
    // Omega_2 grad = (grad_y, -grad_x)
    let mut zdot = &ginv * &grad_im;
    for i in 0..d {
        zdot[i] += grad_re[d + i];
        zdot[d + i] -= grad_re[i];
    }
    let kxx = local.hess.view((0, 0), (d, d)).into_owned();
    let kxy = local.hess.view((0, d), (d, d)).into_owned();
    let kyx = local.hess.view((d, 0), (d, d)).into_owned();
    let kyy = local.hess.view((d, d), (d, d)).into_owned();
    let b = &comp.b;
    let bdot = linalg::symmetrize_c(&(-(b * &kyy * b) - b * &kyx - &kxy * b - &kxx));
    let binv = linalg::inverse_c(b, "B")?;
    let tr_bdot = (&bdot * &binv).trace();
    let xdot = zdot.rows(0, d).into_owned();
    let ydot = zdot.rows(d, d).into_owned();
    let ih = I * hbar;
    let alpha = Complex64::new(comp.y.dot(&xdot), 0.0) - local.value - local.k1 * hbar
        + ih * 0.5 * (kxy.trace() + (&kyy * b).trace())
        + ih * 0.25 * tr_bdot;
    Ok(ComponentDerivative {
        x: xdot,
        y: ydot,
        b: bdot,
        alpha,
        log_prefactor: tr_bdot * 0.25,
    })
}

#[cfg(test)]
mod tests;
