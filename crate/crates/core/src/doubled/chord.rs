//! Chord-function form of the component equations for linear Lindblad
//! operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::CompiledK;
use crate::error::{Error, Result};
use crate::gaussian::ComplexGaussian;
use crate::linalg;
use crate::semiclassical::LindbladModel;
use crate::symbols::SymplecticForm;

/// Gaussian chord function parametrised by `-B^{-1} = N + i M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChordGaussian {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub nmat: DMatrix<f64>,
    /// Positive definite.
    pub mmat: DMatrix<f64>,
    pub norm: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChordDerivative {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub mmat: DMatrix<f64>,
    pub nmat: DMatrix<f64>,
}

pub fn chord_from_component(comp: &ComplexGaussian) -> Result<ChordGaussian> {
    let binv = linalg::inverse_c(&comp.b, "B")?;
    let minus = -binv;
    Ok(ChordGaussian {
        x: comp.x.clone(),
        y: comp.y.clone(),
        nmat: linalg::symmetrize(&linalg::re(&minus)),
        mmat: linalg::symmetrize(&linalg::im(&minus)),
        norm: comp.integral()?,
    })
}

/// Diffusion matrix in the chord variables, `Omega^T D Omega` with
/// `D = sum_k Re(conj(l_k) l_k^T)` for `L_k = l_k . x` (plus a constant).
/// Then `Im K0 = -y . Dy / 2`.
pub fn linear_diffusion(model: &LindbladModel) -> Result<DMatrix<f64>> {
    let d = model.dim();
    let mut out = DMatrix::zeros(d, d);
    let zero = vec![Complex64::new(0.0, 0.0); d];
    for (idx, l) in model.lindblads.iter().enumerate() {
        if l.degree() > 1 {
            return Err(Error::NonlinearLindblad(idx));
        }
        let g: Vec<Complex64> = l.grad().iter().map(|p| p.eval(&zero)).collect::<Result<_>>()?;
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += (g[i].conj() * g[j]).re;
            }
        }
    }
    let omega = SymplecticForm::new(d).into_matrix();
    Ok(linalg::symmetrize(&(omega.transpose() * out * omega)))
}

/// Chord-variable equations of motion (quadratic `H`, linear `L_k`).
pub fn chord_rhs(model: &LindbladModel, chord: &ChordGaussian) -> Result<ChordDerivative> {
    let dmat = linear_diffusion(model)?;
    let k = CompiledK::from_model(model)?;
    let d = model.dim();
    let local = k.local(chord.x.as_slice(), chord.y.as_slice());
    let grad = local.grad.map(|v| v.re);
    let h = linalg::re(&local.hess);
    let kxx = h.view((0, 0), (d, d)).into_owned();
    let kxy = h.view((0, d), (d, d)).into_owned();
    let kyx = h.view((d, 0), (d, d)).into_owned();
    let kyy = h.view((d, d), (d, d)).into_owned();
    let (m, nm) = (&chord.mmat, &chord.nmat);
    let minv = linalg::inverse(m, "M")?;
    let dy = &dmat * &chord.y;
    let xdot = grad.rows(d, d).into_owned() + nm * &minv * &dy;
    let ydot = -grad.rows(0, d).into_owned() - &minv * &dy;
    let mdot = &dmat + &kyx * m + m * &kxy - m * &kxx * nm - nm * &kxx * m;
    let ndot = -&kyy + &kyx * nm + nm * &kxy + m * &kxx * m - nm * &kxx * nm;
    Ok(ChordDerivative {
        x: xdot,
        y: ydot,
        mmat: mdot,
        nmat: ndot,
    })
}
