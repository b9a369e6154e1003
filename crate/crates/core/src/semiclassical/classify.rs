//! Classification of the centre flow generated by a single Lindblad symbol.

use crate::error::Result;
use crate::symbols::{Chart, PolySymbol, Sign};

#[derive(Clone, Debug, PartialEq)]
pub enum FlowClass {
    /// The Lindblad symbol is real or purely imaginary (or the flow is zero).
    Vanishing,
    /// `L` is holomorphic in `q + i p` or `q - i p`; the flow is the gradient
    /// of `potential = sign * |L|^2 / 2`.
    GradientHolomorphic { sign: Sign, potential: PolySymbol },
    /// Gradient flow of `potential` without holomorphy.
    GeneralGradient { potential: PolySymbol },
    /// Hamiltonian flow `Omega grad generator`.
    Hamiltonian { generator: PolySymbol },
    General,
}

/// Lindblad part `Omega Im(L grad conj L)` of the centre drift, as polynomials.
pub fn lindblad_flow(l: &PolySymbol) -> Result<Vec<PolySymbol>> {
    let n = l.num_modes();
    let lbar = l.conj();
    let v: Vec<PolySymbol> = lbar
        .grad()
        .iter()
        .map(|g| (l * g).imag_part())
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        out.push(v[j + n].clone());
    }
    for j in 0..n {
        out.push(-&v[j]);
    }
    Ok(out)
}

fn jacobian_symmetric(v: &[PolySymbol], eps: f64) -> bool {
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            if v[i].derivative(j).max_abs_diff(&v[j].derivative(i)) > eps {
                return false;
            }
        }
    }
    true
}

/// Potential `Gamma` with `grad Gamma = v`, assuming the Jacobian of `v` is
/// symmetric: each homogeneous degree-`m` part of `Gamma` is `x.v_{m-1} / m`.
fn potential_of(v: &[PolySymbol]) -> PolySymbol {
    let (chart, n) = (v[0].chart(), v[0].num_modes());
    let mut xv = PolySymbol::zero(chart, n);
    for (i, vi) in v.iter().enumerate() {
        xv = &xv + &(&PolySymbol::variable(chart, n, i) * vi);
    }
    let terms: Vec<_> = xv
        .terms()
        .map(|(e, c)| {
            let m: u32 = e.iter().map(|&k| k as u32).sum();
            (e.clone(), c / m as f64)
        })
        .collect();
    PolySymbol::from_terms(chart, n, terms).expect("exponents come from a valid symbol")
}

/// Classifies the semiclassical flow generated by `l` (real chart).
pub fn classify_flow(l: &PolySymbol) -> Result<FlowClass> {
    let chart = l.chart();
    if chart != Chart::RealQP {
        return Err(crate::Error::UnsupportedChart {
            chart,
            op: "classify_flow",
        });
    }
    let eps = 1e-12 * l.max_coefficient().powi(2).max(1e-300);
    if l.has_real_coefficients() || l.has_imaginary_coefficients() {
        return Ok(FlowClass::Vanishing);
    }
    let v = lindblad_flow(l)?;
    if v.iter().all(|p| p.max_coefficient() <= eps) {
        return Ok(FlowClass::Vanishing);
    }
    // Cauchy-Riemann: grad Re L = +- Omega grad Im L
    let n = l.num_modes();
    let re = l.real_part()?;
    let im = l.imag_part()?;
    let gre = re.grad();
    let gim = im.grad();
    let omega_gim: Vec<PolySymbol> = (0..2 * n)
        .map(|i| if i < n { gim[i + n].clone() } else { -&gim[i - n] })
        .collect();
    let coef_eps = 1e-12 * l.max_coefficient().max(1e-300);
    let close = |s: f64| {
        gre.iter()
            .zip(&omega_gim)
            .all(|(a, b)| a.max_abs_diff(&b.scale(s)) <= coef_eps)
    };
    let mod_sq = (l * &l.conj()).real_part()?;
    if close(1.0) {
        return Ok(FlowClass::GradientHolomorphic {
            sign: Sign::Minus,
            potential: mod_sq.scale(-0.5),
        });
    }
    if close(-1.0) {
        return Ok(FlowClass::GradientHolomorphic {
            sign: Sign::Plus,
            potential: mod_sq.scale(0.5),
        });
    }
    if jacobian_symmetric(&v, eps) {
        return Ok(FlowClass::GeneralGradient {
            potential: potential_of(&v).pruned(eps),
        });
    }
    // v = Omega grad F  <=>  grad F = -Omega v
    let w: Vec<PolySymbol> = (0..2 * n)
        .map(|i| if i < n { -&v[i + n] } else { v[i - n].clone() })
        .collect();
    if jacobian_symmetric(&w, eps) {
        return Ok(FlowClass::Hamiltonian {
            generator: potential_of(&w).pruned(eps),
        });
    }
    Ok(FlowClass::General)
}
