//! Exact polynomial calculus for Weyl symbols.
//!
//! A [`PolySymbol`] is a multivariate polynomial with complex coefficients over
//! one of three coordinate charts:
//!
//! * [`Chart::RealQP`]: `(q_1..q_n, p_1..p_n)`
//! * [`Chart::ComplexAAbar`]: `(a_1..a_n, abar_1..abar_n)`, treated as
//!   independent (Wirtinger) variables
//! * [`Chart::DoubledXY`]: `(x_1..x_2n, y_1..y_2n)` on the doubled phase space,
//!   where `x = (q, p)` and `y = (y_q, y_p)`
//!
//! In the two real charts the first half of the variables is canonically
//! conjugate to the second half, so the same symplectic form
//! `[[0, I], [-I, 0]]` drives the Poisson bracket and the Moyal product.

mod parse;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use parse::parse_symbol;

/// Exponent multi-index of a monomial.
pub type Exponents = Vec<u16>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    RealQP,
    ComplexAAbar,
    DoubledXY,
}

impl Chart {
    /// Number of variables for `n` modes.
    pub fn dim(self, n: usize) -> usize {
        match self {
            Chart::RealQP | Chart::ComplexAAbar => 2 * n,
            Chart::DoubledXY => 4 * n,
        }
    }

    /// True when every variable of the chart is real-valued.
    pub fn has_real_variables(self) -> bool {
        !matches!(self, Chart::ComplexAAbar)
    }

    /// Name of variable `index` in the textual notation.
    pub fn variable_name(self, n: usize, index: usize) -> String {
        match self {
            Chart::RealQP => {
                if index < n {
                    format!("q{}", index + 1)
                } else {
                    format!("p{}", index - n + 1)
                }
            }
            Chart::ComplexAAbar => {
                if index < n {
                    format!("a{}", index + 1)
                } else {
                    format!("a{}bar", index - n + 1)
                }
            }
            Chart::DoubledXY => {
                let (block, k) = (index / n, index % n + 1);
                match block {
                    0 => format!("xq{k}"),
                    1 => format!("xp{k}"),
                    2 => format!("yq{k}"),
                    _ => format!("yp{k}"),
                }
            }
        }
    }
}

/// Sign selector for [`PolySymbol::double_lift`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Symplectic form `[[0, I], [-I, 0]]` of dimension `2m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(dim: usize) -> Self {
        assert!(dim % 2 == 0, "symplectic dimension must be even");
        let m = dim / 2;
        let mut matrix = DMatrix::zeros(dim, dim);
        for j in 0..m {
            matrix[(j, j + m)] = 1.0;
            matrix[(j + m, j)] = -1.0;
        }
        SymplecticForm { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Multivariate complex polynomial representing a Weyl symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySymbol {
    chart: Chart,
    num_modes: usize,
    terms: BTreeMap<Exponents, Complex64>,
}

impl PolySymbol {
    pub fn zero(chart: Chart, num_modes: usize) -> Self {
        assert!(num_modes > 0, "a symbol needs at least one mode");
        PolySymbol {
            chart,
            num_modes,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(chart: Chart, num_modes: usize, c: impl Into<Complex64>) -> Self {
        let mut s = Self::zero(chart, num_modes);
        let zeros = vec![0; chart.dim(num_modes)];
        s.add_term(zeros, c.into());
        s
    }

    /// The coordinate function for variable `index`.
    pub fn variable(chart: Chart, num_modes: usize, index: usize) -> Self {
        let dim = chart.dim(num_modes);
        assert!(index < dim, "variable index {index} out of range for dimension {dim}");
        let mut exps = vec![0; dim];
        exps[index] = 1;
        let mut s = Self::zero(chart, num_modes);
        s.add_term(exps, Complex64::new(1.0, 0.0));
        s
    }

    pub fn monomial(
        chart: Chart,
        num_modes: usize,
        exponents: Exponents,
        c: impl Into<Complex64>,
    ) -> Result<Self> {
        Self::from_terms(chart, num_modes, [(exponents, c.into())])
    }

    pub fn from_terms(
        chart: Chart,
        num_modes: usize,
        terms: impl IntoIterator<Item = (Exponents, Complex64)>,
    ) -> Result<Self> {
        let dim = chart.dim(num_modes);
        let mut s = Self::zero(chart, num_modes);
        for (exps, c) in terms {
            if exps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: exps.len(),
                });
            }
            s.add_term(exps, c);
        }
        Ok(s)
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.chart.dim(self.num_modes)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exponents: &[u16]) -> Complex64 {
        self.terms
            .get(exponents)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Total degree (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&k| k as usize).sum())
            .max()
            .unwrap_or(0)
    }

    /// Highest power of a single variable appearing in any term.
    pub fn degree_in(&self, var: usize) -> usize {
        self.terms.keys().map(|e| e[var] as usize).max().unwrap_or(0)
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch(self.chart, other.chart));
        }
        if self.num_modes != other.num_modes {
            return Err(Error::DimensionMismatch {
                expected: self.num_modes,
                got: other.num_modes,
            });
        }
        Ok(())
    }

    fn add_term(&mut self, exps: Exponents, c: Complex64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                if c != Complex64::new(0.0, 0.0) {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                let sum = *o.get() + c;
                if sum == Complex64::new(0.0, 0.0) {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Drops every coefficient with magnitude at or below `eps`.
    pub fn prune(&mut self, eps: f64) {
        self.terms.retain(|_, c| c.norm() > eps);
    }

    pub fn pruned(mut self, eps: f64) -> Self {
        self.prune(eps);
        self
    }

    /// Drops coefficients below `rel_eps` times the largest coefficient.
    pub fn pruned_relative(self, rel_eps: f64) -> Self {
        let scale = self.max_coefficient();
        self.pruned(rel_eps * scale)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        let mut out = Self::zero(self.chart, self.num_modes);
        for (e, v) in &self.terms {
            out.add_term(e.clone(), v * c);
        }
        out
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -*c);
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let mut out = Self::zero(self.chart, self.num_modes);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.chart, self.num_modes, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Complex conjugate of the symbol as a function on phase space.
    ///
    /// In the real charts this conjugates coefficients. In the complex chart
    /// it also exchanges `a_j` and `abar_j`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.chart, self.num_modes);
        let n = self.num_modes;
        for (e, c) in &self.terms {
            let e = match self.chart {
                Chart::ComplexAAbar => {
                    let mut s = e.clone();
                    for j in 0..n {
                        s.swap(j, j + n);
                    }
                    s
                }
                _ => e.clone(),
            };
            out.add_term(e, c.conj());
        }
        out
    }

    /// Real part of the symbol as a function (real-variable charts only).
    pub fn real_part(&self) -> Result<Self> {
        self.map_coefficients("real_part", |c| Complex64::new(c.re, 0.0))
    }

    /// Imaginary part of the symbol as a function (real-variable charts only).
    pub fn imag_part(&self) -> Result<Self> {
        self.map_coefficients("imag_part", |c| Complex64::new(c.im, 0.0))
    }

    fn map_coefficients(
        &self,
        op: &'static str,
        f: impl Fn(Complex64) -> Complex64,
    ) -> Result<Self> {
        if !self.chart.has_real_variables() {
            return Err(Error::UnsupportedChart {
                chart: self.chart,
                op,
            });
        }
        let mut out = Self::zero(self.chart, self.num_modes);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(*c));
        }
        Ok(out)
    }

    /// True if every coefficient is real.
    pub fn has_real_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    /// True if every coefficient is purely imaginary.
    pub fn has_imaginary_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.re == 0.0)
    }

    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.dim(), "variable index out of range");
        let mut out = Self::zero(self.chart, self.num_modes);
        for (e, c) in &self.terms {
            let k = e[var];
            if k == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c * k as f64);
        }
        out
    }

    /// Component-wise partial derivatives.
    pub fn grad(&self) -> Vec<Self> {
        (0..self.dim()).map(|v| self.derivative(v)).collect()
    }

    /// Symmetric matrix of second partial derivatives.
    pub fn hessian(&self) -> Vec<Vec<Self>> {
        let g = self.grad();
        let d = self.dim();
        let mut h = vec![vec![Self::zero(self.chart, self.num_modes); d]; d];
        for i in 0..d {
            for j in i..d {
                let hij = g[i].derivative(j);
                h[j][i] = hij.clone();
                h[i][j] = hij;
            }
        }
        h
    }

    pub fn eval(&self, point: &[Complex64]) -> Result<Complex64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(self.eval_unchecked(point))
    }

    pub fn eval_real(&self, point: &[f64]) -> Result<Complex64> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = 1.0;
            for (x, &k) in point.iter().zip(e) {
                if k != 0 {
                    m *= x.powi(k as i32);
                }
            }
            acc += c * m;
        }
        Ok(acc)
    }

    /// Evaluates a complex-chart symbol at mode amplitudes `a`, with `abar = conj(a)`.
    pub fn eval_at_modes(&self, a: &[Complex64]) -> Result<Complex64> {
        if self.chart != Chart::ComplexAAbar {
            return Err(Error::UnsupportedChart {
                chart: self.chart,
                op: "eval_at_modes",
            });
        }
        let point: Vec<Complex64> = a.iter().copied().chain(a.iter().map(|z| z.conj())).collect();
        self.eval(&point)
    }

    fn eval_unchecked(&self, point: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = Complex64::new(1.0, 0.0);
            for (x, &k) in point.iter().zip(e) {
                if k != 0 {
                    m *= x.powi(k as i32);
                }
            }
            acc += c * m;
        }
        acc
    }

    /// Poisson bracket `grad f . Omega grad g`.
    pub fn poisson(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        if !self.chart.has_real_variables() {
            return Err(Error::UnsupportedChart {
                chart: self.chart,
                op: "poisson",
            });
        }
        let m = self.dim() / 2;
        let mut out = Self::zero(self.chart, self.num_modes);
        for j in 0..m {
            let a = &self.derivative(j) * &other.derivative(j + m);
            let b = &self.derivative(j + m) * &other.derivative(j);
            out = &(&out + &a) - &b;
        }
        Ok(out)
    }

    /// Full Moyal product, summed until the series terminates.
    pub fn moyal(&self, other: &Self, hbar: f64) -> Result<Self> {
        self.moyal_truncated(other, hbar, None)
    }

    /// Moyal product keeping bidifferential orders `0..=max_order`.
    pub fn moyal_truncated(&self, other: &Self, hbar: f64, max_order: Option<usize>) -> Result<Self> {
        self.same_space(other)?;
        let top = self.degree().min(other.degree());
        let last = max_order.map_or(top, |m| m.min(top));
        let mut out = Self::zero(self.chart, self.num_modes);
        for k in 0..=last {
            let term = self.moyal_order(other, k)?;
            out = &out + &term.scale(hbar.powi(k as i32));
        }
        Ok(out)
    }

    /// Coefficient of `hbar^order` in the Moyal product.
    ///
    /// With conjugate pairs `(u_j, v_j)` this is
    /// `sum_{|alpha|+|beta| = order} (i/2)^order (-1)^|beta| / (alpha! beta!)
    ///  (d_u^alpha d_v^beta f) (d_v^alpha d_u^beta g)`.
    pub fn moyal_order(&self, other: &Self, order: usize) -> Result<Self> {
        self.same_space(other)?;
        if !self.chart.has_real_variables() {
            return Err(Error::UnsupportedChart {
                chart: self.chart,
                op: "moyal",
            });
        }
        let m = self.dim() / 2;
        let prefactor = I.powi(order as i32) / 2f64.powi(order as i32);
        let mut out = Self::zero(self.chart, self.num_modes);
        if order == 0 {
            return self.checked_mul(other);
        }
        let mut alpha = vec![0u16; m];
        let mut beta = vec![0u16; m];
        for (ef, cf) in &self.terms {
            for (eg, cg) in &other.terms {
                let ctx = MoyalPair {
                    ef,
                    eg,
                    m,
                    coef: cf * cg * prefactor,
                };
                ctx.enumerate(0, order, &mut alpha, &mut beta, &mut out);
            }
        }
        Ok(out)
    }

    /// Substitutes `images[i]` for variable `i`.
    pub fn substitute(&self, images: &[PolySymbol]) -> Result<Self> {
        if images.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: images.len(),
            });
        }
        let (chart, n) = (images[0].chart, images[0].num_modes);
        for im in images {
            if im.chart != chart || im.num_modes != n {
                return Err(Error::ChartMismatch(chart, im.chart));
            }
        }
        let mut powers: Vec<Vec<PolySymbol>> = images
            .iter()
            .map(|im| vec![PolySymbol::constant(chart, n, 1.0), im.clone()])
            .collect();
        for (v, pw) in powers.iter_mut().enumerate() {
            let top = self.degree_in(v);
            while pw.len() <= top {
                let next = &pw[pw.len() - 1] * &images[v];
                pw.push(next);
            }
        }
        let mut out = PolySymbol::zero(chart, n);
        for (e, c) in &self.terms {
            let mut t = PolySymbol::constant(chart, n, *c);
            for (v, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = &t * &powers[v][k as usize];
                }
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Exact change of chart between `RealQP` and `ComplexAAbar`, using
    /// `a = (q + i p)/sqrt(2)`.
    pub fn chart_transform(&self, target: Chart) -> Result<Self> {
        let n = self.num_modes;
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match (self.chart, target) {
            (a, b) if a == b => Ok(self.clone()),
            (Chart::RealQP, Chart::ComplexAAbar) => {
                let var = |i| PolySymbol::variable(Chart::ComplexAAbar, n, i);
                let mut images = Vec::with_capacity(2 * n);
                for j in 0..n {
                    images.push((&var(j) + &var(j + n)).scale(s));
                }
                for j in 0..n {
                    images.push((&var(j) - &var(j + n)).scale(-I * s));
                }
                self.substitute(&images)
            }
            (Chart::ComplexAAbar, Chart::RealQP) => {
                let var = |i| PolySymbol::variable(Chart::RealQP, n, i);
                let mut images = Vec::with_capacity(2 * n);
                for j in 0..n {
                    images.push((&var(j) + &var(j + n).scale(I)).scale(s));
                }
                for j in 0..n {
                    images.push((&var(j) - &var(j + n).scale(I)).scale(s));
                }
                self.substitute(&images)
            }
            (from, to) => Err(Error::UnsupportedTransform { from, to }),
        }
    }

    /// Lifts a real-chart symbol to the doubled phase space: `f(x + s/2 Omega y)`
    /// for `sign = s`.
    pub fn double_lift(&self, sign: Sign) -> Result<Self> {
        if self.chart != Chart::RealQP {
            return Err(Error::UnsupportedChart {
                chart: self.chart,
                op: "double_lift",
            });
        }
        let n = self.num_modes;
        let half = 0.5 * sign.value();
        let var = |i| PolySymbol::variable(Chart::DoubledXY, n, i);
        let mut images = Vec::with_capacity(2 * n);
        // (Omega y)_q = y_p, (Omega y)_p = -y_q
        for j in 0..n {
            images.push(&var(j) + &var(3 * n + j).scale(half));
        }
        for j in 0..n {
            images.push(&var(n + j) - &var(2 * n + j).scale(half));
        }
        self.substitute(&images)
    }

    /// Largest coefficient-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, c) in &self.terms {
            worst = worst.max((c - other.coefficient(e)).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }

    /// Evaluates `y = sum_k c_k x^{e_k}` with the variables restricted to a
    /// subset: returns the polynomial obtained by fixing the variables in
    /// `fixed` (index, value) and keeping the rest symbolic.
    pub fn partial_eval(&self, fixed: &[(usize, Complex64)]) -> Self {
        let mut out = Self::zero(self.chart, self.num_modes);
        for (e, c) in &self.terms {
            let mut e = e.clone();
            let mut c = *c;
            for &(v, x) in fixed {
                c *= x.powi(e[v] as i32);
                e[v] = 0;
            }
            out.add_term(e, c);
        }
        out
    }
}

struct MoyalPair<'a> {
    ef: &'a [u16],
    eg: &'a [u16],
    m: usize,
    coef: Complex64,
}

impl MoyalPair<'_> {
    // Recursively distributes the remaining order over (alpha_j, beta_j).
    fn enumerate(
        &self,
        j: usize,
        remaining: usize,
        alpha: &mut [u16],
        beta: &mut [u16],
        out: &mut PolySymbol,
    ) {
        let m = self.m;
        if j == m {
            if remaining == 0 {
                self.emit(alpha, beta, out);
            }
            return;
        }
        let max_a = self.ef[j].min(self.eg[j + m]) as usize;
        let max_b = self.ef[j + m].min(self.eg[j]) as usize;
        for a in 0..=max_a.min(remaining) {
            for b in 0..=max_b.min(remaining - a) {
                alpha[j] = a as u16;
                beta[j] = b as u16;
                self.enumerate(j + 1, remaining - a - b, alpha, beta, out);
            }
        }
        alpha[j] = 0;
        beta[j] = 0;
    }

    fn emit(&self, alpha: &[u16], beta: &[u16], out: &mut PolySymbol) {
        let m = self.m;
        let mut c = self.coef;
        let mut e: Exponents = self.ef.iter().zip(self.eg).map(|(a, b)| a + b).collect();
        let mut nbeta = 0u32;
        for j in 0..m {
            let (a, b) = (alpha[j], beta[j]);
            nbeta += b as u32;
            c *= falling(self.ef[j], a) * falling(self.ef[j + m], b);
            c *= falling(self.eg[j + m], a) * falling(self.eg[j], b);
            c /= factorial(a) * factorial(b);
            e[j] -= a + b;
            e[j + m] -= a + b;
        }
        if nbeta % 2 == 1 {
            c = -c;
        }
        out.add_term(e, c);
    }
}

fn falling(n: u16, k: u16) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn factorial(k: u16) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Weyl symbol of `(a^dagger)^m a^k` on one mode, in the complex chart.
///
/// Built as the star product `abar * ... * abar * a * ... * a` of the
/// elementary real-chart symbols, then converted back to `(a, abar)`.
pub fn weyl_of_normal_ordered(mode: usize, m: u32, k: u32, num_modes: usize, hbar: f64) -> PolySymbol {
    let mut creation = vec![0; num_modes];
    let mut annihilation = vec![0; num_modes];
    creation[mode] = m;
    annihilation[mode] = k;
    weyl_of_normal_monomial(&creation, &annihilation, hbar)
}

/// Weyl symbol of `prod_j (a_j^dagger)^{m_j} a_j^{k_j}`.
///
/// Different modes commute and their symbols depend on disjoint variables, so
/// the multi-mode symbol is the ordinary product of single-mode symbols.
pub fn weyl_of_normal_monomial(creation: &[u32], annihilation: &[u32], hbar: f64) -> PolySymbol {
    assert_eq!(creation.len(), annihilation.len());
    let n = creation.len();
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let var = |i| PolySymbol::variable(Chart::RealQP, n, i);
    let mut total = PolySymbol::constant(Chart::RealQP, n, 1.0);
    for j in 0..n {
        let a = (&var(j) + &var(j + n).scale(I)).scale(s);
        let abar = (&var(j) - &var(j + n).scale(I)).scale(s);
        let mut single = PolySymbol::constant(Chart::RealQP, n, 1.0);
        for _ in 0..creation[j] {
            single = single.moyal(&abar, hbar).expect("same chart");
        }
        for _ in 0..annihilation[j] {
            single = single.moyal(&a, hbar).expect("same chart");
        }
        total = &total * &single;
    }
    total
        .chart_transform(Chart::ComplexAAbar)
        .expect("RealQP -> ComplexAAbar is supported")
        .pruned(1e-14)
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait<&PolySymbol> for &PolySymbol {
            type Output = PolySymbol;
            /// Panics if the operands live on different charts.
            fn $method(self, rhs: &PolySymbol) -> PolySymbol {
                self.$checked(rhs).expect("operands must share chart and mode count")
            }
        }
        impl $trait<PolySymbol> for PolySymbol {
            type Output = PolySymbol;
            fn $method(self, rhs: PolySymbol) -> PolySymbol {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for &PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        self.scale(-1.0)
    }
}

impl Neg for PolySymbol {
    type Output = PolySymbol;
    fn neg(self) -> PolySymbol {
        self.scale(-1.0)
    }
}

impl fmt::Display for PolySymbol {
    /// Writes the symbol in the textual notation accepted by [`parse_symbol`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            let coef = if c.im == 0.0 {
                if idx > 0 {
                    if c.re < 0.0 {
                        write!(f, " - ")?;
                    } else {
                        write!(f, " + ")?;
                    }
                    format!("{}", c.re.abs())
                } else {
                    format!("{}", c.re)
                }
            } else {
                if idx > 0 {
                    write!(f, " + ")?;
                }
                if c.im < 0.0 {
                    format!("({}-{}i)", c.re, -c.im)
                } else {
                    format!("({}+{}i)", c.re, c.im)
                }
            };
            write!(f, "{coef}")?;
            for (v, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let name = self.chart.variable_name(self.num_modes, v);
                if k == 1 {
                    write!(f, " * {name}")?;
                } else {
                    write!(f, " * {name}^{k}")?;
                }
            }
        }
        Ok(())
    }
}
