//! Adaptive Dormand-Prince 5(4) integrator with continuous (dense) output.
//!
//! The integrator works on a flat `f64` state. Complex systems pack real and
//! imaginary parts themselves. Stepping is explicit so callers can locate
//! events between steps with [`Dopri5::dense`] and then [`Dopri5::reset`] the
//! state.

use crate::error::{Error, Result};

/// Right-hand side `dy/dt = f(t, y)` written into `dy`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F> OdeSystem for (usize, F)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.0
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.1)(t, y, dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 10_000_000,
            h0: None,
            h_max: f64::INFINITY,
        }
    }
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Tolerances {
            rtol,
            atol,
            ..Default::default()
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Stepper state. Borrowing the system lets several steppers share one model.
pub struct Dopri5<'a, S: OdeSystem + ?Sized> {
    sys: &'a S,
    tol: Tolerances,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    // dense-output coefficients of the last accepted step
    rcont: [Vec<f64>; 5],
    t_old: f64,
    h_old: f64,
    steps: usize,
    rejected: usize,
    fac_old: f64,
}

impl<'a, S: OdeSystem + ?Sized> Dopri5<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[f64], tol: Tolerances) -> Result<Self> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y0.len(),
            });
        }
        let z = || vec![0.0; n];
        let mut s = Dopri5 {
            sys,
            tol,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            rcont: [z(), z(), z(), z(), z()],
            t_old: t0,
            h_old: 0.0,
            steps: 0,
            rejected: 0,
            fac_old: 1e-4,
        };
        s.sys.rhs(s.t, &s.y, &mut s.k[0]);
        s.h = tol.h0.unwrap_or(0.0);
        Ok(s)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Replaces the current state (after a jump or renormalization).
    pub fn reset(&mut self, t: f64, y: &[f64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.sys.rhs(self.t, &self.y, &mut self.k[0]);
        self.h_old = 0.0;
        self.t_old = t;
    }

    fn err_norm(&self) -> f64 {
        let n = self.y.len().max(1);
        let mut sum = 0.0;
        for i in 0..self.y.len() {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].abs().max(self.ynew[i].abs());
            let r = self.ytmp[i] / sc;
            sum += r * r;
        }
        (sum / n as f64).sqrt()
    }

    fn initial_step(&mut self, direction: f64) -> f64 {
        let n = self.y.len().max(1) as f64;
        let (rtol, atol) = (self.tol.rtol, self.tol.atol);
        let sc = |v: f64| atol + rtol * v.abs();
        let d0 = (self.y.iter().map(|&v| (v / sc(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self
            .k[0]
            .iter()
            .zip(&self.y)
            .map(|(&f, &v)| (f / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h = h.min(self.tol.h_max);
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + direction * h * self.k[0][i];
        }
        self.sys.rhs(self.t + direction * h, &self.ytmp, &mut self.k[1]);
        let d2 = (self
            .k[1]
            .iter()
            .zip(&self.k[0])
            .zip(&self.y)
            .map(|((&a, &b), &v)| ((a - b) / sc(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h).min(h1).min(self.tol.h_max)
    }

    /// Takes one accepted step, never passing `t_limit`. Returns the new time.
    pub fn step(&mut self, t_limit: f64) -> Result<f64> {
        let n = self.y.len();
        let direction = if t_limit >= self.t { 1.0 } else { -1.0 };
        if self.h == 0.0 {
            self.h = self.initial_step(direction);
        }
        let mut h = self.h.abs().min(self.tol.h_max);
        loop {
            if self.steps + self.rejected >= self.tol.max_steps {
                return Err(Error::TooManySteps {
                    t: self.t,
                    max_steps: self.tol.max_steps,
                });
            }
            let remaining = (t_limit - self.t).abs();
            let mut last = false;
            if h >= remaining * (1.0 - 1e-12) {
                h = remaining;
                last = true;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow { t: self.t });
            }
            let hs = direction * h;
            let t = self.t;
            let (k, y, ytmp) = (&mut self.k, &self.y, &mut self.ytmp);
            {
                for i in 0..n {
                    ytmp[i] = y[i] + hs * A21 * k[0][i];
                }
                let (k0, rest) = k.split_at_mut(1);
                self.sys.rhs(t + C2 * hs, ytmp, &mut rest[0]);
                for i in 0..n {
                    ytmp[i] = y[i] + hs * (A31 * k0[0][i] + A32 * rest[0][i]);
                }
                self.sys.rhs(t + C3 * hs, ytmp, &mut rest[1]);
                for i in 0..n {
                    ytmp[i] = y[i] + hs * (A41 * k0[0][i] + A42 * rest[0][i] + A43 * rest[1][i]);
                }
                self.sys.rhs(t + C4 * hs, ytmp, &mut rest[2]);
                for i in 0..n {
                    ytmp[i] = y[i]
                        + hs * (A51 * k0[0][i] + A52 * rest[0][i] + A53 * rest[1][i] + A54 * rest[2][i]);
                }
                self.sys.rhs(t + C5 * hs, ytmp, &mut rest[3]);
                for i in 0..n {
                    ytmp[i] = y[i]
                        + hs * (A61 * k0[0][i]
                            + A62 * rest[0][i]
                            + A63 * rest[1][i]
                            + A64 * rest[2][i]
                            + A65 * rest[3][i]);
                }
                self.sys.rhs(t + hs, ytmp, &mut rest[4]);
                for i in 0..n {
                    self.ynew[i] = y[i]
                        + hs * (A71 * k0[0][i]
                            + A73 * rest[1][i]
                            + A74 * rest[2][i]
                            + A75 * rest[3][i]
                            + A76 * rest[4][i]);
                }
                self.sys.rhs(t + hs, &self.ynew, &mut rest[5]);
                for i in 0..n {
                    ytmp[i] = hs
                        * (E1 * k0[0][i]
                            + E3 * rest[1][i]
                            + E4 * rest[2][i]
                            + E5 * rest[3][i]
                            + E6 * rest[4][i]
                            + E7 * rest[5][i]);
                }
            }
            let err = self.err_norm();
            if !err.is_finite() {
                self.rejected += 1;
                h *= 0.1;
                continue;
            }
            // PI step-size control (Hairer's defaults)
            let beta = 0.04;
            let expo = 0.2 - beta * 0.75;
            let fac11 = err.max(1e-300).powf(expo);
            let mut fac = fac11 / self.fac_old.powf(beta);
            fac = (fac / 0.9).clamp(0.1, 5.0);
            let h_new = h / fac;
            if err <= 1.0 {
                self.fac_old = err.max(1e-4);
                self.steps += 1;
                for i in 0..n {
                    let (y0, y1) = (self.y[i], self.ynew[i]);
                    let ydiff = y1 - y0;
                    let bspl = hs * self.k[0][i] - ydiff;
                    self.rcont[0][i] = y0;
                    self.rcont[1][i] = ydiff;
                    self.rcont[2][i] = bspl;
                    self.rcont[3][i] = ydiff - hs * self.k[6][i] - bspl;
                    self.rcont[4][i] = hs
                        * (D1 * self.k[0][i]
                            + D3 * self.k[2][i]
                            + D4 * self.k[3][i]
                            + D5 * self.k[4][i]
                            + D6 * self.k[5][i]
                            + D7 * self.k[6][i]);
                }
                self.t_old = self.t;
                self.h_old = hs;
                self.t = if last { t_limit } else { self.t + hs };
                self.y.copy_from_slice(&self.ynew);
                let (first, rest) = self.k.split_at_mut(6);
                first[0].copy_from_slice(&rest[0]);
                self.h = h_new.min(self.tol.h_max);
                return Ok(self.t);
            }
            self.rejected += 1;
            h /= (fac11 / 0.9).min(5.0);
        }
    }

    /// Interpolated state at `t` within the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [f64]) {
        if self.h_old == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let s = (t - self.t_old) / self.h_old;
        let s1 = 1.0 - s;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i]
                + s * (self.rcont[1][i]
                    + s1 * (self.rcont[2][i] + s * (self.rcont[3][i] + s1 * self.rcont[4][i])));
        }
    }

    /// Start of the last accepted step.
    pub fn t_prev(&self) -> f64 {
        self.t_old
    }

    /// Integrates to `t_end` and returns the final state.
    pub fn advance_to(&mut self, t_end: f64) -> Result<&[f64]> {
        while (t_end - self.t).abs() > 0.0 {
            self.step(t_end)?;
        }
        Ok(&self.y)
    }
}

/// Integrates `sys` from `t0` and records the state at each of `times`
/// (sorted, all `>= t0`).
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let mut stepper = Dopri5::new(sys, t0, y0, tol)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        stepper.advance_to(t)?;
        out.push(stepper.y().to_vec());
    }
    Ok(out)
}
