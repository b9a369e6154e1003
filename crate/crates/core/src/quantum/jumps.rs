//! Quantum-jump (Monte Carlo wave function) unravelling of the master
//! equation.

use nalgebra_sparse::CsrMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fock, QuantumModel, LEAKAGE_THRESHOLD};
use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::linalg::CVector;
use crate::ode::{Dopri5, OdeSystem, Tolerances};
use crate::symbols::{Chart, PolySymbol};

#[derive(Clone, Copy, Debug)]
pub struct JumpOptions {
    pub n_traj: usize,
    /// Trajectory `k` uses the seed `seed ^ k`.
    pub seed: u64,
    pub tol: Tolerances,
    /// Bisection tolerance on jump times.
    pub time_tol: f64,
}

impl Default for JumpOptions {
    fn default() -> Self {
        JumpOptions {
            n_traj: 5000,
            seed: 0,
            tol: Tolerances::new(1e-8, 1e-10),
            time_tol: 1e-10,
        }
    }
}

/// Per-trajectory observables and their ensemble statistics.
///
/// Observables are stored as `[n_0, ..., n_{M-1}]` followed, for each pair
/// `i < j`, by `Re <a_i^dagger a_j>` and `Im <a_i^dagger a_j>`.
#[derive(Clone, Debug)]
pub struct JumpEnsemble {
    pub times: Vec<f64>,
    pub num_modes: usize,
    pub seeds: Vec<u64>,
    pub observable_names: Vec<String>,
    /// `samples[trajectory][time][observable]`.
    pub samples: Vec<Vec<Vec<f64>>>,
    pub jump_counts: Vec<usize>,
    pub events: Vec<Event>,
}

impl JumpEnsemble {
    pub fn n_traj(&self) -> usize {
        self.samples.len()
    }

    /// Ensemble mean and standard error of `f(observables)` at each time.
    pub fn stats(&self, f: impl Fn(&[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.n_traj() as f64;
        let mut mean = Vec::with_capacity(self.times.len());
        let mut stderr = Vec::with_capacity(self.times.len());
        for ti in 0..self.times.len() {
            let vals: Vec<f64> = self.samples.iter().map(|s| f(&s[ti])).collect();
            let mu = vals.iter().sum::<f64>() / m;
            let var = if m > 1.0 {
                vals.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            mean.push(mu);
            stderr.push((var / m).sqrt());
        }
        (mean, stderr)
    }

    pub fn population(&self, mode: usize) -> (Vec<f64>, Vec<f64>) {
        self.stats(|o| o[mode])
    }

    pub fn total_number(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_modes;
        self.stats(|o| o[..n].iter().sum())
    }

    /// `<n_i> - <n_j>`.
    pub fn imbalance(&self, i: usize, j: usize) -> (Vec<f64>, Vec<f64>) {
        self.stats(|o| o[i] - o[j])
    }

    fn pair_offset(&self, i: usize, j: usize) -> usize {
        let n = self.num_modes;
        let mut off = n;
        for a in 0..n {
            for b in a + 1..n {
                if (a, b) == (i, j) {
                    return off;
                }
                off += 2;
            }
        }
        unreachable!("pair ({i}, {j}) out of range")
    }

    /// Ensemble mean of `<a_i^dagger a_j>` for `i != j`.
    pub fn coherence(&self, i: usize, j: usize) -> Vec<Complex64> {
        let (a, b, conj) = if i < j { (i, j, false) } else { (j, i, true) };
        let off = self.pair_offset(a, b);
        let (re, _) = self.stats(|o| o[off]);
        let (im, _) = self.stats(|o| o[off + 1]);
        re.into_iter()
            .zip(im)
            .map(|(r, m)| {
                let c = Complex64::new(r, m);
                if conj {
                    c.conj()
                } else {
                    c
                }
            })
            .collect()
    }

    /// `|<a_i^dagger a_j>| / sqrt(<n_i><n_j>)` from ensemble means.
    pub fn g1(&self, i: usize, j: usize) -> Vec<f64> {
        let (ni, _) = self.population(i);
        let (nj, _) = self.population(j);
        self.coherence(i, j)
            .iter()
            .zip(ni.iter().zip(&nj))
            .map(|(c, (a, b))| c.norm() / (a * b).sqrt())
            .collect()
    }
}

/// `d psi / dt = -i Heff psi` on interleaved real/imaginary parts.
struct NonHermitianSchrodinger<'a> {
    heff: &'a CsrMatrix<Complex64>,
}

impl OdeSystem for NonHermitianSchrodinger<'_> {
    fn dim(&self) -> usize {
        2 * self.heff.nrows()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let (offsets, cols, vals) = (self.heff.row_offsets(), self.heff.col_indices(), self.heff.values());
        for r in 0..self.heff.nrows() {
            let (mut re, mut im) = (0.0, 0.0);
            for k in offsets[r]..offsets[r + 1] {
                let (v, c) = (vals[k], cols[k]);
                re += v.re * y[2 * c] - v.im * y[2 * c + 1];
                im += v.re * y[2 * c + 1] + v.im * y[2 * c];
            }
            dy[2 * r] = im;
            dy[2 * r + 1] = -re;
        }
    }
}

fn norm2(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

fn unpack(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

fn pack(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|v| [v.re, v.im]).collect()
}

struct Context<'a> {
    model: &'a QuantumModel,
    heff: CsrMatrix<Complex64>,
    observables: Vec<CsrMatrix<Complex64>>,
    opts: JumpOptions,
}

struct TrajectoryOutput {
    samples: Vec<Vec<f64>>,
    jumps: usize,
    max_leakage: f64,
}

impl Context<'_> {
    fn record(&self, y: &[f64], out: &mut TrajectoryOutput) {
        let psi = unpack(y);
        let nrm = norm2(y);
        let n = self.model.space.num_modes();
        let mut row = Vec::with_capacity(self.observables.len() + n * (n - 1));
        for (k, op) in self.observables.iter().enumerate() {
            let v = fock::sandwich(op, &psi) / nrm;
            if k < n {
                row.push(v.re);
            } else {
                row.push(v.re);
                row.push(v.im);
            }
        }
        let leak = self.model.space.top_populations_pure(&psi).into_iter().fold(0.0, f64::max) / nrm;
        out.max_leakage = out.max_leakage.max(leak);
        out.samples.push(row);
    }

    fn jump(&self, y: &[f64], rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let psi = unpack(y);
        let mut candidates = Vec::with_capacity(self.model.lindblads.len());
        let mut weights = Vec::with_capacity(self.model.lindblads.len());
        for l in &self.model.lindblads {
            let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
            fock::spmv(l, &psi, &mut out);
            weights.push(out.iter().map(|v| v.norm_sqr()).sum::<f64>());
            candidates.push(out);
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Invalid("jump requested with zero jump rate".into()));
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                pick = k;
                break;
            }
            u -= w;
        }
        let s = 1.0 / weights[pick].sqrt();
        let next: Vec<Complex64> = candidates.swap_remove(pick).into_iter().map(|v| v * s).collect();
        Ok(pack(&next))
    }

    fn run(&self, psi0: &[f64], times: &[f64], seed: u64) -> Result<TrajectoryOutput> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = NonHermitianSchrodinger { heff: &self.heff };
        let mut stepper = Dopri5::new(&sys, 0.0, psi0, self.opts.tol)?;
        let mut out = TrajectoryOutput {
            samples: Vec::with_capacity(times.len()),
            jumps: 0,
            max_leakage: 0.0,
        };
        let t_last = *times.last().expect("nonempty output times");
        let mut threshold: f64 = rng.random();
        let mut buf = vec![0.0; psi0.len()];
        let mut k = 0;
        while k < times.len() && times[k] <= 0.0 {
            self.record(psi0, &mut out);
            k += 1;
        }
        while k < times.len() {
            if stepper.t() >= t_last {
                // a jump landed on the final time
                let y = stepper.y().to_vec();
                while k < times.len() {
                    self.record(&y, &mut out);
                    k += 1;
                }
                break;
            }
            stepper.step(t_last)?;
            let (ta, tb) = (stepper.t_prev(), stepper.t());
            let t_jump = if norm2(stepper.y()) <= threshold {
                let (mut lo, mut hi) = (ta, tb);
                while hi - lo > self.opts.time_tol {
                    let mid = 0.5 * (lo + hi);
                    stepper.dense(mid, &mut buf);
                    if norm2(&buf) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(hi)
            } else {
                None
            };
            while k < times.len() && (times[k] < t_jump.unwrap_or(f64::INFINITY)) && times[k] <= tb {
                stepper.dense(times[k], &mut buf);
                self.record(&buf, &mut out);
                k += 1;
            }
            if let Some(tj) = t_jump {
                stepper.dense(tj, &mut buf);
                let next = self.jump(&buf, &mut rng)?;
                out.jumps += 1;
                threshold = rng.random();
                stepper.reset(tj, &next);
            }
        }
        Ok(out)
    }
}

/// Runs `opts.n_traj` independent trajectories from the pure state `psi0`
/// and records populations and inter-mode coherences at `times`.
pub fn quantum_jump(model: &QuantumModel, psi0: &CVector, times: &[f64], opts: JumpOptions) -> Result<JumpEnsemble> {
    let d = model.space.dim();
    if psi0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: psi0.len(),
        });
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] >= w[0])) || !(times[0] >= 0.0) {
        return Err(Error::Invalid("output times must be nonempty, sorted and >= 0".into()));
    }
    if opts.n_traj == 0 {
        return Err(Error::Invalid("at least one trajectory is required".into()));
    }
    let n = model.space.num_modes();
    let mut observables = Vec::new();
    let mut names = Vec::new();
    for j in 0..n {
        observables.push(model.space.number(j));
        names.push(format!("n{}", j + 1));
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = vec![0u16; 2 * n];
            e[j] = 1;
            e[n + i] = 1;
            observables.push(model.space.quantize_normal(&PolySymbol::monomial(Chart::ComplexAAbar, n, e, 1.0)?)?);
            names.push(format!("re_c{}{}", i + 1, j + 1));
            names.push(format!("im_c{}{}", i + 1, j + 1));
        }
    }
    let ctx = Context {
        model,
        heff: model.effective_hamiltonian(),
        observables,
        opts,
    };
    let nrm = psi0.norm();
    let start = pack((psi0 / Complex64::new(nrm, 0.0)).as_slice());
    let seeds: Vec<u64> = (0..opts.n_traj as u64).map(|k| opts.seed ^ k).collect();
    let runs: Vec<TrajectoryOutput> = seeds
        .par_iter()
        .map(|&s| ctx.run(&start, times, s))
        .collect::<Result<_>>()?;
    let max_leakage = runs.iter().map(|r| r.max_leakage).fold(0.0, f64::max);
    let mut events = Vec::new();
    if max_leakage > LEAKAGE_THRESHOLD {
        events.push(Event::new(
            *times.last().unwrap(),
            EventKind::TruncationLeakage,
            format!("largest top Fock level population over all trajectories {max_leakage:e}"),
        ));
    }
    Ok(JumpEnsemble {
        times: times.to_vec(),
        num_modes: n,
        seeds,
        observable_names: names,
        jump_counts: runs.iter().map(|r| r.jumps).collect(),
        samples: runs.into_iter().map(|r| r.samples).collect(),
        events,
    })
}
