//! Time stepping of complex Gaussian components and their superpositions.

use num_complex::Complex64;

use super::{rhs_component, CompiledK};
use crate::error::{Error, Result};
use crate::events::{Event, EventKind};
use crate::gaussian::{ComplexGaussian, SuperpositionState};
use crate::linalg::{self, CMatrix};
use crate::ode::{Dopri5, OdeSystem, Tolerances};

/// A component whose `Im B` has an eigenvalue below this is frozen.
pub const MIN_IM_B_EIG: f64 = 1e-10;

struct ComponentSystem<'a> {
    k: &'a CompiledK,
    template: &'a ComplexGaussian,
}

// Layout: X (d), Y (d), B (2 d^2, re/im interleaved), alpha (2), log prefactor (2).
fn pack(c: &ComplexGaussian) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * c.x.len() + 2 * c.b.len() + 4);
    y.extend_from_slice(c.x.as_slice());
    y.extend_from_slice(c.y.as_slice());
    for v in c.b.iter() {
        y.push(v.re);
        y.push(v.im);
    }
    y.extend_from_slice(&[c.alpha.re, c.alpha.im, c.log_prefactor.re, c.log_prefactor.im]);
    y
}

fn unpack_into(y: &[f64], c: &mut ComplexGaussian) {
    let d = c.x.len();
    c.x.copy_from_slice(&y[..d]);
    c.y.copy_from_slice(&y[d..2 * d]);
    let off = 2 * d;
    for (k, v) in c.b.iter_mut().enumerate() {
        *v = Complex64::new(y[off + 2 * k], y[off + 2 * k + 1]);
    }
    let off = off + 2 * d * d;
    c.alpha = Complex64::new(y[off], y[off + 1]);
    c.log_prefactor = Complex64::new(y[off + 2], y[off + 3]);
}

impl OdeSystem for ComponentSystem<'_> {
    fn dim(&self) -> usize {
        let d = self.template.x.len();
        2 * d + 2 * d * d + 4
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let mut c = self.template.clone();
        unpack_into(y, &mut c);
        c.b = linalg::symmetrize_c(&c.b);
        match rhs_component(self.k, &c) {
            Ok(der) => {
                let tmp = ComplexGaussian {
                    hbar: c.hbar,
                    x: der.x,
                    y: der.y,
                    b: der.b,
                    alpha: der.alpha,
                    weight: c.weight,
                    log_prefactor: der.log_prefactor,
                };
                dy.copy_from_slice(&pack(&tmp));
            }
            // Im B lost positivity inside a trial stage; a NaN derivative
            // makes the stepper reject and shrink the step.
            Err(_) => dy.iter_mut().for_each(|v| *v = f64::NAN),
        }
    }
}

fn min_im_b_eig(b: &CMatrix) -> f64 {
    linalg::sym_eigenvalues(&linalg::im(b))[0]
}

/// Integrates one component and samples it at `times`. A component whose
/// width collapses is frozen with zero weight from then on.
pub fn propagate_component(
    k: &CompiledK,
    comp: &ComplexGaussian,
    t0: f64,
    times: &[f64],
    tol: Tolerances,
) -> Result<(Vec<ComplexGaussian>, Vec<Event>)> {
    comp.validate()?;
    if comp.x.len() != 2 * k.num_modes() {
        return Err(Error::DimensionMismatch {
            expected: 2 * k.num_modes(),
            got: comp.x.len(),
        });
    }
    let sys = ComponentSystem { k, template: comp };
    let mut stepper = Dopri5::new(&sys, t0, &pack(comp), tol)?;
    let mut out = Vec::with_capacity(times.len());
    let mut events = Vec::new();
    let mut frozen: Option<ComplexGaussian> = None;
    for &t in times {
        if let Some(f) = &frozen {
            out.push(f.clone());
            continue;
        }
        let step = stepper.advance_to(t).map(|y| y.to_vec());
        let mut c = comp.clone();
        let collapsed = match step {
            Ok(y) => {
                unpack_into(&y, &mut c);
                c.b = linalg::symmetrize_c(&c.b);
                min_im_b_eig(&c.b) < MIN_IM_B_EIG
            }
            Err(Error::StepUnderflow { .. }) | Err(Error::TooManySteps { .. }) => true,
            Err(e) => return Err(e),
        };
        if collapsed {
            let mut f = out.last().cloned().unwrap_or_else(|| comp.clone());
            f.weight = Complex64::new(0.0, 0.0);
            events.push(Event::new(t, EventKind::ComponentFrozen, "Im B lost positivity; component frozen"));
            out.push(f.clone());
            frozen = Some(f);
            continue;
        }
        out.push(c);
    }
    Ok((out, events))
}

/// Superposition sampled at output times.
#[derive(Clone, Debug)]
pub struct SuperpositionTrajectory {
    pub times: Vec<f64>,
    /// States renormalized to unit integral at each output time.
    pub states: Vec<SuperpositionState>,
    /// Integral of the propagated Wigner function before renormalization
    /// (relative to the initial normalization).
    pub raw_norms: Vec<f64>,
    pub events: Vec<Event>,
}

/// Evolves each component independently and sums them at output times.
pub fn propagate_superposition(
    k: &CompiledK,
    state: &SuperpositionState,
    t0: f64,
    times: &[f64],
    tol: Tolerances,
) -> Result<SuperpositionTrajectory> {
    let mut per_component = Vec::with_capacity(state.components.len());
    let mut events = Vec::new();
    for (idx, comp) in state.components.iter().enumerate() {
        let (traj, ev) = propagate_component(k, comp, t0, times, tol)?;
        events.extend(ev.into_iter().map(|mut e| {
            e.message = format!("component {idx}: {}", e.message);
            e
        }));
        per_component.push(traj);
    }
    let mut states = Vec::with_capacity(times.len());
    let mut raw_norms = Vec::with_capacity(times.len());
    for ti in 0..times.len() {
        let mut s = SuperpositionState {
            components: per_component.iter().map(|tr| tr[ti].clone()).collect(),
            pairs: state.pairs.clone(),
            normalization: state.normalization,
        };
        raw_norms.push(s.integral()?);
        s.normalize()?;
        states.push(s);
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(SuperpositionTrajectory {
        times: times.to_vec(),
        states,
        raw_norms,
        events,
    })
}
