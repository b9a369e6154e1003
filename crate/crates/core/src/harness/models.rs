//! Model text of the registered experiments (`hbar = 1`).

use super::config::ModelSpec;
use crate::symbols::Chart;

/// `H = omega a^dagger a`, `L = sqrt(gamma) a`.
pub fn damped_oscillator(omega: f64, gamma: f64) -> ModelSpec {
    ModelSpec {
        chart: Chart::ComplexAAbar,
        num_modes: 1,
        hamiltonian: format!("{omega} * (a1 a1bar - 0.5)"),
        lindblads: vec![format!("{} * a1", gamma.sqrt())],
    }
}

/// Linear loss, two-photon loss and linear gain:
/// `L = sqrt(gamma1) a, sqrt(gamma2) a^2, sqrt(gain) a^dagger`.
pub fn limit_cycle(omega: f64, gamma1: f64, gamma2: f64, gain: f64) -> ModelSpec {
    ModelSpec {
        chart: Chart::ComplexAAbar,
        num_modes: 1,
        hamiltonian: format!("{omega} * (a1 a1bar - 0.5)"),
        lindblads: vec![
            format!("{} * a1", gamma1.sqrt()),
            format!("{} * a1^2", gamma2.sqrt()),
            format!("{} * a1bar", gain.sqrt()),
        ],
    }
}

/// Bose-Hubbard chain with open ends and `L_j = sqrt(gamma) a_j^2`.
pub fn bose_hubbard(sites: usize, j: f64, u: f64, gamma: f64) -> ModelSpec {
    let mut h = Vec::new();
    for k in 1..sites {
        h.push(format!("{} * (a{k}bar a{} + a{}bar a{k})", -j, k + 1, k + 1));
    }
    for k in 1..=sites {
        h.push(format!("{} * (a{k}^2 a{k}bar^2 - 2 a{k} a{k}bar + 0.5)", 0.5 * u));
    }
    ModelSpec {
        chart: Chart::ComplexAAbar,
        num_modes: sites,
        hamiltonian: h.join(" + "),
        lindblads: (1..=sites).map(|k| format!("{} * a{k}^2", gamma.sqrt())).collect(),
    }
}

/// `H = (q^2 + p^2)/2 + beta q^4 / 4`, `L = sqrt(gamma/2) (q + i p)`.
pub fn damped_anharmonic(beta: f64, gamma: f64) -> ModelSpec {
    ModelSpec {
        chart: Chart::RealQP,
        num_modes: 1,
        hamiltonian: format!("0.5*q1^2 + 0.5*p1^2 + {}*q1^4", 0.25 * beta),
        lindblads: vec![format!("{} * (q1 + i p1)", (0.5 * gamma).sqrt())],
    }
}

/// `L = sqrt(gamma) (q^2 + i p^2)` with no Hamiltonian: a flow that is not a
/// gradient flow and moves along straight lines.
pub fn nonlinear_flow(gamma: f64) -> ModelSpec {
    ModelSpec {
        chart: Chart::RealQP,
        num_modes: 1,
        hamiltonian: "0".into(),
        lindblads: vec![format!("{} * (q1^2 + i p1^2)", gamma.sqrt())],
    }
}

pub fn harmonic() -> ModelSpec {
    ModelSpec {
        chart: Chart::RealQP,
        num_modes: 1,
        hamiltonian: "0.5*q1^2 + 0.5*p1^2".into(),
        lindblads: vec![],
    }
}
