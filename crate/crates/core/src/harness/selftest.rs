use num_complex::Complex64;

use super::config::{default_config, Experiment, TimeGrid};
use super::{execute, Check};
use crate::doubled::convention_self_test;
use crate::error::Result;
use crate::gaussian::{coherent, GridSpec};
use crate::quantum::{wigner_of_density, DensityMatrix, FockSpace};
use crate::semiclassical::classify_flow;
use crate::semiclassical::FlowClass;
use crate::symbols::{parse_symbol, weyl_of_normal_ordered, Chart};

/// Quick oracle checks of the symbol algebra, the flows and the reference
/// solvers.
pub fn selftest() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let q = parse_symbol("q1", Chart::RealQP, 1)?;
    let p = parse_symbol("p1", Chart::RealQP, 1)?;
    let comm = q.moyal(&p, 1.0)?.checked_sub(&p.moyal(&q, 1.0)?)?;
    let ih = crate::symbols::PolySymbol::constant(Chart::RealQP, 1, Complex64::new(0.0, 1.0));
    checks.push(Check::at_most("moyal_canonical_commutator", comm.max_abs_diff(&ih), 1e-15, "q * p - p * q = i hbar"));

    for (m, expected) in [(1, "a1 a1bar - 0.5"), (2, "a1^2 a1bar^2 - 2 a1 a1bar + 0.5")] {
        let w = weyl_of_normal_ordered(0, m, m, 1, 1.0);
        let e = parse_symbol(expected, Chart::ComplexAAbar, 1)?;
        checks.push(Check::at_most(
            &format!("weyl_number_power_{m}"),
            w.max_abs_diff(&e),
            1e-14,
            format!("Weyl symbol of (a^dagger)^{m} a^{m} is {expected}"),
        ));
    }

    let l = parse_symbol("0.3*(q1 + i p1)^2 + 0.1*(q1 + i p1)^3", Chart::RealQP, 1)?;
    let gradient = matches!(classify_flow(&l)?, FlowClass::GradientHolomorphic { .. });
    checks.push(Check::at_least(
        "holomorphic_lindblad_gradient_flow",
        f64::from(u8::from(gradient)),
        1.0,
        "a Lindblad symbol holomorphic in q + i p generates a gradient flow",
    ));

    let ok = convention_self_test().is_ok();
    checks.push(Check::at_least(
        "doubled_generator_convention",
        f64::from(u8::from(ok)),
        1.0,
        "doubled-space generator of the damped anharmonic oscillator in closed form",
    ));

    let space = FockSpace::uniform(1, 30)?;
    let alpha = Complex64::new(1.2, -0.7);
    let psi = space.coherent(&[alpha])?;
    let rho = DensityMatrix::from_pure(&(&psi / Complex64::new(psi.norm(), 0.0)));
    let spec = GridSpec::square(6.0, 80);
    let wq = wigner_of_density(&rho, spec)?;
    let wg = coherent(&[alpha], 1.0)?.eval_grid(spec)?;
    checks.push(Check::at_most(
        "coherent_wigner_fock_vs_gaussian",
        wq.sup_diff(&wg)?,
        1e-10,
        "Wigner function of a coherent state from Fock amplitudes vs the closed form",
    ));

    let mut cfg = default_config("damped_oscillator")?;
    if let Experiment::DampedOscillator(p) = &mut cfg.experiment {
        p.n_max = 20;
        p.a0 = [1.0, 0.5];
    }
    cfg.times = TimeGrid { t_end: 5.0, steps: 20 };
    let out = execute(&cfg)?;
    checks.extend(out.checks.into_iter().map(|c| Check {
        name: format!("damped_oscillator_{}", c.name),
        ..c
    }));
    Ok(checks)
}
