use num_complex::Complex64;
use proptest::prelude::*;
use wignerflow::harness::{default_config, Experiment, ExperimentConfig, TimeGrid};
use wignerflow::symbols::{parse_symbol, Chart, PolySymbol};

fn coefficient() -> impl Strategy<Value = Complex64> {
    let part = prop_oneof![Just(0.0), -3.0..3.0f64];
    (part.clone(), part)
        .prop_filter("nonzero", |(re, im)| *re != 0.0 || *im != 0.0)
        .prop_map(|(re, im)| Complex64::new(re, im))
}

fn symbol(chart: Chart, n: usize, max_degree: u16) -> impl Strategy<Value = PolySymbol> {
    prop::collection::vec((prop::collection::vec(0..=max_degree, 2 * n), coefficient()), 0..6)
        .prop_map(move |terms| PolySymbol::from_terms(chart, n, terms).unwrap())
}

fn chart() -> impl Strategy<Value = Chart> {
    prop_oneof![Just(Chart::RealQP), Just(Chart::ComplexAAbar)]
}

fn close(a: &PolySymbol, b: &PolySymbol, rel: f64) -> bool {
    a.max_abs_diff(b) <= rel * a.max_coefficient().max(b.max_coefficient()).max(1.0)
}

proptest! {
    #[test]
    fn printed_symbols_parse_back(f in (chart(), 1..=2usize).prop_flat_map(|(c, n)| symbol(c, n, 3))) {
        let back = parse_symbol(&f.to_string(), f.chart(), f.num_modes()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn moyal_product_is_associative(
        f in symbol(Chart::RealQP, 1, 3),
        g in symbol(Chart::RealQP, 1, 3),
        h in symbol(Chart::RealQP, 1, 3),
        hbar in 0.1..2.0f64,
    ) {
        let left = f.moyal(&g, hbar).unwrap().moyal(&h, hbar).unwrap();
        let right = f.moyal(&g.moyal(&h, hbar).unwrap(), hbar).unwrap();
        prop_assert!(close(&left, &right, 1e-10), "{left} vs {right}");
    }

    #[test]
    fn conjugation_reverses_moyal_order(
        f in symbol(Chart::RealQP, 2, 2),
        g in symbol(Chart::RealQP, 2, 2),
        hbar in 0.1..2.0f64,
    ) {
        let lhs = f.moyal(&g, hbar).unwrap().conj();
        let rhs = g.conj().moyal(&f.conj(), hbar).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn moyal_commutator_starts_with_poisson_bracket(
        f in symbol(Chart::RealQP, 1, 1),
        g in symbol(Chart::RealQP, 1, 3),
    ) {
        // with f of total degree <= 2 the commutator is exactly i hbar {f, g}
        let hbar = 0.7;
        let comm = f.moyal(&g, hbar).unwrap().checked_sub(&g.moyal(&f, hbar).unwrap()).unwrap();
        let pb = f.poisson(&g).unwrap().scale(Complex64::new(0.0, hbar));
        prop_assert!(close(&comm, &pb, 1e-12), "{comm} vs {pb}");
    }

    #[test]
    fn configs_round_trip(
        omega in 0.1..5.0f64,
        gamma in 0.0..1.0f64,
        a0 in prop::array::uniform2(-3.0..3.0f64),
        n_max in 5..60usize,
        t_end in 0.1..100.0f64,
        steps in 1..1000usize,
        seed in any::<u64>(),
    ) {
        let mut cfg = default_config("damped_oscillator").unwrap();
        if let Experiment::DampedOscillator(p) = &mut cfg.experiment {
            p.omega = omega;
            p.gamma = gamma;
            p.a0 = a0;
            p.n_max = n_max;
        }
        cfg.times = TimeGrid { t_end, steps };
        cfg.seed = seed;
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
