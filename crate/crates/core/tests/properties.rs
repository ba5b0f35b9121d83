use leo_core::config::{DtSetting, PulseVariant};
use leo_core::{
    parse_config, realize_random, realize_regular, EnvSpec, RandomPulseSpec, RegularPulseSpec,
    RunConfig, Scenario, SimGrid, SystemKind, SystemSpec,
};
use proptest::prelude::*;

fn kind() -> impl Strategy<Value = SystemKind> {
    prop_oneof![Just(SystemKind::VType), Just(SystemKind::LambdaType)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn regular_integral_is_exact_at_period_ends(
        tau in 0.01f64..2.0,
        ratio in 0.05f64..=1.0,
        phi0 in 0.0f64..3.0,
        periods in 1usize..60,
    ) {
        let spec = RegularPulseSpec::from_ratio(tau, ratio, phi0).unwrap();
        let horizon = tau * periods as f64;
        let p = realize_regular(&spec, horizon).unwrap();
        for n in 1..=periods {
            let t = (n as f64 * tau).min(horizon);
            let err = (p.integral_to(t).unwrap() - n as f64 * phi0).abs();
            prop_assert!(err <= 1e-12 * n as f64 * phi0.max(1.0), "n = {n}, err = {err:e}");
        }
    }

    #[test]
    fn random_programs_are_deterministic(
        seed in any::<u64>(),
        a_tau in 0.0f64..0.9,
        a_phi in 0.0f64..=1.0,
    ) {
        let base = RegularPulseSpec::from_ratio(0.1, 0.5, 1.0).unwrap();
        let spec = RandomPulseSpec::new(base, a_tau, a_phi, seed).unwrap();
        prop_assert_eq!(realize_random(&spec, 5.0).unwrap(), realize_random(&spec, 5.0).unwrap());
    }

    #[test]
    fn master_equation_keeps_trace_and_hermiticity(
        kind in kind(),
        omega in prop::array::uniform3(-1.0f64..1.0),
        couplings in prop::array::uniform2(0.0f64..1.5),
        strength in 0.0f64..2.0,
        rate in 0.2f64..3.0,
        center in -1.0f64..1.0,
        phi0 in 0.0f64..1.5,
    ) {
        let system = SystemSpec::new(kind, omega, couplings).unwrap();
        let env = EnvSpec::new(strength, rate, center).unwrap();
        let pulse = realize_regular(&RegularPulseSpec::from_ratio(0.25, 0.6, phi0).unwrap(), 2.0).unwrap();
        let grid = SimGrid::new(2.0, 0.005).unwrap().with_record_interval(0.1).unwrap();
        let out = Scenario::with_default_state(system, env).me_fidelity(&pulse, &grid).unwrap();
        prop_assert!(out.run.max_trace_error <= 1e-8);
        prop_assert!(out.run.max_hermiticity_error <= 1e-10);
        prop_assert_eq!(out.curve.values[0], 1.0);
        prop_assert!(out.curve.values.iter().all(|f| (0.0..=1.0 + 1e-9).contains(f)));
    }

    #[test]
    fn rotating_fidelity_ignores_global_level_shift(
        kind in kind(),
        omega in prop::array::uniform3(-1.0f64..1.0),
        shift in -5.0f64..5.0,
    ) {
        let system = SystemSpec::new(kind, omega, [1.0, 0.5]).unwrap();
        let env = EnvSpec::new(1.0, 1.0, 0.5).unwrap();
        let pulse = realize_regular(&RegularPulseSpec::from_ratio(0.2, 0.6, 1.0).unwrap(), 2.0).unwrap();
        let grid = SimGrid::new(2.0, 0.005).unwrap().with_record_interval(0.1).unwrap();
        let a = Scenario::with_default_state(system, env).me_fidelity(&pulse, &grid).unwrap().curve;
        let b = Scenario::with_default_state(system.shifted(shift).unwrap(), env)
            .me_fidelity(&pulse, &grid)
            .unwrap()
            .curve;
        prop_assert!(a.max_abs_diff(&b) <= 1e-10);
    }

    #[test]
    fn config_round_trips(
        tau in 0.01f64..1.0,
        ratio in 0.05f64..=1.0,
        phi0 in 0.0f64..2.0,
        dt in prop::option::of(1e-5f64..1e-3),
        seed in prop::option::of(any::<u64>()),
        variant in prop_oneof![Just(PulseVariant::None), Just(PulseVariant::Regular)],
    ) {
        let mut c = RunConfig::default();
        c.pulse.tau = tau;
        c.pulse.delta = tau * ratio;
        c.pulse.phi0 = phi0;
        c.pulse.variant = variant;
        c.grid.dt = dt.map_or(DtSetting::Auto, DtSetting::Fixed);
        c.seed = seed;
        let back = parse_config(&c.to_json()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.config_hash(), c.config_hash());
    }
}
