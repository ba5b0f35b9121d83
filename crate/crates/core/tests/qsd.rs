use leo_core::propagator::propagate_trajectory;
use leo_core::{
    presets, realize_regular, EnvSpec, Frame, Ket3, NoisePath, PulseProgram, RegularPulseSpec,
    Scenario, SimGrid, SystemKind, SystemSpec, C64,
};

fn ket(a: f64, b: f64, c: f64) -> Ket3 {
    Ket3::new(C64::from(a), C64::from(b), C64::from(c))
}

#[test]
fn uncoupled_trajectory_without_levels_is_static() {
    let system = SystemSpec::new(SystemKind::VType, [0.0; 3], [1.0, 0.5]).unwrap();
    let env = EnvSpec::new(0.0, 1.0, 0.5).unwrap();
    let s = Scenario::with_default_state(system, env);
    let pulse = PulseProgram::dark(3.0).unwrap();
    let grid = SimGrid::new(3.0, 0.01).unwrap().with_record_interval(0.5).unwrap();
    let coeffs = s.coefficients(&pulse, &grid).unwrap();
    let tr = propagate_trajectory(&s.psi0, &system, &env, &s.leo(), &pulse, &coeffs, &NoisePath::zeros(grid), &grid).unwrap();
    let lab = tr.states_in(&system, &s.leo(), &pulse, &grid, Frame::Lab).unwrap();
    assert!(lab.iter().all(|psi| *psi == s.psi0));
}

#[test]
fn closed_system_phase() {
    let system = SystemSpec::new(SystemKind::LambdaType, [0.5, -0.5, -0.5], [1.0, 1.0]).unwrap();
    let env = EnvSpec::new(0.0, 1.0, 0.5).unwrap();
    let s = Scenario::new(system, env, ket(1.0, 0.0, 0.0)).unwrap();
    let pulse = PulseProgram::dark(4.0).unwrap();
    let grid = SimGrid::new(4.0, 0.01).unwrap().with_record_interval(0.5).unwrap();
    let coeffs = s.coefficients(&pulse, &grid).unwrap();
    let tr = propagate_trajectory(&s.psi0, &system, &env, &s.leo(), &pulse, &coeffs, &NoisePath::zeros(grid), &grid).unwrap();
    let lab = tr.states_in(&system, &s.leo(), &pulse, &grid, Frame::Lab).unwrap();
    for ((t, psi), co) in tr.times.iter().zip(&lab).zip(&tr.states) {
        assert!((psi[0] - C64::from_polar(1.0, -0.5 * t)).norm() < 1e-14);
        assert_eq!(co.norm_squared(), 1.0);
    }
    let ens = s.qsd(&pulse, &grid, 4, 1).unwrap();
    assert!(ens.fidelity.values.iter().all(|f| *f == 1.0));
}

#[test]
fn decoupled_fidelity_is_one_for_uniform_subspace() {
    let env = EnvSpec::new(0.0, 1.0, 0.5).unwrap();
    let system = presets::phi0_study_system();
    let pulse = realize_regular(&presets::reference_pulse(1.0), 2.0).unwrap();
    let grid = SimGrid::new(2.0, 0.0005).unwrap().with_record_interval(0.1).unwrap();
    for psi0 in [ket(1.0, 0.0, 0.0), system.default_initial_state()] {
        let s = Scenario::new(system, env, psi0).unwrap();
        let f = s.qsd(&pulse, &grid, 3, 9).unwrap().fidelity;
        assert!(f.values.iter().all(|v| *v == 1.0));
    }
}

#[test]
fn ensemble_is_unbiased_against_master_equation() {
    let s = Scenario::with_default_state(presets::phi0_study_system(), presets::reference_env());
    let spec = RegularPulseSpec::from_ratio(0.2, 0.6, 0.5).unwrap();
    let pulse = realize_regular(&spec, 3.0).unwrap();
    let grid = SimGrid::new(3.0, 0.002).unwrap().with_record_interval(1.0).unwrap();
    let me = s.me_fidelity(&pulse, &grid).unwrap();
    let ens = s.qsd(&pulse, &grid, 1000, 2024).unwrap();

    for (mean, se) in &ens.norm {
        assert!((mean - 1.0).abs() <= 3.0 * se + 1e-12, "norm {mean} ± {se}");
    }
    for r in 1..ens.rho_mean.len() {
        for e in 0..9 {
            let (i, j) = (e / 3, e % 3);
            let q = ens.rho_mean[r][(i, j)];
            let m = me.run.states[r][(i, j)];
            let [se_re, se_im] = [ens.rho_stderr[r][0][e], ens.rho_stderr[r][1][e]];
            assert!((q.re - m.re).abs() <= (3.0 * se_re).max(1e-9), "re ρ[{i}{j}] at record {r}");
            assert!((q.im - m.im).abs() <= (3.0 * se_im).max(1e-9), "im ρ[{i}{j}] at record {r}");
        }
    }
    let worst = ens
        .fidelity
        .values
        .iter()
        .zip(&me.curve.values)
        .zip(ens.fidelity.stderr.as_ref().unwrap())
        .map(|((q, m), se)| (q - m).abs() / (3.0 * se).max(0.01))
        .fold(0.0, f64::max);
    assert!(worst <= 1.0);
}

#[test]
fn ensembles_are_seed_deterministic() {
    let s = Scenario::with_default_state(presets::phi0_study_system(), presets::reference_env());
    let pulse = PulseProgram::dark(1.0).unwrap();
    let grid = SimGrid::new(1.0, 0.01).unwrap().with_record_interval(0.1).unwrap();
    let a = s.qsd(&pulse, &grid, 20, 5).unwrap();
    let b = s.qsd(&pulse, &grid, 20, 5).unwrap();
    assert_eq!(a.rho_mean, b.rho_mean);
    let c = s.qsd(&pulse, &grid, 20, 6).unwrap();
    assert_ne!(a.rho_mean, c.rho_mean);
}
