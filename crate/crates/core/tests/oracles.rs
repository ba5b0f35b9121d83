//! Independent reference solutions checked against the production paths.

use leo_core::{
    build_hamiltonian, build_lindblad, generate_ou_path, grid_oracle_coeffs, integrate_coeffs,
    presets, realize_regular, rotating_frame_phases, Frame, Ket3, NoisePath,
    OOCoefficients, Op3, PulseProgram, RegularPulseSpec, Scenario, SimGrid, StreamKey, SystemKind,
    SystemSpec, C64,
};
use leo_core::propagator::propagate_trajectory;

mod common;

const I: C64 = C64::new(0.0, 1.0);

#[test]
fn closed_coefficient_odes_match_grid_oracle() {
    for case in common::coefficient_cases() {
        let grid = SimGrid::new(case.pulse.horizon(), case.dt).unwrap();
        let closed = integrate_coeffs(&case.system, &case.env, &case.pulse, &grid).unwrap();
        let oracle = grid_oracle_coeffs(&case.system, &case.env, &case.pulse, &grid).unwrap();
        let rel = common::max_relative_gap(&closed, &oracle);
        assert!(rel <= 1e-3, "{}: relative gap {rel:e}", case.name);
    }
}

#[test]
fn step_halving_is_fourth_order_for_smooth_control() {
    let system = presets::phi0_study_system();
    let env = presets::reference_env();
    let pulse = PulseProgram::dark(5.0).unwrap();
    let coarse = SimGrid::new(5.0, 0.05).unwrap();
    let runs: Vec<_> = (0..3)
        .map(|k| {
            let mut g = coarse;
            for _ in 0..k {
                g = g.refined();
            }
            integrate_coeffs(&system, &env, &pulse, &g).unwrap()
        })
        .collect();
    let diff = |a: &OOCoefficients, b: &OOCoefficients| {
        (0..=coarse.steps())
            .flat_map(|n| {
                let (x, y) = (a.at_node(n * a.grid().steps() / coarse.steps()), b.at_node(n * b.grid().steps() / coarse.steps()));
                (0..2).map(move |k| (x[k] - y[k]).norm())
            })
            .fold(0.0, f64::max)
    };
    let ratio = diff(&runs[0], &runs[1]) / diff(&runs[1], &runs[2]);
    assert!((12.0..=20.0).contains(&ratio), "convergence ratio {ratio}");
}

#[test]
fn step_halving_converges_monotonically_for_pulses() {
    let system = presets::phi0_study_system();
    let env = presets::reference_env();
    let spec = RegularPulseSpec::from_ratio(0.3, 0.6, 1.0).unwrap();
    let pulse = realize_regular(&spec, 3.0).unwrap();
    let coarse = SimGrid::new(3.0, 0.015).unwrap();
    let mut grids = vec![coarse];
    for _ in 0..4 {
        grids.push(grids.last().unwrap().refined());
    }
    let runs: Vec<_> = grids
        .iter()
        .map(|g| integrate_coeffs(&system, &env, &pulse, g).unwrap())
        .collect();
    let gaps: Vec<f64> = runs
        .windows(2)
        .map(|w| {
            (0..=coarse.steps())
                .flat_map(|n| {
                    let a = w[0].at_node(n * w[0].grid().steps() / coarse.steps());
                    let b = w[1].at_node(n * w[1].grid().steps() / coarse.steps());
                    (0..2).map(move |k| (a[k] - b[k]).norm())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(gaps.windows(2).all(|g| g[1] < g[0]), "{gaps:?}");
}

#[test]
fn stronger_pulses_shrink_coefficients() {
    let system = presets::phi0_study_system();
    let env = presets::reference_env();
    let horizon = 10.0;
    let mut averages = Vec::new();
    for phi0 in [0.0, 0.4, 0.7, 1.0] {
        let spec = presets::reference_pulse(phi0);
        let pulse = realize_regular(&spec, horizon).unwrap();
        let grid = SimGrid::new(horizon, 0.0002).unwrap();
        let c = integrate_coeffs(&system, &env, &pulse, &grid).unwrap();
        let n = c.nodes().len() as f64;
        averages.push(std::array::from_fn::<f64, 2, _>(|k| {
            c.nodes().iter().map(|f| f[k].norm()).sum::<f64>() / n
        }));
    }
    for k in 0..2 {
        assert!(
            averages.windows(2).all(|w| w[1][k] <= w[0][k]),
            "component {k}: {averages:?}"
        );
    }
}

#[test]
fn lambda_two_level_reduction_matches_memory_kernel_quadrature() {
    let env = presets::reference_env();
    let nu = 0.8;
    let omega = [0.5, -0.5, -0.3];
    let system = SystemSpec::new(SystemKind::LambdaType, omega, [0.0, nu]).unwrap();
    let horizon = 10.0;
    let pulse = PulseProgram::dark(horizon).unwrap();
    let grid = SimGrid::new(horizon, 0.001).unwrap().with_record_interval(0.1).unwrap();
    let out = Scenario::with_default_state(system, env).me_fidelity(&pulse, &grid).unwrap();
    let reference = common::two_level_survival(&env, nu, omega[0] - omega[2], horizon, 0.001);
    let mut worst: f64 = 0.0;
    for (t, rho) in out.run.times.iter().zip(&out.run.states) {
        let n = (t / 0.001).round() as usize;
        worst = worst.max((rho[(0, 0)].re - reference[n]).abs());
    }
    assert!(worst <= 1e-4, "max |ρ₁₁ − |u|²| = {worst:e}");
}

fn dense_o(system: &SystemSpec, f: [C64; 2]) -> Op3 {
    let mut o = Op3::zeros();
    match system.kind() {
        SystemKind::VType => {
            o[(2, 0)] = f[0];
            o[(2, 1)] = f[1];
        }
        SystemKind::LambdaType => {
            o[(1, 0)] = f[0];
            o[(2, 0)] = f[1];
        }
    }
    o
}

/// Lab-frame master equation with dense matrices, RK4 on a grid `refine`
/// times finer than `grid`, rotated to the co-rotating frame at the record
/// nodes of `grid`.
fn dense_lab_me(
    scenario: &Scenario,
    pulse: &PulseProgram,
    grid: &SimGrid,
    refine: usize,
) -> Vec<Op3> {
    let system = &scenario.system;
    let fine = SimGrid::new(grid.horizon(), grid.dt() / refine as f64).unwrap();
    let coeffs = integrate_coeffs(system, &scenario.env, pulse, &fine).unwrap();
    let h0 = build_hamiltonian(system);
    let l = build_lindblad(system);
    let proj = scenario.leo().projector_op();
    let rhs = |rho: &Op3, t: f64, f: [C64; 2]| -> Op3 {
        let c = pulse.amplitude_at(t.min(pulse.horizon())).unwrap();
        let h = h0 + proj * C64::from(c);
        let o = dense_o(system, f);
        let x = l * rho * o.adjoint() - rho * o.adjoint() * l;
        (h * rho - rho * h) * -I + x + x.adjoint()
    };
    let step = fine.dt();
    let mut rho = scenario.psi0 * scenario.psi0.adjoint();
    let mut out = vec![rho];
    for n in 0..fine.steps() {
        let t = fine.time(n);
        let eps = 1e-9 * step;
        let (f0, fm, f1) = (coeffs.nodes()[n], coeffs.mids()[n], coeffs.nodes()[n + 1]);
        let k1 = rhs(&rho, t + eps, f0);
        let k2 = rhs(&(rho + k1 * C64::from(0.5 * step)), t + 0.5 * step, fm);
        let k3 = rhs(&(rho + k2 * C64::from(0.5 * step)), t + 0.5 * step, fm);
        let k4 = rhs(&(rho + k3 * C64::from(step)), fine.time(n + 1) - eps, f1);
        rho += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(step / 6.0);
        if (n + 1) % (refine * grid.record_stride()) == 0 {
            let tn = fine.time(n + 1);
            let ph = rotating_frame_phases(system, &scenario.leo(), tn, pulse.integral_to(tn).unwrap());
            out.push(Op3::from_fn(|i, j| ph[i] * rho[(i, j)] * ph[j].conj()));
        }
    }
    out
}

#[test]
fn co_rotating_master_equation_matches_dense_lab_frame() {
    for (system, spec) in [
        (presets::phi0_study_system(), RegularPulseSpec::from_ratio(0.2, 0.6, 1.0).unwrap()),
        (
            SystemSpec::new(SystemKind::LambdaType, [0.5, -0.5, -0.2], [1.0, 0.6]).unwrap(),
            RegularPulseSpec::from_ratio(0.3, 0.5, 0.8).unwrap(),
        ),
    ] {
        let scenario = Scenario::with_default_state(system, presets::reference_env());
        let pulse = realize_regular(&spec, 4.0).unwrap();
        let grid = SimGrid::new(4.0, 0.002).unwrap().with_record_interval(0.2).unwrap();
        let fast = scenario.me_fidelity(&pulse, &grid).unwrap();
        let dense = dense_lab_me(&scenario, &pulse, &grid, 4);
        assert_eq!(dense.len(), fast.run.states.len());
        let worst = dense
            .iter()
            .zip(&fast.run.states)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{:?}: max |Δρ| = {worst:e}", system.kind());
    }
}

#[test]
fn zero_noise_trajectory_matches_dense_drift_equation() {
    let scenario = Scenario::with_default_state(presets::phi0_study_system(), presets::reference_env());
    let system = &scenario.system;
    let leo = scenario.leo();
    let spec = RegularPulseSpec::from_ratio(0.2, 0.6, 1.0).unwrap();
    let horizon = 5.0;
    let pulse = realize_regular(&spec, horizon).unwrap();
    let grid = SimGrid::new(horizon, 0.005).unwrap().with_record_interval(0.1).unwrap();
    let coeffs = scenario.coefficients(&pulse, &grid).unwrap();
    let noise = NoisePath::zeros(grid);
    let record = propagate_trajectory(&scenario.psi0, system, &scenario.env, &leo, &pulse, &coeffs, &noise, &grid).unwrap();
    let lab = record.states_in(system, &leo, &pulse, &grid, Frame::Lab).unwrap();

    // Dense lab-frame drift ψ' = (−iH − icΠ − L†Ō)ψ at dt/10.
    let fine = SimGrid::new(horizon, grid.dt() / 10.0).unwrap();
    let fc = integrate_coeffs(system, &scenario.env, &pulse, &fine).unwrap();
    let h0 = build_hamiltonian(system);
    let l = build_lindblad(system);
    let proj = leo.projector_op();
    let rhs = |psi: &Ket3, t: f64, f: [C64; 2]| -> Ket3 {
        let c = pulse.amplitude_at(t.min(horizon)).unwrap();
        ((h0 + proj * C64::from(c)) * -I - l.adjoint() * dense_o(system, f)) * psi
    };
    let h = fine.dt();
    let eps = 1e-9 * h;
    let mut psi = scenario.psi0;
    let mut oracle = vec![psi];
    for n in 0..fine.steps() {
        let t = fine.time(n);
        let k1 = rhs(&psi, t + eps, fc.nodes()[n]);
        let k2 = rhs(&(psi + k1 * C64::from(0.5 * h)), t + 0.5 * h, fc.mids()[n]);
        let k3 = rhs(&(psi + k2 * C64::from(0.5 * h)), t + 0.5 * h, fc.mids()[n]);
        let k4 = rhs(&(psi + k3 * C64::from(h)), fine.time(n + 1) - eps, fc.nodes()[n + 1]);
        psi += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(h / 6.0);
        if (n + 1) % (10 * grid.record_stride()) == 0 {
            oracle.push(psi);
        }
    }
    assert_eq!(oracle.len(), lab.len());
    let worst = oracle.iter().zip(&lab).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "max |Δψ| = {worst:e}");

    let overlaps: Vec<f64> = record.states.iter().map(|s| scenario.psi0.dotc(s).norm()).collect();
    assert!(overlaps.iter().all(|o| *o <= 1.0 + 1e-12), "{overlaps:?}");
    assert!(overlaps.last().unwrap() < &overlaps[0]);
}

#[test]
fn noise_covariance_matches_kernel() {
    let env = presets::reference_env();
    let grid = SimGrid::new(3.0, 0.01).unwrap();
    let paths: Vec<_> = (0..4000)
        .map(|i| generate_ou_path(&env, &grid, StreamKey::new(99, "oracle-noise", i)))
        .collect();
    for lag in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let c = leo_core::empirical_covariance(&paths, lag).unwrap();
        let gap = (c.value - env.correlation(lag)).norm();
        assert!(gap <= 3.0 * c.stderr, "lag {lag}: gap {gap:e}, stderr {:e}", c.stderr);
    }
}
