//! Invariant suite run by `leo validate`.
//!
//! Each check is small enough that the whole suite finishes in seconds; the
//! full-size versions live in the test targets.

use serde::Serialize;

use crate::coeffs::{grid_oracle_coeffs, integrate_coeffs};
use crate::error::Result;
use crate::grid::SimGrid;
use crate::model::{build_lindblad, LeoStructure, SystemKind, SystemSpec, C64};
use crate::noise::{empirical_covariance, empirical_pseudo_covariance, generate_ou_path};
use crate::presets;
use crate::propagator::{reduced_equivalence_fidelity, v_lambda_equivalent_fidelity, Scenario};
use crate::pulse::{realize_regular, PulseProgram, RegularPulseSpec};
use crate::rng::StreamKey;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, body: impl FnOnce() -> Result<(bool, String)>) -> PropertyCheck {
    match body() {
        Ok((passed, detail)) => PropertyCheck { name, passed, detail },
        Err(e) => PropertyCheck {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn short_setup(horizon: f64) -> Result<(Scenario, PulseProgram, SimGrid)> {
    let scenario = Scenario::with_default_state(presets::phi0_study_system(), presets::reference_env());
    let spec = RegularPulseSpec::from_ratio(0.2, 0.6, 1.0)?;
    let pulse = realize_regular(&spec, horizon)?;
    let grid = SimGrid::new(horizon, 0.002)?.with_record_interval(0.1)?;
    Ok((scenario, pulse, grid))
}

/// Runs every property; `seed` drives the stochastic checks.
pub fn run_suite(seed: u64) -> Vec<PropertyCheck> {
    vec![
        check("leo anticommutes with leakage", || {
            let mut worst: f64 = 0.0;
            for kind in [SystemKind::VType, SystemKind::LambdaType] {
                let s = SystemSpec::new(kind, [1.0, 0.8, 0.0], [1.0, 0.5])?;
                let l = build_lindblad(&s);
                let r = LeoStructure::for_kind(kind).reflection_op();
                worst = worst.max((r * l * r + l).norm());
            }
            Ok((worst == 0.0, format!("max |RLR + L| = {worst:e}")))
        }),
        check("pulse integral exact at period ends", || {
            let spec = presets::reference_pulse(1.0);
            let p = realize_regular(&spec, 40.0)?;
            let mut worst: f64 = 0.0;
            for n in 1..=(40.0 / spec.tau()).floor() as usize {
                let t = (n as f64 * spec.tau()).min(40.0);
                worst = worst.max((p.integral_to(t)? - n as f64).abs() / n as f64);
            }
            Ok((worst <= 1e-12, format!("max |C(nτ) − nΦ₀|/n = {worst:e}")))
        }),
        check("fidelity starts at one", || {
            let (s, p, g) = short_setup(2.0)?;
            let f0 = s.me_fidelity(&p, &g)?.curve.values[0];
            Ok((f0 == 1.0, format!("F(0) = {f0}")))
        }),
        check("no coupling means no decay", || {
            let (s, p, g) = short_setup(2.0)?;
            let s = Scenario::with_default_state(s.system, s.env.decoupled());
            let c = s.me_fidelity(&p, &g)?.curve;
            let worst = c.values.iter().map(|f| (f - 1.0).abs()).fold(0.0, f64::max);
            Ok((worst == 0.0, format!("max |F − 1| = {worst:e}")))
        }),
        check("master equation trace and hermiticity", || {
            let (s, p, g) = short_setup(5.0)?;
            let run = s.me_fidelity(&p, &g)?.run;
            Ok((
                run.max_trace_error <= 1e-8 && run.max_hermiticity_error <= 1e-10,
                format!(
                    "trace {:e}, hermiticity {:e}, min eigenvalue {:e}",
                    run.max_trace_error, run.max_hermiticity_error, run.min_eigenvalue
                ),
            ))
        }),
        check("rotating frame invariant under level shift", || {
            let (s, p, g) = short_setup(3.0)?;
            let shifted = Scenario::new(s.system.shifted(1.0)?, s.env, s.psi0)?;
            let d = s.me_fidelity(&p, &g)?.curve.max_abs_diff(&shifted.me_fidelity(&p, &g)?.curve);
            Ok((d <= 1e-10, format!("max curve difference {d:e}")))
        }),
        check("closed coefficient ODE matches grid oracle", || {
            let (s, _, _) = short_setup(1.0)?;
            let pulse = realize_regular(&RegularPulseSpec::from_ratio(0.2, 0.6, 1.0)?, 2.0)?;
            let grid = SimGrid::new(2.0, 0.002)?;
            let a = integrate_coeffs(&s.system, &s.env, &pulse, &grid)?;
            let b = grid_oracle_coeffs(&s.system, &s.env, &pulse, &grid)?;
            let rel = relative_gap(a.nodes(), b.nodes());
            Ok((rel <= 1e-3, format!("max relative gap {rel:e}")))
        }),
        check("V and lambda equivalence with scalar reduction", || {
            let env = presets::reference_env();
            let pulse = realize_regular(&RegularPulseSpec::from_ratio(0.2, 0.6, 1.0)?, 5.0)?;
            let grid = SimGrid::new(5.0, 0.002)?.with_record_interval(0.1)?;
            let eq = v_lambda_equivalent_fidelity(&env, 1.0, &pulse, &grid)?;
            let red = reduced_equivalence_fidelity(&env, 1.0, &pulse, &grid)?;
            let d = eq
                .v_type
                .max_abs_diff(&eq.lambda_type)
                .max(eq.v_type.max_abs_diff(&red));
            Ok((d <= 1e-6, format!("max curve difference {d:e}")))
        }),
        check("noise covariance matches kernel", || {
            let env = presets::reference_env();
            let grid = SimGrid::new(2.0, 0.01)?;
            let paths: Vec<_> = (0..400)
                .map(|i| generate_ou_path(&env, &grid, StreamKey::new(seed, "validate-noise", i)))
                .collect();
            let mut ok = true;
            let mut detail = Vec::new();
            for lag in [0.0, 0.5, 1.0] {
                let c = empirical_covariance(&paths, lag)?;
                let p = empirical_pseudo_covariance(&paths, lag)?;
                let z = (c.value - env.correlation(lag)).norm() / c.stderr.max(1e-300);
                let zp = p.value.norm() / p.stderr.max(1e-300);
                ok &= z <= 4.0 && zp <= 4.0;
                detail.push(format!("lag {lag}: {z:.2}σ, pseudo {zp:.2}σ"));
            }
            Ok((ok, detail.join("; ")))
        }),
        check("QSD ensemble matches master equation", || {
            let (s, p, g) = short_setup(2.0)?;
            let me = s.me_fidelity(&p, &g)?.curve;
            let qsd = s.qsd(&p, &g, 200, seed)?.fidelity;
            let se = qsd.stderr.clone().unwrap_or_default();
            let mut worst: f64 = 0.0;
            for i in 0..me.values.len() {
                let tol = (3.0 * se[i]).max(0.01);
                worst = worst.max((qsd.values[i] - me.values[i]).abs() / tol);
            }
            Ok((worst <= 1.0, format!("max |ΔF| / tolerance = {worst:.3}")))
        }),
        check("step halving converges", || {
            let (s, p, g) = short_setup(5.0)?;
            let drift = s.me_fidelity_confirmed(&p, &g)?.drift;
            Ok((drift <= 1e-4, format!("dt vs dt/2 drift {drift:e}")))
        }),
        check("stronger pulses protect better", || {
            let scenario =
                Scenario::with_default_state(presets::phi0_study_system(), presets::reference_env());
            let mut values = Vec::new();
            for phi0 in [0.0, 0.4, 0.7, 1.0] {
                let spec = RegularPulseSpec::from_ratio(0.1, 0.6, phi0)?;
                let pulse = realize_regular(&spec, 5.0)?;
                let grid = SimGrid::new(5.0, 0.001)?.with_record_interval(5.0)?;
                values.push(scenario.me_fidelity(&pulse, &grid)?.curve.last());
            }
            let ok = values.windows(2).all(|w| w[0] < w[1]);
            Ok((ok, format!("F(5) for Φ₀ = 0, 0.4, 0.7, 1: {values:.4?}")))
        }),
    ]
}

fn relative_gap(a: &[[C64; 2]], b: &[[C64; 2]]) -> f64 {
    let scale = b
        .iter()
        .flat_map(|f| f.iter().map(|z| z.norm()))
        .fold(0.0, f64::max)
        .max(1e-300);
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| (0..2).map(move |k| (x[k] - y[k]).norm()))
        .fold(0.0, f64::max)
        / scale
}
