//! Test-only reference solvers shared by the oracle and acceptance targets.

use leo_core::{
    presets, realize_regular, EnvSpec, OOCoefficients, PulseProgram, RegularPulseSpec, SystemKind,
    SystemSpec, C64,
};

/// `u' = −ν²∫₀ᵗ α(t−s) e^{iω₁₃(t−s)} u(s) ds` by the implicit trapezoidal
/// rule for both the derivative and the memory integral.
pub fn two_level_survival(env: &EnvSpec, nu: f64, gap: f64, horizon: f64, h: f64) -> Vec<f64> {
    let steps = (horizon / h).round() as usize;
    let kernel: Vec<C64> = (0..=steps)
        .map(|n| {
            let lag = n as f64 * h;
            env.correlation(lag) * C64::from_polar(1.0, gap * lag) * (nu * nu)
        })
        .collect();
    let mut u = vec![C64::new(1.0, 0.0)];
    let mut drift = vec![C64::new(0.0, 0.0)];
    for n in 1..=steps {
        // Memory integral at t_n without the unknown endpoint term.
        let mut known = kernel[n] * u[0] * 0.5;
        for m in 1..n {
            known += kernel[n - m] * u[m];
        }
        known *= h;
        // u_n = u_{n-1} + h/2 (G_{n-1} + G_n), G_n = −(known + h/2 K₀ u_n).
        let a = kernel[0] * (0.5 * h);
        let un = (u[n - 1] + (drift[n - 1] - known) * (0.5 * h)) / (C64::new(1.0, 0.0) + a * (0.5 * h));
        drift.push(-(known + a * un));
        u.push(un);
    }
    u.iter().map(|z| z.norm_sqr()).collect()
}

pub fn max_relative_gap(a: &OOCoefficients, b: &OOCoefficients) -> f64 {
    let scale = b
        .nodes()
        .iter()
        .flat_map(|f| f.iter().map(|z| z.norm()))
        .fold(0.0, f64::max);
    let gap = a
        .nodes()
        .iter()
        .zip(b.nodes())
        .flat_map(|(x, y)| (0..2).map(move |k| (x[k] - y[k]).norm()))
        .fold(0.0, f64::max);
    gap / scale
}

pub struct CoeffCase {
    pub name: &'static str,
    pub system: SystemSpec,
    pub env: EnvSpec,
    pub pulse: PulseProgram,
    pub dt: f64,
}

/// Coefficient problems on ωt ≤ 5 covering both level schemes.
pub fn coefficient_cases() -> Vec<CoeffCase> {
    let horizon = 5.0;
    vec![
        CoeffCase {
            name: "V reference set, no pulse",
            system: presets::phi0_study_system(),
            env: presets::reference_env(),
            pulse: PulseProgram::dark(horizon).unwrap(),
            dt: 0.005,
        },
        CoeffCase {
            name: "V reference set, regular pulse",
            system: presets::phi0_study_system(),
            env: presets::reference_env(),
            pulse: realize_regular(&RegularPulseSpec::from_ratio(0.2, 0.6, 1.0).unwrap(), horizon).unwrap(),
            dt: 0.002,
        },
        CoeffCase {
            name: "V degenerate, fast pulse",
            system: presets::diagram_system(),
            env: presets::reference_env(),
            pulse: realize_regular(&presets::reference_pulse(1.0), 2.0).unwrap(),
            dt: 0.00025,
        },
        CoeffCase {
            name: "lambda, other environment",
            system: SystemSpec::new(SystemKind::LambdaType, [0.5, -0.5, -0.3], [0.7, 1.2]).unwrap(),
            env: EnvSpec::new(2.0, 0.5, -0.3).unwrap(),
            pulse: realize_regular(&RegularPulseSpec::from_ratio(0.5, 0.4, 0.7).unwrap(), horizon).unwrap(),
            dt: 0.002,
        },
    ]
}
