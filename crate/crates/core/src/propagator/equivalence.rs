//! V/λ fidelity equivalence for symmetric couplings.
//!
//! With `ω = (½, ½, −½)` (V-type, `ψ₀ = (|1⟩+|2⟩)/√2`, `μ₁ = μ₂ = μ`) and
//! `ω = (½, −½, −½)` (λ-type, `ψ₀ = |1⟩`, `ν₂ = ν₃ = μ`) both problems reduce
//! to one bright transition of frequency 1 and coupling `√2 μ`. Both
//! coefficients then equal a scalar `g` with
//! `ġ = Γγμ/2 + [−γ + i(1 − Ω + c)]g + 2μg²`, and the fidelity is `|h|` with
//! `ḣ = −2μ g h`, `h(0) = 1`.

use super::{FidelityCurve, Scenario};
use crate::error::Result;
use crate::grid::SimGrid;
use crate::model::{EnvSpec, SystemKind, SystemSpec, C64};
use crate::pulse::PulseProgram;

#[derive(Debug, Clone)]
pub struct EquivalenceCurves {
    pub v_type: FidelityCurve,
    pub lambda_type: FidelityCurve,
}

pub fn v_lambda_equivalent_fidelity(
    env: &EnvSpec,
    coupling: f64,
    pulse: &PulseProgram,
    grid: &SimGrid,
) -> Result<EquivalenceCurves> {
    let v = SystemSpec::new(SystemKind::VType, [0.5, 0.5, -0.5], [coupling, coupling])?;
    let lambda = SystemSpec::new(SystemKind::LambdaType, [0.5, -0.5, -0.5], [coupling, coupling])?;
    let v_type = Scenario::with_default_state(v, *env).me_fidelity(pulse, grid)?.curve;
    let lambda_type = Scenario::with_default_state(lambda, *env)
        .me_fidelity(pulse, grid)?
        .curve;
    Ok(EquivalenceCurves {
        v_type,
        lambda_type,
    })
}

/// Scalar Riccati reduction of the symmetric problem, integrated directly.
pub fn reduced_equivalence_fidelity(
    env: &EnvSpec,
    coupling: f64,
    pulse: &PulseProgram,
    grid: &SimGrid,
) -> Result<FidelityCurve> {
    let amps = pulse.step_amplitudes(grid)?;
    let mu = coupling;
    let source = env.variance() * mu;
    let rate = C64::new(-env.memory_rate(), 1.0 - env.center());
    let rhs = |g: C64, hh: C64, c: f64| -> (C64, C64) {
        (
            source + (rate + C64::new(0.0, c)) * g + g * g * (2.0 * mu),
            -g * hh * (2.0 * mu),
        )
    };
    let dt = grid.dt();
    let (mut g, mut hh) = (C64::default(), C64::new(1.0, 0.0));
    let mut times = vec![0.0];
    let mut values = vec![1.0];
    for (n, a) in amps.iter().enumerate() {
        let k1 = rhs(g, hh, a.start);
        let k2 = rhs(g + k1.0 * (0.5 * dt), hh + k1.1 * (0.5 * dt), a.mid);
        let k3 = rhs(g + k2.0 * (0.5 * dt), hh + k2.1 * (0.5 * dt), a.mid);
        let k4 = rhs(g + k3.0 * dt, hh + k3.1 * dt, a.end);
        g += (k1.0 + (k2.0 + k3.0) * 2.0 + k4.0) * (dt / 6.0);
        hh += (k1.1 + (k2.1 + k3.1) * 2.0 + k4.1) * (dt / 6.0);
        if grid.is_record(n + 1) {
            times.push(grid.time(n + 1));
            values.push(hh.norm());
        }
    }
    Ok(FidelityCurve {
        times,
        values,
        stderr: None,
    })
}
