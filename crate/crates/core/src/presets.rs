//! Parameter sets of the reference studies.
//!
//! Frequencies in units of `ω`, times in `1/ω`. The pulse period of the
//! `ωt = 40` studies is `ωτ = 0.02`.

use crate::model::{EnvSpec, SystemKind, SystemSpec};
use crate::pulse::RegularPulseSpec;

/// Pulse period of the fidelity-dynamics studies.
pub const PERIOD: f64 = 0.02;
/// Duty ratio `Δ/τ` of the Φ₀ scan and the noisy-pulse study.
pub const RATIO: f64 = 0.6;
/// Horizon of the fidelity-dynamics studies.
pub const HORIZON: f64 = 40.0;
/// Readout time of the (Δ, dark time) diagram.
pub const DIAGRAM_READOUT: f64 = 10.0;
/// Default record spacing of fidelity curves.
pub const RECORD_INTERVAL: f64 = 0.1;

/// V-type, gaps `ω₁ − ω₃ = 1`, `ω₂ − ω₃ = 0.8`, couplings `μ = (1, 0.5)`.
pub fn phi0_study_system() -> SystemSpec {
    SystemSpec::new(SystemKind::VType, [1.0, 0.8, 0.0], [1.0, 0.5]).expect("valid preset")
}

/// V-type with degenerate upper levels `ω = (½, ½, −½)` used by the diagram,
/// with the couplings of [`phi0_study_system`].
pub fn diagram_system() -> SystemSpec {
    SystemSpec::new(SystemKind::VType, [0.5, 0.5, -0.5], [1.0, 0.5]).expect("valid preset")
}

/// `Γ = 1`, `γ = 1`, `Ω = 0.5`.
pub fn reference_env() -> EnvSpec {
    EnvSpec::new(1.0, 1.0, 0.5).expect("valid preset")
}

/// Regular pulse with `ωτ = 0.02`, `Δ/τ = 0.6` and area `phi0`.
pub fn reference_pulse(phi0: f64) -> RegularPulseSpec {
    RegularPulseSpec::from_ratio(PERIOD, RATIO, phi0).expect("valid preset")
}
