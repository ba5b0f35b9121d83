//! Simulator for a three-level open quantum system under nonperturbative
//! leakage-elimination (LEO) pulse control in a non-Markovian environment.
//!
//! Two propagation routes are provided: the exact master equation, and
//! linear quantum-state-diffusion (QSD) trajectories driven by colored
//! Ornstein–Uhlenbeck noise. Both are built on the closed O-operator
//! coefficient equations in [`coeffs`].
//!
//! Units: frequencies in units of `ω`, times in units of `1/ω`.

pub mod coeffs;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod model;
pub mod noise;
pub mod output;
pub mod presets;
pub mod propagator;
pub mod pulse;
pub mod rng;
pub mod stats;
pub mod validate;

pub use coeffs::{grid_oracle_coeffs, integrate_coeffs, pulse_integral_diagnostic, OOCoefficients};
pub use config::{parse_config, parse_config_with, RunConfig};
pub use error::{Error, Result};
pub use experiments::{
    delta_tau_diagram, detect_threshold, deviation_vs_regular, noisy_pulse_ensemble,
    nv_level_preset, phi0_scan, random_pulse_ensemble, ratio_scan, EnsembleResult, RunSettings,
    SweepResult,
};
pub use grid::{auto_dt, SimGrid};
pub use model::{
    build_hamiltonian, build_lindblad, rotating_frame_phases, EnvSpec, Ket3, LeoStructure, Op3,
    SystemKind, SystemSpec, C64,
};
pub use noise::{empirical_covariance, generate_ou_path, NoisePath};
pub use propagator::{
    reduced_equivalence_fidelity, v_lambda_equivalent_fidelity, FidelityCurve, Frame, Scenario,
};
pub use pulse::{
    apply_noise, realize_random, realize_regular, NoiseDistribution, NoiseDressing, NoiseMode,
    PulseProgram, RandomPulseSpec, RegularPulseSpec,
};
pub use rng::StreamKey;
pub use validate::{run_suite, PropertyCheck};

/// Artifact version reported by the CLI.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the JSON run-configuration schema.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;
