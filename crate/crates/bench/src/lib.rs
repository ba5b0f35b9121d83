//! Fixtures shared by the propagation benchmarks.

use leo_core::{presets, realize_regular, PulseProgram, Scenario, SimGrid};

pub struct Case {
    pub scenario: Scenario,
    pub pulse: PulseProgram,
    pub grid: SimGrid,
}

/// The Φ₀-study system under the reference pulse with `Φ₀ = 1`.
pub fn reference_case(horizon: f64, dt: f64) -> Case {
    let scenario =
        Scenario::with_default_state(presets::phi0_study_system(), presets::reference_env());
    let pulse = realize_regular(&presets::reference_pulse(1.0), horizon).expect("valid pulse");
    let grid = SimGrid::new(horizon, dt)
        .and_then(|g| g.with_record_interval(presets::RECORD_INTERVAL.min(horizon)))
        .expect("valid grid");
    Case {
        scenario,
        pulse,
        grid,
    }
}
