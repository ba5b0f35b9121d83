//! Parameter sweeps and pulse ensembles over the master-equation route.
//!
//! Each sweep cell and ensemble realization is an independent task;
//! failures are recorded per cell and never abort the sweep. Results are
//! reduced in index order, so they do not depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{auto_dt, SimGrid};
use crate::propagator::{FidelityCurve, MeOutcome, MeRun, Scenario};
use crate::pulse::{
    apply_noise, realize_random, realize_regular, NoiseDressing, RandomPulseSpec,
    RegularPulseSpec,
};
use crate::rng::StreamKey;
use crate::stats::columnwise_mean_stderr;

/// Worst master-equation integrity monitors over a set of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integrity {
    pub runs: usize,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Default for Integrity {
    fn default() -> Self {
        Self {
            runs: 0,
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

impl Integrity {
    pub fn of(run: &MeRun) -> Self {
        Self {
            runs: 1,
            max_trace_error: run.max_trace_error,
            max_hermiticity_error: run.max_hermiticity_error,
            min_eigenvalue: run.min_eigenvalue,
        }
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            runs: self.runs + other.runs,
            max_trace_error: self.max_trace_error.max(other.max_trace_error),
            max_hermiticity_error: self.max_hermiticity_error.max(other.max_hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }
}

/// Integration controls shared by sweeps and ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSettings {
    /// Fixed step; `None` selects [`auto_dt`] per pulse.
    pub dt: Option<f64>,
    pub record_interval: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            dt: None,
            record_interval: crate::presets::RECORD_INTERVAL,
        }
    }
}

impl RunSettings {
    pub fn grid_for(&self, spec: &RegularPulseSpec, horizon: f64) -> Result<SimGrid> {
        let dt = self.dt.unwrap_or_else(|| auto_dt(spec.tau(), spec.delta()));
        SimGrid::new(horizon, dt)?.with_record_interval(self.record_interval.min(horizon))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "state", content = "reason", rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub params: Vec<f64>,
    pub fidelity: Option<f64>,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub t_read: f64,
    pub cells: Vec<SweepCell>,
    pub integrity: Integrity,
}

impl SweepResult {
    fn from_outcomes(
        axes: &[&str],
        t_read: f64,
        params: Vec<Vec<f64>>,
        outcomes: Vec<Result<Readout>>,
    ) -> Self {
        let integrity = outcomes
            .iter()
            .flatten()
            .fold(Integrity::default(), |acc, r| acc.merge(r.integrity));
        let cells = params
            .into_iter()
            .zip(outcomes)
            .map(|(params, r)| match r {
                Ok(r) => SweepCell {
                    params,
                    fidelity: Some(r.fidelity),
                    status: CellStatus::Ok,
                },
                Err(e) => SweepCell {
                    params,
                    fidelity: None,
                    status: CellStatus::Failed(e.to_string()),
                },
            })
            .collect();
        Self {
            axes: axes.iter().map(|s| s.to_string()).collect(),
            t_read,
            cells,
            integrity,
        }
    }

    /// Fidelity of the first cell whose parameters match `params` to 1e-12.
    pub fn fidelity_at(&self, params: &[f64]) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| {
                c.params.len() == params.len()
                    && c.params.iter().zip(params).all(|(a, b)| (a - b).abs() <= 1e-12)
            })
            .and_then(|c| c.fidelity)
    }

    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.fidelity.is_none()).count()
    }

    /// Long format: parameter columns, `fidelity`, `status`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.axes.clone();
        header.push("fidelity".into());
        header.push("status".into());
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row: Vec<String> = c.params.iter().map(f64::to_string).collect();
            row.push(c.fidelity.map(|f| f.to_string()).unwrap_or_default());
            row.push(match &c.status {
                CellStatus::Ok => "ok".to_string(),
                CellStatus::Failed(reason) => format!("failed: {reason}"),
            });
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout {
    pub fidelity: f64,
    pub integrity: Integrity,
}

/// ME fidelity at `t_read` under a regular pulse.
pub fn readout_fidelity(
    scenario: &Scenario,
    spec: &RegularPulseSpec,
    t_read: f64,
    settings: &RunSettings,
) -> Result<Readout> {
    let pulse = realize_regular(spec, t_read)?;
    let grid = settings.grid_for(spec, t_read)?;
    let grid = grid.with_record_stride(grid.steps());
    let out = scenario.me_fidelity(&pulse, &grid)?;
    Ok(Readout {
        fidelity: out.curve.last(),
        integrity: Integrity::of(&out.run),
    })
}

fn run_cells(
    params: &[Vec<f64>],
    job: impl Fn(&[f64]) -> Result<Readout> + Sync,
) -> Vec<Result<Readout>> {
    params.par_iter().map(|p| job(p)).collect()
}

/// Readout fidelity on the (Δ, dark time) plane with `τ = Δ + dark`.
pub fn delta_tau_diagram(
    scenario: &Scenario,
    phi0: f64,
    t_read: f64,
    delta_grid: &[f64],
    dark_grid: &[f64],
    settings: &RunSettings,
) -> Result<SweepResult> {
    if delta_grid.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::param("delta_grid", "durations must be finite and > 0"));
    }
    if dark_grid.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::param("dark_grid", "dark times must be finite and >= 0"));
    }
    let params: Vec<Vec<f64>> = delta_grid
        .iter()
        .flat_map(|&d| dark_grid.iter().map(move |&k| vec![d, k]))
        .collect();
    let outcomes = run_cells(&params, |p| {
        let spec = RegularPulseSpec::new(p[0] + p[1], p[0], phi0)?;
        readout_fidelity(scenario, &spec, t_read, settings)
    });
    Ok(SweepResult::from_outcomes(&["delta", "dark"], t_read, params, outcomes))
}

/// Readout fidelity against the duty ratio `r = Δ/τ` at fixed `τ` and `Φ₀`.
pub fn ratio_scan(
    scenario: &Scenario,
    phi0: f64,
    tau: f64,
    ratios: &[f64],
    t_read: f64,
    settings: &RunSettings,
) -> Result<SweepResult> {
    if ratios.is_empty() {
        return Err(Error::EmptyScan);
    }
    if ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::param("ratios", "must lie in (0, 1]"));
    }
    let params: Vec<Vec<f64>> = ratios.iter().map(|&r| vec![r]).collect();
    let outcomes = run_cells(&params, |p| {
        let spec = RegularPulseSpec::from_ratio(tau, p[0], phi0)?;
        readout_fidelity(scenario, &spec, t_read, settings)
    });
    Ok(SweepResult::from_outcomes(&["ratio"], t_read, params, outcomes))
}

/// Threshold ratio: with the plateau `𝓕_sat = max{𝓕(r) : 0.8 ≤ r ≤ 1}`,
/// the smallest scanned `r` with `𝓕(r) ≥ 𝓕_sat − epsilon`.
pub fn detect_threshold(scan: &SweepResult, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be > 0"));
    }
    let mut points: Vec<(f64, f64)> = scan
        .cells
        .iter()
        .filter_map(|c| c.fidelity.map(|f| (c.params[0], f)))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyScan);
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let plateau = points
        .iter()
        .filter(|(r, _)| (0.8..=1.0).contains(r))
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if plateau == f64::NEG_INFINITY {
        return Err(Error::param("ratios", "need at least one ratio in [0.8, 1]"));
    }
    Ok(points
        .iter()
        .find(|(_, f)| *f >= plateau - epsilon)
        .map(|p| p.0)
        .expect("the plateau maximum itself qualifies"))
}

/// Readout fidelity against the pulse area `Φ₀` with the geometry of `base`.
pub fn phi0_scan(
    scenario: &Scenario,
    base: &RegularPulseSpec,
    phi0_values: &[f64],
    t_read: f64,
    settings: &RunSettings,
) -> Result<SweepResult> {
    if phi0_values.is_empty() {
        return Err(Error::EmptyScan);
    }
    if phi0_values.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::param("phi0_values", "must be finite and >= 0"));
    }
    let params: Vec<Vec<f64>> = phi0_values.iter().map(|&p| vec![p]).collect();
    let outcomes = run_cells(&params, |p| {
        readout_fidelity(scenario, &base.with_phi0(p[0])?, t_read, settings)
    });
    Ok(SweepResult::from_outcomes(&["phi0"], t_read, params, outcomes))
}

/// Mean fidelity curve over pulse realizations.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub curve: FidelityCurve,
    pub integrity: Integrity,
    pub n_ok: usize,
    /// Realization index and reason for every excluded realization.
    pub failures: Vec<(usize, String)>,
}

fn reduce_ensemble(outcomes: Vec<Result<MeOutcome>>) -> Result<EnsembleResult> {
    let mut rows = Vec::new();
    let mut times = None;
    let mut failures = Vec::new();
    let mut integrity = Integrity::default();
    for (i, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(o) => {
                integrity = integrity.merge(Integrity::of(&o.run));
                times.get_or_insert(o.curve.times);
                rows.push(o.curve.values);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    let times = times.ok_or(Error::EmptyEnsemble)?;
    let (values, stderr) = columnwise_mean_stderr(&rows);
    Ok(EnsembleResult {
        curve: FidelityCurve {
            times,
            values,
            stderr: Some(stderr),
        },
        integrity,
        n_ok: rows.len(),
        failures,
    })
}

/// Realization `i` uses the pulse seed derived from `(seed, "random-pulse", i)`.
#[allow(clippy::too_many_arguments)]
pub fn random_pulse_ensemble(
    scenario: &Scenario,
    base: &RegularPulseSpec,
    a_tau: f64,
    a_phi: f64,
    horizon: f64,
    n_realizations: usize,
    seed: u64,
    settings: &RunSettings,
) -> Result<EnsembleResult> {
    if n_realizations < 2 {
        return Err(Error::param("n_realizations", "need at least 2"));
    }
    RandomPulseSpec::new(*base, a_tau, a_phi, seed)?;
    let grid = settings.grid_for(base, horizon)?;
    let outcomes = (0..n_realizations)
        .into_par_iter()
        .map(|i| {
            let pulse_seed = StreamKey::new(seed, "random-pulse", i as u64).derive_seed();
            let spec = RandomPulseSpec::new(*base, a_tau, a_phi, pulse_seed)?;
            let pulse = realize_random(&spec, horizon)?;
            scenario.me_fidelity(&pulse, &grid)
        })
        .collect();
    reduce_ensemble(outcomes)
}

/// Realization `i` dresses the regular program with the noise seed derived
/// from `(seed, "noisy-pulse", i)`; `dressing.seed` is ignored.
pub fn noisy_pulse_ensemble(
    scenario: &Scenario,
    base: &RegularPulseSpec,
    dressing: &NoiseDressing,
    horizon: f64,
    n_realizations: usize,
    seed: u64,
    settings: &RunSettings,
) -> Result<EnsembleResult> {
    if n_realizations < 2 {
        return Err(Error::param("n_realizations", "need at least 2"));
    }
    let regular = realize_regular(base, horizon)?;
    let grid = settings.grid_for(base, horizon)?;
    let outcomes = (0..n_realizations)
        .into_par_iter()
        .map(|i| {
            let d = NoiseDressing {
                seed: StreamKey::new(seed, "noisy-pulse", i as u64).derive_seed(),
                ..*dressing
            };
            let pulse = apply_noise(&regular, &d)?;
            scenario.me_fidelity(&pulse, &grid)
        })
        .collect();
    reduce_ensemble(outcomes)
}

/// Regular minus noisy fidelity at the final time.
pub fn deviation_vs_regular(regular: &FidelityCurve, noisy: &FidelityCurve) -> f64 {
    regular.last() - noisy.last()
}

/// Level scheme of an NV-center ground-state spin triplet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NvPreset {
    /// Gap between `m_s = 0` and `m_s = −1` in GHz.
    pub gap_ghz: f64,
    /// `m_s` of levels `|1⟩, |2⟩, |3⟩`.
    pub spin_projections: [i8; 3],
    pub note: String,
    pub warning: Option<String>,
}

/// Zero-field splitting of the NV ground state in GHz.
pub const NV_ZERO_FIELD_SPLITTING_GHZ: f64 = 2.88;
/// Linear Zeeman coefficient in GHz per mT used by the gap formula.
pub const NV_ZEEMAN_GHZ_PER_MT: f64 = 0.1;

/// `ω_NV = 2.88 − 0.1·B_z` GHz for an axial field `b_z` in mT.
pub fn nv_level_preset(b_z: f64) -> Result<NvPreset> {
    if !(b_z.is_finite() && b_z >= 0.0) {
        return Err(Error::param("b_z", "must be finite and >= 0"));
    }
    let gap = NV_ZERO_FIELD_SPLITTING_GHZ - NV_ZEEMAN_GHZ_PER_MT * b_z;
    let warning = (gap <= 0.0).then(|| {
        format!("level crossing: gap {gap} GHz at B_z = {b_z} mT (crossing at 28.8 mT)")
    });
    Ok(NvPreset {
        gap_ghz: gap,
        spin_projections: [0, -1, 1],
        note: "set the frequency unit ω to the gap: one time unit is 1/ω_NV".into(),
        warning,
    })
}
