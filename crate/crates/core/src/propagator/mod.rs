//! Open-system propagation: linear QSD trajectories and the exact master
//! equation, with fidelity read out in the frame co-rotating with
//! `H_sys + c(t)Π`.

mod equivalence;
mod master;
mod qsd;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coeffs::{integrate_coeffs, OOCoefficients};
use crate::error::{Error, Result};
use crate::grid::SimGrid;
use crate::model::{
    rotating_frame_phases, EnvSpec, Ket3, LeoStructure, Op3, SystemKind, SystemSpec, C64,
};
use crate::pulse::PulseProgram;

pub use equivalence::{reduced_equivalence_fidelity, v_lambda_equivalent_fidelity, EquivalenceCurves};
pub use master::{me_fidelity, me_propagate, MeRun};
pub use qsd::{propagate_trajectory, qsd_ensemble, qsd_fidelity, QsdEnsemble, TrajectoryRecord};

/// Frame in which fidelity is read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Co-rotating with `H_sys + c(t)Π`.
    #[default]
    Rotating,
    /// Schrödinger frame (debugging aid).
    Lab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl FidelityCurve {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("fidelity curve is never empty")
    }

    /// Value at the record time closest to `t`.
    pub fn at(&self, t: f64) -> f64 {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.values[idx]
    }

    pub fn stderr_at(&self, t: f64) -> Option<f64> {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)?;
        self.stderr.as_ref().map(|s| s[idx])
    }

    /// Largest pointwise absolute difference to `other` (same times).
    pub fn max_abs_diff(&self, other: &FidelityCurve) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Columns `t, fidelity, stderr`; `stderr` is empty for deterministic curves.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "fidelity", "stderr"])?;
        for (i, (t, f)) in self.times.iter().zip(&self.values).enumerate() {
            let se = self
                .stderr
                .as_ref()
                .map(|s| s[i].to_string())
                .unwrap_or_default();
            w.write_record([t.to_string(), f.to_string(), se])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The two-entry leakage channel shared by `L` and `Ō`: entries sit at
/// `(row_k, col_k)` with weights `g_k` (for `L`) or coefficients `F_k`
/// (for `Ō`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Channel {
    rows: [usize; 2],
    cols: [usize; 2],
    couplings: [f64; 2],
}

impl Channel {
    pub(crate) fn new(system: &SystemSpec) -> Self {
        let (rows, cols) = match system.kind() {
            SystemKind::VType => ([2, 2], [0, 1]),
            SystemKind::LambdaType => ([1, 2], [0, 0]),
        };
        Self {
            rows,
            cols,
            couplings: system.couplings(),
        }
    }

    /// `L̃ ψ`, where the entries of `L̃` carry the frame factors `p`.
    #[inline]
    pub(crate) fn apply_l(&self, p: &[C64; 2], psi: &Ket3) -> Ket3 {
        let mut out = Ket3::zeros();
        for k in 0..2 {
            out[self.rows[k]] += psi[self.cols[k]] * p[k] * self.couplings[k];
        }
        out
    }

    /// `L̃† Õ ψ`.
    #[inline]
    pub(crate) fn apply_ldag_o(&self, p: &[C64; 2], f: &[C64; 2], psi: &Ket3) -> Ket3 {
        let mut o_psi = Ket3::zeros();
        for k in 0..2 {
            o_psi[self.rows[k]] += f[k] * p[k] * psi[self.cols[k]];
        }
        let mut out = Ket3::zeros();
        for k in 0..2 {
            out[self.cols[k]] += o_psi[self.rows[k]] * p[k].conj() * self.couplings[k];
        }
        out
    }

    /// `L̃ ρ Õ† − ρ Õ† L̃`.
    #[inline]
    pub(crate) fn dissipator_half(&self, p: &[C64; 2], f: &[C64; 2], rho: &Op3) -> Op3 {
        let mut out = Op3::zeros();
        for k in 0..2 {
            for l in 0..2 {
                let w = (f[l] * p[l]).conj() * p[k] * self.couplings[k];
                out[(self.rows[k], self.rows[l])] += w * rho[(self.cols[k], self.cols[l])];
                if self.rows[l] == self.rows[k] {
                    for i in 0..3 {
                        out[(i, self.cols[k])] -= w * rho[(i, self.cols[l])];
                    }
                }
            }
        }
        out
    }

    /// Factors `e^{i(θ_row − θ_col)}` that carry the channel into the frame
    /// co-rotating with `H_sys + c(t)Π`, `θ_j = ω_j t + Π_j C(t)`, at every
    /// node and step midpoint.
    pub(crate) fn frame_factors(
        &self,
        system: &SystemSpec,
        leo: &LeoStructure,
        pulse: &PulseProgram,
        grid: &SimGrid,
    ) -> Result<FrameFactors> {
        let omega = system.omega();
        let proj = leo.projector();
        let at = |t: f64, c: f64| -> [C64; 2] {
            std::array::from_fn(|k| {
                let (r, col) = (self.rows[k], self.cols[k]);
                C64::from_polar(1.0, (omega[r] - omega[col]) * t + (proj[r] - proj[col]) * c)
            })
        };
        let integrals = pulse.node_integrals(grid)?;
        let nodes = (0..grid.nodes()).map(|n| at(grid.time(n), integrals[n])).collect();
        let mut mids = Vec::with_capacity(grid.steps());
        for n in 0..grid.steps() {
            let t = 0.5 * (grid.time(n) + grid.time(n + 1));
            mids.push(at(t, pulse.integral_to(t)?));
        }
        Ok(FrameFactors { nodes, mids })
    }

    #[cfg(test)]
    pub(crate) fn dense_l(&self) -> Op3 {
        self.dense(&[C64::new(self.couplings[0], 0.0), C64::new(self.couplings[1], 0.0)])
    }

    #[cfg(test)]
    pub(crate) fn dense(&self, values: &[C64; 2]) -> Op3 {
        let mut m = Op3::zeros();
        for k in 0..2 {
            m[(self.rows[k], self.cols[k])] += values[k];
        }
        m
    }
}

/// Channel frame factors on the integration grid.
pub(crate) struct FrameFactors {
    pub(crate) nodes: Vec<[C64; 2]>,
    pub(crate) mids: Vec<[C64; 2]>,
}

/// Bundle of the static inputs shared by every propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub system: SystemSpec,
    pub env: EnvSpec,
    pub psi0: Ket3,
}

/// ME fidelity curve plus the run's integrity diagnostics.
#[derive(Debug, Clone)]
pub struct MeOutcome {
    pub curve: FidelityCurve,
    pub run: MeRun,
}

/// ME fidelity with its step-halving confirmation.
#[derive(Debug, Clone)]
pub struct ConfirmedOutcome {
    pub outcome: MeOutcome,
    /// Largest pointwise fidelity change between `dt` and `dt/2`.
    pub drift: f64,
}

impl Scenario {
    pub fn new(system: SystemSpec, env: EnvSpec, psi0: Ket3) -> Result<Self> {
        let norm = psi0.norm();
        if (norm - 1.0).abs() > 1e-10 || psi0.iter().any(|z| !z.is_finite()) {
            return Err(Error::param("psi0", format!("must be normalized (norm = {norm})")));
        }
        Ok(Self { system, env, psi0 })
    }

    /// Scenario with the kind's default initial state.
    pub fn with_default_state(system: SystemSpec, env: EnvSpec) -> Self {
        Self {
            psi0: system.default_initial_state(),
            system,
            env,
        }
    }

    pub fn leo(&self) -> LeoStructure {
        LeoStructure::for_kind(self.system.kind())
    }

    pub fn coefficients(&self, pulse: &PulseProgram, grid: &SimGrid) -> Result<OOCoefficients> {
        integrate_coeffs(&self.system, &self.env, pulse, grid)
    }

    pub fn me_fidelity(&self, pulse: &PulseProgram, grid: &SimGrid) -> Result<MeOutcome> {
        self.me_fidelity_in(pulse, grid, Frame::Rotating)
    }

    pub fn me_fidelity_in(
        &self,
        pulse: &PulseProgram,
        grid: &SimGrid,
        frame: Frame,
    ) -> Result<MeOutcome> {
        let coeffs = self.coefficients(pulse, grid)?;
        let rho0 = self.psi0 * self.psi0.adjoint();
        let run = me_propagate(&rho0, &self.system, &self.env, &self.leo(), pulse, &coeffs, grid)?;
        let curve = me_fidelity(&self.psi0, &run, &self.system, &self.leo(), pulse, frame)?;
        Ok(MeOutcome { curve, run })
    }

    /// Runs at `dt` and `dt/2` and reports the drift between the two.
    pub fn me_fidelity_confirmed(
        &self,
        pulse: &PulseProgram,
        grid: &SimGrid,
    ) -> Result<ConfirmedOutcome> {
        let coarse = self.me_fidelity(pulse, grid)?;
        let fine = self.me_fidelity(pulse, &grid.refined())?;
        let drift = coarse.curve.max_abs_diff(&fine.curve);
        Ok(ConfirmedOutcome {
            outcome: coarse,
            drift,
        })
    }

    pub fn qsd(
        &self,
        pulse: &PulseProgram,
        grid: &SimGrid,
        n_traj: usize,
        seed: u64,
    ) -> Result<QsdEnsemble> {
        let coeffs = self.coefficients(pulse, grid)?;
        qsd_ensemble(
            &self.psi0,
            &self.system,
            &self.env,
            &self.leo(),
            pulse,
            &coeffs,
            grid,
            n_traj,
            seed,
        )
    }
}

/// Phases for every record node of `grid`.
/// Per-level factors `u_j` taking co-rotating amplitudes to the requested
/// frame on the record nodes: `ψ_j = u_j ψ̃_j`.
pub(crate) fn record_phases(
    system: &SystemSpec,
    leo: &LeoStructure,
    pulse: &PulseProgram,
    grid: &SimGrid,
    frame: Frame,
) -> Result<Vec<[C64; 3]>> {
    let integrals = pulse.record_integrals(grid)?;
    Ok(grid
        .record_nodes()
        .into_iter()
        .zip(integrals)
        .map(|(n, c)| match frame {
            Frame::Rotating => [C64::new(1.0, 0.0); 3],
            Frame::Lab => rotating_frame_phases(system, leo, grid.time(n), c).map(|z| z.conj()),
        })
        .collect())
}

pub(crate) fn check_coeffs(system: &SystemSpec, coeffs: &OOCoefficients, grid: &SimGrid) -> Result<()> {
    if coeffs.kind() != system.kind() {
        return Err(Error::param("coeffs", "kind does not match the system"));
    }
    if !coeffs.grid().same_nodes(grid) {
        return Err(Error::GridMismatch("coefficients computed on a different grid".into()));
    }
    Ok(())
}
