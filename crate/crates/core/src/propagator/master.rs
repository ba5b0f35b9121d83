use log::warn;

use super::{check_coeffs, record_phases, Channel, FidelityCurve, Frame};
use crate::coeffs::OOCoefficients;
use crate::error::{Error, Result};
use crate::grid::SimGrid;
use crate::model::{EnvSpec, Ket3, LeoStructure, Op3, SystemSpec, C64};
use crate::pulse::PulseProgram;

const HERMITICITY_ABORT: f64 = 1e-8;
const POSITIVITY_WARN: f64 = -1e-6;

/// Density-matrix trajectory on the record nodes, with integrity monitors.
#[derive(Debug, Clone)]
pub struct MeRun {
    pub grid: SimGrid,
    pub times: Vec<f64>,
    /// Co-rotating density matrices.
    pub states: Vec<Op3>,
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl MeRun {
    /// Recorded states transformed to `frame`.
    pub fn states_in(
        &self,
        system: &SystemSpec,
        leo: &LeoStructure,
        pulse: &PulseProgram,
        frame: Frame,
    ) -> Result<Vec<Op3>> {
        let factors = record_phases(system, leo, pulse, &self.grid, frame)?;
        Ok(self
            .states
            .iter()
            .zip(&factors)
            .map(|(rho, u)| Op3::from_fn(|i, j| u[i] * rho[(i, j)] * u[j].conj()))
            .collect())
    }
}

struct Generator {
    channel: Channel,
}

impl Generator {
    /// `X̃ + X̃†` with `X̃ = L̃ρ̃Õ† − ρ̃Õ†L̃`; the Hamiltonian part is absorbed
    /// by the co-rotating frame.
    #[inline]
    fn rhs(&self, rho: &Op3, p: &[C64; 2], f: &[C64; 2]) -> Op3 {
        let x = self.channel.dissipator_half(p, f, rho);
        x + x.adjoint()
    }
}

fn hermiticity_error(rho: &Op3) -> f64 {
    (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn min_eigenvalue(rho: &Op3) -> f64 {
    let hermitian = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    hermitian
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Master equation
/// `∂_t ρ = −i[H_sys + c(t)Π, ρ] + [L, ρŌ†] + [Ōρ, L†]`, integrated with
/// classical RK4 in the frame co-rotating with `H_sys + c(t)Π`, where only
/// the dissipator remains. Recorded states are co-rotating.
pub fn me_propagate(
    rho0: &Op3,
    system: &SystemSpec,
    _env: &EnvSpec,
    leo: &LeoStructure,
    pulse: &PulseProgram,
    coeffs: &OOCoefficients,
    grid: &SimGrid,
) -> Result<MeRun> {
    check_coeffs(system, coeffs, grid)?;
    let channel = Channel::new(system);
    let frame = channel.frame_factors(system, leo, pulse, grid)?;
    let generator = Generator { channel };
    let h = grid.dt();
    let nodes = coeffs.nodes();
    let mids = coeffs.mids();

    let mut rho = *rho0;
    let mut run = MeRun {
        grid: *grid,
        times: Vec::new(),
        states: Vec::new(),
        max_trace_error: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    let record = |n: usize, rho: &Op3, run: &mut MeRun| -> Result<()> {
        let t = grid.time(n);
        let herm = hermiticity_error(rho);
        if !rho.iter().all(|z| z.is_finite()) || herm > HERMITICITY_ABORT {
            return Err(Error::IntegratorFault {
                time: t,
                reason: format!("density matrix lost Hermiticity ({herm:e})"),
            });
        }
        let trace_err = (rho.trace() - C64::new(1.0, 0.0)).norm();
        let min_eig = min_eigenvalue(rho);
        if min_eig < POSITIVITY_WARN {
            warn!("density matrix eigenvalue {min_eig:e} at t = {t}; consider a smaller dt");
        }
        run.max_trace_error = run.max_trace_error.max(trace_err);
        run.max_hermiticity_error = run.max_hermiticity_error.max(herm);
        run.min_eigenvalue = run.min_eigenvalue.min(min_eig);
        run.times.push(t);
        run.states.push(*rho);
        Ok(())
    };

    record(0, &rho, &mut run)?;
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    for n in 0..grid.steps() {
        let (p0, pm, p1) = (&frame.nodes[n], &frame.mids[n], &frame.nodes[n + 1]);
        let k1 = generator.rhs(&rho, p0, &nodes[n]);
        let k2 = generator.rhs(&(rho + k1 * half), pm, &mids[n]);
        let k3 = generator.rhs(&(rho + k2 * half), pm, &mids[n]);
        let k4 = generator.rhs(&(rho + k3 * full), p1, &nodes[n + 1]);
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        if grid.is_record(n + 1) {
            record(n + 1, &rho, &mut run)?;
        }
    }
    Ok(run)
}

/// `𝓕(t) = sqrt(⟨ψ₀|ρ^frame(t)|ψ₀⟩)` on the record nodes.
pub fn me_fidelity(
    psi0: &Ket3,
    run: &MeRun,
    system: &SystemSpec,
    leo: &LeoStructure,
    pulse: &PulseProgram,
    frame: Frame,
) -> Result<FidelityCurve> {
    let phases = record_phases(system, leo, pulse, &run.grid, frame)?;
    let overlap = |rho: &Op3, rotated: &Ket3| (rotated.adjoint() * rho * rotated)[(0, 0)].re;
    // Normalizing by ⟨ψ₀|ψ₀⟩² removes the rounding of ψ₀ itself.
    let reference = overlap(&(psi0 * psi0.adjoint()), psi0);
    let values = run
        .states
        .iter()
        .zip(&phases)
        .map(|(rho, ph)| {
            let rotated = Ket3::from_fn(|j, _| ph[j].conj() * psi0[j]);
            (overlap(rho, &rotated) / reference).max(0.0).sqrt()
        })
        .collect();
    Ok(FidelityCurve {
        times: run.times.clone(),
        values,
        stderr: None,
    })
}
