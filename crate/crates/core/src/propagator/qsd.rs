use rayon::prelude::*;

use super::{check_coeffs, record_phases, Channel, FidelityCurve, Frame, FrameFactors};
use crate::coeffs::OOCoefficients;
use crate::error::{Error, Result};
use crate::grid::SimGrid;
use crate::model::{EnvSpec, Ket3, LeoStructure, Op3, SystemSpec, C64};
use crate::noise::{generate_ou_path, NoisePath};
use crate::pulse::PulseProgram;
use crate::rng::StreamKey;
use crate::stats::{columnwise_mean_stderr, mean_and_stderr};

/// Unnormalized linear-QSD state on the record nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Co-rotating amplitudes.
    pub states: Vec<Ket3>,
}

impl TrajectoryRecord {
    /// Recorded states transformed to `frame`.
    pub fn states_in(
        &self,
        system: &SystemSpec,
        leo: &LeoStructure,
        pulse: &PulseProgram,
        grid: &SimGrid,
        frame: Frame,
    ) -> Result<Vec<Ket3>> {
        let factors = record_phases(system, leo, pulse, grid, frame)?;
        Ok(self
            .states
            .iter()
            .zip(&factors)
            .map(|(s, u)| Ket3::from_fn(|j, _| u[j] * s[j]))
            .collect())
    }
}

/// Linear QSD
/// `∂_t ψ = [−iH_sys − i c(t)Π + L z*_t − L†Ō(t)] ψ`, integrated with
/// classical RK4 in the frame co-rotating with `H_sys + c(t)Π`. The noise is
/// held at its node value across each step. Recorded states are co-rotating.
#[allow(clippy::too_many_arguments)]
pub fn propagate_trajectory(
    psi0: &Ket3,
    system: &SystemSpec,
    _env: &EnvSpec,
    leo: &LeoStructure,
    pulse: &PulseProgram,
    coeffs: &OOCoefficients,
    noise: &NoisePath,
    grid: &SimGrid,
) -> Result<TrajectoryRecord> {
    check_coeffs(system, coeffs, grid)?;
    if !noise.grid().same_nodes(grid) {
        return Err(Error::GridMismatch("noise path on a different grid".into()));
    }
    let channel = Channel::new(system);
    let frame = channel.frame_factors(system, leo, pulse, grid)?;
    integrate(psi0, &channel, &frame, coeffs, noise.samples(), grid)
}

fn integrate(
    psi0: &Ket3,
    channel: &Channel,
    frame: &FrameFactors,
    coeffs: &OOCoefficients,
    noise: &[C64],
    grid: &SimGrid,
) -> Result<TrajectoryRecord> {
    let nodes = coeffs.nodes();
    let mids = coeffs.mids();
    let h = grid.dt();

    let rhs = |psi: &Ket3, p: &[C64; 2], f: &[C64; 2], zc: C64| -> Ket3 {
        channel.apply_l(p, psi) * zc - channel.apply_ldag_o(p, f, psi)
    };

    let mut psi = *psi0;
    let mut times = vec![0.0];
    let mut states = vec![psi];
    for n in 0..grid.steps() {
        let zc = noise[n].conj();
        let (p0, pm, p1) = (&frame.nodes[n], &frame.mids[n], &frame.nodes[n + 1]);
        let k1 = rhs(&psi, p0, &nodes[n], zc);
        let k2 = rhs(&(psi + k1 * C64::from(0.5 * h)), pm, &mids[n], zc);
        let k3 = rhs(&(psi + k2 * C64::from(0.5 * h)), pm, &mids[n], zc);
        let k4 = rhs(&(psi + k3 * C64::from(h)), p1, &nodes[n + 1], zc);
        psi += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(h / 6.0);
        if grid.is_record(n + 1) {
            if !psi.iter().all(|z| z.is_finite()) {
                return Err(Error::Divergence {
                    what: "QSD trajectory",
                    time: grid.time(n + 1),
                });
            }
            times.push(grid.time(n + 1));
            states.push(psi);
        }
    }
    Ok(TrajectoryRecord { times, states })
}

fn survival(psi0: &Ket3, state: &Ket3, phases: &[C64; 3]) -> f64 {
    let overlap: C64 = (0..3).map(|j| psi0[j].conj() * phases[j] * state[j]).sum();
    overlap.norm_sqr()
}

const ROTATING: [C64; 3] = [C64::new(1.0, 0.0); 3];

/// Survival samples are normalized by `|⟨ψ₀|ψ₀⟩|²`, which removes the
/// rounding of `ψ₀` itself.
fn fidelity_from_samples(psi0: &Ket3, times: Vec<f64>, rows: &[Vec<f64>]) -> FidelityCurve {
    let reference = survival(psi0, psi0, &ROTATING);
    let (mean_p, se_p) = columnwise_mean_stderr(rows);
    let values: Vec<f64> = mean_p.iter().map(|p| (p / reference).max(0.0).sqrt()).collect();
    let stderr = values
        .iter()
        .zip(&se_p)
        .map(|(f, se)| {
            let se = se / reference;
            if *f > 0.0 {
                se / (2.0 * f)
            } else {
                se
            }
        })
        .collect();
    FidelityCurve {
        times,
        values,
        stderr: Some(stderr),
    }
}

/// `𝓕(t) = sqrt(M[|⟨ψ₀|ψ_t^rot⟩|²])`; the standard error is propagated
/// through the square root by the delta method.
pub fn qsd_fidelity(
    psi0: &Ket3,
    trajectories: &[TrajectoryRecord],
    system: &SystemSpec,
    leo: &LeoStructure,
    pulse: &PulseProgram,
    grid: &SimGrid,
    frame: Frame,
) -> Result<FidelityCurve> {
    if trajectories.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let phases = record_phases(system, leo, pulse, grid, frame)?;
    let rows: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|tr| {
            tr.states
                .iter()
                .zip(&phases)
                .map(|(s, ph)| survival(psi0, s, ph))
                .collect()
        })
        .collect();
    Ok(fidelity_from_samples(psi0, trajectories[0].times.clone(), &rows))
}

/// Ensemble averages of a linear-QSD run.
#[derive(Debug, Clone)]
pub struct QsdEnsemble {
    pub fidelity: FidelityCurve,
    /// Mean and standard error of `⟨ψ_t|ψ_t⟩` per record node.
    pub norm: Vec<(f64, f64)>,
    /// Mean of `|ψ_t⟩⟨ψ_t|` (co-rotating frame) per record node.
    pub rho_mean: Vec<Op3>,
    /// Standard errors of the real and imaginary parts of `rho_mean`.
    pub rho_stderr: Vec<[[f64; 9]; 2]>,
    pub n_traj: usize,
}

struct TrajectorySummary {
    survival: Vec<f64>,
    norm: Vec<f64>,
    rho: Vec<Op3>,
}

/// Runs `n_traj` trajectories; trajectory `i` uses the noise stream
/// `(seed, "qsd-noise", i)` and reductions run in index order, so the result
/// does not depend on the worker count.
#[allow(clippy::too_many_arguments)]
pub fn qsd_ensemble(
    psi0: &Ket3,
    system: &SystemSpec,
    env: &EnvSpec,
    leo: &LeoStructure,
    pulse: &PulseProgram,
    coeffs: &OOCoefficients,
    grid: &SimGrid,
    n_traj: usize,
    seed: u64,
) -> Result<QsdEnsemble> {
    if n_traj == 0 {
        return Err(Error::EmptyEnsemble);
    }
    check_coeffs(system, coeffs, grid)?;
    let channel = Channel::new(system);
    let frame = channel.frame_factors(system, leo, pulse, grid)?;
    let summaries: Vec<TrajectorySummary> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let noise = generate_ou_path(env, grid, StreamKey::new(seed, "qsd-noise", i));
            let tr = integrate(psi0, &channel, &frame, coeffs, noise.samples(), grid)?;
            Ok(TrajectorySummary {
                survival: tr.states.iter().map(|s| survival(psi0, s, &ROTATING)).collect(),
                norm: tr.states.iter().map(|s| s.norm_squared()).collect(),
                rho: tr.states.iter().map(|s| s * s.adjoint()).collect(),
            })
        })
        .collect::<Result<_>>()?;

    let times = grid.record_times();
    let survival_rows: Vec<Vec<f64>> = summaries.iter().map(|s| s.survival.clone()).collect();
    let fidelity = fidelity_from_samples(psi0, times.clone(), &survival_rows);

    let records = times.len();
    let mut norm = Vec::with_capacity(records);
    let mut rho_mean = Vec::with_capacity(records);
    let mut rho_stderr = Vec::with_capacity(records);
    let mut column = Vec::with_capacity(n_traj);
    for r in 0..records {
        column.clear();
        column.extend(summaries.iter().map(|s| s.norm[r]));
        norm.push(mean_and_stderr(&column));

        let mut mean = Op3::zeros();
        let mut err = [[0.0; 9]; 2];
        for e in 0..9 {
            let (i, j) = (e / 3, e % 3);
            for (part, pick) in [(0usize, true), (1, false)] {
                column.clear();
                column.extend(summaries.iter().map(|s| {
                    let z = s.rho[r][(i, j)];
                    if pick {
                        z.re
                    } else {
                        z.im
                    }
                }));
                let (m, se) = mean_and_stderr(&column);
                err[part][e] = se;
                if pick {
                    mean[(i, j)].re = m;
                } else {
                    mean[(i, j)].im = m;
                }
            }
        }
        rho_mean.push(mean);
        rho_stderr.push(err);
    }
    Ok(QsdEnsemble {
        fidelity,
        norm,
        rho_mean,
        rho_stderr,
        n_traj,
    })
}
