//! Complex colored Gaussian noise for the QSD driver.
//!
//! The path `z_t` is an exactly discretized complex Ornstein–Uhlenbeck
//! process with `M[z_t z*_s] = α(t, s)` and `M[z_t z_s] = 0`. The QSD
//! equation is driven by `z*_t`.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::SimGrid;
use crate::model::{EnvSpec, C64};
use crate::rng::StreamKey;

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: SimGrid,
    samples: Vec<C64>,
}

impl NoisePath {
    /// Wrap externally produced samples, one per grid node.
    pub fn from_samples(grid: SimGrid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != grid.nodes() {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} grid nodes",
                samples.len(),
                grid.nodes()
            )));
        }
        if samples.iter().any(|z| !z.is_finite()) {
            return Err(Error::param("samples", "must be finite"));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: SimGrid) -> Self {
        Self {
            samples: vec![C64::default(); grid.nodes()],
            grid,
        }
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// Columns `t, re, im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re", "im"])?;
        for (n, z) in self.samples.iter().enumerate() {
            w.write_record([
                self.grid.time(n).to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn circular_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Stationary path on `grid` from the stream `key`:
/// `z_{n+1} = z_n e^{−(γ+iΩ)dt} + ξ_n √(Γγ/2 · (1 − e^{−2γ dt}))`,
/// `z_0 = ξ √(Γγ/2)`.
pub fn generate_ou_path(env: &EnvSpec, grid: &SimGrid, key: StreamKey<'_>) -> NoisePath {
    let mut samples = Vec::with_capacity(grid.nodes());
    let variance = env.variance();
    if variance == 0.0 {
        return NoisePath::zeros(*grid);
    }
    let dt = grid.dt();
    let gamma = env.memory_rate();
    let propagator = (C64::new(-gamma, -env.center()) * dt).exp();
    let kick = (variance * (1.0 - (-2.0 * gamma * dt).exp())).sqrt();
    let mut rng = key.rng();
    let mut z = circular_gaussian(&mut rng) * variance.sqrt();
    samples.push(z);
    for _ in 0..grid.steps() {
        z = z * propagator + circular_gaussian(&mut rng) * kick;
        samples.push(z);
    }
    NoisePath {
        grid: *grid,
        samples,
    }
}

/// Estimate with the standard error over paths (0 for a single path).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEstimate {
    pub value: C64,
    pub stderr: f64,
}

fn lagged_mean(paths: &[NoisePath], lag: f64, conjugate: bool) -> Result<CovarianceEstimate> {
    let first = paths.first().ok_or(Error::EmptyEnsemble)?;
    let grid = first.grid;
    if paths.iter().any(|p| !p.grid.same_nodes(&grid)) {
        return Err(Error::GridMismatch("noise paths on different grids".into()));
    }
    let steps = lag / grid.dt();
    let m = steps.round();
    if lag < 0.0 || (steps - m).abs() > 1e-6 * steps.max(1.0) {
        return Err(Error::param("lag", "must be a non-negative multiple of dt"));
    }
    let m = m as usize;
    if m >= grid.nodes() {
        return Err(Error::param("lag", "exceeds the grid horizon"));
    }
    let per_path: Vec<C64> = paths
        .iter()
        .map(|p| {
            let s = &p.samples;
            let count = s.len() - m;
            let sum: C64 = (0..count)
                .map(|i| {
                    let other = if conjugate { s[i].conj() } else { s[i] };
                    s[i + m] * other
                })
                .sum();
            sum / count as f64
        })
        .collect();
    let n = per_path.len() as f64;
    let mean: C64 = per_path.iter().sum::<C64>() / n;
    let stderr = if per_path.len() < 2 {
        0.0
    } else {
        let var = per_path.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Ok(CovarianceEstimate {
        value: mean,
        stderr,
    })
}

/// Mean of `z_{t+lag} z*_t` over paths and time origins.
pub fn empirical_covariance(paths: &[NoisePath], lag: f64) -> Result<CovarianceEstimate> {
    lagged_mean(paths, lag, true)
}

/// Mean of `z_{t+lag} z_t`; vanishes for circular noise.
pub fn empirical_pseudo_covariance(paths: &[NoisePath], lag: f64) -> Result<CovarianceEstimate> {
    lagged_mean(paths, lag, false)
}
