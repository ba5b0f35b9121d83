//! Rectangular LEO pulse programs: regular, randomized and noise-dressed.
//!
//! A [`PulseProgram`] is a piecewise-constant amplitude `c(t)` on
//! `[0, horizon]` together with its exact running integral `C(t)`.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimGrid;
use crate::rng::StreamKey;

/// Period `tau`, duration `delta` and per-period area `phi0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularPulseSpec {
    tau: f64,
    delta: f64,
    phi0: f64,
}

impl RegularPulseSpec {
    pub fn new(tau: f64, delta: f64, phi0: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::param("tau", "must be finite and > 0"));
        }
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::param("delta", "must be finite and > 0"));
        }
        if delta > tau {
            return Err(Error::param(
                "delta",
                format!("duration delta = {delta} exceeds period tau = {tau}"),
            ));
        }
        if !phi0.is_finite() || !(phi0 / delta).is_finite() {
            return Err(Error::param("phi0", "pulse area and amplitude must be finite"));
        }
        Ok(Self { tau, delta, phi0 })
    }

    /// Regular pulse from the duty ratio `r = Δ/τ`.
    pub fn from_ratio(tau: f64, ratio: f64, phi0: f64) -> Result<Self> {
        Self::new(tau, ratio * tau, phi0)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn ratio(&self) -> f64 {
        self.delta / self.tau
    }

    pub fn dark_time(&self) -> f64 {
        self.tau - self.delta
    }

    pub fn amplitude(&self) -> f64 {
        self.phi0 / self.delta
    }

    pub fn with_phi0(&self, phi0: f64) -> Result<Self> {
        Self::new(self.tau, self.delta, phi0)
    }
}

/// Regular pulse whose period and area are redrawn every quasi-period as
/// `X' = X(1 + A_X R_X)` with `R_X` uniform on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomPulseSpec {
    pub base: RegularPulseSpec,
    pub a_tau: f64,
    pub a_phi: f64,
    pub seed: u64,
}

impl RandomPulseSpec {
    pub fn new(base: RegularPulseSpec, a_tau: f64, a_phi: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&a_tau) {
            return Err(Error::param("a_tau", "must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&a_phi) {
            return Err(Error::param("a_phi", "must lie in [0, 1]"));
        }
        Ok(Self {
            base,
            a_tau,
            a_phi,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Noise on the whole time axis.
    Global,
    /// Noise only inside pulse windows; dark intervals stay dark.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDistribution {
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// Standard normal.
    Gaussian,
}

/// Additive amplitude noise `(Φ₀/τ)·W·n_k`, held constant on each resample
/// interval `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseDressing {
    pub mode: NoiseMode,
    pub w: f64,
    pub dist: NoiseDistribution,
    pub resample_interval: f64,
    pub seed: u64,
}

impl NoiseDressing {
    /// Dressing with the default resample interval `Δ/10`.
    pub fn with_default_interval(
        mode: NoiseMode,
        w: f64,
        dist: NoiseDistribution,
        base: &RegularPulseSpec,
        seed: u64,
    ) -> Self {
        Self {
            mode,
            w,
            dist,
            resample_interval: base.delta() / 10.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
    /// Inside a pulse window (as opposed to dark time).
    pub pulse: bool,
}

/// Nominal parameters a program was realized from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseReference {
    pub tau: f64,
    pub delta: f64,
    pub phi0: f64,
}

/// Realized period length and pulse area of one (quasi-)period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecord {
    pub tau: f64,
    pub phi: f64,
}

/// One-sided amplitude samples for an RK4 step `[t_n, t_n + dt]`: the
/// right limit at `t_n`, the midpoint value, and the left limit at
/// `t_n + dt`. Steps whose ends coincide with pulse edges therefore see only
/// the amplitude inside the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAmplitudes {
    pub start: f64,
    pub mid: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram {
    horizon: f64,
    segments: Vec<Segment>,
    /// `C` at each segment start, plus the total at the end.
    cumulative: Vec<f64>,
    periods: Vec<PeriodRecord>,
    reference: Option<PulseReference>,
}

impl PulseProgram {
    fn from_segments(
        horizon: f64,
        segments: Vec<Segment>,
        periods: Vec<PeriodRecord>,
        reference: Option<PulseReference>,
    ) -> Self {
        let mut cumulative = Vec::with_capacity(segments.len() + 1);
        let mut acc = 0.0;
        cumulative.push(acc);
        for s in &segments {
            acc += s.amplitude * (s.end - s.start);
            cumulative.push(acc);
        }
        Self {
            horizon,
            segments,
            cumulative,
            periods,
            reference,
        }
    }

    /// `c(t) ≡ 0` on `[0, horizon]`.
    pub fn dark(horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        let seg = Segment {
            start: 0.0,
            end: horizon,
            amplitude: 0.0,
            pulse: false,
        };
        Ok(Self::from_segments(horizon, vec![seg], Vec::new(), None))
    }

    /// Lay out consecutive quasi-periods; each one is dark for `τ_n − Δ`
    /// then carries amplitude `Φ_n/Δ` for `Δ`.
    fn from_periods(
        horizon: f64,
        delta: f64,
        reference: PulseReference,
        mut next_period: impl FnMut() -> PeriodRecord,
    ) -> Self {
        let mut segments = Vec::new();
        let mut periods = Vec::new();
        let mut t0 = 0.0;
        while t0 < horizon {
            let mut rec = next_period();
            rec.tau = rec.tau.max(delta);
            periods.push(rec);
            let pulse_start = t0 + rec.tau - delta;
            if pulse_start > t0 {
                segments.push(Segment {
                    start: t0,
                    end: pulse_start.min(horizon),
                    amplitude: 0.0,
                    pulse: false,
                });
            }
            if pulse_start < horizon {
                segments.push(Segment {
                    start: pulse_start,
                    end: (t0 + rec.tau).min(horizon),
                    amplitude: rec.phi / delta,
                    pulse: true,
                });
            }
            t0 += rec.tau;
        }
        Self::from_segments(horizon, segments, periods, Some(reference))
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn periods(&self) -> &[PeriodRecord] {
        &self.periods
    }

    pub fn reference(&self) -> Option<PulseReference> {
        self.reference
    }

    pub fn pulse_segment_count(&self) -> usize {
        self.segments.iter().filter(|s| s.pulse).count()
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.horizon.max(1.0);
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(t.clamp(0.0, self.horizon))
    }

    /// Index of the last segment starting at or before `t`.
    fn locate(&self, t: f64) -> usize {
        self.segments
            .partition_point(|s| s.start <= t)
            .saturating_sub(1)
    }

    /// `c(t)`. Pulse windows are closed: at an edge between dark and pulse
    /// time the pulse amplitude is returned.
    pub fn amplitude_at(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        let idx = self.locate(t);
        let seg = &self.segments[idx];
        if t == seg.start && idx > 0 && !seg.pulse && self.segments[idx - 1].pulse {
            return Ok(self.segments[idx - 1].amplitude);
        }
        Ok(seg.amplitude)
    }

    /// `C(t) = ∫₀ᵗ c(s) ds`, exact from segment arithmetic.
    pub fn integral_to(&self, t: f64) -> Result<f64> {
        let t = self.check_time(t)?;
        Ok(self.integral_unchecked(t))
    }

    fn integral_unchecked(&self, t: f64) -> f64 {
        let idx = self.locate(t);
        let seg = &self.segments[idx];
        self.cumulative[idx] + seg.amplitude * (t.min(seg.end) - seg.start)
    }

    pub fn total_integral(&self) -> f64 {
        *self.cumulative.last().expect("cumulative is never empty")
    }

    /// Per-step amplitude samples for the RK4 integrators on `grid`.
    pub fn step_amplitudes(&self, grid: &SimGrid) -> Result<Vec<StepAmplitudes>> {
        self.check_grid(grid)?;
        let dt = grid.dt();
        let eps = 1e-9 * dt;
        let amp = |t: f64| self.segments[self.locate(t)].amplitude;
        Ok((0..grid.steps())
            .map(|n| {
                let t0 = grid.time(n);
                let t1 = grid.time(n + 1);
                StepAmplitudes {
                    start: amp(t0 + eps),
                    mid: amp(0.5 * (t0 + t1)),
                    end: amp(t1 - eps),
                }
            })
            .collect())
    }

    /// `C(t)` on every record node of `grid`.
    pub fn record_integrals(&self, grid: &SimGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok(grid
            .record_nodes()
            .into_iter()
            .map(|n| self.integral_unchecked(grid.time(n)))
            .collect())
    }

    /// `C(t)` on every node of `grid`.
    pub fn node_integrals(&self, grid: &SimGrid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        Ok((0..grid.nodes())
            .map(|n| self.integral_unchecked(grid.time(n)))
            .collect())
    }

    fn check_grid(&self, grid: &SimGrid) -> Result<()> {
        if (grid.horizon() - self.horizon).abs() > 1e-12 * self.horizon.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "pulse horizon {} vs grid horizon {}",
                self.horizon,
                grid.horizon()
            )));
        }
        Ok(())
    }

    /// Columns `t_start, t_end, amplitude`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_start", "t_end", "amplitude"])?;
        for s in &self.segments {
            w.write_record([s.start.to_string(), s.end.to_string(), s.amplitude.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::param("horizon", "must be finite and > 0"));
    }
    Ok(())
}

/// `c(t) = Φ₀/Δ` on `[nτ − Δ, nτ]` for `n ≥ 1`, zero elsewhere.
pub fn realize_regular(spec: &RegularPulseSpec, horizon: f64) -> Result<PulseProgram> {
    check_horizon(horizon)?;
    let reference = PulseReference {
        tau: spec.tau,
        delta: spec.delta,
        phi0: spec.phi0,
    };
    let rec = PeriodRecord {
        tau: spec.tau,
        phi: spec.phi0,
    };
    Ok(PulseProgram::from_periods(horizon, spec.delta, reference, || rec))
}

/// Quasi-periods `τ_n = τ(1 + A_τ u_n)` (clamped to at least Δ) and areas
/// `Φ_n = Φ₀(1 + A_Φ v_n)`, with `u_n`, `v_n` from two independent streams.
pub fn realize_random(spec: &RandomPulseSpec, horizon: f64) -> Result<PulseProgram> {
    check_horizon(horizon)?;
    let base = spec.base;
    let reference = PulseReference {
        tau: base.tau,
        delta: base.delta,
        phi0: base.phi0,
    };
    let mut period_rng = StreamKey::new(spec.seed, "pulse-period", 0).rng();
    let mut strength_rng = StreamKey::new(spec.seed, "pulse-strength", 0).rng();
    Ok(PulseProgram::from_periods(horizon, base.delta, reference, || {
        let u: f64 = period_rng.random_range(-1.0..=1.0);
        let v: f64 = strength_rng.random_range(-1.0..=1.0);
        PeriodRecord {
            tau: base.tau * (1.0 + spec.a_tau * u),
            phi: base.phi0 * (1.0 + spec.a_phi * v),
        }
    }))
}

/// Dress a realized program with amplitude noise.
pub fn apply_noise(program: &PulseProgram, dressing: &NoiseDressing) -> Result<PulseProgram> {
    let h = dressing.resample_interval;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::param("resample_interval", "must be finite and > 0"));
    }
    if !dressing.w.is_finite() || dressing.w < 0.0 {
        return Err(Error::param("w", "must be finite and >= 0"));
    }
    let reference = program.reference.ok_or_else(|| {
        Error::param("program", "noise needs a program realized from a pulse spec")
    })?;
    if h > reference.delta * (1.0 + 1e-12) {
        return Err(Error::param(
            "resample_interval",
            format!("{h} exceeds the pulse duration {}", reference.delta),
        ));
    }
    if dressing.w == 0.0 {
        return Ok(program.clone());
    }

    let scale = reference.phi0 / reference.tau * dressing.w;
    let count = (program.horizon / h).ceil() as usize + 1;
    let mut rng = StreamKey::new(dressing.seed, "pulse-noise", 0).rng();
    let draws: Vec<f64> = (0..count)
        .map(|_| match dressing.dist {
            NoiseDistribution::Gaussian => rng.sample(StandardNormal),
            NoiseDistribution::Uniform => rng.random_range(-1.0..=1.0),
        })
        .collect();

    let min_len = 1e-12 * h;
    let mut out = Vec::with_capacity(program.segments.len() * 2);
    for seg in &program.segments {
        let mut k = (seg.start / h).floor() as usize;
        let mut a = seg.start;
        while a < seg.end {
            let b = ((k + 1) as f64 * h).min(seg.end);
            if b - a > min_len {
                let noisy = seg.pulse || dressing.mode == NoiseMode::Global;
                let amplitude = if noisy {
                    seg.amplitude + scale * draws[k.min(count - 1)]
                } else {
                    seg.amplitude
                };
                out.push(Segment {
                    start: a,
                    end: b,
                    amplitude,
                    pulse: seg.pulse,
                });
                a = b;
            } else if b >= seg.end {
                // sliver at the segment end: fold into the previous piece
                if let Some(last) = out.last_mut() {
                    last.end = seg.end;
                }
                a = seg.end;
            }
            k += 1;
        }
    }
    Ok(PulseProgram::from_segments(
        program.horizon,
        out,
        program.periods.clone(),
        program.reference,
    ))
}
