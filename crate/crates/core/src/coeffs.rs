//! O-operator coefficient functions.
//!
//! V-type: `(F₁, F₂)` with
//! `Ḟ_k = Γγμ_k/2 + [−γ + i(ω_k − ω₃ − Ω + c)]F_k + (μ₁F₁ + μ₂F₂)F_k`.
//! λ-type: `(P₂, P₃)` with the same structure, detunings `ω₁ − ω_k` and
//! couplings `(ν₂, ν₃)`.
//!
//! [`integrate_coeffs`] solves this closed Riccati system. The reference
//! [`grid_oracle_coeffs`] instead evolves the two-time functions `f_k(t, s)`
//! on a triangular grid and integrates them against `α(t, s)`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::SimGrid;
use crate::model::{EnvSpec, SystemKind, SystemSpec, C64, I};
use crate::pulse::PulseProgram;

const ESCAPE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct OOCoefficients {
    kind: SystemKind,
    grid: SimGrid,
    nodes: Vec<[C64; 2]>,
    mids: Vec<[C64; 2]>,
}

impl OOCoefficients {
    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    /// Values at every grid node.
    pub fn nodes(&self) -> &[[C64; 2]] {
        &self.nodes
    }

    /// Values at step midpoints (used by the RK4 propagators).
    pub fn mids(&self) -> &[[C64; 2]] {
        &self.mids
    }

    pub fn at_node(&self, n: usize) -> [C64; 2] {
        self.nodes[n]
    }

    /// Identically zero coefficients.
    pub fn zeros(kind: SystemKind, grid: SimGrid) -> Self {
        Self {
            kind,
            grid,
            nodes: vec![[C64::default(); 2]; grid.nodes()],
            mids: vec![[C64::default(); 2]; grid.steps()],
        }
    }

    /// Columns `t, re_1, im_1, re_2, im_2, C` on record nodes.
    pub fn write_csv<W: Write>(&self, pulse: &PulseProgram, out: W) -> Result<()> {
        let integrals = pulse.record_integrals(&self.grid)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "re_1", "im_1", "re_2", "im_2", "C"])?;
        for (n, c) in self.grid.record_nodes().into_iter().zip(integrals) {
            let [a, b] = self.nodes[n];
            w.write_record([
                self.grid.time(n).to_string(),
                a.re.to_string(),
                a.im.to_string(),
                b.re.to_string(),
                b.im.to_string(),
                c.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Riccati {
    source: [f64; 2],
    couplings: [f64; 2],
    rates: [C64; 2],
}

impl Riccati {
    fn new(system: &SystemSpec, env: &EnvSpec) -> Self {
        let g = system.couplings();
        let d = system.coefficient_detunings();
        let half = env.variance();
        Self {
            source: [half * g[0], half * g[1]],
            couplings: g,
            rates: [
                C64::new(-env.memory_rate(), d[0] - env.center()),
                C64::new(-env.memory_rate(), d[1] - env.center()),
            ],
        }
    }

    #[inline]
    fn rhs(&self, f: [C64; 2], c: f64) -> [C64; 2] {
        let s = f[0] * self.couplings[0] + f[1] * self.couplings[1];
        let shift = C64::new(0.0, c);
        [
            self.source[0] + (self.rates[0] + shift) * f[0] + s * f[0],
            self.source[1] + (self.rates[1] + shift) * f[1] + s * f[1],
        ]
    }
}

#[inline]
fn axpy(y: [C64; 2], a: f64, x: [C64; 2]) -> [C64; 2] {
    [y[0] + x[0] * a, y[1] + x[1] * a]
}

fn check_resolution(pulse: &PulseProgram, grid: &SimGrid) -> Result<()> {
    if let Some(r) = pulse.reference() {
        let limit = r.delta / 10.0;
        if grid.dt() > limit * (1.0 + 1e-9) {
            return Err(Error::GridTooCoarse {
                dt: grid.dt(),
                limit,
                what: "dt must not exceed delta/10",
            });
        }
    }
    Ok(())
}

/// Closed-form coefficient ODEs, classical RK4. Midpoint values come from
/// cubic Hermite interpolation within each step.
pub fn integrate_coeffs(
    system: &SystemSpec,
    env: &EnvSpec,
    pulse: &PulseProgram,
    grid: &SimGrid,
) -> Result<OOCoefficients> {
    check_resolution(pulse, grid)?;
    let amps = pulse.step_amplitudes(grid)?;
    let ode = Riccati::new(system, env);
    let h = grid.dt();
    let mut nodes = Vec::with_capacity(grid.nodes());
    let mut mids = Vec::with_capacity(grid.steps());
    let mut f = [C64::default(); 2];
    nodes.push(f);
    for (n, a) in amps.iter().enumerate() {
        let k1 = ode.rhs(f, a.start);
        let k2 = ode.rhs(axpy(f, 0.5 * h, k1), a.mid);
        let k3 = ode.rhs(axpy(f, 0.5 * h, k2), a.mid);
        let k4 = ode.rhs(axpy(f, h, k3), a.end);
        let next = [
            f[0] + (k1[0] + (k2[0] + k3[0]) * 2.0 + k4[0]) * (h / 6.0),
            f[1] + (k1[1] + (k2[1] + k3[1]) * 2.0 + k4[1]) * (h / 6.0),
        ];
        if !next.iter().all(|z| z.is_finite() && z.norm() < ESCAPE) {
            return Err(Error::Divergence {
                what: "coefficient ODE",
                time: grid.time(n + 1),
            });
        }
        let d1 = ode.rhs(next, a.end);
        mids.push([
            (f[0] + next[0]) * 0.5 + (k1[0] - d1[0]) * (h / 8.0),
            (f[1] + next[1]) * 0.5 + (k1[1] - d1[1]) * (h / 8.0),
        ]);
        nodes.push(next);
        f = next;
    }
    Ok(OOCoefficients {
        kind: system.kind(),
        grid: *grid,
        nodes,
        mids,
    })
}

/// Brute-force reference: evolves `f_k(t, s)` for every source time `s` on
/// the grid with a Heun predictor–corrector,
/// `∂_t f_k = i(d_k + c(t)) f_k + F_k(t) (g·f)`, `f_k(s, s) = g_k`,
/// and forms `F_k(t) = ∫₀ᵗ α(t, s) f_k(t, s) ds` by the trapezoidal rule.
/// Cost is quadratic in the number of steps. Midpoint values are linear
/// interpolants.
pub fn grid_oracle_coeffs(
    system: &SystemSpec,
    env: &EnvSpec,
    pulse: &PulseProgram,
    grid: &SimGrid,
) -> Result<OOCoefficients> {
    if (pulse.horizon() - grid.horizon()).abs() > 1e-12 * grid.horizon().max(1.0) {
        return Err(Error::GridMismatch("pulse and grid horizons differ".into()));
    }
    let g = system.couplings();
    let d = system.coefficient_detunings();
    let h = grid.dt();
    let steps = grid.steps();
    let kernel: Vec<C64> = (0..=steps).map(|m| env.correlation(m as f64 * h)).collect();
    let seed = [C64::new(g[0], 0.0), C64::new(g[1], 0.0)];

    let quadrature = |rows: &[[C64; 2]]| -> [C64; 2] {
        let level = rows.len() - 1;
        let mut acc = [C64::default(); 2];
        for (j, row) in rows.iter().enumerate() {
            let w = if j == 0 || j == level { 0.5 } else { 1.0 };
            let a = kernel[level - j] * (w * h);
            acc[0] += a * row[0];
            acc[1] += a * row[1];
        }
        if level == 0 {
            [C64::default(); 2]
        } else {
            acc
        }
    };
    let drift = |f: [C64; 2], big: [C64; 2], c: f64| -> [C64; 2] {
        let s = f[0] * g[0] + f[1] * g[1];
        [
            I * (d[0] + c) * f[0] + big[0] * s,
            I * (d[1] + c) * f[1] + big[1] * s,
        ]
    };

    let mut rows: Vec<[C64; 2]> = Vec::with_capacity(steps + 1);
    rows.push(seed);
    let mut big = [C64::default(); 2];
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(big);
    let mut pred: Vec<[C64; 2]> = Vec::with_capacity(steps + 1);
    let mut slope: Vec<[C64; 2]> = Vec::with_capacity(steps + 1);
    for n in 0..steps {
        let c = pulse.amplitude_at(grid.time(n) + 0.5 * h)?;
        slope.clear();
        slope.extend(rows.iter().map(|f| drift(*f, big, c)));
        pred.clear();
        pred.extend(rows.iter().zip(&slope).map(|(f, k)| axpy(*f, h, *k)));
        pred.push(seed);
        let big_pred = quadrature(&pred);
        for (j, f) in rows.iter_mut().enumerate() {
            let k2 = drift(pred[j], big_pred, c);
            *f = [
                f[0] + (slope[j][0] + k2[0]) * (0.5 * h),
                f[1] + (slope[j][1] + k2[1]) * (0.5 * h),
            ];
        }
        rows.push(seed);
        big = quadrature(&rows);
        if !big.iter().all(|z| z.is_finite() && z.norm() < ESCAPE) {
            return Err(Error::Divergence {
                what: "coefficient grid oracle",
                time: grid.time(n + 1),
            });
        }
        nodes.push(big);
    }
    let mids = nodes
        .windows(2)
        .map(|w| [(w[0][0] + w[1][0]) * 0.5, (w[0][1] + w[1][1]) * 0.5])
        .collect();
    Ok(OOCoefficients {
        kind: system.kind(),
        grid: *grid,
        nodes,
        mids,
    })
}

/// Pulse-integral view of the coefficients: `C(t)` and the de-rotated
/// `F̃_k(t) = e^{−iC(t)} F_k(t)` on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseIntegralDiagnostic {
    pub times: Vec<f64>,
    pub integral: Vec<f64>,
    pub rotated: Vec<[C64; 2]>,
    pub max_abs: [f64; 2],
    /// Time average of `|F_k|` over the horizon (trapezoidal).
    pub mean_abs: [f64; 2],
}

pub fn pulse_integral_diagnostic(
    coeffs: &OOCoefficients,
    pulse: &PulseProgram,
) -> Result<PulseIntegralDiagnostic> {
    let grid = coeffs.grid;
    let integral = pulse.node_integrals(&grid)?;
    let times: Vec<f64> = (0..grid.nodes()).map(|n| grid.time(n)).collect();
    let rotated = coeffs
        .nodes
        .iter()
        .zip(&integral)
        .map(|(f, c)| {
            let phase = C64::from_polar(1.0, -c);
            [f[0] * phase, f[1] * phase]
        })
        .collect();
    let mut max_abs = [0.0f64; 2];
    let mut area = [0.0f64; 2];
    for (n, f) in coeffs.nodes.iter().enumerate() {
        let w = if n == 0 || n == grid.steps() { 0.5 } else { 1.0 };
        for k in 0..2 {
            let a = f[k].norm();
            max_abs[k] = max_abs[k].max(a);
            area[k] += w * a * grid.dt();
        }
    }
    Ok(PulseIntegralDiagnostic {
        times,
        integral,
        rotated,
        max_abs,
        mean_abs: area.map(|a| a / grid.horizon()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{realize_regular, RegularPulseSpec};

    fn fig_system() -> SystemSpec {
        SystemSpec::new(SystemKind::VType, [1.0, 0.8, 0.0], [1.0, 0.5]).unwrap()
    }

    fn fig_env() -> EnvSpec {
        EnvSpec::new(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn starts_at_zero_with_source_slope() {
        let grid = SimGrid::new(0.01, 1e-4).unwrap();
        let pulse = PulseProgram::dark(0.01).unwrap();
        let c = integrate_coeffs(&fig_system(), &fig_env(), &pulse, &grid).unwrap();
        assert_eq!(c.at_node(0), [C64::default(); 2]);
        let slope = c.at_node(1).map(|z| z / grid.dt());
        assert!((slope[0] - C64::new(0.5, 0.0)).norm() < 1e-3);
        assert!((slope[1] - C64::new(0.25, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn zero_coupling_is_identically_zero() {
        let env = fig_env().decoupled();
        let grid = SimGrid::new(2.0, 0.01).unwrap();
        let pulse = PulseProgram::dark(2.0).unwrap();
        for c in [
            integrate_coeffs(&fig_system(), &env, &pulse, &grid).unwrap(),
            grid_oracle_coeffs(&fig_system(), &env, &pulse, &grid).unwrap(),
        ] {
            assert!(c.nodes().iter().flatten().all(|z| z.norm() <= 1e-12));
        }
    }

    #[test]
    fn grid_too_coarse_is_rejected() {
        let spec = RegularPulseSpec::new(0.8, 0.48, 1.0).unwrap();
        let pulse = realize_regular(&spec, 4.0).unwrap();
        let grid = SimGrid::new(4.0, 0.1).unwrap();
        assert!(matches!(
            integrate_coeffs(&fig_system(), &fig_env(), &pulse, &grid),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn divergence_is_reported_with_time() {
        // large coupling and no damping budget: the Riccati solution escapes
        let system = SystemSpec::new(SystemKind::VType, [0.0; 3], [30.0, 30.0]).unwrap();
        let env = EnvSpec::new(50.0, 0.05, 0.0).unwrap();
        let grid = SimGrid::new(20.0, 0.001).unwrap();
        let pulse = PulseProgram::dark(20.0).unwrap();
        match integrate_coeffs(&system, &env, &pulse, &grid) {
            Err(Error::Divergence { time, .. }) => assert!(time > 0.0 && time < 20.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn diagnostic_without_pulse_is_identity() {
        let grid = SimGrid::new(2.0, 0.01).unwrap();
        let pulse = PulseProgram::dark(2.0).unwrap();
        let c = integrate_coeffs(&fig_system(), &fig_env(), &pulse, &grid).unwrap();
        let d = pulse_integral_diagnostic(&c, &pulse).unwrap();
        assert_eq!(d.rotated, c.nodes());
        assert!(d.integral.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn diagnostic_integral_hits_period_multiples() {
        let spec = RegularPulseSpec::new(0.5, 0.25, 0.7).unwrap();
        let pulse = realize_regular(&spec, 5.0).unwrap();
        let grid = SimGrid::new(5.0, 0.0125).unwrap();
        let c = integrate_coeffs(&fig_system(), &fig_env(), &pulse, &grid).unwrap();
        let d = pulse_integral_diagnostic(&c, &pulse).unwrap();
        for n in 1..=10 {
            let node = n * 40;
            assert!((d.integral[node] - 0.7 * n as f64).abs() < 1e-12);
        }
    }
}
