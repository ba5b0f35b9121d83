//! Three-level system, environment kernel and LEO projector structure.
//!
//! All frequencies are in units of the global frequency `ω` and all times in
//! units of `1/ω`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Dense 3x3 complex operator in the `|1>, |2>, |3>` basis.
pub type Op3 = Matrix3<C64>;
/// Three-component state vector.
pub type Ket3 = Vector3<C64>;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    /// Two upper levels decaying into level 3.
    #[serde(rename = "v")]
    VType,
    /// Level 1 decaying into levels 2 and 3.
    #[serde(rename = "lambda")]
    LambdaType,
}

/// Level energies and the two coupling constants of the leakage channel.
///
/// `couplings` is `(μ₁, μ₂)` for [`SystemKind::VType`] and `(ν₂, ν₃)` for
/// [`SystemKind::LambdaType`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    kind: SystemKind,
    omega: [f64; 3],
    couplings: [f64; 2],
}

impl SystemSpec {
    pub fn new(kind: SystemKind, omega: [f64; 3], couplings: [f64; 2]) -> Result<Self> {
        for (j, w) in omega.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::param(format!("omega[{j}]"), "must be finite"));
            }
        }
        for (k, g) in couplings.iter().enumerate() {
            if !g.is_finite() || *g < 0.0 {
                return Err(Error::param(
                    format!("couplings[{k}]"),
                    "must be finite and non-negative",
                ));
            }
        }
        Ok(Self {
            kind,
            omega,
            couplings,
        })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn omega(&self) -> [f64; 3] {
        self.omega
    }

    pub fn couplings(&self) -> [f64; 2] {
        self.couplings
    }

    /// True when at least one coupling is nonzero.
    pub fn is_coupled(&self) -> bool {
        self.couplings.iter().any(|&g| g > 0.0)
    }

    /// Same system with every level energy shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.kind, self.omega.map(|w| w + offset), self.couplings)
    }

    /// Transition frequencies entering the O-operator coefficients:
    /// `ω_k − ω₃` (V-type, k = 1, 2) or `ω₁ − ω_k` (λ-type, k = 2, 3).
    pub fn coefficient_detunings(&self) -> [f64; 2] {
        let w = self.omega;
        match self.kind {
            SystemKind::VType => [w[0] - w[2], w[1] - w[2]],
            SystemKind::LambdaType => [w[0] - w[1], w[0] - w[2]],
        }
    }

    /// Default initial state used throughout: `(|1>+|2>)/√2` for V-type,
    /// `|1>` for λ-type.
    pub fn default_initial_state(&self) -> Ket3 {
        match self.kind {
            SystemKind::VType => {
                let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                Ket3::new(a, a, C64::new(0.0, 0.0))
            }
            SystemKind::LambdaType => Ket3::new(C64::new(1.0, 0.0), C64::default(), C64::default()),
        }
    }
}

/// Exponential environment kernel `α(t,s) = Γγ/2 · exp(−γ|t−s| − iΩ(t−s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSpec {
    strength: f64,
    memory_rate: f64,
    center: f64,
}

impl EnvSpec {
    /// `strength` is Γ, `memory_rate` is γ (inverse memory time), `center` is Ω.
    pub fn new(strength: f64, memory_rate: f64, center: f64) -> Result<Self> {
        if !strength.is_finite() || strength < 0.0 {
            return Err(Error::param("Gamma", "must be finite and >= 0"));
        }
        if !memory_rate.is_finite() || memory_rate <= 0.0 {
            return Err(Error::param("gamma", "must be finite and > 0"));
        }
        if !center.is_finite() {
            return Err(Error::param("Omega", "must be finite"));
        }
        Ok(Self {
            strength,
            memory_rate,
            center,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn memory_rate(&self) -> f64 {
        self.memory_rate
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    /// `α(0) = Γγ/2`, the single-time noise variance.
    pub fn variance(&self) -> f64 {
        0.5 * self.strength * self.memory_rate
    }

    /// `α(t, s)` as a function of the lag `t − s`.
    pub fn correlation(&self, lag: f64) -> C64 {
        let decay = (-self.memory_rate * lag.abs()).exp();
        C64::from_polar(self.variance() * decay, -self.center * lag)
    }

    /// Same environment with Γ = 0.
    pub fn decoupled(&self) -> Self {
        Self {
            strength: 0.0,
            ..*self
        }
    }
}

/// Diagonal P-subspace projector `Π` multiplying the pulse amplitude `c(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeoStructure {
    projector: [f64; 3],
}

impl LeoStructure {
    pub fn for_kind(kind: SystemKind) -> Self {
        let projector = match kind {
            SystemKind::VType => [1.0, 1.0, 0.0],
            SystemKind::LambdaType => [1.0, 0.0, 0.0],
        };
        Self { projector }
    }

    pub fn projector(&self) -> [f64; 3] {
        self.projector
    }

    pub fn projector_op(&self) -> Op3 {
        Op3::from_diagonal(&Vector3::from(self.projector.map(|d| C64::new(d, 0.0))))
    }

    /// `R = 2Π − I`, the ±1 form that anticommutes with the leakage operator.
    pub fn reflection_op(&self) -> Op3 {
        Op3::from_diagonal(&Vector3::from(
            self.projector.map(|d| C64::new(2.0 * d - 1.0, 0.0)),
        ))
    }
}

pub fn build_hamiltonian(spec: &SystemSpec) -> Op3 {
    Op3::from_diagonal(&Vector3::from(spec.omega.map(|w| C64::new(w, 0.0))))
}

pub fn build_lindblad(spec: &SystemSpec) -> Op3 {
    let mut l = Op3::zeros();
    let [a, b] = spec.couplings;
    match spec.kind {
        SystemKind::VType => {
            l[(2, 0)] = C64::new(a, 0.0);
            l[(2, 1)] = C64::new(b, 0.0);
        }
        SystemKind::LambdaType => {
            l[(1, 0)] = C64::new(a, 0.0);
            l[(2, 0)] = C64::new(b, 0.0);
        }
    }
    l
}

/// Phases `exp(+i[ω_j t + d_j C])` of the frame co-rotating with
/// `H_sys + c(t)Π`; `pulse_integral` is `C(t) = ∫₀ᵗ c(s) ds`.
pub fn rotating_frame_phases(
    spec: &SystemSpec,
    leo: &LeoStructure,
    t: f64,
    pulse_integral: f64,
) -> [C64; 3] {
    let mut out = [C64::default(); 3];
    for j in 0..3 {
        out[j] = C64::from_polar(1.0, spec.omega[j] * t + leo.projector[j] * pulse_integral);
    }
    out
}
