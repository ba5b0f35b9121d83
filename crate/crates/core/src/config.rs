//! JSON run configuration.
//!
//! Parsing runs in three passes: unknown keys are collected against the
//! serialized defaults, then the document is deserialized, then every
//! nested spec is built and all domain errors are reported together.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::RunSettings;
use crate::grid::{auto_dt, SimGrid};
use crate::model::{EnvSpec, SystemKind, SystemSpec};
use crate::presets;
use crate::propagator::Scenario;
use crate::pulse::{
    apply_noise, realize_random, realize_regular, NoiseDistribution, NoiseDressing, NoiseMode,
    PulseProgram, RandomPulseSpec, RegularPulseSpec,
};
use crate::CONFIG_SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub omegas: [f64; 3],
    pub couplings: [f64; 2],
}

impl Default for SystemConfig {
    fn default() -> Self {
        let s = presets::phi0_study_system();
        Self {
            kind: s.kind(),
            omegas: s.omega(),
            couplings: s.couplings(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    #[serde(rename = "Gamma")]
    pub strength: f64,
    #[serde(rename = "gamma")]
    pub memory_rate: f64,
    #[serde(rename = "Omega")]
    pub center: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let e = presets::reference_env();
        Self {
            strength: e.strength(),
            memory_rate: e.memory_rate(),
            center: e.center(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseVariant {
    None,
    Regular,
    Random,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub w: f64,
    pub dist: NoiseDistribution,
    /// `None` selects `Δ/10`.
    pub resample_interval: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            mode: NoiseMode::Global,
            w: 1.0,
            dist: NoiseDistribution::Gaussian,
            resample_interval: None,
        }
    }
}

/// Pulse parameters; fields unused by the chosen variant are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseConfig {
    pub variant: PulseVariant,
    pub tau: f64,
    pub delta: f64,
    pub phi0: f64,
    pub a_tau: f64,
    pub a_phi: f64,
    pub noise: NoiseConfig,
}

impl Default for PulseConfig {
    fn default() -> Self {
        let p = presets::reference_pulse(1.0);
        Self {
            variant: PulseVariant::Regular,
            tau: p.tau(),
            delta: p.delta(),
            phi0: p.phi0(),
            a_tau: 0.4,
            a_phi: 0.9,
            noise: NoiseConfig::default(),
        }
    }
}

/// `"auto"` or a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSetting {
    Auto,
    Fixed(f64),
}

impl Serialize for DtSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DtSetting::Auto => s.serialize_str("auto"),
            DtSetting::Fixed(dt) => s.serialize_f64(*dt),
        }
    }
}

impl<'de> Deserialize<'de> for DtSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::String(s) if s == "auto" => Ok(DtSetting::Auto),
            Value::Number(n) => Ok(DtSetting::Fixed(n.as_f64().unwrap_or(f64::NAN))),
            other => Err(serde::de::Error::custom(format!(
                "dt must be \"auto\" or a number, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub horizon: f64,
    pub dt: DtSetting,
    pub record_interval: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            horizon: presets::HORIZON,
            dt: DtSetting::Auto,
            record_interval: presets::RECORD_INTERVAL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Me,
    Qsd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub n_realizations: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_traj: 1000,
            n_realizations: 100,
        }
    }
}

/// Axes of the sweep commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub t_read: f64,
    pub delta_grid: Vec<f64>,
    pub dark_grid: Vec<f64>,
    pub ratios: Vec<f64>,
    pub phi0_values: Vec<f64>,
    pub epsilon: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            t_read: presets::HORIZON,
            delta_grid: vec![0.01, 0.02, 0.04, 0.1, 0.2, 0.3, 0.4],
            dark_grid: vec![0.0, 0.005, 0.01, 0.02, 0.04, 0.06, 0.1, 0.2, 0.4, 0.6],
            ratios: vec![0.1, 0.2, 0.3, 0.35, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            phi0_values: vec![0.0, 0.4, 0.7, 1.0],
            epsilon: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub system: SystemConfig,
    pub env: EnvConfig,
    pub pulse: PulseConfig,
    pub grid: GridConfig,
    pub method: Method,
    pub ensemble: EnsembleConfig,
    pub sweep: SweepConfig,
    pub seed: Option<u64>,
    pub output: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            system: SystemConfig::default(),
            env: EnvConfig::default(),
            pulse: PulseConfig::default(),
            grid: GridConfig::default(),
            method: Method::Me,
            ensemble: EnsembleConfig::default(),
            sweep: SweepConfig::default(),
            seed: None,
            output: "out".into(),
        }
    }
}

fn unknown_keys(given: &Value, known: &Value, path: &str, out: &mut Vec<String>) {
    let (Value::Object(given), Value::Object(known)) = (given, known) else {
        return;
    };
    for (key, value) in given {
        let full = if path.is_empty() {
            key.clone()
        } else {
            format!("{path}.{key}")
        };
        match known.get(key) {
            Some(k) => unknown_keys(value, k, &full, out),
            None => out.push(format!("unknown key `{full}`")),
        }
    }
}

/// Parses and fully validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, |_| {})
}

/// Like [`parse_config`], with `overrides` applied before validation.
pub fn parse_config_with(text: &str, overrides: impl FnOnce(&mut RunConfig)) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text)?;
    if !value.is_object() {
        return Err(Error::InvalidConfig(vec!["top level must be a JSON object".into()]));
    }
    let known = serde_json::to_value(RunConfig::default())?;
    let mut unknown = Vec::new();
    unknown_keys(&value, &known, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(Error::InvalidConfig(unknown));
    }
    let mut config: RunConfig =
        serde_json::from_value(value).map_err(|e| Error::InvalidConfig(vec![e.to_string()]))?;
    overrides(&mut config);
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Collects every domain error of the nested specs.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let mut check = |r: Result<()>| {
            if let Err(e) = r {
                errors.push(e.to_string());
            }
        };
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            check(Err(Error::param(
                "schema_version",
                format!("expected {CONFIG_SCHEMA_VERSION}, got {}", self.schema_version),
            )));
        }
        check(self.system().map(drop));
        check(self.env().map(drop));
        if self.pulse.variant != PulseVariant::None {
            check(self.regular_pulse().map(drop));
            if self.pulse.variant == PulseVariant::Random {
                check(RandomPulseSpec::new(
                    presets::reference_pulse(1.0),
                    self.pulse.a_tau,
                    self.pulse.a_phi,
                    0,
                )
                .map(drop));
            }
            if self.pulse.variant == PulseVariant::Noisy {
                let n = &self.pulse.noise;
                if !(n.w.is_finite() && n.w >= 0.0) {
                    check(Err(Error::param("pulse.noise.w", "must be finite and >= 0")));
                }
                if let Some(h) = n.resample_interval {
                    if !(h > 0.0 && h <= self.pulse.delta) {
                        check(Err(Error::param(
                            "pulse.noise.resample_interval",
                            "must lie in (0, pulse.delta]",
                        )));
                    }
                }
            }
        }
        if !(self.grid.horizon.is_finite() && self.grid.horizon > 0.0) {
            check(Err(Error::param("grid.horizon", "must be finite and > 0")));
        }
        if let DtSetting::Fixed(dt) = self.grid.dt {
            if !(dt.is_finite() && dt > 0.0) {
                check(Err(Error::param("grid.dt", "must be \"auto\" or finite and > 0")));
            }
        }
        if !(self.grid.record_interval.is_finite() && self.grid.record_interval > 0.0) {
            check(Err(Error::param("grid.record_interval", "must be finite and > 0")));
        }
        if self.ensemble.n_traj < 1 {
            check(Err(Error::param("ensemble.n_traj", "must be >= 1")));
        }
        if self.ensemble.n_realizations < 2 {
            check(Err(Error::param("ensemble.n_realizations", "must be >= 2")));
        }
        if !(self.sweep.t_read.is_finite() && self.sweep.t_read > 0.0) {
            check(Err(Error::param("sweep.t_read", "must be finite and > 0")));
        }
        if !(self.sweep.epsilon > 0.0) {
            check(Err(Error::param("sweep.epsilon", "must be > 0")));
        }
        if self.is_stochastic() && self.seed.is_none() {
            check(Err(Error::param("seed", "required for stochastic runs")));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(errors))
        }
    }

    /// QSD runs and random or noisy pulses consume randomness.
    pub fn is_stochastic(&self) -> bool {
        self.method == Method::Qsd
            || matches!(self.pulse.variant, PulseVariant::Random | PulseVariant::Noisy)
    }

    pub fn system(&self) -> Result<SystemSpec> {
        SystemSpec::new(self.system.kind, self.system.omegas, self.system.couplings)
    }

    pub fn env(&self) -> Result<EnvSpec> {
        EnvSpec::new(self.env.strength, self.env.memory_rate, self.env.center)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Ok(Scenario::with_default_state(self.system()?, self.env()?))
    }

    /// The regular pulse of `tau`, `delta`, `phi0`, also the base of the
    /// random and noisy variants.
    pub fn regular_pulse(&self) -> Result<RegularPulseSpec> {
        RegularPulseSpec::new(self.pulse.tau, self.pulse.delta, self.pulse.phi0)
    }

    pub fn dressing(&self, seed: u64) -> Result<NoiseDressing> {
        let base = self.regular_pulse()?;
        let n = &self.pulse.noise;
        let mut d = NoiseDressing::with_default_interval(n.mode, n.w, n.dist, &base, seed);
        if let Some(h) = n.resample_interval {
            d.resample_interval = h;
        }
        Ok(d)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::param("seed", "required for stochastic runs"))
    }

    /// Single pulse realization over `horizon`.
    pub fn pulse_program(&self, horizon: f64) -> Result<PulseProgram> {
        match self.pulse.variant {
            PulseVariant::None => PulseProgram::dark(horizon),
            PulseVariant::Regular => realize_regular(&self.regular_pulse()?, horizon),
            PulseVariant::Random => {
                let spec = RandomPulseSpec::new(
                    self.regular_pulse()?,
                    self.pulse.a_tau,
                    self.pulse.a_phi,
                    self.require_seed()?,
                )?;
                realize_random(&spec, horizon)
            }
            PulseVariant::Noisy => {
                let regular = realize_regular(&self.regular_pulse()?, horizon)?;
                apply_noise(&regular, &self.dressing(self.require_seed()?)?)
            }
        }
    }

    /// Step size with `"auto"` resolved from the pulse geometry.
    pub fn resolved_dt(&self) -> f64 {
        match self.grid.dt {
            DtSetting::Fixed(dt) => dt,
            DtSetting::Auto if self.pulse.variant == PulseVariant::None => 0.01,
            DtSetting::Auto => auto_dt(self.pulse.tau, self.pulse.delta),
        }
    }

    pub fn sim_grid(&self) -> Result<SimGrid> {
        SimGrid::new(self.grid.horizon, self.resolved_dt())?
            .with_record_interval(self.grid.record_interval.min(self.grid.horizon))
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            dt: match self.grid.dt {
                DtSetting::Auto => None,
                DtSetting::Fixed(dt) => Some(dt),
            },
            record_interval: self.grid.record_interval,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON serialization, hex encoded. The output
    /// directory is not part of the hash.
    pub fn config_hash(&self) -> String {
        let physics = RunConfig {
            output: String::new(),
            ..self.clone()
        };
        let canonical = serde_json::to_string(&physics).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_echoes_reference_set() {
        let c = parse_config(r#"{"system": {"kind": "v"}}"#).unwrap();
        assert_eq!(c.system.omegas, [1.0, 0.8, 0.0]);
        assert_eq!(c.system.couplings, [1.0, 0.5]);
        assert_eq!((c.env.strength, c.env.memory_rate, c.env.center), (1.0, 1.0, 0.5));
        assert_eq!(c.pulse.phi0, 1.0);
        assert!((c.pulse.delta / c.pulse.tau - 0.6).abs() < 1e-12);
        assert_eq!(c.grid.horizon, 40.0);
        assert_eq!(c.grid.dt, DtSetting::Auto);
        assert_eq!(parse_config("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn delta_above_tau_is_one_error_naming_both() {
        let Err(Error::InvalidConfig(errs)) =
            parse_config(r#"{"pulse": {"tau": 0.1, "delta": 0.2}}"#)
        else {
            panic!("expected a validation error");
        };
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert!(errs[0].contains("delta") && errs[0].contains("tau"), "{}", errs[0]);
    }

    #[test]
    fn unknown_keys_are_all_reported() {
        let Err(Error::InvalidConfig(errs)) =
            parse_config(r#"{"pulse": {"taus": 1}, "bogus": 2, "grid": {"dt": "auto"}}"#)
        else {
            panic!("expected unknown key errors");
        };
        assert_eq!(errs.len(), 2);
        assert!(errs.iter().all(|e| e.contains("unknown key")));
        assert!(errs.iter().any(|e| e.contains("pulse.taus")));
    }

    #[test]
    fn all_domain_errors_collected() {
        let Err(Error::InvalidConfig(errs)) =
            parse_config(r#"{"env": {"gamma": 0}, "grid": {"horizon": -1}, "method": "qsd"}"#)
        else {
            panic!("expected validation errors");
        };
        assert_eq!(errs.len(), 3, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("seed")));
    }

    #[test]
    fn malformed_json() {
        assert!(matches!(parse_config("{"), Err(Error::Json(_))));
        assert!(parse_config(r#"{"grid": {"dt": "fast"}}"#).is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        let mut c = RunConfig::default();
        c.grid.dt = DtSetting::Fixed(0.001);
        c.seed = Some(42);
        c.pulse.variant = PulseVariant::Noisy;
        c.pulse.noise.resample_interval = Some(0.001);
        let back = parse_config(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.config_hash(), c.config_hash());
        assert_eq!(c.config_hash().len(), 64);
        c.output = "elsewhere".into();
        assert_eq!(back.config_hash(), c.config_hash());
        c.seed = Some(43);
        assert_ne!(back.config_hash(), c.config_hash());
    }

    #[test]
    fn auto_dt_resolution() {
        let c = RunConfig::default();
        assert!((c.resolved_dt() - 0.0002).abs() < 1e-15);
        let grid = c.sim_grid().unwrap();
        assert_eq!(grid.steps(), 200_000);
    }
}
