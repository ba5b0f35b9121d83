//! `leo`: command-line front end for the LEO-control simulator.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leo_core::config::DtSetting;
use leo_core::{parse_config_with, Error, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "leo", version, about = "Three-level open-system dynamics under LEO pulse control")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for ensembles and sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fixed step (overrides `grid.dt`).
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Fidelity curve of one pulse realization (ME or QSD).
    Simulate,
    /// Readout fidelity over the (Δ, dark time) plane.
    Diagram,
    /// Readout fidelity against the pulse area Φ₀.
    ScanPhi0,
    /// Readout fidelity against the duty ratio, with threshold detection.
    ScanRatio,
    /// Mean fidelity over random pulse sequences.
    RandomEnsemble,
    /// Mean fidelity over noise-dressed pulse sequences.
    NoisyEnsemble,
    /// V-type versus λ-type fidelity and the scalar reduction.
    EquivalenceCheck,
    /// Run the invariant suite.
    Validate,
    /// Print artifact and config-schema versions.
    Version,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Diagram => "diagram",
            Command::ScanPhi0 => "scan-phi0",
            Command::ScanRatio => "scan-ratio",
            Command::RandomEnsemble => "random-ensemble",
            Command::NoisyEnsemble => "noisy-ensemble",
            Command::EquivalenceCheck => "equivalence-check",
            Command::Validate => "validate",
            Command::Version => "version",
        }
    }
}

fn load_config(cli: &Cli) -> leo_core::Result<RunConfig> {
    let overrides = |config: &mut RunConfig| {
        if let Some(seed) = cli.seed {
            config.seed = Some(seed);
        }
        if let Some(dt) = cli.dt {
            config.grid.dt = DtSetting::Fixed(dt);
        }
        if let Some(out) = &cli.out {
            config.output = out.to_string_lossy().into_owned();
        }
    };
    match &cli.config {
        Some(path) => parse_config_with(&std::fs::read_to_string(path)?, overrides),
        None => {
            let mut config = RunConfig::default();
            overrides(&mut config);
            config.validate()?;
            Ok(config)
        }
    }
}

fn error_record(command: &str, e: &Error) -> String {
    let details = match e {
        Error::InvalidConfig(list) => list.clone(),
        _ => Vec::new(),
    };
    serde_json::json!({
        "status": "error",
        "command": command,
        "kind": e.kind(),
        "message": e.to_string(),
        "details": details,
    })
    .to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.command == Command::Version {
        println!(
            "leo {} (config schema {})",
            leo_core::VERSION,
            leo_core::CONFIG_SCHEMA_VERSION
        );
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", serde_json::json!({"status": "error", "kind": "threads", "message": e.to_string()}));
            return ExitCode::from(2);
        }
    }
    let outcome = load_config(&cli).and_then(|config| commands::run(cli.command, &config));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", error_record(cli.command.name(), &e));
            ExitCode::from(2)
        }
    }
}
