//! Artifact writing with provenance.
//!
//! Every CSV starts with a `# config_hash=<hex> seed=<n|none>` comment line
//! followed by its fixed header. The JSON sidecar carries the full config;
//! its `created_unix` timestamp is the only field that varies between
//! identical runs.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn of(config: &RunConfig) -> Self {
        Self {
            config_hash: config.config_hash(),
            seed: config.seed,
        }
    }

    pub fn comment_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!("# config_hash={} seed={}\n", self.config_hash, seed)
    }
}

/// Creates `dir/name`, writes the provenance line and hands the writer to
/// `body`.
pub fn write_csv_artifact(
    dir: &Path,
    name: &str,
    provenance: &Provenance,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    w.write_all(provenance.comment_line().as_bytes())?;
    body(&mut w)?;
    w.flush()?;
    Ok(path)
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    version: &'static str,
    schema_version: u32,
    command: &'a str,
    config_hash: &'a str,
    seed: Option<u64>,
    config: &'a RunConfig,
    artifacts: &'a [String],
    summary: &'a T,
    created_unix: u64,
}

/// Writes `dir/run.json` describing a finished command.
pub fn write_sidecar<T: Serialize>(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    artifacts: &[String],
    summary: &T,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let hash = config.config_hash();
    let sidecar = Sidecar {
        version: crate::VERSION,
        schema_version: crate::CONFIG_SCHEMA_VERSION,
        command,
        config_hash: &hash,
        seed: config.seed,
        config,
        artifacts,
        summary,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(path)
}
