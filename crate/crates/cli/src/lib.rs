//! Declarative experiment runner for `condwalk`.
//!
//! A run reads a TOML [`config::ExperimentConfig`], validates it completely,
//! computes one experiment and writes a CSV report, a JSON sidecar and a
//! manifest. Identical config and seed give byte-identical files whatever the
//! thread count.

pub mod config;
pub mod experiments;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};

pub use config::{ConfigError, ExperimentConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Compute(String),
    /// The experiment ran but its checks failed.
    Failed(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Compute(_) | RunError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid config: {e}"),
            RunError::Compute(e) => write!(f, "computation failed: {e}"),
            RunError::Failed(e) => write!(f, "checks failed: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub prepared: config::Prepared,
    pub config_sha256: String,
    pub base: PathBuf,
}

/// Reads, parses and validates a config file.
pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| ConfigError("config is not UTF-8".into()))?;
    let config = config::parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let prepared = config.prepare(&base)?;
    Ok(Loaded { config, prepared, config_sha256: output::sha256_hex(&bytes), base })
}

pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub outcome: experiments::Outcome,
}

/// Runs a loaded config and writes its artifacts.
pub fn run(loaded: &Loaded, overrides: &Overrides) -> Result<RunReport, RunError> {
    let seed = overrides.seed.unwrap_or(loaded.config.seed);
    let dir = match (&overrides.out, &loaded.config.out) {
        (Some(out), _) => out.clone(),
        (None, Some(out)) => loaded.base.join(out),
        (None, None) => PathBuf::from("out"),
    };
    let outcome =
        experiments::run(&loaded.config, &loaded.prepared, seed).map_err(|e| RunError::Compute(e.to_string()))?;
    let info = output::RunInfo {
        config: &loaded.config,
        prepared: &loaded.prepared,
        config_sha256: loaded.config_sha256.clone(),
        seed,
    };
    let files = output::write_artifacts(&dir, &info, &outcome).map_err(|e| RunError::Compute(e.to_string()))?;
    if outcome.passed == Some(false) {
        return Err(RunError::Failed(format!("{}; see {}", outcome.summary["failures"], dir.display())));
    }
    Ok(RunReport { files, outcome })
}
