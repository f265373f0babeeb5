//! Artifacts of a run: `<name>.csv`, the `<name>.json` sidecar and `manifest.json`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use condwalk::diagnostics::write_csv;

use crate::config::{ExperimentConfig, Prepared, FORMAT};
use crate::experiments::Outcome;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn csv_bytes(outcome: &Outcome) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, &outcome.rows).map_err(io::Error::other)?;
    Ok(buf)
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("json values serialize");
    s.push(b'\n');
    s
}

/// Everything needed to describe a run; no timestamps or host details, so
/// reruns produce identical files.
pub struct RunInfo<'a> {
    pub config: &'a ExperimentConfig,
    pub prepared: &'a Prepared,
    pub config_sha256: String,
    pub seed: u64,
}

/// Writes the three artifacts into `dir` and returns their paths.
pub fn write_artifacts(dir: &Path, info: &RunInfo, outcome: &Outcome) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = info.config.experiment.name();
    let csv = csv_bytes(outcome)?;
    let sidecar = pretty(&json!({
        "experiment": name,
        "config_sha256": info.config_sha256,
        "seed": info.seed,
        "config": info.config,
        "summary": outcome.summary,
        "passed": outcome.passed,
    }));
    let csv_name = format!("{name}.csv");
    let json_name = format!("{name}.json");
    let manifest = pretty(&json!({
        "tool": "condwalk",
        "versions": {
            "condwalk": condwalk::VERSION,
            "condwalk-cli": env!("CARGO_PKG_VERSION"),
        },
        "config_format": FORMAT,
        "config_sha256": info.config_sha256,
        "seed": info.seed,
        "rng_splitting_rule": condwalk::rng::SPLITTING_RULE,
        "step_law": info.prepared.law.to_string(),
        "step_law_fingerprint": info.prepared.law.fingerprint(),
        "files": [
            { "name": csv_name, "sha256": sha256_hex(&csv), "rows": outcome.rows.len() },
            { "name": json_name, "sha256": sha256_hex(&sidecar) },
        ],
    }));
    let paths = vec![dir.join(&csv_name), dir.join(&json_name), dir.join("manifest.json")];
    for (path, bytes) in paths.iter().zip([&csv, &sidecar, &manifest]) {
        fs::write(path, bytes)?;
    }
    Ok(paths)
}
