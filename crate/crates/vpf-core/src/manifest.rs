//! Run manifest: content hashes of a run's inputs and outputs.
//!
//! The manifest itself is deterministic — equal inputs, config, and seed
//! produce a byte-identical manifest.json — so wall-clock stage timings
//! live in a separate timings.json that determinism checks ignore.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hashing::fnv1a;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Fingerprint of (country, seed, config hash, input hashes).
    pub run_id: String,
    pub country: String,
    pub seed: u64,
    pub config_hash: String,
    /// Stage names in execution order.
    pub stages: Vec<String>,
    /// Input file name -> content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output file name -> content hash.
    pub outputs: BTreeMap<String, String>,
}

/// FNV-1a content fingerprint of a file, hex-encoded.
pub fn hash_file(path: &Path) -> std::io::Result<String> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    Ok(format!("{:016x}", fnv1a(&bytes)))
}

impl RunManifest {
    /// Record one completed stage and refresh the run id.
    pub fn record_stage(
        &mut self,
        stage: &str,
        inputs: BTreeMap<String, String>,
        outputs: BTreeMap<String, String>,
    ) {
        if !self.stages.iter().any(|s| s == stage) {
            self.stages.push(stage.to_string());
        }
        self.inputs.extend(inputs);
        self.outputs.extend(outputs);
        let mut basis = format!("{}\u{1}{}\u{1}{}", self.country, self.seed, self.config_hash);
        for (name, hash) in &self.inputs {
            basis.push_str(&format!("\u{1}{name}={hash}"));
        }
        self.run_id = format!("{:016x}", fnv1a(basis.as_bytes()));
    }
}

pub fn load_manifest(dir: &Path) -> std::io::Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(RunManifest::default());
    }
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}

pub fn save_manifest(dir: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n")
}

/// Merge one stage's wall-clock seconds into timings.json.
pub fn record_timing(dir: &Path, stage: &str, seconds: f64) -> std::io::Result<()> {
    let path = dir.join(TIMINGS_FILE);
    let mut timings: BTreeMap<String, f64> = if path.exists() {
        serde_json::from_str(&fs::read_to_string(&path)?).unwrap_or_default()
    } else {
        BTreeMap::new()
    };
    timings.insert(stage.to_string(), seconds);
    let json = serde_json::to_string_pretty(&timings).map_err(std::io::Error::other)?;
    fs::write(path, json + "\n")
}
