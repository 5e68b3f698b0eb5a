//! Run manifests.
//!
//! Every command writes a `manifest.json` under its output directory:
//! the exact command line, tool version, seed, a hash of the effective
//! configuration, digests of every input file, and the list of produced
//! files. Re-running a command with identical inputs reproduces every
//! numeric output byte for byte; manifests differ only in the duration
//! field.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::common::CliResult;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

pub struct ManifestBuilder {
    started: Instant,
    seed: u64,
    config_hash: String,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
    out_dir: PathBuf,
}

fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

impl ManifestBuilder {
    pub fn new(out_dir: &Path, seed: u64, effective_config: &impl Serialize) -> Self {
        let config_json =
            serde_json::to_string(effective_config).expect("config serialization cannot fail");
        ManifestBuilder {
            started: Instant::now(),
            seed,
            config_hash: format!("{:x}", Sha256::digest(config_json.as_bytes())),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            out_dir: out_dir.to_path_buf(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> CliResult<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Record output files produced under the output directory by name.
    pub fn out_file(&mut self, name: &str) -> PathBuf {
        let path = self.out_dir.join(name);
        self.outputs.push(path.clone());
        path
    }

    pub fn finish(self) -> CliResult<()> {
        for output in &self.outputs {
            if !output.exists() {
                return Err(crate::common::CliError::Runtime(anyhow::anyhow!(
                    "declared output missing: {}",
                    output.display()
                )));
            }
        }
        let manifest = RunManifest {
            command: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            config_hash: self.config_hash,
            input_digests: self.inputs,
            outputs: self
                .outputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}
