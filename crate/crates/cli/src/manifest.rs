use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to rerun a command: its arguments, the digests of the
/// files it read, and the files it wrote. No timestamps, so two identical
/// runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, without `--out`.
    pub argv: Vec<String>,
    /// Input path → sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    /// Output file names, relative to the output directory.
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects inputs, outputs and config while a command runs.
pub struct Run {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn new(command: &str, argv: Vec<String>, seed: u64, out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                argv,
                inputs: BTreeMap::new(),
                seed,
                config: BTreeMap::new(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.manifest
            .inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.manifest
            .config
            .insert(key.to_string(), value.to_string());
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `<command>.manifest.json` and returns the output file names.
    pub fn finish(self) -> Result<Vec<String>> {
        let name = format!("{}.manifest.json", self.manifest.command);
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        let path = self.out_dir.join(&name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        let mut outputs = self.manifest.outputs;
        outputs.push(name);
        Ok(outputs)
    }
}

pub fn load(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read manifest {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed manifest {}", path.display()))
}

/// Fails if any recorded input no longer has its recorded digest.
pub fn verify_inputs(m: &RunManifest) -> Result<()> {
    for (path, digest) in &m.inputs {
        let bytes = fs::read(path).with_context(|| format!("manifest input {path} is missing"))?;
        let now = sha256_hex(&bytes);
        if &now != digest {
            anyhow::bail!("manifest input {path} changed (recorded {digest}, now {now})");
        }
    }
    Ok(())
}
