//! Run manifests: the resolved command plus hashes of everything read and
//! written, stored as `<output>.manifest.json`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::Command;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(FileHash {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub invocation: Command,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    /// Values filled in at run time, such as the iteration count.
    pub resolved: serde_json::Value,
}

impl Manifest {
    pub fn new(invocation: Command, inputs: &[&Path], outputs: &[&Path], resolved: serde_json::Value) -> Result<Self> {
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            invocation,
            inputs: inputs.iter().map(|p| FileHash::of(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| FileHash::of(p)).collect::<Result<_>>()?,
            resolved,
        })
    }

    pub fn path_for(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write_next_to(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    /// Fails if any recorded input changed since the manifest was written.
    pub fn check_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = FileHash::of(&input.path)?;
            if now.sha256 != input.sha256 {
                bail!(
                    "input {} changed since the manifest was written (sha256 {} now {})",
                    input.path.display(),
                    input.sha256,
                    now.sha256
                );
            }
        }
        Ok(())
    }
}
