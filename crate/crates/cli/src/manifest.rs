use std::path::{Path, PathBuf};

use mecpred::io::{read_bytes, read_json, write_json};
use mecpred::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::invocation::{Invocation, Outcome};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    #[serde(default = "yes")]
    pub reproducible: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seed {
    pub name: String,
    pub value: u64,
}

/// Everything needed to re-run a command and check that it reproduces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub args: Vec<String>,
    pub out_dir: PathBuf,
    pub invocation: Invocation,
    pub seeds: Vec<Seed>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_time_s: f64,
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = read_bytes(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn new(
        inv: &Invocation,
        args: Vec<String>,
        out_dir: &Path,
        outcome: &Outcome,
        wall_time_s: f64,
    ) -> Result<Self> {
        let digest = |p: &Path, reproducible| -> Result<FileDigest> {
            Ok(FileDigest {
                path: p.to_path_buf(),
                sha256: digest_file(p)?,
                reproducible,
            })
        };
        Ok(Self {
            tool: env!("CARGO_BIN_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            args,
            out_dir: out_dir.to_path_buf(),
            invocation: inv.clone(),
            seeds: inv
                .seeds()
                .into_iter()
                .map(|(name, value)| Seed {
                    name: name.to_owned(),
                    value,
                })
                .collect(),
            inputs: outcome.inputs.iter().map(|p| digest(p, true)).collect::<Result<_>>()?,
            outputs: outcome
                .outputs
                .iter()
                .map(|o| digest(&o.path, o.reproducible))
                .collect::<Result<_>>()?,
            wall_time_s,
        })
    }

    /// `manifest-<command>.json`; training runs add the output stem so a
    /// model and a bundle in the same directory keep separate manifests.
    pub fn file_name(inv: &Invocation) -> String {
        match inv {
            Invocation::Train { out, .. } => {
                let stem = Path::new(out).file_stem().and_then(|s| s.to_str()).unwrap_or("model");
                format!("manifest-train-{stem}.json")
            }
            _ => format!("manifest-{}.json", inv.name()),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(Self::file_name(&self.invocation));
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}
