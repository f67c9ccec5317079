use std::fs;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::io::{write_json, OutDir};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    /// Checksums every recorded artifact, sorted by name.
    pub fn build(out: &OutDir) -> Result<Self> {
        let mut names: Vec<&String> = out.files().iter().filter(|n| *n != MANIFEST_NAME).collect();
        names.sort();
        let files = names
            .into_iter()
            .map(|name| {
                let path = out.root().join(name);
                let data = fs::read(&path).map_err(|e| LabError::io(&path, e))?;
                Ok(ManifestEntry {
                    file: name.clone(),
                    bytes: data.len() as u64,
                    sha256: hex::encode(Sha256::digest(&data)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Manifest { files })
    }

    pub fn write(out: &mut OutDir) -> Result<Manifest> {
        let m = Self::build(out)?;
        let path = out.root().join(MANIFEST_NAME);
        write_json(&path, &m)?;
        Ok(m)
    }

    /// Names of entries whose file is missing or no longer matches.
    pub fn verify(&self, out: &OutDir) -> Vec<String> {
        self.files
            .iter()
            .filter(|e| {
                fs::read(out.root().join(&e.file))
                    .map(|d| hex::encode(Sha256::digest(&d)) != e.sha256)
                    .unwrap_or(true)
            })
            .map(|e| e.file.clone())
            .collect()
    }
}
