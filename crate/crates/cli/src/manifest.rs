use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one command invocation: enough to repeat it exactly.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timings_ms: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> std::io::Result<FileDigest> {
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&fs::read(path)?),
    })
}

/// Collects output files and writes them, then the manifest, in one place.
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self { files: Vec::new() }
    }

    pub fn add(&mut self, path: Option<&PathBuf>, contents: impl Into<Vec<u8>>) {
        if let Some(p) = path {
            self.files.push((p.clone(), contents.into()));
        }
    }

    /// Writes every output and, next to the first one, `<name>.manifest.json`.
    pub fn commit(
        self,
        config: serde_json::Value,
        inputs: &[&Path],
        timings_ms: BTreeMap<String, f64>,
    ) -> Result<Option<PathBuf>, String> {
        let mut outputs = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            outputs.push(FileDigest {
                path: path.display().to_string(),
                sha256: sha256_hex(bytes),
            });
        }
        let Some((first, _)) = self.files.first() else {
            return Ok(None);
        };
        let inputs = inputs
            .iter()
            .map(|p| digest_file(p).map_err(|e| format!("cannot read {}: {e}", p.display())))
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().collect(),
            config,
            inputs,
            outputs,
            timings_ms,
        };
        let mut name = first.clone().into_os_string();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        Ok(Some(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
