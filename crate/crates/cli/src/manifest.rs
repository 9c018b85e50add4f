use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// What produced an output file. Written as `<output>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command_line: String,
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
}

#[derive(Serialize)]
struct Identity<'a> {
    command_line: &'a str,
    inputs: &'a BTreeMap<String, String>,
    seed: Option<u64>,
    tool_version: &'a str,
}

impl RunManifest {
    pub fn new(seed: Option<u64>) -> Self {
        let command_line = std::env::args().collect::<Vec<_>>().join(" ");
        RunManifest {
            command_line,
            inputs: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = depnet_core::ingestion::sha256_file(path).map_err(CliError::parse)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// SHA-256 over everything but the timestamp, so reruns with the same
    /// inputs and settings share a digest.
    pub fn digest(&self) -> String {
        let identity = Identity {
            command_line: &self.command_line,
            inputs: &self.inputs,
            seed: self.seed,
            tool_version: &self.tool_version,
        };
        let bytes = serde_json::to_vec(&identity).expect("manifest serializes");
        Sha256::digest(bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn write_beside(&self, output: &Path) -> Result<PathBuf, CliError> {
        let path = sidecar(output, "manifest.json");
        let mut json = serde_json::to_value(self).expect("manifest serializes");
        json["digest"] = self.digest().into();
        let text = serde_json::to_string_pretty(&json).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// `dir/name.ext` -> `dir/name.ext.<suffix>`.
pub fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timestamp() {
        let mut a = RunManifest::new(Some(3));
        let mut b = a.clone();
        b.timestamp = "2000-01-01T00:00:00Z".into();
        assert_eq!(a.digest(), b.digest());
        a.seed = Some(4);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar(Path::new("out/h.csv"), "manifest.json"),
            PathBuf::from("out/h.csv.manifest.json")
        );
    }
}
