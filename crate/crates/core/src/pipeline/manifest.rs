use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> io::Result<String> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to every stage output.
///
/// `manifest_digest` covers the tool version, command, config digest, seed
/// and input content digests. Paths and timestamps are excluded, so reruns
/// on identical inputs share a digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub manifest_digest: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("input {role} ({path}) changed: recorded {recorded}, found {found}")]
    InputChanged {
        role: String,
        path: String,
        recorded: String,
        found: String,
    },
    #[error("manifest digest mismatch: recorded {recorded}, recomputed {found}")]
    DigestMismatch { recorded: String, found: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        let config_digest = sha256_hex(config.to_string().as_bytes());
        let mut m = Self {
            tool_version: TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            config,
            config_digest,
            seed,
            inputs: Vec::new(),
            started_at: now(),
            finished_at: None,
            manifest_digest: String::new(),
        };
        m.manifest_digest = m.compute_digest();
        m
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> io::Result<()> {
        self.inputs.push(InputDigest {
            role: role.to_owned(),
            path: path.to_owned(),
            sha256: file_digest(path)?,
        });
        self.manifest_digest = self.compute_digest();
        Ok(())
    }

    pub fn compute_digest(&self) -> String {
        let inputs: Vec<(&str, &str)> = self
            .inputs
            .iter()
            .map(|i| (i.role.as_str(), i.sha256.as_str()))
            .collect();
        let canonical = serde_json::json!({
            "tool_version": self.tool_version,
            "command": self.command,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "inputs": inputs,
        });
        sha256_hex(canonical.to_string().as_bytes())
    }

    pub fn finish(&mut self) {
        self.finished_at = Some(now());
    }

    /// Re-hashes every input and the manifest itself.
    pub fn verify(&self) -> Result<(), ManifestError> {
        for input in &self.inputs {
            let found = file_digest(&input.path)?;
            if found != input.sha256 {
                return Err(ManifestError::InputChanged {
                    role: input.role.clone(),
                    path: input.path.display().to_string(),
                    recorded: input.sha256.clone(),
                    found,
                });
            }
        }
        let found = self.compute_digest();
        if found != self.manifest_digest {
            return Err(ManifestError::DigestMismatch {
                recorded: self.manifest_digest.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

/// Sidecar path: `<output>.manifest.json`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
