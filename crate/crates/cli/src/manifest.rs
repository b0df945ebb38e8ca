//! Run manifest: what was run, with which configuration, and the content
//! hash of every file it produced.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use shred_core::{Result, ShredError};

/// `manifest-<command>.json`, so that commands sharing an output directory
/// keep separate manifests.
pub fn manifest_file(command: &str) -> String {
    format!("manifest-{command}.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub artifacts: Vec<Artifact>,
    pub timings: Vec<StageTiming>,
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> Result<(String, u64)> {
    let bytes = std::fs::read(path)?;
    Ok((sha256_hex(&bytes), bytes.len() as u64))
}

/// Collects artifacts and stage timings while a command runs.
pub struct ManifestBuilder {
    out: PathBuf,
    manifest: RunManifest,
    stage_start: Instant,
}

impl ManifestBuilder {
    pub fn new(out: &Path, command: &str, config_hash: String, seed: u64) -> Self {
        ManifestBuilder {
            out: out.to_path_buf(),
            manifest: RunManifest {
                command: command.into(),
                config_hash,
                seed,
                version: env!("CARGO_PKG_VERSION").into(),
                artifacts: Vec::new(),
                timings: Vec::new(),
            },
            stage_start: Instant::now(),
        }
    }

    /// Closes the current stage under `name` and starts the next one.
    pub fn stage(&mut self, name: &str) {
        self.manifest.timings.push(StageTiming {
            stage: name.into(),
            seconds: self.stage_start.elapsed().as_secs_f64(),
        });
        self.stage_start = Instant::now();
    }

    /// Records a file already written under the output directory.
    pub fn artifact(&mut self, name: &str) -> Result<PathBuf> {
        let full = self.out.join(name);
        let (sha256, bytes) = file_digest(&full)?;
        self.manifest.artifacts.retain(|a| a.path != Path::new(name));
        self.manifest.artifacts.push(Artifact {
            path: name.into(),
            sha256,
            bytes,
        });
        Ok(full)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn finish(self) -> Result<RunManifest> {
        let json =
            serde_json::to_string_pretty(&self.manifest).map_err(|e| ShredError::Format(format!("manifest: {e}")))?;
        std::fs::write(self.out.join(manifest_file(&self.manifest.command)), json)?;
        Ok(self.manifest)
    }
}

impl RunManifest {
    pub fn read(dir: &Path, command: &str) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(manifest_file(command)))?;
        serde_json::from_str(&text).map_err(|e| ShredError::Format(format!("manifest: {e}")))
    }

    /// Checks that every listed artifact exists with the recorded content.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let full = dir.join(&a.path);
            if !full.exists() {
                return Err(ShredError::Format(format!("artifact {} is missing", a.path.display())));
            }
            let (sha, bytes) = file_digest(&full)?;
            if sha != a.sha256 || bytes != a.bytes {
                return Err(ShredError::Format(format!(
                    "artifact {} changed since the run",
                    a.path.display()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_detects_missing_and_changed_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "x\n1\n").unwrap();
        std::fs::write(dir.path().join("b.csv"), "y\n2\n").unwrap();
        let mut b = ManifestBuilder::new(dir.path(), "test", "abc".into(), 1);
        b.artifact("a.csv").unwrap();
        b.artifact("b.csv").unwrap();
        b.stage("write");
        let m = b.finish().unwrap();
        let read = RunManifest::read(dir.path(), "test").unwrap();
        assert_eq!(read, m);
        read.verify(dir.path()).unwrap();
        std::fs::write(dir.path().join("b.csv"), "y\n3\n").unwrap();
        assert!(read.verify(dir.path()).is_err());
        std::fs::remove_file(dir.path().join("a.csv")).unwrap();
        assert!(read.verify(dir.path()).is_err());
    }
}
