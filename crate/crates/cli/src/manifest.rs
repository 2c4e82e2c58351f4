//! Run manifests: what produced a set of output files and at what cost.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: String,
    pub seconds: f64,
    /// Process peak resident set size after the stage (Linux only).
    pub peak_rss_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub workers: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub stages: Vec<StageStats>,
}

/// Reference embedded in every JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRef {
    pub manifest: String,
    pub config_hash: String,
}

/// A report body stamped with the manifest that produced it.
#[derive(Debug, Serialize)]
pub struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    pub origin: &'a ManifestRef,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn sha256_file(path: &Path) -> Result<FileDigest> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(h.finalize()),
        bytes,
    })
}

/// Hash of the canonical (sorted-key) JSON form of a config.
pub fn config_hash(config: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

/// `VmHWM` of the current process, in bytes.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Manifest path for a single-file output: `report.json` -> `report.manifest.json`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Collects stage timings and file digests while a command runs.
pub struct Recorder {
    manifest: RunManifest,
    path: PathBuf,
}

impl Recorder {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        seeds: BTreeMap<String, u64>,
        path: PathBuf,
    ) -> Self {
        let config_hash = config_hash(&config);
        Self {
            manifest: RunManifest {
                tool: "snntopo".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                args: std::env::args().skip(1).collect(),
                config,
                config_hash,
                seeds,
                workers: rayon::current_num_threads(),
                inputs: Vec::new(),
                outputs: Vec::new(),
                stages: Vec::new(),
            },
            path,
        }
    }

    pub fn reference(&self) -> ManifestRef {
        let name = self
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        ManifestRef {
            manifest: name,
            config_hash: self.manifest.config_hash.clone(),
        }
    }

    pub fn config_hash(&self) -> &str {
        &self.manifest.config_hash
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.inputs.push(sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.manifest.outputs.push(sha256_file(path)?);
        Ok(())
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        self.manifest.stages.push(StageStats {
            stage: name.into(),
            seconds: t0.elapsed().as_secs_f64(),
            peak_rss_bytes: peak_rss_bytes(),
        });
        Ok(out)
    }

    pub fn finish(self) -> Result<RunManifest> {
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&self.path, text).with_context(|| format!("cannot write {}", self.path.display()))?;
        Ok(self.manifest)
    }
}

pub fn write_json<T: Serialize>(path: &Path, origin: &ManifestRef, body: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(&Stamped { origin, body })?;
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b":1,"a":[1,2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a":[1,2],"b":1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn manifest_path() {
        assert_eq!(manifest_path_for(Path::new("x/report.json")), Path::new("x/report.manifest.json"));
        assert_eq!(manifest_path_for(Path::new("mask.bin")), Path::new("mask.manifest.json"));
    }
}
