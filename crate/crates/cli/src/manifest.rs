use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ecopo_core::CorpusStats;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

/// Provenance record written next to every command's outputs. Carries no
/// timestamps or absolute paths so reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    /// SHA-256 of the `key=value` lines of `config`, sorted by key.
    pub config_hash: String,
    pub seed: u64,
    pub corpus_stats: BTreeMap<String, CorpusStats>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, seed: u64) -> Self {
        Self {
            format_version: MANIFEST_VERSION,
            command: command.to_string(),
            config_hash: config_hash(&config),
            config,
            seed,
            corpus_stats: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn corpus(mut self, role: &str, stats: CorpusStats) -> Self {
        self.corpus_stats.insert(role.to_string(), stats);
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(file_name(path));
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn config_hash(config: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in config {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

/// `out.ext` -> `out.ext.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
