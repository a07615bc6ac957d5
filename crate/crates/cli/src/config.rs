//! Flat `key = value` config files and the settings they populate.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ecopo_core::{LossKind, ModelDims, TrainConfig};

/// Parsed config file. Blank lines and lines starting with `#` are skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    pub entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", n + 1);
            };
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", n + 1);
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                bail!("line {}: duplicate key {key}", n + 1);
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}

/// Everything a training run needs besides its corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub train: TrainConfig,
    pub kind: LossKind,
    pub d_emb: usize,
    pub hidden: usize,
    pub window: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            kind: LossKind::Joint,
            d_emb: 32,
            hidden: 64,
            window: 2,
        }
    }
}

impl RunSettings {
    /// Applies one setting; `Ok(false)` for keys it does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        if self.train.set(key, value)? {
            return Ok(true);
        }
        let parse = |v: &str| -> Result<usize> {
            v.parse()
                .with_context(|| format!("invalid value {v:?} for {key}"))
        };
        match key {
            "kind" => self.kind = value.parse()?,
            "d_emb" => self.d_emb = parse(value)?,
            "hidden" => self.hidden = parse(value)?,
            "window" => self.window = parse(value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Applies every entry of `file` whose key is in `allowed` or owned by
    /// these settings; any other key is an error.
    pub fn apply_file(&mut self, file: &KvFile, extra: &[&str]) -> Result<()> {
        for (key, value) in &file.entries {
            if !self.set(key, value)? && !extra.contains(&key.as_str()) {
                bail!("unknown config key {key}");
            }
        }
        Ok(())
    }

    pub fn dims(&self, vocab_size: usize) -> Result<ModelDims> {
        Ok(ModelDims::new(
            vocab_size,
            self.d_emb,
            self.hidden,
            self.window,
        )?)
    }

    /// Canonical listing in a fixed key order, used for hashing and manifests.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        for line in self.train.to_kv().lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                map.insert(k.to_string(), v.to_string());
            }
        }
        map.insert("kind".into(), self.kind.to_string());
        map.insert("d_emb".into(), self.d_emb.to_string());
        map.insert("hidden".into(), self.hidden.to_string());
        map.insert("window".into(), self.window.to_string());
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_junk() {
        let f = KvFile::parse("# c\n\nk = 3\nlambda2=0.5\n").unwrap();
        assert_eq!(f.entries["k"], "3");
        assert_eq!(f.entries["lambda2"], "0.5");
        assert!(KvFile::parse("k 3").is_err());
        assert!(KvFile::parse("k=1\nk=2").is_err());
        assert!(KvFile::parse(" = 2").is_err());
    }

    #[test]
    fn file_overrides_defaults() {
        let mut s = RunSettings::default();
        s.apply_file(
            &KvFile::parse("k = 7\nkind = ori\nhidden = 8").unwrap(),
            &[],
        )
        .unwrap();
        assert_eq!((s.train.k, s.kind, s.hidden), (7, LossKind::Ori, 8));
        assert!(s
            .apply_file(&KvFile::parse("bogus = 1").unwrap(), &[])
            .is_err());
        assert!(s
            .apply_file(&KvFile::parse("bogus = 1").unwrap(), &["bogus"])
            .is_ok());
    }

    #[test]
    fn kv_round_trip() {
        let mut s = RunSettings::default();
        s.set("lambda1", "0.25").unwrap();
        s.set("cpo_average", "batch").unwrap();
        let text: String = s
            .to_map()
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        let mut t = RunSettings::default();
        t.apply_file(&KvFile::parse(&text).unwrap(), &[]).unwrap();
        assert_eq!(s, t);
    }
}
