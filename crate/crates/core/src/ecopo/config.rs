use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which objective a training run optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Cross-entropy only.
    Ori,
    /// Contrastive probability loss only.
    Cpo,
    /// `lambda1 * ORI + lambda2 * CPO`.
    Joint,
}

impl LossKind {
    /// Effective `(lambda1, lambda2)` for this objective.
    pub fn weights(self, config: &TrainConfig) -> (f64, f64) {
        match self {
            LossKind::Ori => (1.0, 0.0),
            LossKind::Cpo => (0.0, 1.0),
            LossKind::Joint => (config.lambda1, config.lambda2),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Ori => "ori",
            LossKind::Cpo => "cpo",
            LossKind::Joint => "joint",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ori" => Ok(LossKind::Ori),
            "cpo" => Ok(LossKind::Cpo),
            "joint" => Ok(LossKind::Joint),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss kind {other:?} (expected ori, cpo or joint)"
            ))),
        }
    }
}

/// Denominator of the contrastive loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CpoAverage {
    /// Mean over the positions that received negatives.
    #[default]
    Targeted,
    /// Mean over the sentences in the batch.
    Batch,
}

impl FromStr for CpoAverage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "targeted" => Ok(CpoAverage::Targeted),
            "batch" => Ok(CpoAverage::Batch),
            other => Err(Error::InvalidArgument(format!(
                "unknown cpo_average {other:?} (expected targeted or batch)"
            ))),
        }
    }
}

impl fmt::Display for CpoAverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CpoAverage::Targeted => "targeted",
            CpoAverage::Batch => "batch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Negative samples per targeted position.
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Cross-entropy-only epochs run before the configured objective, the
    /// analogue of starting from a model already fine-tuned on the data.
    pub pretrain_epochs: usize,
    pub seed: u64,
    pub cpo_average: CpoAverage,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 5,
            lambda1: 1.0,
            lambda2: 1.0,
            batch_size: 64,
            learning_rate: 0.5,
            epochs: 10,
            pretrain_epochs: 0,
            seed: 0,
            cpo_average: CpoAverage::Targeted,
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], in serialization order.
pub const TRAIN_KEYS: &[&str] = &[
    "k",
    "lambda1",
    "lambda2",
    "batch_size",
    "learning_rate",
    "epochs",
    "pretrain_epochs",
    "seed",
    "cpo_average",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid value {value:?} for {key}")))
}

impl TrainConfig {
    pub fn validate(&self, kind: LossKind) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite())
            || !(self.lambda2 >= 0.0 && self.lambda2.is_finite())
        {
            return bad("lambda1 and lambda2 must be finite and non-negative");
        }
        if kind == LossKind::Joint && self.lambda1 == 0.0 && self.lambda2 == 0.0 {
            return bad("lambda1 and lambda2 cannot both be 0 for the joint objective");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        Ok(())
    }

    /// Returns `Ok(false)` for keys this config does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "k" => self.k = parse(key, value)?,
            "lambda1" => self.lambda1 = parse(key, value)?,
            "lambda2" => self.lambda2 = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "cpo_average" => self.cpo_average = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Flat `key = value` lines in [`TRAIN_KEYS`] order.
    pub fn to_kv(&self) -> String {
        format!(
            "k = {}\nlambda1 = {}\nlambda2 = {}\nbatch_size = {}\nlearning_rate = {}\nepochs = {}\npretrain_epochs = {}\nseed = {}\ncpo_average = {}\n",
            self.k,
            self.lambda1,
            self.lambda2,
            self.batch_size,
            self.learning_rate,
            self.epochs,
            self.pretrain_epochs,
            self.seed,
            self.cpo_average
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!(c.k, 5);
        assert_eq!((c.lambda1, c.lambda2), (1.0, 1.0));
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.epochs, 10);
        assert!(c.validate(LossKind::Joint).is_ok());
    }

    #[test]
    fn kv_round_trip() {
        let c = TrainConfig {
            k: 7,
            lambda1: 0.25,
            cpo_average: CpoAverage::Batch,
            ..TrainConfig::default()
        };
        let mut d = TrainConfig::default();
        for line in c.to_kv().lines() {
            let (k, v) = line.split_once('=').unwrap();
            assert!(d.set(k.trim(), v.trim()).unwrap());
        }
        assert_eq!(c, d);
        assert!(!d.set("d_emb", "3").unwrap());
        assert!(d.set("k", "x").is_err());
    }

    #[test]
    fn validation() {
        let c = TrainConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            ..Default::default()
        };
        assert!(c.validate(LossKind::Joint).is_err());
        assert!(c.validate(LossKind::Ori).is_ok());
        assert!(TrainConfig {
            k: 0,
            ..Default::default()
        }
        .validate(LossKind::Ori)
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        }
        .validate(LossKind::Ori)
        .is_err());
        assert!(TrainConfig {
            lambda2: -1.0,
            ..Default::default()
        }
        .validate(LossKind::Joint)
        .is_err());
    }

    #[test]
    fn loss_kind_parsing_and_weights() {
        let c = TrainConfig {
            lambda1: 2.0,
            lambda2: 0.5,
            ..Default::default()
        };
        assert_eq!("JOINT".parse::<LossKind>().unwrap().weights(&c), (2.0, 0.5));
        assert_eq!(LossKind::Ori.weights(&c), (1.0, 0.0));
        assert_eq!(LossKind::Cpo.weights(&c), (0.0, 1.0));
        assert!("softmax".parse::<LossKind>().is_err());
    }
}
