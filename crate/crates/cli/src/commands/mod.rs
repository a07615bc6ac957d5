mod corpus;
mod evaluate;
mod gradcheck;
mod heatmap;
mod sweep;
mod train;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use ecopo_core::data::{corpus_stats, load_parallel};
use ecopo_core::ecopo::CpoAverage;
use ecopo_core::{CorpusStats, LossKind, ParallelSentence, Vocabulary};

use crate::config::{KvFile, RunSettings};

pub use corpus::{run_gen_corpus, run_synth, GenCorpusArgs, SynthArgs};
pub use evaluate::{run_eval, EvalArgs};
pub use gradcheck::{run_grad_check, GradCheckArgs};
pub use heatmap::{run_heatmap, HeatmapArgs};
pub use sweep::{run_sweep, SweepArgs};
pub use train::{run_train, TrainArgs};

/// Training settings shared by `train`, `sweep` and `grad-check`.
/// Precedence: flag, then config file, then built-in default.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainFlags {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Objective: ori, cpo or joint.
    #[arg(long)]
    pub kind: Option<LossKind>,
    /// Negatives per targeted position.
    #[arg(long)]
    pub k: Option<usize>,
    /// Weight of the cross-entropy term.
    #[arg(long)]
    pub lambda1: Option<f64>,
    /// Weight of the contrastive term.
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Cross-entropy epochs before the chosen objective.
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Contrastive loss denominator: targeted or batch.
    #[arg(long)]
    pub cpo_average: Option<CpoAverage>,
    #[arg(long)]
    pub d_emb: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Context characters on each side.
    #[arg(long)]
    pub window: Option<usize>,
}

impl TrainFlags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |key, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        push("kind", self.kind.map(|v| v.to_string()));
        push("k", self.k.map(|v| v.to_string()));
        push("lambda1", self.lambda1.map(|v| v.to_string()));
        push("lambda2", self.lambda2.map(|v| v.to_string()));
        push("batch_size", self.batch_size.map(|v| v.to_string()));
        push("learning_rate", self.learning_rate.map(|v| v.to_string()));
        push("epochs", self.epochs.map(|v| v.to_string()));
        push(
            "pretrain_epochs",
            self.pretrain_epochs.map(|v| v.to_string()),
        );
        push("seed", self.seed.map(|v| v.to_string()));
        push("cpo_average", self.cpo_average.map(|v| v.to_string()));
        push("d_emb", self.d_emb.map(|v| v.to_string()));
        push("hidden", self.hidden.map(|v| v.to_string()));
        push("window", self.window.map(|v| v.to_string()));
        out
    }

    /// Resolves settings and returns the config file for command-specific
    /// keys listed in `extra`.
    pub fn resolve(&self, extra: &[&str]) -> Result<(RunSettings, KvFile)> {
        let file = KvFile::load_optional(self.config.as_deref())?;
        let mut settings = RunSettings::default();
        settings.apply_file(&file, extra)?;
        for (key, value) in self.overrides() {
            settings.set(key, &value)?;
        }
        settings.train.validate(settings.kind)?;
        Ok((settings, file))
    }
}

pub fn load_corpus(path: &Path) -> Result<(Vec<ParallelSentence>, CorpusStats)> {
    let corpus = load_parallel(path).with_context(|| format!("loading {}", path.display()))?;
    if corpus.is_empty() {
        bail!("{}: empty corpus", path.display());
    }
    let stats = corpus_stats(&corpus);
    Ok((corpus, stats))
}

/// Vocabulary over both sides of a parallel corpus.
pub fn corpus_vocabulary(corpus: &[ParallelSentence]) -> Result<Vocabulary> {
    Ok(Vocabulary::build(corpus.iter().flat_map(|s| {
        [s.source().iter().copied(), s.target().iter().copied()]
    }))?)
}
