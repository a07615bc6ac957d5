use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use ecopo_core::data::inject_corpus;
use ecopo_core::data::synth::{SynthConfig, SyntheticLanguage};
use ecopo_core::ecopo::encode_corpus;
use ecopo_core::gradcheck::grad_check;
use ecopo_core::{LossKind, ModelParams};
use serde::Serialize;

use super::{corpus_vocabulary, load_corpus, TrainFlags};
use crate::manifest::{sidecar, write_json, RunManifest};

pub const GRADCHECK_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Ori,
    Cpo,
    Joint,
    All,
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    #[command(flatten)]
    pub flags: TrainFlags,
    /// Parallel corpus to draw the batch from; a synthetic one is generated otherwise.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Objective(s) to check.
    #[arg(long, value_enum, default_value_t = CheckKind::All)]
    pub objective: CheckKind,
    /// Sentences in the batch.
    #[arg(long, default_value_t = 4)]
    pub sentences: usize,
    /// Parameter coordinates per objective.
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// JSON report output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct KindReport {
    objective: LossKind,
    samples: usize,
    max_relative_error: f64,
    passed: bool,
}

#[derive(Serialize)]
struct GradCheckFile {
    format_version: u32,
    tolerance: f64,
    reports: Vec<KindReport>,
}

pub fn run_grad_check(args: &GradCheckArgs) -> Result<()> {
    let (settings, _) = args.flags.resolve(&[])?;
    if args.sentences == 0 {
        bail!("sentences must be at least 1");
    }
    let seed = settings.train.seed;
    let corpus = match &args.corpus {
        Some(path) => load_corpus(path)?
            .0
            .into_iter()
            .take(args.sentences)
            .collect(),
        None => {
            let language = SyntheticLanguage::generate(&SynthConfig {
                alphabet_size: 30,
                lexicon_size: 40,
                min_sentence_len: 6,
                max_sentence_len: 12,
                seed,
                ..SynthConfig::default()
            })?;
            let clean = language.sentences(args.sentences, seed);
            inject_corpus(&clean, language.confusion(), 0.3, seed)?
        }
    };
    let vocab = corpus_vocabulary(&corpus)?;
    let batch = encode_corpus(&vocab, &corpus);
    let params = ModelParams::init(settings.dims(vocab.size())?, seed);
    let kinds: &[LossKind] = match args.objective {
        CheckKind::Ori => &[LossKind::Ori],
        CheckKind::Cpo => &[LossKind::Cpo],
        CheckKind::Joint => &[LossKind::Joint],
        CheckKind::All => &[LossKind::Ori, LossKind::Cpo, LossKind::Joint],
    };
    let mut reports = Vec::new();
    for &kind in kinds {
        let report = grad_check(&params, &batch, kind, &settings.train, args.samples, seed)?;
        println!(
            "{kind}: max relative error {:e} over {} coordinates",
            report.max_relative_error,
            report.checks.len()
        );
        reports.push(KindReport {
            objective: kind,
            samples: report.checks.len(),
            max_relative_error: report.max_relative_error,
            passed: report.max_relative_error <= args.tolerance,
        });
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.objective.to_string())
        .collect();
    write_json(
        &args.out,
        &GradCheckFile {
            format_version: GRADCHECK_VERSION,
            tolerance: args.tolerance,
            reports,
        },
    )?;
    let mut config = settings.to_map();
    config.insert("samples".into(), args.samples.to_string());
    config.insert("sentences".into(), args.sentences.to_string());
    RunManifest::new("grad-check", config, seed)
        .output(&args.out)
        .write(&sidecar(&args.out, "manifest.json"))?;
    if !failed.is_empty() {
        bail!("gradient check failed for {}", failed.join(", "));
    }
    Ok(())
}
