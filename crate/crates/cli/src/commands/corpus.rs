use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ecopo_core::data::synth::{SynthConfig, SyntheticLanguage};
use ecopo_core::data::{
    corpus_stats, inject_corpus, load_text_lines, save_parallel, DEFAULT_INJECTION_RATE,
};
use ecopo_core::ConfusionSet;

use crate::manifest::{file_name, sidecar, write_json, RunManifest};

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of sentences to sample.
    #[arg(long, default_value_t = 5000)]
    pub sentences: usize,
    /// Seed of the language itself (alphabet, lexicon, confusion groups).
    #[arg(long, default_value_t = 0)]
    pub language_seed: u64,
    /// Seed for sampling sentences from the language.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 198)]
    pub alphabet_size: usize,
    #[arg(long, default_value_t = 16)]
    pub min_len: usize,
    #[arg(long, default_value_t = 32)]
    pub max_len: usize,
    /// Clean text output, one sentence per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Confusion set output.
    #[arg(long)]
    pub confusion_out: PathBuf,
}

pub fn run_synth(args: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        alphabet_size: args.alphabet_size,
        min_sentence_len: args.min_len,
        max_sentence_len: args.max_len,
        seed: args.language_seed,
        ..SynthConfig::default()
    };
    let language = SyntheticLanguage::generate(&config)?;
    let mut text = String::new();
    for sentence in language.sentences(args.sentences, args.seed) {
        text.extend(sentence);
        text.push('\n');
    }
    fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;
    language.confusion().save(&args.confusion_out)?;

    let mut settings = BTreeMap::new();
    settings.insert("sentences".into(), args.sentences.to_string());
    settings.insert("language_seed".into(), args.language_seed.to_string());
    settings.insert("alphabet_size".into(), args.alphabet_size.to_string());
    settings.insert("min_len".into(), args.min_len.to_string());
    settings.insert("max_len".into(), args.max_len.to_string());
    RunManifest::new("synth", settings, args.seed)
        .output(&args.out)
        .output(&args.confusion_out)
        .write(&sidecar(&args.out, "manifest.json"))
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    /// Clean text, one sentence per line (for TSV input the last column is used).
    #[arg(long)]
    pub clean: PathBuf,
    /// Confusion set: `char<TAB>candidates` per line.
    #[arg(long)]
    pub confusion: PathBuf,
    /// Substitution probability per position that has candidates.
    #[arg(long, default_value_t = DEFAULT_INJECTION_RATE)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parallel TSV output.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_gen_corpus(args: &GenCorpusArgs) -> Result<()> {
    let clean = load_text_lines(&args.clean)
        .with_context(|| format!("reading {}", args.clean.display()))?;
    if clean.is_empty() {
        bail!("{}: empty corpus", args.clean.display());
    }
    let confusion = ConfusionSet::load(&args.confusion)
        .with_context(|| format!("reading {}", args.confusion.display()))?;
    let corpus = inject_corpus(&clean, &confusion, args.rate, args.seed)?;
    save_parallel(&args.out, &corpus)?;
    let stats = corpus_stats(&corpus);
    let stats_path = sidecar(&args.out, "stats.json");
    write_json(&stats_path, &stats)?;

    let mut settings = BTreeMap::new();
    settings.insert("clean".into(), file_name(&args.clean));
    settings.insert("confusion".into(), file_name(&args.confusion));
    settings.insert("rate".into(), args.rate.to_string());
    RunManifest::new("gen-corpus", settings, args.seed)
        .corpus("output", stats)
        .output(&args.out)
        .output(&stats_path)
        .write(&sidecar(&args.out, "manifest.json"))
}
