use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ecopo_core::data::load_text_lines;
use ecopo_core::eval::evaluate;
use ecopo_core::model::load_checkpoint;
use ecopo_core::{ConfusionSet, CooccurrenceTable, ErrorTaxonomy, MetricsReport};
use serde::Serialize;

use super::load_corpus;
use crate::manifest::{file_name, write_json, RunManifest};

pub const METRICS_VERSION: u32 = 1;
pub const TAXONOMY_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Parallel test corpus.
    #[arg(long)]
    pub test: PathBuf,
    /// Corpus the co-occurrence counts are taken from (last TSV column).
    #[arg(long)]
    pub cooccurrence: PathBuf,
    #[arg(long)]
    pub confusion: PathBuf,
    /// Common-character threshold; defaults to the 99.5th percentile of
    /// nonzero pair counts.
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Directory receiving metrics.json, taxonomy.json, predictions.tsv and manifest.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    format_version: u32,
    detection: &'a MetricsReport,
    correction: &'a MetricsReport,
}

#[derive(Serialize)]
struct TaxonomyFile<'a> {
    format_version: u32,
    #[serde(flatten)]
    taxonomy: &'a ErrorTaxonomy,
}

pub fn run_eval(args: &EvalArgs) -> Result<()> {
    let (params, vocab) = load_checkpoint(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let (test, stats) = load_corpus(&args.test)?;
    let context = load_text_lines(&args.cooccurrence)
        .with_context(|| format!("reading {}", args.cooccurrence.display()))?;
    let table = CooccurrenceTable::count(&vocab, context.iter().map(|s| s.iter().copied()));
    let confusion = ConfusionSet::load(&args.confusion)
        .with_context(|| format!("reading {}", args.confusion.display()))?;
    let threshold = args.threshold.unwrap_or_else(|| table.default_threshold());
    if threshold == 0 {
        bail!("threshold must be at least 1");
    }
    let (report, judgements) = evaluate(&params, &vocab, &test, &table, &confusion, threshold)?;

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let metrics_path = args.out_dir.join("metrics.json");
    write_json(
        &metrics_path,
        &MetricsFile {
            format_version: METRICS_VERSION,
            detection: &report.detection,
            correction: &report.correction,
        },
    )?;
    let taxonomy_path = args.out_dir.join("taxonomy.json");
    write_json(
        &taxonomy_path,
        &TaxonomyFile {
            format_version: TAXONOMY_VERSION,
            taxonomy: &report.taxonomy,
        },
    )?;
    let predictions_path = args.out_dir.join("predictions.tsv");
    let mut text = String::new();
    for j in &judgements {
        let s: String = j.source.iter().collect();
        let t: String = j.target.iter().collect();
        let p: String = j.predicted.iter().collect();
        let _ = writeln!(text, "{s}\t{t}\t{p}");
    }
    fs::write(&predictions_path, text)?;

    let mut config = BTreeMap::new();
    config.insert("checkpoint".into(), file_name(&args.checkpoint));
    config.insert("test".into(), file_name(&args.test));
    config.insert("cooccurrence".into(), file_name(&args.cooccurrence));
    config.insert("confusion".into(), file_name(&args.confusion));
    config.insert("threshold".into(), threshold.to_string());
    let seed = params.lineage().last().copied().unwrap_or(0);
    RunManifest::new("eval", config, seed)
        .corpus("test", stats)
        .output(&metrics_path)
        .output(&taxonomy_path)
        .output(&predictions_path)
        .write(&args.out_dir.join("manifest.json"))?;
    println!(
        "detection f1 {:.4}, correction f1 {:.4}, wrong corrections {} (common {:.4})",
        report.detection.f1,
        report.correction.f1,
        report.taxonomy.total,
        report.taxonomy.common_share
    );
    Ok(())
}
