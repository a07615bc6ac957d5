use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ecopo_core::data::load_text_lines;
use ecopo_core::eval::{export_heatmap, suggest_heatmap_chars};
use ecopo_core::model::load_checkpoint;
use ecopo_core::{CharId, ConfusionSet, CooccurrenceTable, ParallelSentence, Vocabulary};

use crate::manifest::{file_name, sidecar, RunManifest};

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Input sentence.
    #[arg(long)]
    pub source: String,
    /// Gold sentence, same length as the source.
    #[arg(long)]
    pub target: String,
    /// 0-based character position to inspect.
    #[arg(long)]
    pub position: usize,
    /// Common characters, written contiguously (e.g. `的了是`).
    #[arg(long)]
    pub common: Option<String>,
    /// Confusing characters including the gold one.
    #[arg(long)]
    pub confusing: Option<String>,
    /// Corpus for suggesting common characters when `--common` is absent.
    #[arg(long)]
    pub cooccurrence: Option<PathBuf>,
    /// Confusion set for suggesting confusing characters when `--confusing` is absent.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    /// Characters per list when suggesting.
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn ids(vocab: &Vocabulary, chars: &str) -> Result<Vec<CharId>> {
    chars
        .chars()
        .map(|c| {
            vocab
                .id_of(c)
                .with_context(|| format!("character {c:?} is not in the checkpoint vocabulary"))
        })
        .collect()
}

pub fn run_heatmap(args: &HeatmapArgs) -> Result<()> {
    let (params, vocab) = load_checkpoint(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let sentence = ParallelSentence::from_strs(&args.source, &args.target)?;
    let (common, confusing) = match (&args.common, &args.confusing) {
        (Some(common), Some(confusing)) => (ids(&vocab, common)?, ids(&vocab, confusing)?),
        _ => {
            let (Some(corpus), Some(confusion)) = (&args.cooccurrence, &args.confusion) else {
                bail!("give --common and --confusing, or --cooccurrence and --confusion to suggest them");
            };
            let lines = load_text_lines(corpus)?;
            let table = CooccurrenceTable::count(&vocab, lines.iter().map(|s| s.iter().copied()));
            let confusion = ConfusionSet::load(confusion)?;
            let (common, confusing) = suggest_heatmap_chars(
                &vocab,
                &table,
                &confusion,
                &sentence,
                args.position,
                args.count,
            )?;
            (
                args.common
                    .as_deref()
                    .map(|c| ids(&vocab, c))
                    .transpose()?
                    .unwrap_or(common),
                args.confusing
                    .as_deref()
                    .map(|c| ids(&vocab, c))
                    .transpose()?
                    .unwrap_or(confusing),
            )
        }
    };
    export_heatmap(
        &params,
        &vocab,
        &sentence,
        args.position,
        &common,
        &confusing,
        &args.out,
    )?;

    let mut config = BTreeMap::new();
    config.insert("checkpoint".into(), file_name(&args.checkpoint));
    config.insert("source".into(), args.source.clone());
    config.insert("target".into(), args.target.clone());
    config.insert("position".into(), args.position.to_string());
    let show = |list: &[CharId]| -> String {
        list.iter()
            .map(|&id| vocab.char_of(id).unwrap_or('\u{FFFD}'))
            .collect()
    };
    config.insert("common".into(), show(&common));
    config.insert("confusing".into(), show(&confusing));
    let seed = params.lineage().last().copied().unwrap_or(0);
    RunManifest::new("heatmap", config, seed)
        .output(&args.out)
        .write(&sidecar(&args.out, "manifest.json"))
}
