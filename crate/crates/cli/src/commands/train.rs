use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use ecopo_core::ecopo::{encode_corpus, train, TrainTrace};
use ecopo_core::model::{load_checkpoint, save_checkpoint};
use ecopo_core::ModelParams;
use serde::Serialize;

use super::{corpus_vocabulary, load_corpus, TrainFlags};
use crate::manifest::{sidecar, write_json, RunManifest};

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub flags: TrainFlags,
    /// Parallel training corpus (`source<TAB>target`).
    #[arg(long)]
    pub train: PathBuf,
    /// Start from this checkpoint instead of a fresh initialization.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Checkpoint output; the trace and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct TraceFile<'a> {
    format_version: u32,
    #[serde(flatten)]
    trace: &'a TrainTrace,
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let (settings, _) = args.flags.resolve(&[])?;
    let (corpus, stats) = load_corpus(&args.train)?;
    let (params, vocab) = match &args.init {
        Some(path) => {
            let (params, vocab) = load_checkpoint(path)?;
            let dims = params.dims();
            if (dims.d_emb, dims.hidden, dims.window)
                != (settings.d_emb, settings.hidden, settings.window)
            {
                bail!("checkpoint dimensions differ from the configured d_emb/hidden/window");
            }
            (params, vocab)
        }
        None => {
            let vocab = corpus_vocabulary(&corpus)?;
            (
                ModelParams::init(settings.dims(vocab.size())?, settings.train.seed),
                vocab,
            )
        }
    };
    let encoded = encode_corpus(&vocab, &corpus);
    let (trained, trace) = train(params, &encoded, &settings.train, settings.kind)?;
    save_checkpoint(&trained, &vocab, &args.out)?;
    let trace_path = sidecar(&args.out, "trace.json");
    write_json(
        &trace_path,
        &TraceFile {
            format_version: TRACE_VERSION,
            trace: &trace,
        },
    )?;

    let mut config = settings.to_map();
    if let Some(init) = &args.init {
        config.insert("init".into(), crate::manifest::file_name(init));
    }
    RunManifest::new("train", config, settings.train.seed)
        .corpus("train", stats)
        .output(&args.out)
        .output(&trace_path)
        .write(&sidecar(&args.out, "manifest.json"))?;
    if let Some(last) = trace.epochs.last() {
        println!(
            "trained {} epochs, final mean loss {}",
            trace.epochs.len(),
            last.mean_loss
        );
    }
    Ok(())
}
