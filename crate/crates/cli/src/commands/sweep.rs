use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use ecopo_core::ecopo::{encode_corpus, pretrain, train_main};
use ecopo_core::eval::{correct_corpus, sentence_metrics};
use ecopo_core::{LossKind, MetricLevel, ModelParams, ParallelSentence, Vocabulary};

use super::{corpus_vocabulary, load_corpus, TrainFlags};
use crate::config::RunSettings;
use crate::manifest::{file_name, sidecar, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    K,
    Lambda1,
    Lambda2,
}

impl SweepParam {
    fn key(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "k" | "K" => Ok(SweepParam::K),
            "lambda1" => Ok(SweepParam::Lambda1),
            "lambda2" => Ok(SweepParam::Lambda2),
            other => bail!("unknown sweep parameter {other:?} (expected k, lambda1 or lambda2)"),
        }
    }
}

/// Sweep keys accepted in the config file.
pub const SWEEP_KEYS: &[&str] = &["sweep_param", "sweep_values", "sweep_seeds"];

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub flags: TrainFlags,
    /// Parameter to vary.
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    /// Comma-separated values of the parameter.
    #[arg(long)]
    pub values: Option<String>,
    /// Comma-separated seeds; each (value, seed) pair is one run.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Output table `<param>,seed,detection_f1,correction_f1`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also train the cross-entropy-only baseline per seed and write
    /// `seed,detection_f1,correction_f1` here.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

/// The resolved sweep: which parameter, its values and the seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            bail!("sweep values must be non-empty");
        }
        if self.seeds.is_empty() {
            bail!("sweep seeds must be non-empty");
        }
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                bail!("sweep value {v} is not finite");
            }
            if self.values[..i].contains(v) {
                bail!("duplicate sweep value {v}");
            }
            match self.param {
                SweepParam::K if *v < 1.0 || v.fract() != 0.0 => {
                    bail!("k values must be positive integers, got {v}")
                }
                SweepParam::Lambda1 | SweepParam::Lambda2 if *v < 0.0 => {
                    bail!("lambda values must be non-negative, got {v}")
                }
                _ => {}
            }
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                bail!("duplicate sweep seed {s}");
            }
        }
        Ok(())
    }

    fn format_value(&self, v: f64) -> String {
        match self.param {
            SweepParam::K => format!("{}", v as u64),
            _ => format!("{v}"),
        }
    }
}

fn parse_list<T: std::str::FromStr>(what: &str, text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("invalid {what} {s:?}"))
        })
        .collect()
}

/// Detection and correction F1 of one trained model.
fn score(
    params: &ModelParams,
    vocab: &Vocabulary,
    test: &[ParallelSentence],
) -> Result<(f64, f64)> {
    let judgements = correct_corpus(params, vocab, test)?;
    Ok((
        sentence_metrics(&judgements, MetricLevel::Detection)?.f1,
        sentence_metrics(&judgements, MetricLevel::Correction)?.f1,
    ))
}

pub fn run_sweep(args: &SweepArgs) -> Result<()> {
    let (settings, file) = args.flags.resolve(SWEEP_KEYS)?;
    let param = match (args.param, file.entries.get("sweep_param")) {
        (Some(p), _) => p,
        (None, Some(p)) => SweepParam::parse(p)?,
        (None, None) => bail!("missing sweep parameter (--param or sweep_param)"),
    };
    let values = match (&args.values, file.entries.get("sweep_values")) {
        (Some(v), _) | (None, Some(v)) => parse_list("sweep value", v)?,
        (None, None) => bail!("missing sweep values (--values or sweep_values)"),
    };
    let seeds = match (&args.seeds, file.entries.get("sweep_seeds")) {
        (Some(v), _) | (None, Some(v)) => parse_list("sweep seed", v)?,
        (None, None) => vec![settings.train.seed],
    };
    let spec = SweepSpec {
        param,
        values,
        seeds,
    };
    spec.validate()?;

    let (train_corpus, train_stats) = load_corpus(&args.train)?;
    let (test_corpus, test_stats) = load_corpus(&args.test)?;
    let vocab = corpus_vocabulary(&train_corpus)?;
    let encoded = encode_corpus(&vocab, &train_corpus);

    let mut order: Vec<usize> = (0..spec.values.len()).collect();
    order.sort_by(|&a, &b| spec.values[a].total_cmp(&spec.values[b]));
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();

    // rows[value][seed]; pretraining does not depend on the swept
    // parameter, so it runs once per seed.
    let mut rows = vec![vec![(0.0, 0.0); seeds.len()]; spec.values.len()];
    let mut baseline = Vec::new();
    for (si, &seed) in seeds.iter().enumerate() {
        let mut base = settings.clone();
        base.train.seed = seed;
        let init = ModelParams::init(base.dims(vocab.size())?, seed);
        let (warm, _) = pretrain(init, &encoded, &base.train)?;
        for (vi, &value) in spec.values.iter().enumerate() {
            let mut run: RunSettings = base.clone();
            run.set(spec.param.key(), &spec.format_value(value))?;
            run.train.validate(run.kind)?;
            let (trained, _) = train_main(warm.clone(), &encoded, &run.train, run.kind)?;
            rows[vi][si] = score(&trained, &vocab, &test_corpus)?;
            eprintln!(
                "{}={} seed={} done",
                spec.param.key(),
                spec.format_value(value),
                seed
            );
        }
        if args.baseline.is_some() {
            let (trained, _) = train_main(warm, &encoded, &base.train, LossKind::Ori)?;
            baseline.push((seed, score(&trained, &vocab, &test_corpus)?));
        }
    }

    let mut table = format!("{},seed,detection_f1,correction_f1\n", spec.param.key());
    for &vi in &order {
        for (si, &seed) in seeds.iter().enumerate() {
            let (d, c) = rows[vi][si];
            let _ = writeln!(
                table,
                "{},{seed},{d},{c}",
                spec.format_value(spec.values[vi])
            );
        }
    }
    fs::write(&args.out, table).with_context(|| format!("writing {}", args.out.display()))?;

    let mut config = settings.to_map();
    config.insert("sweep_param".into(), spec.param.key().into());
    config.insert(
        "sweep_values".into(),
        order
            .iter()
            .map(|&i| spec.format_value(spec.values[i]))
            .collect::<Vec<_>>()
            .join(","),
    );
    config.insert(
        "sweep_seeds".into(),
        seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    let mut manifest = RunManifest::new("sweep", config, settings.train.seed)
        .corpus("train", train_stats)
        .corpus("test", test_stats)
        .output(&args.out);
    if let Some(path) = &args.baseline {
        let mut text = String::from("seed,detection_f1,correction_f1\n");
        for (seed, (d, c)) in &baseline {
            let _ = writeln!(text, "{seed},{d},{c}");
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        manifest = manifest.output(path);
        manifest.config.insert("baseline".into(), file_name(path));
        manifest.config_hash = crate::manifest::config_hash(&manifest.config);
    }
    manifest.write(&sidecar(&args.out, "manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(param: SweepParam, values: &[f64]) -> SweepSpec {
        SweepSpec {
            param,
            values: values.to_vec(),
            seeds: vec![0],
        }
    }

    #[test]
    fn validation() {
        assert!(spec(SweepParam::K, &[1.0, 3.0, 5.0]).validate().is_ok());
        assert!(spec(SweepParam::K, &[]).validate().is_err());
        assert!(spec(SweepParam::K, &[1.0, 1.0]).validate().is_err());
        assert!(spec(SweepParam::K, &[0.0]).validate().is_err());
        assert!(spec(SweepParam::K, &[2.5]).validate().is_err());
        assert!(spec(SweepParam::Lambda1, &[0.0, 0.5, 2.0])
            .validate()
            .is_ok());
        assert!(spec(SweepParam::Lambda2, &[-1.0]).validate().is_err());
    }
}
