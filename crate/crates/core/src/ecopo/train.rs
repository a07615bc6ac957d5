use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;

use super::loss::BatchSelection;
use super::{
    batch_loss, evaluate_batch, BatchEvaluation, EncodedSentence, LossKind, Objective, TrainConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Cross-entropy epochs preceding the configured objective.
    Pretrain,
    Main,
}

/// Emitted after every optimizer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEvent {
    pub phase: Phase,
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
    /// Positions that received negatives in this step's selection stage.
    pub selected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    pub mean_loss: f64,
    pub selected_positions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub loss_kind: LossKind,
    pub epochs: Vec<EpochRecord>,
}

/// One plain SGD step on `batch`.
pub fn sgd_step(
    params: &mut ModelParams,
    batch: &[&EncodedSentence],
    objective: &Objective,
    learning_rate: f64,
    frozen: Option<&BatchSelection>,
) -> Result<BatchEvaluation> {
    let eval = evaluate_batch(params, batch, objective, frozen)?;
    params.add_scaled(&eval.grads, -learning_rate);
    Ok(eval)
}

/// Objective value over the whole corpus treated as one batch.
pub fn corpus_objective(
    params: &ModelParams,
    corpus: &[EncodedSentence],
    config: &TrainConfig,
    kind: LossKind,
) -> Result<f64> {
    let all: Vec<&EncodedSentence> = corpus.iter().collect();
    batch_loss(params, &all, &Objective::new(kind, config), None)
}

pub fn train(
    params: ModelParams,
    corpus: &[EncodedSentence],
    config: &TrainConfig,
    kind: LossKind,
) -> Result<(ModelParams, TrainTrace)> {
    train_with_hook(params, corpus, config, kind, |_| {})
}

/// Mini-batch SGD over shuffled batches. `config.pretrain_epochs` of
/// cross-entropy come first, then `config.epochs` of the objective selected
/// by `kind`. Each phase shuffles with its own stream of a generator seeded
/// with `config.seed`, so runs that differ only in `kind` see identical
/// batches, and `pretrain` followed by `train_main` reproduces `train`.
pub fn train_with_hook<F>(
    params: ModelParams,
    corpus: &[EncodedSentence],
    config: &TrainConfig,
    kind: LossKind,
    mut hook: F,
) -> Result<(ModelParams, TrainTrace)>
where
    F: FnMut(&StepEvent),
{
    config.validate(kind)?;
    let (params, mut trace) = run_phase(params, corpus, config, Phase::Pretrain, kind, &mut hook)?;
    let (params, main) = run_phase(params, corpus, config, Phase::Main, kind, &mut hook)?;
    trace.epochs.extend(main.epochs);
    Ok((params, trace))
}

/// Only the cross-entropy pretraining phase of [`train`].
pub fn pretrain(
    params: ModelParams,
    corpus: &[EncodedSentence],
    config: &TrainConfig,
) -> Result<(ModelParams, TrainTrace)> {
    config.validate(LossKind::Ori)?;
    run_phase(
        params,
        corpus,
        config,
        Phase::Pretrain,
        LossKind::Ori,
        &mut |_| {},
    )
}

/// Only the main phase of [`train`], ignoring `config.pretrain_epochs`.
pub fn train_main(
    params: ModelParams,
    corpus: &[EncodedSentence],
    config: &TrainConfig,
    kind: LossKind,
) -> Result<(ModelParams, TrainTrace)> {
    config.validate(kind)?;
    run_phase(params, corpus, config, Phase::Main, kind, &mut |_| {})
}

fn run_phase(
    mut params: ModelParams,
    corpus: &[EncodedSentence],
    config: &TrainConfig,
    phase: Phase,
    kind: LossKind,
    hook: &mut dyn FnMut(&StepEvent),
) -> Result<(ModelParams, TrainTrace)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (epochs, objective, stream) = match phase {
        Phase::Pretrain => (
            config.pretrain_epochs,
            Objective::new(LossKind::Ori, config),
            0,
        ),
        Phase::Main => (config.epochs, Objective::new(kind, config), 1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut trace = TrainTrace {
        loss_kind: kind,
        epochs: Vec::with_capacity(epochs),
    };
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        let mut selected_total = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&EncodedSentence> = chunk.iter().map(|&i| &corpus[i]).collect();
            let eval = sgd_step(&mut params, &batch, &objective, config.learning_rate, None)?;
            if !eval.loss.is_finite() || !params.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b + 1,
                });
            }
            let selected = eval.selection.iter().map(Vec::len).sum();
            hook(&StepEvent {
                phase,
                epoch,
                batch: b + 1,
                loss: eval.loss,
                selected,
            });
            loss_sum += eval.loss;
            selected_total += selected;
            batches += 1;
        }
        trace.epochs.push(EpochRecord {
            phase,
            epoch,
            mean_loss: loss_sum / batches as f64,
            selected_positions: selected_total,
        });
    }
    if phase == Phase::Main {
        params.push_lineage(config.seed);
    }
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ParallelSentence;
    use crate::ecopo::encode_corpus;
    use crate::model::ModelDims;
    use crate::vocab::Vocabulary;

    fn fixture() -> (Vocabulary, Vec<EncodedSentence>) {
        let pairs = [
            ("abcab", "abcab"),
            ("abdab", "abcab"),
            ("cabca", "cabca"),
            ("bcabc", "bcabc"),
            ("bcadc", "bcabc"),
            ("aabbc", "aabbc"),
            ("ccbaa", "ccbaa"),
            ("acbac", "acbac"),
            ("dcbac", "acbac"),
            ("bacba", "bacba"),
        ];
        let corpus: Vec<ParallelSentence> = pairs
            .iter()
            .map(|(s, t)| ParallelSentence::from_strs(s, t).unwrap())
            .collect();
        let vocab = Vocabulary::build(
            corpus
                .iter()
                .flat_map(|s| [s.source().iter().copied(), s.target().iter().copied()]),
        )
        .unwrap();
        let enc = encode_corpus(&vocab, &corpus);
        (vocab, enc)
    }

    #[test]
    fn one_epoch_of_cross_entropy_reduces_training_loss() {
        let (vocab, corpus) = fixture();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 1);
        let config = TrainConfig {
            epochs: 1,
            batch_size: 2,
            learning_rate: 0.5,
            ..Default::default()
        };
        let before = corpus_objective(&params, &corpus, &config, LossKind::Ori).unwrap();
        let (trained, trace) = train(params, &corpus, &config, LossKind::Ori).unwrap();
        let after = corpus_objective(&trained, &corpus, &config, LossKind::Ori).unwrap();
        assert!(after < before, "{before} -> {after}");
        assert_eq!(trace.epochs.len(), 1);
        assert_eq!(trained.lineage(), &[1, 0]);
    }

    #[test]
    fn training_is_deterministic() {
        let (vocab, corpus) = fixture();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 1);
        let config = TrainConfig {
            epochs: 2,
            batch_size: 3,
            seed: 9,
            ..Default::default()
        };
        let (a, ta) = train(params.clone(), &corpus, &config, LossKind::Joint).unwrap();
        let (b, tb) = train(params, &corpus, &config, LossKind::Joint).unwrap();
        let bits = |p: &ModelParams| p.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(ta, tb);
    }

    #[test]
    fn cpo_steps_select_before_optimizing() {
        let (vocab, corpus) = fixture();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 3);
        let config = TrainConfig {
            epochs: 1,
            batch_size: 5,
            ..Default::default()
        };
        let mut events = Vec::new();
        train_with_hook(params, &corpus, &config, LossKind::Joint, |e| {
            events.push(e.clone())
        })
        .unwrap();
        assert_eq!(events.len(), 2);
        // An untrained model gets most positions wrong, so every step selects.
        assert!(events.iter().all(|e| e.selected > 0));

        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 3);
        let mut events = Vec::new();
        train_with_hook(params, &corpus, &config, LossKind::Ori, |e| {
            events.push(e.clone())
        })
        .unwrap();
        assert!(events.iter().all(|e| e.selected == 0));
    }

    #[test]
    fn pretrain_runs_cross_entropy_first() {
        let (vocab, corpus) = fixture();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 3);
        let config = TrainConfig {
            epochs: 1,
            pretrain_epochs: 2,
            batch_size: 5,
            ..Default::default()
        };
        let (_, trace) = train(params, &corpus, &config, LossKind::Cpo).unwrap();
        let phases: Vec<Phase> = trace.epochs.iter().map(|e| e.phase).collect();
        assert_eq!(phases, vec![Phase::Pretrain, Phase::Pretrain, Phase::Main]);
        assert_eq!(trace.epochs[0].selected_positions, 0);
    }

    #[test]
    fn split_phases_reproduce_a_full_run() {
        let (vocab, corpus) = fixture();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 3);
        let config = TrainConfig {
            epochs: 2,
            pretrain_epochs: 2,
            batch_size: 4,
            seed: 5,
            ..Default::default()
        };
        let (full, _) = train(params.clone(), &corpus, &config, LossKind::Joint).unwrap();
        let (warm, _) = pretrain(params, &corpus, &config).unwrap();
        let (split, _) = train_main(warm, &corpus, &config, LossKind::Joint).unwrap();
        assert_eq!(full, split);
    }

    #[test]
    fn divergence_is_reported() {
        let (vocab, corpus) = fixture();
        let params = ModelParams::init(ModelDims::new(vocab.size(), 4, 8, 1).unwrap(), 3);
        let config = TrainConfig {
            epochs: 3,
            learning_rate: 1e308,
            batch_size: 5,
            ..Default::default()
        };
        let err = train(params, &corpus, &config, LossKind::Ori).unwrap_err();
        assert!(matches!(err, Error::Diverged { epoch: 1, .. }), "{err}");
        assert!(err.to_string().contains("diverged"));
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let params = ModelParams::init(ModelDims::new(4, 2, 2, 1).unwrap(), 3);
        assert!(train(params, &[], &TrainConfig::default(), LossKind::Ori).is_err());
    }
}
