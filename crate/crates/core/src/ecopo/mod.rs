//! Error-driven negative selection, the contrastive probability objective
//! and the training loop.
//!
//! Each training step runs in two stages: a forward pass picks, at every
//! position where the model's top prediction is wrong, the K most probable
//! wrong characters as negatives; the step then descends
//! `lambda1 * CE + lambda2 * CPO` with that selection held fixed.

mod config;
mod loss;
mod select;
mod train;

use serde::{Deserialize, Serialize};

use crate::data::ParallelSentence;
use crate::error::Result;
use crate::model::{ForwardResult, ModelParams};
use crate::vocab::{CharId, Vocabulary};

pub use config::{CpoAverage, LossKind, TrainConfig, TRAIN_KEYS};
pub use loss::{
    cpo_loss, cpo_loss_with_selection, cross_entropy_loss, joint_loss, select_for_batch,
    targeted_positions, weighted_loss, BatchSelection, LossOutput,
};
pub use select::{select_negatives, NegativeSelection};
pub use train::{
    corpus_objective, pretrain, sgd_step, train, train_main, train_with_hook, EpochRecord, Phase,
    StepEvent, TrainTrace,
};

/// A parallel sentence mapped to vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSentence {
    pub input: Vec<CharId>,
    pub target: Vec<CharId>,
}

impl EncodedSentence {
    pub fn encode(vocab: &Vocabulary, sentence: &ParallelSentence) -> Self {
        Self {
            input: vocab.encode(sentence.source()),
            target: vocab.encode(sentence.target()),
        }
    }
}

pub fn encode_corpus(vocab: &Vocabulary, corpus: &[ParallelSentence]) -> Vec<EncodedSentence> {
    corpus
        .iter()
        .map(|s| EncodedSentence::encode(vocab, s))
        .collect()
}

/// The loss actually optimized: weights, K and the CPO denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub lambda1: f64,
    pub lambda2: f64,
    pub k: usize,
    pub average: CpoAverage,
}

impl Objective {
    pub fn new(kind: LossKind, config: &TrainConfig) -> Self {
        let (lambda1, lambda2) = kind.weights(config);
        Self {
            lambda1,
            lambda2,
            k: config.k,
            average: config.cpo_average,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchEvaluation {
    pub loss: f64,
    pub grads: ModelParams,
    pub selection: BatchSelection,
}

pub fn forward_batch(
    params: &ModelParams,
    batch: &[&EncodedSentence],
) -> Result<Vec<ForwardResult>> {
    batch.iter().map(|s| params.forward(&s.input)).collect()
}

/// Loss, parameter gradient and the selection used. Negatives are chosen
/// from the current forward pass unless `frozen` is given.
pub fn evaluate_batch(
    params: &ModelParams,
    batch: &[&EncodedSentence],
    objective: &Objective,
    frozen: Option<&BatchSelection>,
) -> Result<BatchEvaluation> {
    let results = forward_batch(params, batch)?;
    let targets: Vec<&[CharId]> = batch.iter().map(|s| s.target.as_slice()).collect();
    let (loss, selection) = weighted_loss(
        &results,
        &targets,
        (objective.lambda1, objective.lambda2),
        objective.k,
        objective.average,
        frozen,
    )?;
    let mut grads = ModelParams::zeros(params.dims());
    for (r, d) in results.iter().zip(&loss.dlogits) {
        params.backward(r, d, &mut grads);
    }
    Ok(BatchEvaluation {
        loss: loss.value,
        grads,
        selection,
    })
}

/// Loss value only.
pub fn batch_loss(
    params: &ModelParams,
    batch: &[&EncodedSentence],
    objective: &Objective,
    frozen: Option<&BatchSelection>,
) -> Result<f64> {
    let results = forward_batch(params, batch)?;
    let targets: Vec<&[CharId]> = batch.iter().map(|s| s.target.as_slice()).collect();
    let (loss, _) = weighted_loss(
        &results,
        &targets,
        (objective.lambda1, objective.lambda2),
        objective.k,
        objective.average,
        frozen,
    )?;
    Ok(loss.value)
}
