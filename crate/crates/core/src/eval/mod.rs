//! Sentence-level correction metrics, wrong-correction taxonomy and
//! probability heat-map export.

mod heatmap;
mod metrics;
mod taxonomy;

use serde::{Deserialize, Serialize};

use crate::data::ParallelSentence;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::vocab::{ConfusionSet, CooccurrenceTable, Vocabulary};

pub use heatmap::{
    export_heatmap, format_heatmap_csv, heatmap_rows, suggest_heatmap_chars, CharClass, HeatmapRow,
};
pub use metrics::{sentence_metrics, ConfusionCounts, MetricLevel, MetricsReport};
pub use taxonomy::{
    classify_position, classify_wrong_corrections, wrong_corrections, ErrorTaxonomy,
    WrongCorrection,
};

/// The model's output for one sentence and whether it detected and corrected
/// every error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceJudgement {
    pub source: Vec<char>,
    pub target: Vec<char>,
    pub predicted: Vec<char>,
    /// The set of positions the model changed equals the set of error positions.
    pub detection_hit: bool,
    /// The prediction equals the gold sentence.
    pub correction_hit: bool,
    /// The model altered at least one character.
    pub changed: bool,
}

impl SentenceJudgement {
    pub fn new(sentence: &ParallelSentence, predicted: Vec<char>) -> Result<Self> {
        if predicted.len() != sentence.len() {
            return Err(Error::InvalidArgument(format!(
                "prediction has {} characters, sentence has {}",
                predicted.len(),
                sentence.len()
            )));
        }
        let source = sentence.source();
        let changed_positions: Vec<usize> = (0..source.len())
            .filter(|&i| predicted[i] != source[i])
            .collect();
        Ok(Self {
            detection_hit: changed_positions == sentence.error_positions(),
            correction_hit: predicted == sentence.target(),
            changed: !changed_positions.is_empty(),
            source: source.to_vec(),
            target: sentence.target().to_vec(),
            predicted,
        })
    }

    pub fn has_errors(&self) -> bool {
        self.source != self.target
    }
}

/// Corrects every position to the model's top prediction. A PAD or UNK
/// prediction leaves the input character in place.
pub fn correct_sentence(
    params: &ModelParams,
    vocab: &Vocabulary,
    sentence: &ParallelSentence,
) -> Result<SentenceJudgement> {
    let result = params.forward(&vocab.encode(sentence.source()))?;
    let predicted = sentence
        .source()
        .iter()
        .enumerate()
        .map(|(i, &c)| vocab.char_of(result.argmax(i)).unwrap_or(c))
        .collect();
    SentenceJudgement::new(sentence, predicted)
}

pub fn correct_corpus(
    params: &ModelParams,
    vocab: &Vocabulary,
    corpus: &[ParallelSentence],
) -> Result<Vec<SentenceJudgement>> {
    corpus
        .iter()
        .map(|s| correct_sentence(params, vocab, s))
        .collect()
}

/// Detection and correction metrics plus the wrong-correction taxonomy of
/// one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub detection: MetricsReport,
    pub correction: MetricsReport,
    pub taxonomy: ErrorTaxonomy,
}

pub fn evaluate(
    params: &ModelParams,
    vocab: &Vocabulary,
    test: &[ParallelSentence],
    table: &CooccurrenceTable,
    confusion: &ConfusionSet,
    threshold: u64,
) -> Result<(EvalReport, Vec<SentenceJudgement>)> {
    let judgements = correct_corpus(params, vocab, test)?;
    let report = EvalReport {
        detection: sentence_metrics(&judgements, MetricLevel::Detection)?,
        correction: sentence_metrics(&judgements, MetricLevel::Correction)?,
        taxonomy: classify_wrong_corrections(&judgements, vocab, table, confusion, threshold),
    };
    Ok((report, judgements))
}
