use serde::{Deserialize, Serialize};

use crate::vocab::{ConfusionSet, CooccurrenceTable, Vocabulary};

use super::heatmap::CharClass;
use super::SentenceJudgement;

/// A position the model changed to something other than the gold character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrongCorrection {
    pub sentence: usize,
    pub position: usize,
    pub predicted: char,
    pub gold: char,
    /// Source-side neighbours of the position.
    pub left: Option<char>,
    pub right: Option<char>,
}

pub fn wrong_corrections(judgements: &[SentenceJudgement]) -> Vec<WrongCorrection> {
    let mut out = Vec::new();
    for (s, j) in judgements.iter().enumerate() {
        for i in 0..j.predicted.len() {
            if j.predicted[i] != j.source[i] && j.predicted[i] != j.target[i] {
                out.push(WrongCorrection {
                    sentence: s,
                    position: i,
                    predicted: j.predicted[i],
                    gold: j.target[i],
                    left: i.checked_sub(1).map(|l| j.source[l]),
                    right: j.source.get(i + 1).copied(),
                });
            }
        }
    }
    out
}

/// Common when the predicted character co-occurs with a neighbour more than
/// `threshold` times; otherwise confusing when it is in the gold character's
/// confusion list; otherwise other. Common wins when both apply.
pub fn classify_position(
    sample: &WrongCorrection,
    vocab: &Vocabulary,
    table: &CooccurrenceTable,
    confusion: &ConfusionSet,
    threshold: u64,
) -> CharClass {
    let c = vocab.id_or_unk(sample.predicted);
    let left = sample.left.map(|l| vocab.id_or_unk(l));
    let right = sample.right.map(|r| vocab.id_or_unk(r));
    if table.is_common(c, left, right, threshold) {
        CharClass::Common
    } else if confusion.is_confusable(sample.gold, sample.predicted) {
        CharClass::Confusing
    } else {
        CharClass::Other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTaxonomy {
    pub total: usize,
    pub common_count: usize,
    pub confusing_count: usize,
    pub other_count: usize,
    pub common_share: f64,
    pub confusing_share: f64,
    pub other_share: f64,
    pub threshold: u64,
    /// Classification order applied to each sample.
    pub precedence: String,
}

pub fn classify_wrong_corrections(
    judgements: &[SentenceJudgement],
    vocab: &Vocabulary,
    table: &CooccurrenceTable,
    confusion: &ConfusionSet,
    threshold: u64,
) -> ErrorTaxonomy {
    let mut counts = [0usize; 3];
    for sample in wrong_corrections(judgements) {
        let slot = match classify_position(&sample, vocab, table, confusion, threshold) {
            CharClass::Common => 0,
            CharClass::Confusing => 1,
            CharClass::Other => 2,
        };
        counts[slot] += 1;
    }
    let total: usize = counts.iter().sum();
    let share = |n: usize| {
        if total == 0 {
            0.0
        } else {
            n as f64 / total as f64
        }
    };
    ErrorTaxonomy {
        total,
        common_count: counts[0],
        confusing_count: counts[1],
        other_count: counts[2],
        common_share: share(counts[0]),
        confusing_share: share(counts[1]),
        other_share: share(counts[2]),
        threshold,
        precedence: "common > confusing > other".into(),
    }
}
