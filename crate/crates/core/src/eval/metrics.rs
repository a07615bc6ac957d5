use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::SentenceJudgement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricLevel {
    Detection,
    Correction,
}

impl fmt::Display for MetricLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricLevel::Detection => "detection",
            MetricLevel::Correction => "correction",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub level: MetricLevel,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Sentence-level confusion matrix:
///
/// * TP: sentence has errors, the model changed it and the level's hit holds;
/// * FN: sentence has errors and is not a TP;
/// * FP: a clean sentence the model changed, or an erroneous sentence the
///   model changed without a hit (such a sentence is also an FN);
/// * TN: a clean sentence left unchanged.
///
/// Accuracy is `(TP + TN) / sentences`.
pub fn sentence_metrics(
    judgements: &[SentenceJudgement],
    level: MetricLevel,
) -> Result<MetricsReport> {
    if judgements.is_empty() {
        return Err(Error::InvalidArgument("no judgements to score".into()));
    }
    let mut c = ConfusionCounts::default();
    for j in judgements {
        let hit = match level {
            MetricLevel::Detection => j.detection_hit,
            MetricLevel::Correction => j.correction_hit,
        };
        match (j.has_errors(), j.changed) {
            (true, true) if hit => c.tp += 1,
            (true, true) => {
                c.fp += 1;
                c.fn_ += 1;
            }
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricsReport {
        level,
        accuracy: ratio(c.tp + c.tn, judgements.len()),
        precision,
        recall,
        f1,
        counts: c,
        total: judgements.len(),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::data::ParallelSentence;

    fn judge(source: &str, target: &str, predicted: &str) -> SentenceJudgement {
        let s = ParallelSentence::from_strs(source, target).unwrap();
        SentenceJudgement::new(&s, predicted.chars().collect()).unwrap()
    }

    #[test]
    fn perfect_model() {
        let js = [
            judge("abx", "abc", "abc"),
            judge("abc", "abc", "abc"),
            judge("xy", "zy", "zy"),
        ];
        for level in [MetricLevel::Detection, MetricLevel::Correction] {
            let m = sentence_metrics(&js, level).unwrap();
            assert_eq!(
                (m.accuracy, m.precision, m.recall, m.f1),
                (1.0, 1.0, 1.0, 1.0)
            );
        }
    }

    #[test]
    fn null_model() {
        let js = [
            judge("abx", "abc", "abx"),
            judge("abc", "abc", "abc"),
            judge("xy", "zy", "xy"),
            judge("qq", "qq", "qq"),
        ];
        let m = sentence_metrics(&js, MetricLevel::Correction).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn empty_list_is_an_error() {
        assert!(sentence_metrics(&[], MetricLevel::Detection).is_err());
    }

    fn judgement_strategy() -> impl Strategy<Value = SentenceJudgement> {
        ("[ab]{1,6}", any::<u64>(), any::<u64>()).prop_map(|(target, e, p)| {
            let target: Vec<char> = target.chars().collect();
            let flip = |c: char| if c == 'a' { 'b' } else { 'a' };
            let source: Vec<char> = target
                .iter()
                .enumerate()
                .map(|(i, &c)| if (e >> i) & 1 == 1 { flip(c) } else { c })
                .collect();
            let predicted: Vec<char> = source
                .iter()
                .enumerate()
                .map(|(i, &c)| if (p >> i) & 3 == 0 { flip(c) } else { c })
                .collect();
            let s = ParallelSentence::new(source, target).unwrap();
            SentenceJudgement::new(&s, predicted).unwrap()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_tally(js in prop::collection::vec(judgement_strategy(), 1..40)) {
            for level in [MetricLevel::Detection, MetricLevel::Correction] {
                let m = sentence_metrics(&js, level).unwrap();
                // Independent tally straight from the definitions.
                let hit = |j: &SentenceJudgement| match level {
                    MetricLevel::Detection => j.detection_hit,
                    MetricLevel::Correction => j.correction_hit,
                };
                let err = |j: &SentenceJudgement| j.source != j.target;
                let tp = js.iter().filter(|j| err(j) && j.changed && hit(j)).count();
                let fn_ = js.iter().filter(|j| err(j)).count() - tp;
                let fp = js.iter().filter(|j| !err(j) && j.changed).count()
                    + js.iter().filter(|j| err(j) && j.changed && !hit(j)).count();
                let tn = js.iter().filter(|j| !err(j) && !j.changed).count();
                prop_assert_eq!(m.counts, ConfusionCounts { tp, fp, fn_, tn });
                let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
                let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
                prop_assert_eq!(m.precision, p);
                prop_assert_eq!(m.recall, r);
                prop_assert_eq!(m.accuracy, (tp + tn) as f64 / js.len() as f64);
                for v in [m.accuracy, m.precision, m.recall, m.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            for j in &js {
                prop_assert!(!j.correction_hit || j.detection_hit);
            }
        }
    }
}
