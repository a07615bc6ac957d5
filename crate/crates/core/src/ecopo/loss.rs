//! Cross-entropy, contrastive probability and joint objectives over a batch.
//!
//! Every function returns the loss value together with its gradient with
//! respect to the logits of each sentence; [`ModelParams::backward`]
//! carries that the rest of the way.
//!
//! [`ModelParams::backward`]: crate::model::ModelParams::backward

use crate::error::Result;
use crate::model::ForwardResult;
use crate::vocab::{CharId, PAD};

use super::config::CpoAverage;
use super::select::{select_negatives, NegativeSelection};

/// Negatives chosen for a batch, one list per sentence.
pub type BatchSelection = Vec<Vec<NegativeSelection>>;

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    /// Per sentence, `len × vocab` row-major gradient of `value` w.r.t. the logits.
    pub dlogits: Vec<Vec<f64>>,
}

impl LossOutput {
    fn zeros(results: &[ForwardResult]) -> Self {
        Self {
            value: 0.0,
            dlogits: results
                .iter()
                .map(|r| vec![0.0; r.len() * r.vocab_size()])
                .collect(),
        }
    }

    /// `a * self + b * other`, skipping terms with a zero weight.
    pub fn combine(
        a: f64,
        lhs: Option<&LossOutput>,
        b: f64,
        rhs: Option<&LossOutput>,
    ) -> LossOutput {
        let terms: Vec<(f64, &LossOutput)> = [(a, lhs), (b, rhs)]
            .into_iter()
            .filter_map(|(w, t)| t.filter(|_| w != 0.0).map(|t| (w, t)))
            .collect();
        let template = terms
            .first()
            .map(|t| t.1)
            .or(lhs)
            .or(rhs)
            .expect("at least one term");
        let mut out = LossOutput {
            value: 0.0,
            dlogits: template
                .dlogits
                .iter()
                .map(|d| vec![0.0; d.len()])
                .collect(),
        };
        for (w, t) in terms {
            out.value += w * t.value;
            for (o, g) in out.dlogits.iter_mut().zip(&t.dlogits) {
                for (o, g) in o.iter_mut().zip(g) {
                    *o += w * g;
                }
            }
        }
        out
    }
}

/// Mean of `-ln p(y_i = target_i)` over all non-PAD target positions.
pub fn cross_entropy_loss<T: AsRef<[CharId]>>(
    results: &[ForwardResult],
    targets: &[T],
) -> LossOutput {
    let mut out = LossOutput::zeros(results);
    let count: usize = targets
        .iter()
        .map(|t| t.as_ref().iter().filter(|&&id| id != PAD).count())
        .sum();
    if count == 0 {
        return out;
    }
    let scale = 1.0 / count as f64;
    let mut total = 0.0;
    for ((r, t), grad) in results.iter().zip(targets).zip(&mut out.dlogits) {
        let v = r.vocab_size();
        for (i, &gold) in t.as_ref().iter().enumerate() {
            if gold == PAD {
                continue;
            }
            let probs = r.probs(i);
            // log-softmax from the logits keeps the value finite when p underflows.
            total += r.log_norm(i) - r.logits(i)[gold];
            let row = &mut grad[i * v..(i + 1) * v];
            for (g, &p) in row.iter_mut().zip(probs) {
                *g = scale * p;
            }
            row[gold] -= scale;
        }
    }
    out.value = total * scale;
    out
}

/// Positions where the model's top prediction differs from a non-PAD target.
pub fn targeted_positions(result: &ForwardResult, targets: &[CharId]) -> Vec<usize> {
    targets
        .iter()
        .enumerate()
        .filter(|&(i, &gold)| gold != PAD && result.argmax(i) != gold)
        .map(|(i, _)| i)
        .collect()
}

/// Negative selection at every targeted position of every sentence.
pub fn select_for_batch<T: AsRef<[CharId]>>(
    results: &[ForwardResult],
    targets: &[T],
    k: usize,
) -> Result<BatchSelection> {
    results
        .iter()
        .zip(targets)
        .map(|(r, t)| {
            let t = t.as_ref();
            targeted_positions(r, t)
                .into_iter()
                .map(|i| {
                    let mut sel = select_negatives(r.probs(i), t[i], k)?;
                    sel.position = i;
                    Ok(sel)
                })
                .collect()
        })
        .collect()
}

/// Contrastive probability loss for a fixed selection:
///
/// `-(1/D) Σ_sel (1/K) Σ_k [p(t⁺) - p(t_k⁻)]`
///
/// with `D` the number of selections (or of sentences, under
/// [`CpoAverage::Batch`]). Probabilities are read from `results`, so the
/// same selection can be re-evaluated at perturbed parameters.
pub fn cpo_loss_with_selection(
    results: &[ForwardResult],
    selection: &[Vec<NegativeSelection>],
    average: CpoAverage,
) -> LossOutput {
    let mut out = LossOutput::zeros(results);
    let selected: usize = selection
        .iter()
        .map(|s| s.iter().filter(|n| n.k() > 0).count())
        .sum();
    if selected == 0 {
        return out;
    }
    let denom = match average {
        CpoAverage::Targeted => selected,
        CpoAverage::Batch => results.len(),
    } as f64;
    let mut total = 0.0;
    for ((r, sels), grad) in results.iter().zip(selection).zip(&mut out.dlogits) {
        let v = r.vocab_size();
        for sel in sels.iter().filter(|s| s.k() > 0) {
            let probs = r.probs(sel.position);
            let k = sel.k() as f64;
            let p_pos = probs[sel.positive_id];
            let mean_neg = sel.negative_ids.iter().map(|&j| probs[j]).sum::<f64>() / k;
            total += p_pos - mean_neg;

            // dL/dp at the positive and each negative; zero elsewhere.
            let g_pos = -1.0 / denom;
            let g_neg = 1.0 / (denom * k);
            // dL/dz_j = p_j (g_j - Σ_m g_m p_m)
            let weighted = g_pos * p_pos + g_neg * mean_neg * k;
            let row = &mut grad[sel.position * v..(sel.position + 1) * v];
            for (g, &p) in row.iter_mut().zip(probs) {
                *g -= p * weighted;
            }
            row[sel.positive_id] += p_pos * g_pos;
            for &j in &sel.negative_ids {
                row[j] += probs[j] * g_neg;
            }
        }
    }
    out.value = -total / denom;
    out
}

/// Selects negatives from the current probabilities, then evaluates the
/// contrastive loss with that selection held fixed.
pub fn cpo_loss<T: AsRef<[CharId]>>(
    results: &[ForwardResult],
    targets: &[T],
    k: usize,
    average: CpoAverage,
) -> Result<(LossOutput, BatchSelection)> {
    let selection = select_for_batch(results, targets, k)?;
    let loss = cpo_loss_with_selection(results, &selection, average);
    Ok((loss, selection))
}

/// `lambda1 * cross_entropy + lambda2 * cpo`. A term with zero weight is not
/// evaluated. With `frozen`, the given selection replaces fresh selection.
pub fn weighted_loss<T: AsRef<[CharId]>>(
    results: &[ForwardResult],
    targets: &[T],
    (lambda1, lambda2): (f64, f64),
    k: usize,
    average: CpoAverage,
    frozen: Option<&BatchSelection>,
) -> Result<(LossOutput, BatchSelection)> {
    let ori = (lambda1 != 0.0).then(|| cross_entropy_loss(results, targets));
    let (cpo, selection) = if lambda2 != 0.0 {
        match frozen {
            Some(sel) => (
                Some(cpo_loss_with_selection(results, sel, average)),
                sel.clone(),
            ),
            None => {
                let (l, s) = cpo_loss(results, targets, k, average)?;
                (Some(l), s)
            }
        }
    } else {
        (None, Vec::new())
    };
    if ori.is_none() && cpo.is_none() {
        return Ok((LossOutput::zeros(results), selection));
    }
    Ok((
        LossOutput::combine(lambda1, ori.as_ref(), lambda2, cpo.as_ref()),
        selection,
    ))
}

pub fn joint_loss<T: AsRef<[CharId]>>(
    results: &[ForwardResult],
    targets: &[T],
    config: &super::TrainConfig,
) -> Result<LossOutput> {
    weighted_loss(
        results,
        targets,
        (config.lambda1, config.lambda2),
        config.k,
        config.cpo_average,
        None,
    )
    .map(|(l, _)| l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecopo::TrainConfig;
    use crate::model::{ModelDims, ModelParams};

    /// Model whose every position has logits `ln(probs)`, via the projection bias.
    fn fixed_distribution(probs: &[f64], len: usize) -> ForwardResult {
        let mut p = ModelParams::zeros(ModelDims::new(probs.len(), 1, 1, 0).unwrap());
        for (b, q) in p.projection_bias_mut().iter_mut().zip(probs) {
            *b = q.ln();
        }
        p.forward(&vec![2.min(probs.len() - 1); len]).unwrap()
    }

    #[test]
    fn cpo_hand_evaluation() {
        // p(t+) = 0.2 with negatives 0.5 and 0.3; the gold is not the argmax.
        let r = fixed_distribution(&[0.0, 0.2, 0.5, 0.3], 1);
        let (loss, sel) = cpo_loss(&[r], &[vec![1]], 2, CpoAverage::Targeted).unwrap();
        assert_eq!(sel[0][0].negative_ids, vec![2, 3]);
        assert!((loss.value - 0.2).abs() < 1e-12, "{}", loss.value);
    }

    #[test]
    fn cpo_minimum_is_minus_one() {
        let sel = NegativeSelection {
            position: 0,
            positive_id: 0,
            negative_ids: vec![1, 2],
            negative_probs: vec![0.0, 0.0],
            clamped: false,
        };
        // Logits far apart underflow the other entries to exactly 0.
        let mut p = ModelParams::zeros(ModelDims::new(3, 1, 1, 0).unwrap());
        p.projection_bias_mut().copy_from_slice(&[0.0, -1e4, -1e4]);
        let r = p.forward(&[1]).unwrap();
        assert_eq!(r.probs(0), &[1.0, 0.0, 0.0]);
        let loss = cpo_loss_with_selection(&[r], &[vec![sel]], CpoAverage::Targeted);
        assert_eq!(loss.value, -1.0);
    }

    #[test]
    fn cpo_without_mistakes_is_zero() {
        let r = fixed_distribution(&[0.1, 0.7, 0.2], 3);
        let (loss, sel) = cpo_loss(&[r], &[vec![1, 1, 1]], 2, CpoAverage::Targeted).unwrap();
        assert!(sel[0].is_empty());
        assert_eq!(loss.value, 0.0);
        assert!(loss.dlogits[0].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn batch_average_divides_by_sentence_count() {
        let r = fixed_distribution(&[0.0, 0.2, 0.5, 0.3], 1);
        let ok = fixed_distribution(&[0.0, 0.2, 0.5, 0.3], 1);
        let results = [r, ok];
        let targets = [vec![1], vec![2]];
        let (t, _) = cpo_loss(&results, &targets, 2, CpoAverage::Targeted).unwrap();
        let (b, _) = cpo_loss(&results, &targets, 2, CpoAverage::Batch).unwrap();
        assert!((t.value - 0.2).abs() < 1e-12);
        assert!((b.value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_perfect_and_uniform() {
        let r = fixed_distribution(&[0.25; 4], 3);
        let loss = cross_entropy_loss(&[r], &[vec![1, 2, 3]]);
        assert!((loss.value - 4f64.ln()).abs() < 1e-12);
        assert!((loss.value - 1.3863).abs() < 1e-4);

        let r = fixed_distribution(&[1.0, 1e-300, 1e-300], 2);
        let loss = cross_entropy_loss(&[r], &[vec![0, 0]]);
        assert_eq!(loss.value, 0.0);
    }

    #[test]
    fn pad_targets_are_ignored() {
        let r = fixed_distribution(&[0.25; 4], 3);
        let all = cross_entropy_loss(std::slice::from_ref(&r), &[vec![2, 2, 2]]);
        let padded = cross_entropy_loss(std::slice::from_ref(&r), &[vec![2, PAD, 2]]);
        assert!((all.value - padded.value).abs() < 1e-15);
        assert!(padded.dlogits[0][4..8].iter().all(|&g| g == 0.0));
        assert!(targeted_positions(&r, &[PAD, PAD, PAD]).is_empty());
    }

    #[test]
    fn targeted_positions_single_mistake() {
        let mut p = ModelParams::zeros(ModelDims::new(5, 1, 1, 0).unwrap());
        p.projection_bias_mut()[3] = 1.0;
        let r = p.forward(&[3, 3, 3, 3, 3]).unwrap();
        assert!(targeted_positions(&r, &[3, 3, 3, 3, 3]).is_empty());
        assert_eq!(targeted_positions(&r, &[3, 3, 3, 4, 3]), vec![3]);
    }

    #[test]
    fn joint_degenerate_weightings() {
        let p = ModelParams::init(ModelDims::new(12, 3, 4, 1).unwrap(), 2);
        let results = vec![
            p.forward(&[2, 5, 7, 9]).unwrap(),
            p.forward(&[3, 3, 11]).unwrap(),
        ];
        let targets = vec![vec![2, 6, 7, 10], vec![4, 3, 11]];
        let ce = cross_entropy_loss(&results, &targets);
        let (cpo, _) = cpo_loss(&results, &targets, 5, CpoAverage::Targeted).unwrap();

        let cfg = |l1, l2| TrainConfig {
            lambda1: l1,
            lambda2: l2,
            ..Default::default()
        };
        let j = joint_loss(&results, &targets, &cfg(1.0, 0.0)).unwrap();
        assert_eq!(j, ce);
        let j = joint_loss(&results, &targets, &cfg(0.0, 1.0)).unwrap();
        assert_eq!(j, cpo);
        let j = joint_loss(&results, &targets, &cfg(1.0, 1.0)).unwrap();
        assert_eq!(j.value, ce.value + cpo.value);
    }

    #[test]
    fn joint_is_linear_in_the_weights() {
        let a = LossOutput {
            value: 0.9,
            dlogits: vec![vec![0.1, -0.1]],
        };
        let b = LossOutput {
            value: 0.2,
            dlogits: vec![vec![0.0, 0.3]],
        };
        let j = LossOutput::combine(1.0, Some(&a), 1.0, Some(&b));
        assert!((j.value - 1.1).abs() < 1e-15);
        assert!((j.dlogits[0][0] - 0.1).abs() < 1e-15);
        assert!((j.dlogits[0][1] - 0.2).abs() < 1e-15);
    }
}
