//! Central finite-difference verification of the analytic gradients.
//!
//! For the contrastive term the negative selection made at the unperturbed
//! parameters is frozen, so both sides differentiate the same function.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ecopo::{batch_loss, evaluate_batch, EncodedSentence, LossKind, Objective, TrainConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Magnitudes below this are compared absolutely: the relative error of two
/// gradients that are both ~0 is dominated by roundoff, not by the gradient.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateCheck {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checks: Vec<CoordinateCheck>,
}

/// Compares analytic and central-difference gradients on `samples`
/// coordinates. Half are drawn from the coordinates with a nonzero analytic
/// gradient and the rest uniformly from all parameters.
pub fn grad_check(
    params: &ModelParams,
    batch: &[EncodedSentence],
    kind: LossKind,
    config: &TrainConfig,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if batch.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let objective = Objective::new(kind, config);
    let refs: Vec<&EncodedSentence> = batch.iter().collect();
    let base = evaluate_batch(params, &refs, &objective, None)?;
    let frozen = base.selection;
    let analytic = base.grads.as_slice();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = analytic.len();
    let active: Vec<usize> = (0..total).filter(|&i| analytic[i] != 0.0).collect();
    let from_active = (samples / 2).max(1).min(active.len());
    let mut coords: Vec<usize> = sample(&mut rng, active.len(), from_active)
        .into_iter()
        .map(|i| active[i])
        .collect();
    let rest = samples.saturating_sub(coords.len()).min(total);
    coords.extend(sample(&mut rng, total, rest));

    let mut perturbed = params.clone();
    let mut checks = Vec::with_capacity(coords.len());
    for index in coords {
        let original = perturbed.as_slice()[index];
        perturbed.as_mut_slice()[index] = original + FD_STEP;
        let plus = batch_loss(&perturbed, &refs, &objective, Some(&frozen))?;
        perturbed.as_mut_slice()[index] = original - FD_STEP;
        let minus = batch_loss(&perturbed, &refs, &objective, Some(&frozen))?;
        perturbed.as_mut_slice()[index] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        checks.push(CoordinateCheck {
            index,
            analytic: analytic[index],
            numeric,
            relative_error: relative_error(analytic[index], numeric),
        });
    }
    let max_relative_error = checks.iter().map(|c| c.relative_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        max_relative_error,
        checks,
    })
}
