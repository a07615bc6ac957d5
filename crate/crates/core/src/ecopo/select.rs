use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::vocab::CharId;

/// Top-K negatives chosen for one position from the model's current
/// distribution: the highest-probability ids other than the gold one.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSelection {
    pub position: usize,
    pub positive_id: CharId,
    /// Ordered by probability, descending; equal probabilities by id, ascending.
    pub negative_ids: Vec<CharId>,
    pub negative_probs: Vec<f64>,
    /// Set when the requested K exceeded `vocab - 1` and was clamped.
    pub clamped: bool,
}

impl NegativeSelection {
    pub fn k(&self) -> usize {
        self.negative_ids.len()
    }
}

/// Descending probability, then ascending id.
fn rank_order(probs: &[f64], a: CharId, b: CharId) -> Ordering {
    probs[b].total_cmp(&probs[a]).then(a.cmp(&b))
}

pub fn select_negatives(probs: &[f64], positive_id: CharId, k: usize) -> Result<NegativeSelection> {
    let vocab = probs.len();
    if positive_id >= vocab {
        return Err(Error::IdOutOfRange {
            id: positive_id,
            size: vocab,
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let limit = vocab - 1;
    let take = k.min(limit);
    let mut candidates: Vec<CharId> = (0..vocab).filter(|&j| j != positive_id).collect();
    if take > 0 && take < candidates.len() {
        candidates.select_nth_unstable_by(take - 1, |&a, &b| rank_order(probs, a, b));
        candidates.truncate(take);
    }
    candidates.sort_unstable_by(|&a, &b| rank_order(probs, a, b));
    candidates.truncate(take);
    Ok(NegativeSelection {
        position: 0,
        positive_id,
        negative_probs: candidates.iter().map(|&j| probs[j]).collect(),
        negative_ids: candidates,
        clamped: k > limit,
    })
}
