use crate::error::{Error, Result};
use crate::vocab::{CharId, PAD};

use super::ModelParams;

/// Per-position hidden states, logits and probabilities for one sentence.
/// Rows are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    ids: Vec<CharId>,
    vocab_size: usize,
    hidden_size: usize,
    hidden: Vec<f64>,
    logits: Vec<f64>,
    probs: Vec<f64>,
    log_norm: Vec<f64>,
}

impl ForwardResult {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn input_ids(&self) -> &[CharId] {
        &self.ids
    }

    pub fn hidden(&self, i: usize) -> &[f64] {
        &self.hidden[i * self.hidden_size..(i + 1) * self.hidden_size]
    }

    pub fn logits(&self, i: usize) -> &[f64] {
        &self.logits[i * self.vocab_size..(i + 1) * self.vocab_size]
    }

    pub fn probs(&self, i: usize) -> &[f64] {
        &self.probs[i * self.vocab_size..(i + 1) * self.vocab_size]
    }

    /// `ln Σ_j exp(z_j)` at position `i`, so `ln p_j = z_j - log_norm(i)`.
    pub fn log_norm(&self, i: usize) -> f64 {
        self.log_norm[i]
    }

    /// Highest-probability id at position `i`; ties go to the lower id.
    pub fn argmax(&self, i: usize) -> CharId {
        argmax(self.probs(i))
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

/// Max-shifted softmax of `logits` written into `out`. Returns the
/// log-normalizer `ln Σ exp(z)`.
#[inline]
pub fn softmax_into(logits: &[f64], out: &mut [f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    max + sum.ln()
}

// Eight independent accumulators; the fixed summation order keeps results
// bit-stable while letting the compiler vectorize.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[inline]
fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

#[inline]
fn window_input(params: &ModelParams, ids: &[CharId], i: usize, out: &mut [f64]) {
    let d = params.dims.d_emb;
    let w = params.dims.window as isize;
    let emb = params.embedding();
    for (slot, offset) in (-w..=w).enumerate() {
        let j = i as isize + offset;
        let id = if j < 0 || j >= ids.len() as isize {
            PAD
        } else {
            ids[j as usize]
        };
        out[slot * d..(slot + 1) * d].copy_from_slice(&emb[id * d..(id + 1) * d]);
    }
}

#[inline]
fn forward_kernel(params: &ModelParams, ids: &[CharId], out: &mut ForwardResult) {
    let dims = params.dims;
    let (v, h) = (dims.vocab_size, dims.hidden);
    let width = dims.encoder_input();
    let enc_w = params.encoder_weights();
    let enc_b = params.encoder_bias();
    let proj_w = params.projection_weights();
    let proj_b = params.projection_bias();
    let mut x = vec![0.0; width];
    for i in 0..ids.len() {
        window_input(params, ids, i, &mut x);
        let h_i = &mut out.hidden[i * h..(i + 1) * h];
        for (k, slot) in h_i.iter_mut().enumerate() {
            *slot = (enc_b[k] + dot(&enc_w[k * width..(k + 1) * width], &x)).tanh();
        }
        let z_i = &mut out.logits[i * v..(i + 1) * v];
        for (j, slot) in z_i.iter_mut().enumerate() {
            *slot = proj_b[j] + dot(&proj_w[j * h..(j + 1) * h], h_i);
        }
        out.log_norm[i] = softmax_into(z_i, &mut out.probs[i * v..(i + 1) * v]);
    }
}

#[inline]
fn backward_kernel(
    params: &ModelParams,
    result: &ForwardResult,
    dlogits: &[f64],
    grads: &mut ModelParams,
) {
    let dims = params.dims;
    let (v, h, d) = (dims.vocab_size, dims.hidden, dims.d_emb);
    let width = dims.encoder_input();
    let ids = &result.ids;

    let enc_w = params.encoder_weights();
    let proj_w = params.projection_weights();
    let mut x = vec![0.0; width];
    let mut dh = vec![0.0; h];
    let mut dpre = vec![0.0; h];
    let mut dx = vec![0.0; width];

    let emb_r = dims.embedding_range();
    let encw_r = dims.encoder_weight_range();
    let encb_r = dims.encoder_bias_range();
    let projw_r = dims.projection_weight_range();
    let projb_r = dims.projection_bias_range();

    for i in 0..ids.len() {
        let dz = &dlogits[i * v..(i + 1) * v];
        if dz.iter().all(|&g| g == 0.0) {
            continue;
        }
        let h_i = result.hidden(i);
        dh.iter_mut().for_each(|g| *g = 0.0);
        {
            let g = &mut grads.data;
            for (j, &dzj) in dz.iter().enumerate() {
                if dzj == 0.0 {
                    continue;
                }
                g[projb_r.start + j] += dzj;
                let row = projw_r.start + j * h;
                axpy(&mut g[row..row + h], dzj, h_i);
                axpy(&mut dh, dzj, &proj_w[j * h..(j + 1) * h]);
            }
        }
        for k in 0..h {
            dpre[k] = dh[k] * (1.0 - h_i[k] * h_i[k]);
        }
        window_input(params, ids, i, &mut x);
        dx.iter_mut().for_each(|g| *g = 0.0);
        let g = &mut grads.data;
        for (k, &dk) in dpre.iter().enumerate() {
            g[encb_r.start + k] += dk;
            let row = encw_r.start + k * width;
            axpy(&mut g[row..row + width], dk, &x);
            axpy(&mut dx, dk, &enc_w[k * width..(k + 1) * width]);
        }
        let w = dims.window as isize;
        for (slot, offset) in (-w..=w).enumerate() {
            let j = i as isize + offset;
            let id = if j < 0 || j >= ids.len() as isize {
                PAD
            } else {
                ids[j as usize]
            };
            let row = emb_r.start + id * d;
            for (gd, &xd) in g[row..row + d]
                .iter_mut()
                .zip(&dx[slot * d..(slot + 1) * d])
            {
                *gd += xd;
            }
        }
    }
}

impl ModelParams {
    pub fn forward(&self, ids: &[CharId]) -> Result<ForwardResult> {
        let dims = self.dims;
        if ids.is_empty() {
            return Err(Error::InvalidArgument("empty sentence".into()));
        }
        if let Some(&id) = ids.iter().find(|&&id| id >= dims.vocab_size) {
            return Err(Error::IdOutOfRange {
                id,
                size: dims.vocab_size,
            });
        }
        let (v, h, n) = (dims.vocab_size, dims.hidden, ids.len());
        let mut out = ForwardResult {
            ids: ids.to_vec(),
            vocab_size: v,
            hidden_size: h,
            hidden: vec![0.0; n * h],
            logits: vec![0.0; n * v],
            probs: vec![0.0; n * v],
            log_norm: vec![0.0; n],
        };
        forward_kernel(self, ids, &mut out);
        Ok(out)
    }

    /// Accumulates into `grads` the parameter gradient of a loss whose
    /// gradient with respect to `result`'s logits is `dlogits` (row-major,
    /// one row per position). All-zero rows are skipped.
    pub fn backward(&self, result: &ForwardResult, dlogits: &[f64], grads: &mut ModelParams) {
        assert_eq!(grads.dims, self.dims, "gradient buffer shape");
        assert_eq!(
            dlogits.len(),
            result.ids.len() * self.dims.vocab_size,
            "dlogits shape"
        );
        backward_kernel(self, result, dlogits, grads);
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::model::ModelDims;

    #[test]
    fn zero_params_give_uniform_probs() {
        let p = ModelParams::zeros(ModelDims::new(7, 3, 4, 2).unwrap());
        let r = p.forward(&[2, 3, 4]).unwrap();
        for i in 0..3 {
            for &q in r.probs(i) {
                assert!((q - 1.0 / 7.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn softmax_of_one_two_three() {
        // Independent scalar oracle.
        let z = [1.0f64, 2.0, 3.0];
        let denom: f64 = z.iter().map(|v| v.exp()).sum();
        let oracle: Vec<f64> = z.iter().map(|v| v.exp() / denom).collect();
        let mut out = [0.0; 3];
        softmax_into(&z, &mut out);
        for (a, b) in out.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-15);
        }
        let frozen = [0.09003057317038046, 0.24472847105479767, 0.6652409557748219];
        for (a, b) in out.iter().zip(&frozen) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn logits_at_a_position_flow_into_probs() {
        // Only the projection bias is nonzero, so every position sees logits [1, 2, 3].
        let mut p = ModelParams::zeros(ModelDims::new(3, 2, 2, 1).unwrap());
        p.projection_bias_mut().copy_from_slice(&[1.0, 2.0, 3.0]);
        let r = p.forward(&[0, 1, 2, 1]).unwrap();
        assert_eq!(r.logits(2), &[1.0, 2.0, 3.0]);
        assert!((r.probs(2)[0] - 0.09003).abs() < 1e-5);
        assert!((r.probs(2)[1] - 0.24473).abs() < 1e-5);
        assert!((r.probs(2)[2] - 0.66524).abs() < 1e-5);
        assert_eq!(r.argmax(2), 2);
    }

    #[test]
    fn rejects_out_of_range_and_empty() {
        let p = ModelParams::zeros(ModelDims::new(5, 2, 2, 1).unwrap());
        assert!(matches!(
            p.forward(&[1, 5]),
            Err(Error::IdOutOfRange { id: 5, size: 5 })
        ));
        assert!(p.forward(&[]).is_err());
    }

    #[test]
    fn forward_is_bit_stable() {
        let p = ModelParams::init(ModelDims::new(30, 6, 8, 2).unwrap(), 5);
        let ids = [3, 9, 29, 4, 4, 17];
        let a = p.forward(&ids).unwrap();
        let b = p.forward(&ids).unwrap();
        let bits = |r: &ForwardResult| r.probs.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn log_norm_matches_probs() {
        let p = ModelParams::init(ModelDims::new(30, 6, 8, 2).unwrap(), 5);
        let r = p.forward(&[3, 9, 29]).unwrap();
        for i in 0..3 {
            for j in 0..30 {
                assert!(((r.logits(i)[j] - r.log_norm(i)).exp() - r.probs(i)[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn argmax_ties_prefer_lower_id() {
        assert_eq!(argmax(&[0.25, 0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax(&[0.3, 0.3]), 0);
    }

    proptest! {
        #[test]
        fn rows_are_normalized(seed: u64, ids in prop::collection::vec(0usize..25, 1..12)) {
            let p = ModelParams::init(ModelDims::new(25, 4, 6, 2).unwrap(), seed);
            let r = p.forward(&ids).unwrap();
            for i in 0..ids.len() {
                let s: f64 = r.probs(i).iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-9);
                prop_assert!(r.probs(i).iter().all(|&q| q > 0.0 && q < 1.0));
            }
        }

        #[test]
        fn softmax_shift_invariance(z in prop::collection::vec(-20.0f64..20.0, 2..40), c in -50.0f64..50.0) {
            let mut a = vec![0.0; z.len()];
            let mut b = vec![0.0; z.len()];
            softmax_into(&z, &mut a);
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            softmax_into(&shifted, &mut b);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}
