//! Windowed per-position character classifier.
//!
//! Each position `i` is encoded from the embeddings of the `2w + 1`
//! characters centred on it (PAD beyond the sentence edges):
//!
//! ```text
//! h_i     = tanh(A · [e(x_{i-w}); …; e(x_{i+w})] + a)
//! logit_i = W · h_i + b
//! p(y_i = j | X) = softmax(logit_i)[j]
//! ```
//!
//! All parameters live in one flat `f64` buffer so that updates, gradient
//! checks and checkpoints can treat them uniformly.

mod checkpoint;
mod forward;

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, FORMAT_VERSION, MAGIC,
};
pub use forward::{softmax_into, ForwardResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub d_emb: usize,
    pub hidden: usize,
    /// Context characters on each side of the centre position.
    pub window: usize,
}

impl ModelDims {
    pub fn new(vocab_size: usize, d_emb: usize, hidden: usize, window: usize) -> Result<Self> {
        if vocab_size == 0 || d_emb == 0 || hidden == 0 {
            return Err(Error::InvalidArgument(format!(
                "model dimensions must be positive (vocab {vocab_size}, d_emb {d_emb}, hidden {hidden})"
            )));
        }
        Ok(Self {
            vocab_size,
            d_emb,
            hidden,
            window,
        })
    }

    /// Width of the concatenated window embedding fed to the encoder.
    pub fn encoder_input(&self) -> usize {
        (2 * self.window + 1) * self.d_emb
    }

    pub fn embedding_range(&self) -> Range<usize> {
        0..self.vocab_size * self.d_emb
    }

    pub fn encoder_weight_range(&self) -> Range<usize> {
        let start = self.embedding_range().end;
        start..start + self.hidden * self.encoder_input()
    }

    pub fn encoder_bias_range(&self) -> Range<usize> {
        let start = self.encoder_weight_range().end;
        start..start + self.hidden
    }

    pub fn projection_weight_range(&self) -> Range<usize> {
        let start = self.encoder_bias_range().end;
        start..start + self.vocab_size * self.hidden
    }

    pub fn projection_bias_range(&self) -> Range<usize> {
        let start = self.projection_weight_range().end;
        start..start + self.vocab_size
    }

    pub fn param_count(&self) -> usize {
        self.projection_bias_range().end
    }
}

/// Every differentiable parameter of the classifier, plus the seeds that
/// produced it (initialization first, then each training run).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dims: ModelDims,
    data: Vec<f64>,
    lineage: Vec<u64>,
}

impl ModelParams {
    /// Uniform(-s, s) initialization with `s = 1/sqrt(fan_in)` per block. The
    /// fan-in is the row length: `d_emb` for the embedding table, the window
    /// width for the encoder and `hidden` for the projection. Biases share the
    /// bound of their weight matrix.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; dims.param_count()];
        let blocks = [
            (dims.embedding_range(), dims.d_emb),
            (dims.encoder_weight_range(), dims.encoder_input()),
            (dims.encoder_bias_range(), dims.encoder_input()),
            (dims.projection_weight_range(), dims.hidden),
            (dims.projection_bias_range(), dims.hidden),
        ];
        for (range, fan_in) in blocks {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for x in &mut data[range] {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        Self {
            dims,
            data,
            lineage: vec![seed],
        }
    }

    pub fn zeros(dims: ModelDims) -> Self {
        Self {
            dims,
            data: vec![0.0; dims.param_count()],
            lineage: Vec::new(),
        }
    }

    pub fn from_raw(dims: ModelDims, data: Vec<f64>, lineage: Vec<u64>) -> Result<Self> {
        if data.len() != dims.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters supplied, dimensions require {}",
                data.len(),
                dims.param_count()
            )));
        }
        Ok(Self {
            dims,
            data,
            lineage,
        })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn lineage(&self) -> &[u64] {
        &self.lineage
    }

    pub fn push_lineage(&mut self, seed: u64) {
        self.lineage.push(seed);
    }

    pub fn embedding(&self) -> &[f64] {
        &self.data[self.dims.embedding_range()]
    }

    pub fn encoder_weights(&self) -> &[f64] {
        &self.data[self.dims.encoder_weight_range()]
    }

    pub fn encoder_bias(&self) -> &[f64] {
        &self.data[self.dims.encoder_bias_range()]
    }

    pub fn projection_weights(&self) -> &[f64] {
        &self.data[self.dims.projection_weight_range()]
    }

    pub fn projection_bias(&self) -> &[f64] {
        &self.data[self.dims.projection_bias_range()]
    }

    pub fn projection_bias_mut(&mut self) -> &mut [f64] {
        let r = self.dims.projection_bias_range();
        &mut self.data[r]
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        debug_assert_eq!(self.dims, other.dims);
        for (x, g) in self.data.iter_mut().zip(&other.data) {
            *x += scale * g;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }
}
