//! Error-driven contrastive probability optimization (ECOPO) for
//! character-level spell correction.
//!
//! The crate is organized bottom-up:
//!
//! * [`vocab`]: character inventory, confusion sets and adjacency counts.
//! * [`data`]: parallel corpora, error injection and a synthetic text generator.
//! * [`model`]: a windowed per-position character classifier with analytic gradients.
//! * [`ecopo`]: negative selection, the contrastive probability loss, the joint
//!   objective and the training loop.
//! * [`gradcheck`]: central finite-difference verification of every objective.
//! * [`eval`]: sentence-level metrics, wrong-correction taxonomy and heat-map export.

pub mod data;
pub mod ecopo;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod vocab;

pub use data::{CorpusStats, ParallelSentence};
pub use ecopo::{LossKind, NegativeSelection, TrainConfig};
pub use error::{Error, Result};
pub use eval::{ErrorTaxonomy, EvalReport, MetricLevel, MetricsReport, SentenceJudgement};
pub use model::{ForwardResult, ModelDims, ModelParams};
pub use vocab::{CharId, ConfusionSet, CooccurrenceTable, Vocabulary};
