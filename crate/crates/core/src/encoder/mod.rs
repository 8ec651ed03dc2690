//! Adaptive encoder: a linear map trained on node pairs that it selects from
//! its own similarity ranking.

pub mod loss;
pub mod scaling;
pub mod selection;
pub mod similarity;
pub mod state;
pub mod train;

use ndarray::Array2;

pub use loss::{loss_and_gradient, loss_and_gradient_at, LOSS_EPS};
pub use scaling::{encode_and_scale, minmax_columns, ScalerStats};
pub use selection::{
    balanced_batch, select_by_rank, select_samples, select_streaming, update_thresholds, LabelledPair, Pair,
    StreamingSelection, ThresholdRatios, ThresholdSchedule, TrainingSet,
};
pub use similarity::{init_similarity, row_normalize, similarity, SimilarityState};
pub use state::{adam_step, AdamParam, EncoderState};
pub use train::{
    select_from_embeddings, smoothed_features, train_age, train_encoder, EncoderConfig, FilterConfig, TrainOutcome,
    DEFAULT_PAIR_BUDGET,
};

/// Scaled embeddings saved at a threshold boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSnapshot {
    /// n×h, entries in `[0, 1]`.
    pub z: Array2<f64>,
    pub epoch: usize,
    pub dbi: Option<f64>,
    pub val_auc: Option<f64>,
}

impl EmbeddingSnapshot {
    pub fn new(z: Array2<f64>, epoch: usize) -> Self {
        EmbeddingSnapshot {
            z,
            epoch,
            dbi: None,
            val_auc: None,
        }
    }
}
