//! Multilayer perceptron slot-usage predictor: `n_p` inputs, one ReLU hidden
//! layer, one sigmoid output, trained with Adam on the mean squared error.

mod checkpoint;
mod gradcheck;
mod mlp;
mod train;

pub use checkpoint::{CheckpointHeader, CHECKPOINT_MAGIC};
pub use gradcheck::gradient_check;
pub use mlp::{Gradients, Input, MlpModel, SparseBinary};
pub use train::{evaluate_scores, train, EpochLog, TrainConfig, TrainedModel};

/// `score >= threshold`: ties count as used.
pub fn classify(score: f64, threshold: f64) -> bool {
    score >= threshold
}
