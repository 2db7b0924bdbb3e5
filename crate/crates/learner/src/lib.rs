//! Image-to-movement-primitive regression.
//!
//! A small convolutional network maps a preprocessed scene image to the
//! anchored weights `W'` of a planar movement primitive, whose rows at phase
//! 0 and 1 are the start and goal. Training compares `W'Φ` at evenly spaced
//! phases with the demonstrated trajectory under a smooth L1 loss, so no
//! integration happens inside the training loop; gradients flow back
//! through the fixed basis matrix in closed form.

mod adam;
mod checkpoint;
mod eval;
mod gemm;
mod loss;
mod network;
mod predict;
mod preprocess;
mod train;

use thiserror::Error;

pub use adam::Adam;
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CheckpointHeader, PreprocessingHeader, MAGIC,
    VERSION,
};
pub use eval::{constant_rmse, evaluate_rmse, mean_target, trajectory_rmse, RmseStats, EVAL_IMAGE_SIZE};
pub use loss::{smooth_l1, smooth_l1_grad, PhaseGrid};
pub use network::{ForwardPass, ModelConfig, ParamView, VisionDmpModel, IMAGE_CHANNELS};
pub use predict::{pixel_weights, predict_trajectory, PredictOptions, Prediction};
pub use preprocess::{normalize_trajectory, preprocess, preprocess_image};
pub use train::{
    dataset_loss, example_loss_and_grad, predict_normalized, train, train_with, EpochStats, Example, Splits, TrainConfig, TrainReport,
};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("image {width}×{height} is smaller than the {size}×{size} input")]
    ImageTooSmall { width: u32, height: u32, size: usize },
    #[error("input tensor has {got} values, expected {expected}")]
    InputShape { expected: usize, got: usize },
    #[error("target has {got} values, expected {expected}")]
    TargetShape { expected: usize, got: usize },
    #[error("trajectory must be in image pixels")]
    WrongFrame,
    #[error("network produced a non-finite output")]
    NonFiniteActivation,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("train and dev splits must be nonempty")]
    EmptySplit,
    #[error("epoch {epoch}, batch {batch}: {source}")]
    Training {
        epoch: usize,
        batch: usize,
        source: Box<LearnerError>,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Trajectory(#[from] vinedmp_core::TrajectoryError),
    #[error(transparent)]
    Dmp(#[from] vinedmp_core::DmpError),
    #[error(transparent)]
    Projection(#[from] vinedmp_core::ProjectionError),
}
