//! Joint augmentation of scene images and their demonstration trajectories.
//!
//! Geometric transforms are plane homographies applied to the image by
//! inverse-mapped bilinear warping and to trajectory points exactly.
//! Photometric jitter and noise only touch pixels.

mod config;
mod dataset;
mod photometric;
mod transform;

use thiserror::Error;

pub use config::AugmentationConfig;
pub use dataset::{augment_dataset, augment_sample, replica_id, replica_seed, Sample, Split};
pub use photometric::{apply_photometric, PhotometricParams};
pub use transform::{apply, sample_transform, AugmentParams, GeometricTransform};

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error("homography is singular (|det| = {0:e})")]
    SingularTransform(f64),
    #[error("homography sends point {index} to infinity (w = {w:e})")]
    DegenerateHomography { index: usize, w: f64 },
    #[error("trajectory must be in image pixels")]
    WrongFrame,
    #[error("trajectory point {index} lies outside the {width}×{height} image")]
    OutOfBounds { index: usize, width: u32, height: u32 },
    #[error("trajectory: {0}")]
    Trajectory(#[from] vinedmp_core::TrajectoryError),
}
