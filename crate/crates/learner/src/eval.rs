use serde::{Deserialize, Serialize};

use crate::loss::PhaseGrid;
use crate::network::VisionDmpModel;
use crate::train::Example;
use crate::LearnerError;

/// Default evaluation resolution `(height, width)`.
pub const EVAL_IMAGE_SIZE: (u32, u32) = (480, 640);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseStats {
    pub mean: f64,
    /// Population standard deviation over samples.
    pub std: f64,
    pub per_sample: Vec<f64>,
}

impl RmseStats {
    pub fn from_samples(per_sample: Vec<f64>) -> Self {
        let n = per_sample.len() as f64;
        let mean = per_sample.iter().sum::<f64>() / n;
        let var = per_sample.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            per_sample,
        }
    }
}

/// Root mean squared Euclidean distance in pixels between two interleaved
/// normalized trajectories, after scaling to `(height, width)`.
pub fn trajectory_rmse(pred: &[f64], target: &[f64], image_size: (u32, u32)) -> f64 {
    assert_eq!(pred.len(), target.len());
    let (h, w) = (image_size.0 as f64, image_size.1 as f64);
    let sq: f64 = pred
        .chunks_exact(2)
        .zip(target.chunks_exact(2))
        .map(|(p, t)| ((p[0] - t[0]) * w).powi(2) + ((p[1] - t[1]) * h).powi(2))
        .sum();
    (sq / (pred.len() / 2) as f64).sqrt()
}

/// RMSE of the model's predictions against each example's target points.
pub fn evaluate_rmse(model: &VisionDmpModel, examples: &[Example], image_size: (u32, u32)) -> Result<RmseStats, LearnerError> {
    if examples.is_empty() {
        return Err(LearnerError::EmptySplit);
    }
    let mut grid: Option<PhaseGrid> = None;
    let mut out = Vec::with_capacity(examples.len());
    for e in examples {
        let points = e.target.len() / 2;
        let g = match &grid {
            Some(g) if g.points() == points => g,
            _ => grid.insert(PhaseGrid::new(model.basis(), points)),
        };
        let pred = g.trajectory(model.forward(&e.input)?.output());
        out.push(trajectory_rmse(&pred, &e.target, image_size));
    }
    Ok(RmseStats::from_samples(out))
}

/// Point-wise mean of the training targets, the input-blind baseline.
pub fn mean_target(examples: &[Example]) -> Vec<f64> {
    let mut mean = vec![0.0; examples[0].target.len()];
    for e in examples {
        for (m, t) in mean.iter_mut().zip(&e.target) {
            *m += t;
        }
    }
    mean.iter_mut().for_each(|m| *m /= examples.len() as f64);
    mean
}

/// RMSE of predicting `constant` for every example.
pub fn constant_rmse(constant: &[f64], examples: &[Example], image_size: (u32, u32)) -> RmseStats {
    RmseStats::from_samples(examples.iter().map(|e| trajectory_rmse(constant, &e.target, image_size)).collect())
}
