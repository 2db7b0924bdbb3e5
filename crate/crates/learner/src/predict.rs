use image::RgbImage;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use vinedmp_core::{gripper_yaw, CameraRig, CanonicalSystem, DmpModel, Frame, Integrator, Trajectory};

use crate::network::VisionDmpModel;
use crate::preprocess::preprocess_image;
use crate::LearnerError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictOptions {
    /// Movement duration in seconds.
    pub duration: f64,
    pub dt: f64,
    /// Keep every `stride`-th integration step (the last step is always kept).
    pub stride: usize,
}

impl Default for PredictOptions {
    fn default() -> Self {
        Self {
            duration: 4.0,
            dt: 1e-3,
            stride: 10,
        }
    }
}

/// A predicted movement in pixels and, when a rig is given, on the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Anchored weights scaled to image pixels (2 × K).
    pub weights: DMatrix<f64>,
    pub pixels: Trajectory,
    pub plane: Option<Trajectory>,
    /// Gripper yaw from the predicted start and goal pixels.
    pub yaw: f64,
}

/// Anchored weights for `image` in its own pixel units.
pub fn pixel_weights(model: &VisionDmpModel, image: &RgbImage) -> Result<DMatrix<f64>, LearnerError> {
    let input = preprocess_image(image, model.config().input_size)?;
    let mut w = model.anchored_weights(&input)?;
    let (width, height) = image.dimensions();
    w.row_mut(0).scale_mut(width as f64);
    w.row_mut(1).scale_mut(height as f64);
    Ok(w)
}

/// Runs the network, uses the denormalized anchored weights directly as
/// movement-primitive weights, integrates for `options.duration` and, if
/// `rig` is given, projects the result onto the task plane.
pub fn predict_trajectory(
    model: &VisionDmpModel,
    image: &RgbImage,
    rig: Option<&CameraRig>,
    options: &PredictOptions,
) -> Result<Prediction, LearnerError> {
    let weights = pixel_weights(model, image)?;
    let dmp = DmpModel::new(weights.clone(), model.basis().clone())?;
    let cs = CanonicalSystem::new(options.duration)?;
    let integrator = Integrator::with_dt(options.dt);
    let rollout = integrator.run(&dmp, &cs, None)?;
    let full = &rollout.trajectory;
    let stride = options.stride.max(1);
    let mut keep: Vec<usize> = (0..full.len()).step_by(stride).collect();
    if keep.last() != Some(&(full.len() - 1)) {
        keep.push(full.len() - 1);
    }
    let points: Vec<Vec<f64>> = keep.iter().map(|&i| full.points()[i].clone()).collect();
    let mut pixels = Trajectory::new(Frame::ImagePx, points)?;
    if let Some(ts) = full.timestamps() {
        pixels = pixels.with_timestamps(keep.iter().map(|&i| ts[i]).collect())?;
    }
    let (start, goal) = (dmp.learned_start(), dmp.learned_goal());
    let yaw = gripper_yaw([start[0], start[1]], [goal[0], goal[1]])?;
    let plane = rig.map(|r| r.trajectory_to_plane(&pixels)).transpose()?;
    Ok(Prediction {
        weights,
        pixels,
        plane,
        yaw,
    })
}
