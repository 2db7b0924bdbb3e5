use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use vinedmp_augment::Split;
use vinedmp_core::{CameraRig, Trajectory};
use vinedmp_learner::{
    constant_rmse, evaluate_rmse, load_checkpoint, mean_target, predict_trajectory, save_checkpoint, train_with,
    EpochStats, Example, LearnerError, ModelConfig, PredictOptions, RmseStats, Splits, TrainConfig, TrainReport,
    VisionDmpModel, EVAL_IMAGE_SIZE,
};
use vinedmp_sim::{execute, generate_scene, ExecuteConfig};

use crate::dataset::{to_scene, Dataset};
use crate::UserError;

/// The report file written next to a checkpoint.
pub fn report_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.file_name().unwrap_or_default().to_os_string();
    name.push(".report.json");
    checkpoint.with_file_name(name)
}

pub struct TrainOutcome {
    pub model: VisionDmpModel,
    pub report: TrainReport,
}

/// Trains on the dataset at `data` and writes the best-dev checkpoint to
/// `out` with its report alongside. If training fails, the losses recorded
/// so far are still written to the report file.
pub fn train_dataset(
    data: &Path,
    out: &Path,
    model_config: &ModelConfig,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome> {
    config.validate().map_err(|e| UserError(e.to_string()))?;
    model_config.validate().map_err(|e| UserError(e.to_string()))?;
    let ds = Dataset::open(data)?;
    if ds.manifest.split(Split::Dev).next().is_none() {
        return Err(UserError("dev split required for model selection".into()).into());
    }
    if ds.manifest.split(Split::Train).next().is_none() {
        return Err(UserError("train split is empty".into()).into());
    }
    let (size, points) = (model_config.input_size, config.num_loss_points);
    let train = ds.examples(Split::Train, size, points)?;
    let dev = ds.examples(Split::Dev, size, points)?;
    let test = ds.examples(Split::Test, size, points)?;

    let mut model = VisionDmpModel::new(model_config.clone(), config.seed)?;
    let mut partial = TrainReport {
        train_loss: Vec::new(),
        dev_loss: Vec::new(),
        test_loss: Vec::new(),
        best_epoch: 0,
        best_dev_loss: f64::INFINITY,
        config: config.clone(),
        checkpoint: None,
    };
    let result = train_with(
        &mut model,
        Splits {
            train: &train,
            dev: &dev,
            test: &test,
        },
        config,
        |s| {
            partial.train_loss.push(s.train_loss);
            partial.dev_loss.push(s.dev_loss);
            partial.test_loss.extend(s.test_loss);
            if s.dev_loss < partial.best_dev_loss {
                partial.best_dev_loss = s.dev_loss;
                partial.best_epoch = s.epoch;
            }
            on_epoch(s);
        },
    );
    let mut report = match result {
        Ok(r) => r,
        Err(e) => {
            let _ = fs::write(report_path(out), partial.to_json_pretty() + "\n");
            return Err(e.into());
        }
    };
    save_checkpoint(&model, out).with_context(|| format!("writing {}", out.display()))?;
    report.checkpoint = Some(out.file_name().unwrap_or_default().to_string_lossy().into_owned());
    fs::write(report_path(out), report.to_json_pretty() + "\n")?;
    Ok(TrainOutcome { model, report })
}

/// RMSE of `model` on one split, at the evaluation resolution.
pub fn split_rmse(model: &VisionDmpModel, examples: &[Example]) -> Result<RmseStats> {
    Ok(evaluate_rmse(model, examples, EVAL_IMAGE_SIZE)?)
}

/// RMSE of always predicting the mean training trajectory.
pub fn mean_baseline_rmse(train: &[Example], examples: &[Example]) -> RmseStats {
    constant_rmse(&mean_target(train), examples, EVAL_IMAGE_SIZE)
}

pub fn format_rmse(split: Split, s: &RmseStats) -> String {
    format!("{}: {:.2} ± {:.2} px", split.as_str(), s.mean, s.std)
}

/// What drives the gripper in a closed-loop evaluation.
pub enum Policy<'a> {
    Model(&'a VisionDmpModel),
    /// Replays the stored demonstrations.
    Demos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub split: Split,
    pub trials: usize,
    pub successes: usize,
    /// Sample ids with their outcomes, in manifest order.
    pub outcomes: Vec<(String, bool)>,
}

impl SuccessReport {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Regenerates each scene of `split` from its stored seed and executes the
/// policy's trajectory on it. A path that leaves the frame counts as a
/// failure.
pub fn success_sim(ds: &Dataset, split: Split, policy: &Policy<'_>) -> Result<SuccessReport> {
    let size = ds.manifest.image_size();
    let cfg = &ds.manifest.provenance.scene_config;
    let exec = ExecuteConfig::default();
    let mut outcomes = Vec::new();
    for e in ds.manifest.split(split) {
        let Some(stored) = ds.load_scene(e)? else { continue };
        let scene = generate_scene(stored.rng_seed, cfg).with_context(|| format!("regenerating {}", e.id))?;
        if scene != stored {
            anyhow::bail!("{}: stored scene does not match its seed", e.id);
        }
        let pixels = match policy {
            Policy::Demos => ds.load_trajectory(e)?,
            Policy::Model(m) => {
                predict_trajectory(m, &ds.load_image(e)?, None, &PredictOptions::default())
                    .with_context(|| format!("predicting {}", e.id))?
                    .pixels
            }
        };
        let traj = to_scene(&scene, &pixels, size)?;
        let mut s = scene.clone();
        let success = execute(&mut s, &traj, &exec).map(|r| r.success).unwrap_or(false);
        outcomes.push((e.id.clone(), success));
    }
    let successes = outcomes.iter().filter(|(_, ok)| *ok).count();
    Ok(SuccessReport {
        split,
        trials: outcomes.len(),
        successes,
        outcomes,
    })
}

pub fn load_model(path: &Path) -> Result<VisionDmpModel> {
    load_checkpoint(path).map_err(|e| match e {
        LearnerError::Io(io) => UserError(format!("cannot read {}: {io}", path.display())).into(),
        other => anyhow::Error::from(other).context(format!("loading {}", path.display())),
    })
}

/// The record written by `predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRecord {
    pub trajectory: Trajectory,
    pub yaw: f64,
    pub start_px: [f64; 2],
    pub goal_px: [f64; 2],
}

pub fn predict_file(model: &Path, image: &Path, rig: &Path, options: &PredictOptions) -> Result<PredictRecord> {
    let model = load_model(model)?;
    let img = image::open(image)
        .map_err(|e| UserError(format!("cannot read {}: {e}", image.display())))?
        .to_rgb8();
    let text = fs::read_to_string(rig).map_err(|e| UserError(format!("cannot read {}: {e}", rig.display())))?;
    let rig = CameraRig::from_json(&text).map_err(|e| UserError(format!("{}: {e}", rig.display())))?;
    let p = predict_trajectory(&model, &img, Some(&rig), options).map_err(|e| match e {
        LearnerError::Projection(p) => {
            let kind = format!("{:?}", p.root());
            let kind = kind.split([' ', '(']).next().unwrap_or_default().to_string();
            anyhow::Error::from(UserError(format!("{kind}: {p}")))
        }
        other => other.into(),
    })?;
    let (s, g) = (p.pixels.xy(0), p.pixels.xy(p.pixels.len() - 1));
    Ok(PredictRecord {
        trajectory: p.plane.expect("rig given"),
        yaw: p.yaw,
        start_px: s,
        goal_px: g,
    })
}
