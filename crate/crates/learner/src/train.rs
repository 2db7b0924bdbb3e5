use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::loss::{smooth_l1, smooth_l1_grad, PhaseGrid};
use crate::network::VisionDmpModel;
use crate::LearnerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    /// The learning rate halves every this many epochs.
    pub lr_halving_period: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Transition width of the smooth L1 loss.
    pub loss_beta: f64,
    /// Points per trajectory compared by the loss.
    pub num_loss_points: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch_size: 32,
            lr0: 1e-3,
            lr_halving_period: 40,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            loss_beta: 1.0,
            num_loss_points: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let ok = self.epochs > 0
            && self.batch_size > 0
            && self.lr0 > 0.0
            && self.lr_halving_period > 0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.loss_beta > 0.0
            && self.num_loss_points >= 2;
        if ok {
            Ok(())
        } else {
            Err(LearnerError::InvalidConfig(
                "training config needs positive sizes and rates, betas in [0,1) and at least 2 loss points".into(),
            ))
        }
    }

    /// Step-decayed learning rate for a 0-indexed epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr0 * 0.5f64.powi((epoch / self.lr_halving_period) as i32)
    }
}

/// A preprocessed input with its interleaved normalized target points.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct Splits<'a> {
    pub train: &'a [Example],
    pub dev: &'a [Example],
    pub test: &'a [Example],
}

/// Per-epoch losses and the selected epoch. `test_loss` is empty when no
/// test split was given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean mini-batch loss over each epoch.
    pub train_loss: Vec<f64>,
    /// Loss over the whole split after each epoch.
    pub dev_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    pub best_epoch: usize,
    pub best_dev_loss: f64,
    pub config: TrainConfig,
    pub checkpoint: Option<String>,
}

/// Progress after one finished epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub test_loss: Option<f64>,
}

/// Mean loss and its gradient for one example, accumulated into `grads`
/// with weight `scale`.
pub fn example_loss_and_grad(
    model: &VisionDmpModel,
    grid: &PhaseGrid,
    example: &Example,
    beta: f64,
    scale: f64,
    grads: &mut [f64],
) -> Result<f64, LearnerError> {
    let pass = model.forward(&example.input)?;
    let pred = grid.trajectory(pass.output());
    check_target(&pred, &example.target)?;
    let loss = smooth_l1(&pred, &example.target, beta);
    let d_pred = smooth_l1_grad(&pred, &example.target, beta);
    model.backward(&pass, &grid.weights_grad(&d_pred), scale, grads);
    Ok(loss)
}

fn check_target(pred: &[f64], target: &[f64]) -> Result<(), LearnerError> {
    if pred.len() != target.len() {
        return Err(LearnerError::TargetShape {
            expected: pred.len(),
            got: target.len(),
        });
    }
    Ok(())
}

/// Mean per-example loss over `examples`.
pub fn dataset_loss(model: &VisionDmpModel, examples: &[Example], points: usize, beta: f64) -> Result<f64, LearnerError> {
    let grid = PhaseGrid::new(model.basis(), points);
    let mut sum = 0.0;
    for e in examples {
        let pass = model.forward(&e.input)?;
        let pred = grid.trajectory(pass.output());
        check_target(&pred, &e.target)?;
        sum += smooth_l1(&pred, &e.target, beta);
    }
    Ok(sum / examples.len() as f64)
}

/// Normalized trajectories `[x_0, y_0, …]` at `points` phases for a batch of
/// inputs, one row per input.
pub fn predict_normalized(model: &VisionDmpModel, inputs: &[Vec<f64>], points: usize) -> Result<Vec<Vec<f64>>, LearnerError> {
    let grid = PhaseGrid::new(model.basis(), points);
    inputs
        .iter()
        .map(|x| Ok(grid.trajectory(model.forward(x)?.output())))
        .collect()
}

pub fn train(model: &mut VisionDmpModel, data: Splits<'_>, config: &TrainConfig) -> Result<TrainReport, LearnerError> {
    train_with(model, data, config, |_| {})
}

/// Trains with Adam on shuffled mini-batches, calling `on_epoch` after each
/// epoch, and leaves `model` at the parameters of the epoch with the lowest
/// dev loss. Examples within a batch are processed in order, so results do
/// not depend on anything but the inputs.
pub fn train_with(
    model: &mut VisionDmpModel,
    data: Splits<'_>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainReport, LearnerError> {
    config.validate()?;
    if data.train.is_empty() || data.dev.is_empty() {
        return Err(LearnerError::EmptySplit);
    }
    let grid = PhaseGrid::new(model.basis(), config.num_loss_points);
    let mut adam = Adam::new(model.num_params(), config.beta1, config.beta2, config.eps);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut grads = vec![0.0; model.num_params()];
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        dev_loss: Vec::with_capacity(config.epochs),
        test_loss: Vec::new(),
        best_epoch: 0,
        best_dev_loss: f64::INFINITY,
        config: config.clone(),
        checkpoint: None,
    };
    let mut best_params = model.params().to_vec();

    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let at = |source: LearnerError| LearnerError::Training {
                epoch,
                batch,
                source: Box::new(source),
            };
            grads.fill(0.0);
            let scale = 1.0 / idx.len() as f64;
            for &i in idx {
                let loss = example_loss_and_grad(model, &grid, &data.train[i], config.loss_beta, scale, &mut grads)
                    .map_err(at)?;
                epoch_loss += loss;
            }
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(at(LearnerError::NonFiniteGradient));
            }
            adam.update(model.params_mut(), &grads, lr);
        }
        let train_loss = epoch_loss / data.train.len() as f64;
        let dev_loss = dataset_loss(model, data.dev, config.num_loss_points, config.loss_beta)?;
        let test_loss = if data.test.is_empty() {
            None
        } else {
            Some(dataset_loss(model, data.test, config.num_loss_points, config.loss_beta)?)
        };
        report.train_loss.push(train_loss);
        report.dev_loss.push(dev_loss);
        if let Some(t) = test_loss {
            report.test_loss.push(t);
        }
        if dev_loss < report.best_dev_loss {
            report.best_dev_loss = dev_loss;
            report.best_epoch = epoch;
            best_params.copy_from_slice(model.params());
        }
        on_epoch(&EpochStats {
            epoch,
            epochs: config.epochs,
            lr,
            train_loss,
            dev_loss,
            test_loss,
        });
    }
    model.set_params(&best_params)?;
    Ok(report)
}

impl TrainReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
