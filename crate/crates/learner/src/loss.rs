//! Smooth L1 loss and the trajectory layer that maps anchored weights to
//! points.

use vinedmp_core::GaussianBasis;

/// Mean over all elements of the smooth L1 penalty on `pred − target`.
pub fn smooth_l1(pred: &[f64], target: &[f64], beta: f64) -> f64 {
    assert_eq!(pred.len(), target.len(), "loss operands differ in length");
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = (p - t).abs();
            if d < beta {
                0.5 * d * d / beta
            } else {
                d - 0.5 * beta
            }
        })
        .sum();
    sum / pred.len() as f64
}

/// Gradient of [`smooth_l1`] with respect to `pred`.
pub fn smooth_l1_grad(pred: &[f64], target: &[f64], beta: f64) -> Vec<f64> {
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            if d.abs() < beta {
                d / beta / n
            } else {
                d.signum() / n
            }
        })
        .collect()
}

/// Basis values at `M` evenly spaced phases, used to turn anchored weights
/// into trajectory points without integrating.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    points: usize,
    kernels: usize,
    /// `points × kernels`, row-major.
    basis: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(basis: &GaussianBasis, points: usize) -> Self {
        assert!(points >= 2, "need at least two phases");
        let phases: Vec<f64> = (0..points).map(|j| j as f64 / (points - 1) as f64).collect();
        Self {
            points,
            kernels: basis.num_kernels(),
            basis: basis.design_matrix(&phases),
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Trajectory points `[x_0, y_0, x_1, y_1, …]` from row-major 2 × K weights.
    pub fn trajectory(&self, weights: &[f64]) -> Vec<f64> {
        let k = self.kernels;
        let (wx, wy) = weights.split_at(k);
        let mut out = Vec::with_capacity(2 * self.points);
        for row in self.basis.chunks_exact(k) {
            out.push(row.iter().zip(wx).map(|(a, b)| a * b).sum());
            out.push(row.iter().zip(wy).map(|(a, b)| a * b).sum());
        }
        out
    }

    /// Pulls a gradient on interleaved points back to the 2 × K weights:
    /// `∂L/∂W' = (∂L/∂pred) Φᵀ`.
    pub fn weights_grad(&self, d_points: &[f64]) -> Vec<f64> {
        let k = self.kernels;
        let mut g = vec![0.0; 2 * k];
        for (row, d) in self.basis.chunks_exact(k).zip(d_points.chunks_exact(2)) {
            for (i, phi) in row.iter().enumerate() {
                g[i] += d[0] * phi;
                g[k + i] += d[1] * phi;
            }
        }
        g
    }
}
