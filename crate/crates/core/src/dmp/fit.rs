use nalgebra::DMatrix;

use super::{DmpError, GaussianBasis};
use crate::trajectory::{Trajectory, TrajectoryError};

/// Weight-fitting method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMethod {
    /// Ridge-regularized least squares over all samples jointly. The ridge
    /// penalizes each weight's deviation from the demo's per-axis mean.
    LeastSquares { ridge: f64 },
    /// Per-kernel weighted mean, weighted by the normalized activations.
    LocallyWeighted,
}

/// Fits `W` (dofs × K) so that `W φ(x_j) ≈ y_j` over the demo.
///
/// Phases come from the demo's timestamps when present and from normalized
/// arc length otherwise.
pub fn fit_weights(
    demo: &Trajectory,
    basis: &GaussianBasis,
    method: FitMethod,
) -> Result<DMatrix<f64>, DmpError> {
    let k = basis.num_kernels();
    if demo.len() < k {
        return Err(DmpError::InsufficientSamples {
            needed: k,
            got: demo.len(),
        });
    }
    let phases = demo.phases().map_err(|e| match e {
        TrajectoryError::ZeroLength => DmpError::DegenerateDemo,
        other => other.into(),
    })?;
    let n = demo.dim();
    let rows = demo.len();
    let phi = DMatrix::from_row_slice(rows, k, &basis.design_matrix(&phases));
    let targets = DMatrix::from_fn(rows, n, |r, c| demo.points()[r][c]);

    match method {
        FitMethod::LeastSquares { ridge } => {
            if !(ridge.is_finite() && ridge >= 0.0) {
                return Err(DmpError::InvalidModel(format!(
                    "ridge must be nonnegative, got {ridge}"
                )));
            }
            let mut normal = phi.transpose() * &phi;
            for i in 0..k {
                normal[(i, i)] += ridge;
            }
            // The ridge acts on deviations from the demo mean; adding a constant
            // to every column of W shifts Wφ by that constant.
            let mean = DMatrix::from_fn(1, n, |_, c| targets.column(c).mean());
            let centered = DMatrix::from_fn(rows, n, |r, c| targets[(r, c)] - mean[(0, c)]);
            let rhs = phi.transpose() * &centered;
            let solution = match normal.clone().cholesky() {
                Some(chol) => chol.solve(&rhs),
                None => phi
                    .clone()
                    .svd(true, true)
                    .solve(&centered, 1e-14)
                    .map_err(|e| DmpError::InvalidModel(e.to_string()))?,
            };
            let mut w = solution.transpose();
            for c in 0..n {
                w.row_mut(c).add_scalar_mut(mean[(0, c)]);
            }
            Ok(w)
        }
        FitMethod::LocallyWeighted => {
            let mut w = DMatrix::zeros(n, k);
            for kk in 0..k {
                let col = phi.column(kk);
                let mass: f64 = col.iter().sum();
                for d in 0..n {
                    let num: f64 = col.iter().zip(targets.column(d).iter()).map(|(a, b)| a * b).sum();
                    w[(d, kk)] = if mass > 0.0 { num / mass } else { 0.0 };
                }
            }
            Ok(w)
        }
    }
}
