//! Dynamic movement primitives with a position-only reference.
//!
//! The motion is driven by a phase variable `x` that advances linearly from
//! 0 to 1 over the motion duration. A weight matrix `W` (dofs × kernels)
//! combined with the normalized Gaussian basis `φ(x)` encodes the shape; the
//! generalized reference is
//!
//! ```text
//! y_x = Ks (W φ(x) − ŷ0) + y0,   Ks = diag((g − y0) ./ (ĝ − ŷ0))
//! ```
//!
//! with learned anchors `ŷ0 = W φ(0)` and `ĝ = W φ(1)`. The second-order
//! dynamics `ÿ = ÿ_x − D(ẏ − ẏ_x) − K(y − y_x)` track this reference exactly
//! when no coupling term is present, so `y_x` can be used directly wherever a
//! roll-out would otherwise be needed.

mod basis;
mod canonical;
mod fit;
mod integrate;
mod model;

use thiserror::Error;

pub use basis::GaussianBasis;
pub use canonical::CanonicalSystem;
pub use fit::{fit_weights, FitMethod};
pub use integrate::{Coupling, Integrator, Rollout};
pub use model::{DmpModel, Reference, ReferenceState, Scaling, ScalingPolicy};

use crate::trajectory::TrajectoryError;

/// Default overlap factor `a_h` of neighbouring kernels.
pub const DEFAULT_OVERLAP: f64 = 0.5;
/// Default diagonal stiffness.
pub const DEFAULT_STIFFNESS: f64 = 300.0;
/// Default ridge term for least-squares weight fitting.
pub const DEFAULT_RIDGE: f64 = 1e-8;
/// Default threshold below which a learned start→goal component is degenerate.
pub const DEFAULT_SCALING_EPS: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum DmpError {
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("demonstration is degenerate: all points coincide")]
    DegenerateDemo,
    #[error("demonstration has {got} points, need at least {needed}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("spatial scaling undefined on axis {axis}: |ĝ − ŷ0| = {gap:e}")]
    DegenerateScaling { axis: usize, gap: f64 },
    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },
    #[error("invalid integration settings: {0}")]
    InvalidIntegration(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}
