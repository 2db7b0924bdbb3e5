//! Planar dynamic movement primitives and image-to-plane geometry.
//!
//! The crate has three parts:
//!
//! - [`trajectory`]: ordered point sequences tagged with their coordinate frame,
//!   plus arc-length utilities and the JSON interchange record.
//! - [`dmp`]: the normalized Gaussian basis, weight fitting, spatial scaling,
//!   the analytic reference trajectory and an RK4 roll-out of the second-order
//!   dynamics.
//! - [`projection`]: pinhole back-projection of image points onto a known task
//!   plane and the inverse projection, plus the gripper yaw convention.

pub mod dmp;
pub mod projection;
pub mod trajectory;

pub use dmp::{
    CanonicalSystem, Coupling, DmpError, DmpModel, FitMethod, GaussianBasis, Integrator,
    Reference, ReferenceState, Rollout, Scaling, ScalingPolicy,
};
pub use projection::{
    gripper_yaw, CameraIntrinsics, CameraPose, CameraRig, ProjectionError, TaskPlane, YawConvention,
};
pub use trajectory::{Frame, Trajectory, TrajectoryError};
