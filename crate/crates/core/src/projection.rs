//! Pinhole back-projection of image points onto a known task plane.
//!
//! A pixel is lifted to the unit-depth ray `[(x − cx)/fx, (y − cy)/fy, 1]` in
//! the camera frame, the plane is re-expressed in the camera frame, and the
//! ray is scaled to the depth where it meets the plane. The result is mapped
//! back to the world frame. No lens distortion is modeled.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trajectory::{Frame, Trajectory, TrajectoryError};

/// Minimum `|n·p̄|` and minimum camera-frame depth.
pub const DEFAULT_PROJECTION_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ProjectionError {
    #[error("viewing ray is parallel to the task plane")]
    RayParallelToPlane,
    #[error("point lies behind the camera (depth {depth:e})")]
    PointBehindCamera { depth: f64 },
    #[error("start and goal coincide; direction undefined")]
    DegenerateDirection,
    #[error("point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<ProjectionError>,
    },
    #[error("trajectory must be in image pixels, got {0:?}")]
    WrongFrame(Frame),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

impl ProjectionError {
    /// The underlying error, stripped of any point index.
    pub fn root(&self) -> &ProjectionError {
        match self {
            ProjectionError::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub cx: f64,
    pub cy: f64,
    pub fx: f64,
    pub fy: f64,
}

impl CameraIntrinsics {
    pub fn new(cx: f64, cy: f64, fx: f64, fy: f64) -> Result<Self, ProjectionError> {
        let i = Self { cx, cy, fx, fy };
        i.validate()?;
        Ok(i)
    }

    fn validate(&self) -> Result<(), ProjectionError> {
        let finite = [self.cx, self.cy, self.fx, self.fy].iter().all(|v| v.is_finite());
        if !finite || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(ProjectionError::InvalidRig(format!(
                "focal lengths must be positive and finite: {self:?}"
            )));
        }
        Ok(())
    }
}

/// World-from-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl CameraPose {
    pub fn new(position: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self, ProjectionError> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = rotation.determinant();
        if ortho > 1e-9 || (det - 1.0).abs() > 1e-9 || !position.iter().all(|v| v.is_finite()) {
            return Err(ProjectionError::InvalidRig(format!(
                "rotation must be orthonormal with det 1 (|RᵀR−I|={ortho:e}, det={det})"
            )));
        }
        Ok(Self { position, rotation })
    }

    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskPlane {
    pub normal: Vector3<f64>,
    pub point: Vector3<f64>,
}

impl TaskPlane {
    pub fn new(normal: Vector3<f64>, point: Vector3<f64>) -> Result<Self, ProjectionError> {
        if (normal.norm() - 1.0).abs() > 1e-9 || !point.iter().all(|v| v.is_finite()) {
            return Err(ProjectionError::InvalidRig(format!(
                "plane normal must be unit length, got norm {}",
                normal.norm()
            )));
        }
        Ok(Self { normal, point })
    }

    /// Signed distance of `p` from the plane along the normal.
    pub fn signed_distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(&(p - self.point))
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    p: [f64; 3],
    #[serde(rename = "R")]
    r: [f64; 9],
}

#[derive(Serialize, Deserialize)]
struct PlaneRecord {
    n: [f64; 3],
    p: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct RigRecord {
    intrinsics: CameraIntrinsics,
    pose: PoseRecord,
    plane: PlaneRecord,
}

/// Intrinsics, pose and task plane: everything needed to project a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RigRecord", into = "RigRecord")]
pub struct CameraRig {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
    pub plane: TaskPlane,
}

impl TryFrom<RigRecord> for CameraRig {
    type Error = ProjectionError;

    fn try_from(r: RigRecord) -> Result<Self, Self::Error> {
        r.intrinsics.validate()?;
        Ok(Self {
            intrinsics: r.intrinsics,
            pose: CameraPose::new(Vector3::from(r.pose.p), Matrix3::from_row_slice(&r.pose.r))?,
            plane: TaskPlane::new(Vector3::from(r.plane.n), Vector3::from(r.plane.p))?,
        })
    }
}

impl From<CameraRig> for RigRecord {
    fn from(rig: CameraRig) -> Self {
        let m = rig.pose.rotation;
        let mut r = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[3 * i + j] = m[(i, j)];
            }
        }
        RigRecord {
            intrinsics: rig.intrinsics,
            pose: PoseRecord {
                p: rig.pose.position.into(),
                r,
            },
            plane: PlaneRecord {
                n: rig.plane.normal.into(),
                p: rig.plane.point.into(),
            },
        }
    }
}

impl CameraRig {
    /// Camera looking straight down the world z axis at a plane `z = depth`.
    pub fn fronto_parallel(intrinsics: CameraIntrinsics, depth: f64) -> Self {
        Self {
            intrinsics,
            pose: CameraPose::identity(),
            plane: TaskPlane {
                normal: Vector3::z(),
                point: Vector3::new(0.0, 0.0, depth),
            },
        }
    }

    pub fn from_json(s: &str) -> Result<Self, ProjectionError> {
        serde_json::from_str(s).map_err(|e| ProjectionError::InvalidRig(e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("rig serializes")
    }

    pub fn pixel_to_plane(&self, pixel: [f64; 2]) -> Result<Vector3<f64>, ProjectionError> {
        pixel_to_plane(pixel, &self.intrinsics, &self.pose, &self.plane)
    }

    pub fn plane_to_pixel(&self, p: &Vector3<f64>) -> Result<[f64; 2], ProjectionError> {
        plane_to_pixel(p, &self.intrinsics, &self.pose)
    }

    /// Projects every point of an image-pixel trajectory onto the task plane,
    /// keeping order and timestamps.
    pub fn trajectory_to_plane(&self, traj: &Trajectory) -> Result<Trajectory, ProjectionError> {
        if traj.frame() != Frame::ImagePx {
            return Err(ProjectionError::WrongFrame(traj.frame()));
        }
        let mut points = Vec::with_capacity(traj.len());
        for index in 0..traj.len() {
            let p = self
                .pixel_to_plane(traj.xy(index))
                .map_err(|e| ProjectionError::AtPoint {
                    index,
                    source: Box::new(e),
                })?;
            points.push(vec![p.x, p.y, p.z]);
        }
        let out = Trajectory::new(Frame::TaskPlaneM, points)?;
        Ok(match traj.timestamps() {
            Some(ts) => out.with_timestamps(ts.to_vec())?,
            None => out,
        })
    }
}

/// Intersects the viewing ray through `pixel` with the task plane.
pub fn pixel_to_plane(
    pixel: [f64; 2],
    intr: &CameraIntrinsics,
    pose: &CameraPose,
    plane: &TaskPlane,
) -> Result<Vector3<f64>, ProjectionError> {
    // Unit-depth ray in the camera frame.
    let ray = Vector3::new((pixel[0] - intr.cx) / intr.fx, (pixel[1] - intr.cy) / intr.fy, 1.0);
    let rt = pose.rotation.transpose();
    let normal_cam = rt * plane.normal;
    let point_cam = rt * (plane.point - pose.position);
    let denom = normal_cam.dot(&ray);
    if denom.abs() <= DEFAULT_PROJECTION_EPS {
        return Err(ProjectionError::RayParallelToPlane);
    }
    let depth = normal_cam.dot(&point_cam) / denom;
    if depth <= 0.0 {
        return Err(ProjectionError::PointBehindCamera { depth });
    }
    Ok(pose.rotation * (ray * depth) + pose.position)
}

/// Standard pinhole projection of a world point.
pub fn plane_to_pixel(
    p: &Vector3<f64>,
    intr: &CameraIntrinsics,
    pose: &CameraPose,
) -> Result<[f64; 2], ProjectionError> {
    let pc = pose.rotation.transpose() * (p - pose.position);
    if pc.z <= DEFAULT_PROJECTION_EPS {
        return Err(ProjectionError::PointBehindCamera { depth: pc.z });
    }
    Ok([intr.fx * pc.x / pc.z + intr.cx, intr.fy * pc.y / pc.z + intr.cy])
}

/// Gripper yaw convention: fingers normal to the start→goal direction.
///
/// The yaw is `atan2(dy, dx) + offset`, wrapped to `(−π, π]`. The default
/// offset is `+π/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawConvention {
    pub offset: f64,
}

impl Default for YawConvention {
    fn default() -> Self {
        Self {
            offset: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl YawConvention {
    pub fn yaw(&self, start: [f64; 2], goal: [f64; 2]) -> Result<f64, ProjectionError> {
        let dx = goal[0] - start[0];
        let dy = goal[1] - start[1];
        if dx.hypot(dy) <= 1e-9 {
            return Err(ProjectionError::DegenerateDirection);
        }
        Ok(wrap_angle(dy.atan2(dx) + self.offset))
    }
}

/// Yaw with the default `+π/2` convention.
pub fn gripper_yaw(start: [f64; 2], goal: [f64; 2]) -> Result<f64, ProjectionError> {
    YawConvention::default().yaw(start, goal)
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a - TAU * ((a - PI) / TAU).ceil();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rig() -> CameraRig {
        CameraRig::fronto_parallel(CameraIntrinsics::new(320.0, 240.0, 500.0, 500.0).unwrap(), 0.8)
    }

    #[test]
    fn optical_axis_hits_plane() {
        let p = rig().pixel_to_plane([320.0, 240.0]).unwrap();
        assert!((p - Vector3::new(0.0, 0.0, 0.8)).amax() < 1e-12);
        let p = rig().pixel_to_plane([420.0, 240.0]).unwrap();
        assert!((p - Vector3::new(0.16, 0.0, 0.8)).amax() < 1e-12);
    }

    #[test]
    fn inverse_of_axis_point() {
        let px = rig().plane_to_pixel(&Vector3::new(0.0, 0.0, 0.8)).unwrap();
        assert!((px[0] - 320.0).abs() < 1e-12 && (px[1] - 240.0).abs() < 1e-12);
        assert!(matches!(
            rig().plane_to_pixel(&Vector3::new(0.1, 0.0, 0.0)),
            Err(ProjectionError::PointBehindCamera { .. })
        ));
    }

    #[test]
    fn parallel_and_behind() {
        let mut r = rig();
        r.plane = TaskPlane::new(Vector3::x(), Vector3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(r.pixel_to_plane([320.0, 240.0]), Err(ProjectionError::RayParallelToPlane));
        let mut r = rig();
        r.plane.point = Vector3::new(0.0, 0.0, -0.5);
        assert!(matches!(
            r.pixel_to_plane([320.0, 240.0]),
            Err(ProjectionError::PointBehindCamera { .. })
        ));
    }

    #[test]
    fn two_point_trajectory() {
        let t = Trajectory::from_xy(Frame::ImagePx, &[[320.0, 240.0], [420.0, 240.0]]).unwrap();
        let out = rig().trajectory_to_plane(&t).unwrap();
        assert_eq!(out.frame(), Frame::TaskPlaneM);
        assert!((out.points()[0][2] - 0.8).abs() < 1e-12);
        assert!((out.points()[1][0] - 0.16).abs() < 1e-12);
    }

    #[test]
    fn failing_point_reports_index() {
        let mut r = rig();
        r.plane = TaskPlane::new(Vector3::new(0.0, 1.0, 0.0), Vector3::new(0.0, 0.1, 0.0)).unwrap();
        // Rays with y > cy point towards +y and meet the plane y = 0.1 in front.
        let t = Trajectory::from_xy(Frame::ImagePx, &[[320.0, 300.0], [320.0, 200.0]]).unwrap();
        match r.trajectory_to_plane(&t).unwrap_err() {
            ProjectionError::AtPoint { index, source } => {
                assert_eq!(index, 1);
                assert!(matches!(*source, ProjectionError::PointBehindCamera { .. }));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn yaw_convention() {
        assert!((gripper_yaw([0.0, 0.0], [1.0, 0.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((gripper_yaw([0.0, 0.0], [0.0, 1.0]).unwrap() - PI).abs() < 1e-15);
        assert_eq!(
            gripper_yaw([1.0, 1.0], [1.0, 1.0]),
            Err(ProjectionError::DegenerateDirection)
        );
        let custom = YawConvention { offset: -FRAC_PI_2 };
        assert!((custom.yaw([0.0, 0.0], [1.0, 0.0]).unwrap() + FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI + 0.1) - (-PI + 0.1)).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rig_record_layout() {
        let json = r#"{"intrinsics":{"cx":320,"cy":240,"fx":500,"fy":510},
            "pose":{"p":[0.1,0.2,0.3],"R":[0,-1,0, 1,0,0, 0,0,1]},
            "plane":{"n":[0,0,1],"p":[0,0,1]}}"#;
        let rig = CameraRig::from_json(json).unwrap();
        assert_eq!(rig.pose.rotation[(0, 1)], -1.0);
        assert_eq!(rig.intrinsics.fy, 510.0);
        let back = CameraRig::from_json(&rig.to_json_pretty()).unwrap();
        assert_eq!(back, rig);
        let bad = json.replace("\"R\":[0,-1,0", "\"R\":[0,-2,0");
        assert!(CameraRig::from_json(&bad).is_err());
    }
}
