use serde::{Deserialize, Serialize};
use vinedmp_core::{Frame, Trajectory};

use crate::geometry::{norm, sub, unit, Vec2};
use crate::scene::{occlusion_fraction, Leaf, Scene};
use crate::SimError;

const SCAN_STEP: f64 = 0.02;
const ANGLE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecuteConfig {
    /// Gripper disc radius in canonical pixels.
    pub gripper_radius: f64,
    /// Largest final occlusion that still counts as unveiled.
    pub occlusion_threshold: f64,
}

impl Default for ExecuteConfig {
    fn default() -> Self {
        Self {
            gripper_radius: 12.0,
            occlusion_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub success: bool,
    pub final_occlusion: f64,
    /// `leaf_angles[leaf][point]`: each leaf's angle after the gripper
    /// reaches each trajectory point.
    pub leaf_angles: Vec<Vec<f64>>,
    pub gripper_path: Trajectory,
}

/// Drives the gripper disc along `traj` and reports the final occlusion.
///
/// Leaves start at rest. Between consecutive points the disc moves in
/// sub-steps of at most a quarter radius. At every sub-step each touched leaf
/// takes the smallest deflection from rest that clears the disc without
/// passing through it: a deflected leaf stays on its side, pushed further or
/// relaxing toward rest until it rests against the disc. A leaf that cannot
/// clear stops at its angle limit. Once the disc leaves its path the leaf
/// snaps back to rest. `scene` is left in the final state with the gripper
/// held at the last point.
pub fn execute(scene: &mut Scene, traj: &Trajectory, config: &ExecuteConfig) -> Result<ExecutionReport, SimError> {
    if traj.frame() != Frame::ImagePx {
        return Err(SimError::WrongFrame);
    }
    if !(config.gripper_radius > 0.0) {
        return Err(SimError::InvalidConfig("gripper_radius must be positive".into()));
    }
    for (index, p) in traj.points().iter().enumerate() {
        if !scene.in_bounds([p[0], p[1]]) {
            return Err(SimError::OutOfBounds {
                index,
                x: p[0],
                y: p[1],
                width: scene.width,
                height: scene.height,
            });
        }
    }
    scene.reset_leaves();
    let r = config.gripper_radius;
    let max_step = (r / 4.0).max(1.0);
    let mut angles: Vec<Vec<f64>> = vec![Vec::with_capacity(traj.len()); scene.leaves.len()];
    let mut prev: Option<Vec2> = None;
    for i in 0..traj.len() {
        let q = traj.xy(i);
        let q = [q[0], q[1]];
        let substeps = match prev {
            Some(p) => (norm(sub(q, p)) / max_step).ceil().max(1.0) as usize,
            None => 1,
        };
        for k in 1..=substeps {
            let at = match prev {
                Some(p) => {
                    let t = k as f64 / substeps as f64;
                    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
                }
                None => q,
            };
            for leaf in &mut scene.leaves {
                leaf.current_angle = resolve_contact(leaf, at, r);
            }
        }
        for (leaf, series) in scene.leaves.iter().zip(angles.iter_mut()) {
            series.push(leaf.current_angle);
        }
        prev = Some(q);
    }
    let final_occlusion = occlusion_fraction(scene);
    Ok(ExecutionReport {
        success: final_occlusion <= config.occlusion_threshold,
        final_occlusion,
        leaf_angles: angles,
        gripper_path: traj.clone(),
    })
}

/// New angle of `leaf` with the gripper disc at `q`.
///
/// A deflected leaf is pushed further if the disc overlaps it, and otherwise
/// swings back toward rest until it meets the disc or reaches rest. A leaf at
/// rest that the disc overlaps moves to the nearer clear angle on either side.
pub(crate) fn resolve_contact(leaf: &Leaf, q: Vec2, radius: f64) -> f64 {
    let rest = leaf.rest_angle;
    if norm(sub(q, leaf.hinge)) > leaf.length + radius {
        return rest;
    }
    let deflection = leaf.current_angle - rest;
    if deflection != 0.0 {
        let side = deflection.signum();
        let from = deflection.abs();
        if leaf.ellipse_at(leaf.current_angle).overlaps_disc(q, radius) {
            return clear_on_side(leaf, q, radius, side, from).unwrap_or_else(|| limit(leaf, side));
        }
        return spring_back(leaf, q, radius, side, from);
    }
    if !leaf.ellipse_at(rest).overlaps_disc(q, radius) {
        return rest;
    }
    let up = clear_on_side(leaf, q, radius, 1.0, 0.0);
    let down = clear_on_side(leaf, q, radius, -1.0, 0.0);
    match (up, down) {
        (Some(a), Some(b)) => {
            if (a - rest).abs() <= (b - rest).abs() {
                a
            } else {
                b
            }
        }
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => {
            // Nothing clears: fold away from the gripper as far as allowed.
            let u = unit(rest);
            let d = sub(q, leaf.hinge);
            let cross = u[0] * d[1] - u[1] * d[0];
            limit(leaf, if cross > 0.0 { -1.0 } else { 1.0 })
        }
    }
}

fn limit(leaf: &Leaf, side: f64) -> f64 {
    if side > 0.0 {
        leaf.angle_limits.1
    } else {
        leaf.angle_limits.0
    }
}

/// Smallest deflection beyond `from` on `side` (±1) that clears the disc.
fn clear_on_side(leaf: &Leaf, q: Vec2, radius: f64, side: f64, from: f64) -> Option<f64> {
    let rest = leaf.rest_angle;
    let span = (limit(leaf, side) - rest).abs();
    let blocked = |delta: f64| leaf.ellipse_at(rest + side * delta).overlaps_disc(q, radius);
    let mut lo = from;
    let mut hi = None;
    let mut delta = from + SCAN_STEP;
    loop {
        let d = delta.min(span);
        if !blocked(d) {
            hi = Some(d);
            break;
        }
        lo = d;
        if d >= span {
            break;
        }
        delta += SCAN_STEP;
    }
    let mut hi = hi?;
    while hi - lo > ANGLE_TOL {
        let mid = 0.5 * (lo + hi);
        if blocked(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(rest + side * hi)
}

/// Relaxes a clear leaf from deflection `from` toward rest, stopping just
/// before it would touch the disc.
fn spring_back(leaf: &Leaf, q: Vec2, radius: f64, side: f64, from: f64) -> f64 {
    let rest = leaf.rest_angle;
    let blocked = |delta: f64| leaf.ellipse_at(rest + side * delta).overlaps_disc(q, radius);
    let mut clear = from;
    loop {
        let d = (clear - SCAN_STEP).max(0.0);
        if blocked(d) {
            let mut lo = d;
            while clear - lo > ANGLE_TOL {
                let mid = 0.5 * (lo + clear);
                if blocked(mid) {
                    lo = mid;
                } else {
                    clear = mid;
                }
            }
            return rest + side * clear;
        }
        if d == 0.0 {
            return rest;
        }
        clear = d;
    }
}
