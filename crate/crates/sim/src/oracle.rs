use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vinedmp_core::{Frame, Trajectory};

use crate::execute::{execute, ExecuteConfig};
use crate::geometry::{norm, sub, unit, Vec2};
use crate::scene::{Leaf, Scene};
use crate::SimError;

/// Points in every scripted demonstration.
pub const ORACLE_POINTS: usize = 50;

const CLEAR_SCAN_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub execute: ExecuteConfig,
    /// Jittered candidates tried before giving up.
    pub attempts: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            execute: ExecuteConfig::default(),
            attempts: 20,
        }
    }
}

/// Scripted unveiling stroke for `scene`.
///
/// The stroke starts beside the leaf that hides the most stem, on the side
/// opposite to the cheaper swing direction, and follows a quadratic Bézier
/// around the hinge to a hold point where the pushed leaf sits clear of the
/// stem. Each jittered candidate is executed on a copy of the scene and the
/// first successful one is returned.
pub fn oracle_demo(scene: &Scene, seed: u64, config: &OracleConfig) -> Result<Trajectory, SimError> {
    let rest = scene.at_rest();
    let (principal, occ) = rest
        .leaves
        .iter()
        .map(|l| (l, rest.leaf_occlusion(l, l.rest_angle)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(SimError::NoOccludingLeaf)?;
    if occ <= 0.0 {
        return Err(SimError::NoOccludingLeaf);
    }
    let r = config.execute.gripper_radius;
    let sides: Vec<(f64, f64)> = [1.0, -1.0]
        .into_iter()
        .filter_map(|s| clearing_deflection(&rest, principal, s).map(|d| (s, d)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..config.attempts {
        // Prefer the cheaper side; fall back to the other one sometimes.
        let pick = if sides.len() == 2 && rng.random_bool(0.25) {
            1
        } else {
            0
        };
        let mut ordered = sides.clone();
        ordered.sort_by(|a, b| a.1.total_cmp(&b.1));
        let Some(&(side, needed)) = ordered.get(pick).or(ordered.first()) else {
            break;
        };
        let span = (if side > 0.0 {
            principal.angle_limits.1
        } else {
            principal.angle_limits.0
        } - principal.rest_angle)
            .abs();
        let target = (needed + rng.random_range(0.25..=0.35)).min(span - 0.05);
        if target <= needed {
            continue;
        }
        let rho = principal.length * rng.random_range(0.55..=0.75);
        let gap = rng.random_range(10.0..=16.0);
        let stroke = candidate(principal, side, target, rho, gap, r);
        if !stroke.iter().all(|p| rest.in_bounds(*p)) {
            continue;
        }
        let traj = Trajectory::from_xy(Frame::ImagePx, &stroke).expect("finite stroke");
        let mut trial = rest.clone();
        if execute(&mut trial, &traj, &config.execute)?.success {
            return Ok(traj);
        }
    }
    Err(SimError::OracleFailed(config.attempts))
}

/// Smallest deflection on `side` at which `leaf` no longer covers the stem.
fn clearing_deflection(scene: &Scene, leaf: &Leaf, side: f64) -> Option<f64> {
    let span = (if side > 0.0 { leaf.angle_limits.1 } else { leaf.angle_limits.0 } - leaf.rest_angle).abs();
    let mut delta = CLEAR_SCAN_STEP;
    while delta <= span {
        if scene.leaf_occlusion(leaf, leaf.rest_angle + side * delta) == 0.0 {
            return Some(delta);
        }
        delta += CLEAR_SCAN_STEP;
    }
    None
}

fn candidate(leaf: &Leaf, side: f64, target: f64, rho: f64, gap: f64, r: f64) -> Vec<[f64; 2]> {
    let h = leaf.hinge;
    let normal = |a: f64| unit(a + std::f64::consts::FRAC_PI_2);
    let offset = |a: f64, lateral: f64| -> Vec2 {
        let u = unit(a);
        let n = normal(a);
        [h[0] + rho * u[0] - side * lateral * n[0], h[1] + rho * u[1] - side * lateral * n[1]]
    };
    let hw = leaf.half_width_at(rho);
    let start = offset(leaf.rest_angle, hw + r + gap);
    let end = offset(leaf.rest_angle + side * target, hw + r - 1.0);

    // Control point on the bisector so the curve bows around the hinge.
    let (rs, re) = (norm(sub(start, h)), norm(sub(end, h)));
    let (fs, fe) = ((start[1] - h[1]).atan2(start[0] - h[0]), (end[1] - h[1]).atan2(end[0] - h[0]));
    let mut sweep = fe - fs;
    if sweep > std::f64::consts::PI {
        sweep -= std::f64::consts::TAU;
    } else if sweep < -std::f64::consts::PI {
        sweep += std::f64::consts::TAU;
    }
    let mid = fs + 0.5 * sweep;
    let reach = 0.5 * (rs + re) / (0.5 * sweep).cos().max(0.2);
    let ctrl = [h[0] + reach * mid.cos(), h[1] + reach * mid.sin()];

    (0..ORACLE_POINTS)
        .map(|i| {
            let t = i as f64 / (ORACLE_POINTS - 1) as f64;
            let a = (1.0 - t) * (1.0 - t);
            let b = 2.0 * t * (1.0 - t);
            let c = t * t;
            [
                a * start[0] + b * ctrl[0] + c * end[0],
                a * start[1] + b * ctrl[1] + c * end[1],
            ]
        })
        .collect()
}
