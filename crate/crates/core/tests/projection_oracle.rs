use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vinedmp_core::projection::{gripper_yaw, wrap_angle};
use vinedmp_core::{CameraIntrinsics, CameraPose, CameraRig, Frame, TaskPlane, Trajectory};

/// World-frame parametric intersection: camera center plus `t` times the
/// rotated pixel ray. Deliberately avoids the camera-frame ordering.
fn oracle(rig: &CameraRig, px: [f64; 2]) -> Option<Vector3<f64>> {
    let i = &rig.intrinsics;
    let dir = rig.pose.rotation * Vector3::new((px[0] - i.cx) / i.fx, (px[1] - i.cy) / i.fy, 1.0);
    let origin = rig.pose.position;
    let t = rig.plane.normal.dot(&(rig.plane.point - origin)) / rig.plane.normal.dot(&dir);
    (t > 0.0).then(|| origin + dir * t)
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let axis = Unit::new_normalize(axis + Vector3::new(0.0, 0.0, 1e-3));
    Rotation3::from_axis_angle(&axis, rng.random_range(-3.0..3.0)).into_inner()
}

/// A rig whose camera looks roughly at a tilted plane in front of it.
fn random_rig(rng: &mut ChaCha8Rng) -> CameraRig {
    let intr = CameraIntrinsics::new(
        rng.random_range(200.0..440.0),
        rng.random_range(150.0..330.0),
        rng.random_range(300.0..900.0),
        rng.random_range(300.0..900.0),
    )
    .unwrap();
    let rotation = random_rotation(rng);
    let position = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let depth = rng.random_range(0.3..3.0);
    let point = position + rotation * Vector3::new(0.0, 0.0, depth);
    // Tilt the plane normal away from the optical axis by at most ~50°.
    let tilt = Rotation3::from_euler_angles(rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9), 0.0);
    let normal = rotation * (tilt * Vector3::new(0.0, 0.0, -1.0));
    CameraRig {
        intrinsics: intr,
        pose: CameraPose::new(position, rotation).unwrap(),
        plane: TaskPlane::new(normal.normalize(), point).unwrap(),
    }
}

#[test]
fn random_rigs_match_parametric_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 1000 {
        let rig = random_rig(&mut rng);
        let px = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
        let Some(expected) = oracle(&rig, px) else { continue };
        let got = rig.pixel_to_plane(px).unwrap();
        assert!((got - expected).norm() < 1e-9, "{got} vs {expected}");
        // On the plane.
        assert!(rig.plane.signed_distance(&got).abs() < 1e-9);
        // Round trip back to the pixel.
        let back = rig.plane_to_pixel(&got).unwrap();
        assert!((back[0] - px[0]).abs() < 1e-6 && (back[1] - px[1]).abs() < 1e-6);
        checked += 1;
    }
}

#[test]
fn plane_point_choice_is_irrelevant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let rig = random_rig(&mut rng);
        let px = [rng.random_range(100.0..540.0), rng.random_range(100.0..380.0)];
        let Ok(a) = rig.pixel_to_plane(px) else { continue };
        // Slide the anchor point within the plane.
        let helper = if rig.plane.normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = rig.plane.normal.cross(&helper).normalize();
        let v = rig.plane.normal.cross(&u);
        let mut moved = rig;
        moved.plane.point += u * rng.random_range(-2.0..2.0) + v * rng.random_range(-2.0..2.0);
        let b = moved.pixel_to_plane(px).unwrap();
        assert!((a - b).norm() < 1e-9);
    }
}

#[test]
fn round_trip_on_plane_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut done = 0;
    while done < 100 {
        let rig = random_rig(&mut rng);
        let px = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
        let Ok(p) = rig.pixel_to_plane(px) else { continue };
        let back = rig.pixel_to_plane(rig.plane_to_pixel(&p).unwrap()).unwrap();
        assert!((back - p).norm() < 1e-6);
        done += 1;
    }
}

#[test]
fn fronto_parallel_scaling_law() {
    let f = 520.0;
    let depth = 0.75;
    let rig = CameraRig::fronto_parallel(CameraIntrinsics::new(311.0, 247.0, f, f).unwrap(), depth);
    let pts: Vec<[f64; 2]> = (0..30).map(|i| [100.0 + 13.7 * i as f64, 400.0 - 9.1 * (i as f64).powf(1.3)]).collect();
    let traj = Trajectory::from_xy(Frame::ImagePx, &pts).unwrap();
    let plane = rig.trajectory_to_plane(&traj).unwrap();
    for i in 1..pts.len() {
        let dpx = ((pts[i][0] - pts[i - 1][0]).powi(2) + (pts[i][1] - pts[i - 1][1]).powi(2)).sqrt();
        let a = &plane.points()[i];
        let b = &plane.points()[i - 1];
        let dm = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        assert!((dm - dpx * depth / f).abs() < 1e-9);
    }
}

#[test]
fn timestamps_survive_projection() {
    let rig = CameraRig::fronto_parallel(CameraIntrinsics::new(320.0, 240.0, 500.0, 500.0).unwrap(), 1.0);
    let traj = Trajectory::from_xy(Frame::ImagePx, &[[0.0, 0.0], [10.0, 10.0], [20.0, 5.0]])
        .unwrap()
        .with_timestamps(vec![0.0, 0.1, 0.3])
        .unwrap();
    let out = rig.trajectory_to_plane(&traj).unwrap();
    assert_eq!(out.timestamps(), Some(&[0.0, 0.1, 0.3][..]));
}

#[test]
fn drawn_demo_matches_golden() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
    let demo = Trajectory::from_json(&std::fs::read_to_string(format!("{dir}/drawn_demo.json")).unwrap()).unwrap();
    let rig = CameraRig::from_json(&std::fs::read_to_string(format!("{dir}/rig_tilted.json")).unwrap()).unwrap();
    let golden = Trajectory::from_json(&std::fs::read_to_string(format!("{dir}/golden_projection.json")).unwrap()).unwrap();
    let out = rig.trajectory_to_plane(&demo).unwrap();
    assert_eq!(out.len(), golden.len());
    for (a, b) in out.points().iter().zip(golden.points()) {
        for d in 0..3 {
            assert!((a[d] - b[d]).abs() < 1e-9, "{a:?} vs {b:?}");
        }
    }
}

proptest! {
    #[test]
    fn swapping_endpoints_turns_yaw_by_pi(
        x0 in -500.0..500.0f64, y0 in -500.0..500.0f64,
        x1 in -500.0..500.0f64, y1 in -500.0..500.0f64,
    ) {
        prop_assume!((x1 - x0).hypot(y1 - y0) > 1e-3);
        let a = gripper_yaw([x0, y0], [x1, y1]).unwrap();
        let b = gripper_yaw([x1, y1], [x0, y0]).unwrap();
        prop_assert!(a > -std::f64::consts::PI && a <= std::f64::consts::PI);
        prop_assert!(wrap_angle(a - b - std::f64::consts::PI).abs() < 1e-9);
    }
}
