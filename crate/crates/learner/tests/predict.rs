use std::path::PathBuf;

use image::RgbImage;
use nalgebra::DVector;
use vinedmp_core::{CameraIntrinsics, CameraRig, Trajectory};
use vinedmp_learner::{
    load_checkpoint, pixel_weights, predict_trajectory, save_checkpoint, ModelConfig, PredictOptions, VisionDmpModel,
};
use vinedmp_sim::{generate_scene, render, SceneConfig};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn model() -> VisionDmpModel {
    let config = ModelConfig {
        input_size: 32,
        channels: vec![4, 8],
        ..ModelConfig::default()
    };
    let mut m = VisionDmpModel::new(config, 21).unwrap();
    // Center the output so predictions land inside the image.
    m.param_mut("head.bias").unwrap().fill(0.5);
    m
}

fn image() -> RgbImage {
    render(&generate_scene(5, &SceneConfig::default()).unwrap(), (120, 160))
}

fn rig() -> CameraRig {
    CameraRig::fronto_parallel(CameraIntrinsics::new(80.0, 60.0, 150.0, 150.0).unwrap(), 0.8)
}

#[test]
fn fronto_parallel_plane_path_is_a_scaled_pixel_path() {
    let p = predict_trajectory(&model(), &image(), Some(&rig()), &PredictOptions::default()).unwrap();
    let plane = p.plane.unwrap();
    assert_eq!(plane.len(), p.pixels.len());
    assert_eq!(plane.timestamps(), p.pixels.timestamps());
    let s = 0.8 / 150.0;
    for (q, px) in plane.points().iter().zip(p.pixels.points()) {
        assert!((q[0] - (px[0] - 80.0) * s).abs() < 1e-12);
        assert!((q[1] - (px[1] - 60.0) * s).abs() < 1e-12);
        assert!((q[2] - 0.8).abs() < 1e-12);
    }
}

#[test]
fn integration_matches_the_closed_form_path() {
    let (m, img) = (model(), image());
    let opts = PredictOptions::default();
    let p = predict_trajectory(&m, &img, None, &opts).unwrap();
    let w = pixel_weights(&m, &img).unwrap();
    let ts = p.pixels.timestamps().unwrap();
    assert!((ts.last().unwrap() - opts.duration).abs() < 1e-9);
    let tol = 1e-6 * p.pixels.bounding_box_diagonal();
    for (t, q) in ts.iter().zip(p.pixels.points()) {
        let y = &w * DVector::from_vec(m.basis().eval(t / opts.duration));
        assert!((y[0] - q[0]).abs() < tol && (y[1] - q[1]).abs() < tol, "t = {t}");
    }
    let (start, goal) = (p.pixels.first(), p.pixels.last());
    let expected = (goal[1] - start[1]).atan2(goal[0] - start[0]) + std::f64::consts::FRAC_PI_2;
    let diff = (p.yaw - expected).rem_euclid(std::f64::consts::TAU);
    assert!(diff.min(std::f64::consts::TAU - diff) < 1e-6);
}

#[test]
fn checkpoint_round_trip_predicts_identically() {
    let m = model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&m, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.config(), m.config());
    let opts = PredictOptions::default();
    let a = predict_trajectory(&m, &image(), None, &opts).unwrap();
    let b = predict_trajectory(&back, &image(), None, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn matches_the_golden_prediction() {
    let dir = fixtures();
    let m = load_checkpoint(&dir.join("golden_model.ckpt")).unwrap();
    let img = image::open(dir.join("golden_scene.png")).unwrap().to_rgb8();
    let rig = CameraRig::from_json(&std::fs::read_to_string(dir.join("golden_rig.json")).unwrap()).unwrap();
    let golden = Trajectory::from_json(&std::fs::read_to_string(dir.join("golden_plane.json")).unwrap()).unwrap();
    let p = predict_trajectory(&m, &img, Some(&rig), &PredictOptions::default()).unwrap();
    let plane = p.plane.unwrap();
    assert_eq!(plane.len(), golden.len());
    for (a, b) in plane.points().iter().zip(golden.points()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-6, "{a:?} vs {b:?}");
        }
    }
}

/// Rewrites the golden files. Run with `--ignored` only when the prediction
/// pipeline changes on purpose.
#[test]
#[ignore]
fn regenerate_golden() {
    let dir = fixtures();
    std::fs::create_dir_all(&dir).unwrap();
    let m = model();
    let img = image();
    let rig = rig();
    save_checkpoint(&m, &dir.join("golden_model.ckpt")).unwrap();
    img.save(dir.join("golden_scene.png")).unwrap();
    std::fs::write(dir.join("golden_rig.json"), rig.to_json_pretty()).unwrap();
    let p = predict_trajectory(&m, &img, Some(&rig), &PredictOptions::default()).unwrap();
    std::fs::write(dir.join("golden_plane.json"), p.plane.unwrap().to_json_pretty()).unwrap();
}
