use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vinedmp_core::dmp::fit_weights;
use vinedmp_core::{
    CanonicalSystem, DmpModel, FitMethod, Frame, GaussianBasis, Integrator, ScalingPolicy, Trajectory,
};

fn random_model(rng: &mut ChaCha8Rng) -> DmpModel {
    let k = rng.random_range(2..25);
    let basis = GaussianBasis::new(k, rng.random_range(0.2..3.0)).unwrap();
    loop {
        let w = DMatrix::from_fn(2, k, |_, _| rng.random_range(-300.0..300.0));
        let m = DmpModel::new(w, basis.clone()).unwrap();
        let gap = m.learned_goal() - m.learned_start();
        if gap.iter().all(|g| g.abs() > 1.0) {
            let y0 = DVector::from_fn(2, |_, _| rng.random_range(-500.0..500.0));
            let g = DVector::from_fn(2, |_, _| rng.random_range(-500.0..500.0));
            return m.with_start_goal(y0, g).unwrap();
        }
    }
}

fn rmse(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .sum();
    (s / a.len() as f64).sqrt()
}

fn reconstruct(w: &DMatrix<f64>, basis: &GaussianBasis, phases: &[f64]) -> Vec<Vec<f64>> {
    phases
        .iter()
        .map(|&x| (w * DVector::from_vec(basis.eval(x))).as_slice().to_vec())
        .collect()
}

fn sine_sweep(n: usize) -> Trajectory {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let u = i as f64 / (n - 1) as f64;
            [100.0 + 300.0 * u, 200.0 + 80.0 * (2.5 * std::f64::consts::PI * u).sin()]
        })
        .collect();
    Trajectory::from_xy(Frame::ImagePx, &pts).unwrap()
}

#[test]
fn basis_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let b = GaussianBasis::new(rng.random_range(2..40), rng.random_range(0.1..4.0)).unwrap();
        let x = rng.random_range(-0.5..1.5);
        let phi = b.eval(x);
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (_, d, _) = b.eval_with_derivatives(x);
        assert!(d.iter().sum::<f64>().abs() < 1e-10 * (1.0 + d.iter().map(|v| v.abs()).sum::<f64>()));
    }
}

#[test]
fn interior_components_are_open_unit_interval() {
    let b = GaussianBasis::new(10, 2.0).unwrap();
    for i in 0..=100 {
        for p in b.eval(i as f64 / 100.0) {
            assert!(p > 0.0 && p < 1.0);
        }
    }
}

#[test]
fn basis_derivatives_match_finite_differences() {
    let step = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let b = GaussianBasis::new(rng.random_range(2..15), rng.random_range(0.5..3.0)).unwrap();
        let x = rng.random_range(0.0..1.0);
        let (_, d, dd) = b.eval_with_derivatives(x);
        let (plus, minus) = (b.eval(x + step), b.eval(x - step));
        let (_, dp, _) = b.eval_with_derivatives(x + step);
        let (_, dm, _) = b.eval_with_derivatives(x - step);
        let scale = d.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let scale2 = dd.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for k in 0..b.num_kernels() {
            let fd = (plus[k] - minus[k]) / (2.0 * step);
            assert!((fd - d[k]).abs() <= 1e-4 * scale.max(1e-8), "k={k}: {fd} vs {}", d[k]);
            let fd2 = (dp[k] - dm[k]) / (2.0 * step);
            assert!((fd2 - dd[k]).abs() <= 1e-4 * scale2.max(1e-8));
        }
    }
}

#[test]
fn endpoint_exactness_for_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let m = random_model(&mut rng);
        let tol = 1e-9 * (1.0 + m.goal().norm());
        let a = m.reference_state(0.0, 0.25).unwrap().position;
        let b = m.reference_state(1.0, 0.25).unwrap().position;
        assert!((a - m.start()).norm() <= tol);
        assert!((b - m.goal()).norm() <= tol);
    }
}

#[test]
fn precomputed_and_on_the_fly_references_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let m = random_model(&mut rng);
        let r = m.reference(ScalingPolicy::Strict).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let direct = m.reference_state(x, 0.5).unwrap();
            let cached = r.state(x, 0.5);
            let scale = 1.0 + direct.position.norm();
            assert!((direct.position - cached.position).norm() <= 1e-9 * scale);
            // Pointwise definition y_x = Ks (Wφ(x) − ŷ0) + y0.
            let ks = m.scaling_matrix().unwrap();
            let by_def = &ks * (m.shape_at(x) - m.learned_start()) + m.start();
            assert!((by_def - r.position(x)).norm() <= 1e-9 * scale);
        }
    }
}

#[test]
fn doubling_displacement_doubles_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let m = random_model(&mut rng);
        let ks = m.scaling_matrix().unwrap();
        let y0 = m.start().clone();
        let g2 = &y0 + (m.goal() - &y0) * 2.0;
        let ks2 = m.clone().with_start_goal(y0, g2).unwrap().scaling_matrix().unwrap();
        assert!((ks2 - &ks * 2.0).amax() <= 1e-12 * (1.0 + ks.amax()));
    }
}

#[test]
fn reference_velocity_matches_finite_differences() {
    let step = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let m = random_model(&mut rng);
        let x = rng.random_range(0.01..0.99);
        let s = m.reference_state(x, 1.0).unwrap();
        let p = m.reference_state(x + step, 1.0).unwrap();
        let q = m.reference_state(x - step, 1.0).unwrap();
        let fd_v = (&p.position - &q.position) / (2.0 * step);
        let fd_a = (&p.velocity - &q.velocity) / (2.0 * step);
        assert!((&fd_v - &s.velocity).norm() <= 1e-4 * s.velocity.norm().max(1e-6));
        assert!((&fd_a - &s.acceleration).norm() <= 1e-4 * s.acceleration.norm().max(1e-6));
    }
}

fn demo_model() -> DmpModel {
    let basis = GaussianBasis::new(10, 0.5).unwrap();
    let traj = sine_sweep(200);
    let w = fit_weights(&traj, &basis, FitMethod::LeastSquares { ridge: 1e-8 }).unwrap();
    let m = DmpModel::new(w, basis).unwrap();
    let y0 = m.learned_start() + DVector::from_vec(vec![20.0, -15.0]);
    let g = m.learned_goal() + DVector::from_vec(vec![-30.0, 40.0]);
    m.with_start_goal(y0, g).unwrap()
}

#[test]
fn zero_coupling_rollout_tracks_reference() {
    let m = demo_model();
    let cs = CanonicalSystem::new(4.0).unwrap();
    let out = Integrator::with_dt(1e-3).run(&m, &cs, None).unwrap();
    let r = m.reference(ScalingPolicy::Strict).unwrap();
    let diag = out.trajectory.bounding_box_diagonal();
    let mut worst: f64 = 0.0;
    for (p, t) in out.trajectory.points().iter().zip(out.trajectory.timestamps().unwrap()) {
        let y = r.position(cs.phase_at(*t));
        worst = worst.max(((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)).sqrt());
    }
    assert!(worst < 1e-6 * diag, "{worst} vs diag {diag}");
    assert_eq!(out.trajectory.len(), 4001);
}

#[test]
fn goal_is_held_after_duration() {
    let m = demo_model();
    let cs = CanonicalSystem::new(4.0).unwrap();
    let integ = Integrator {
        horizon: Some(8.0),
        ..Integrator::with_dt(1e-3)
    };
    let out = integ.run(&m, &cs, None).unwrap();
    let last = out.trajectory.last();
    let err = ((last[0] - m.goal()[0]).powi(2) + (last[1] - m.goal()[1]).powi(2)).sqrt();
    assert!(err < 1e-6 * out.trajectory.bounding_box_diagonal());
}

#[test]
fn impulsive_coupling_decays_after_removal() {
    let m = demo_model();
    let cs = CanonicalSystem::new(4.0).unwrap();
    let push = |t: f64, _: &DVector<f64>, _: &DVector<f64>| {
        if t < 0.5 {
            DVector::from_vec(vec![4000.0, -2500.0])
        } else {
            DVector::zeros(2)
        }
    };
    let out = Integrator::with_dt(1e-3).run(&m, &cs, Some(&push)).unwrap();
    let r = m.reference(ScalingPolicy::Strict).unwrap();
    let ts = out.trajectory.timestamps().unwrap();
    let errors: Vec<f64> = out
        .trajectory
        .points()
        .iter()
        .zip(ts)
        .map(|(p, t)| {
            let y = r.position(cs.phase_at(*t));
            ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)).sqrt()
        })
        .collect();
    assert!(errors[500] > 1.0, "coupling should have displaced the state");
    // Critically damped error e(t) ∝ (1 + ωt)e^{−ωt} once the velocity error
    // has turned around; sample every 10 steps from the first error peak on,
    // until the error reaches the integrator's own tolerance.
    let floor = 1e-6 * out.trajectory.bounding_box_diagonal();
    let peak = (500..errors.len()).max_by(|&a, &b| errors[a].total_cmp(&errors[b])).unwrap();
    let samples: Vec<f64> = errors[peak..].iter().step_by(10).copied().collect();
    for w in samples.windows(2).filter(|w| w[0] > floor) {
        assert!(w[1] <= w[0], "{} > {}", w[1], w[0]);
    }
    assert!(*errors.last().unwrap() < floor);
}

#[test]
fn sine_sweep_fit_quality() {
    let traj = sine_sweep(200);
    let basis = GaussianBasis::new(30, 0.5).unwrap();
    let phases = traj.phases().unwrap();
    let diag = traj.bounding_box_diagonal();
    let ls = fit_weights(&traj, &basis, FitMethod::LeastSquares { ridge: 1e-8 }).unwrap();
    let rec_ls = reconstruct(&ls, &basis, &phases);
    let e = rmse(&rec_ls, traj.points());
    assert!(e < 0.01 * diag, "LS rmse {e} vs diag {diag}");

    let lwr = fit_weights(&traj, &basis, FitMethod::LocallyWeighted).unwrap();
    let rec_lwr = reconstruct(&lwr, &basis, &phases);
    assert!(rmse(&rec_ls, &rec_lwr) < 0.05 * diag);
}

#[test]
fn refitting_generated_trajectory_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let basis = GaussianBasis::new(10, 0.5).unwrap();
        let w = DMatrix::from_fn(2, 10, |_, _| rng.random_range(0.0..640.0));
        let m = DmpModel::new(w, basis.clone()).unwrap();
        let n = 120;
        let phases: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let pts = reconstruct(m.weights(), &basis, &phases);
        let traj = Trajectory::new(Frame::ImagePx, pts)
            .unwrap()
            .with_timestamps(phases.iter().map(|x| 4.0 * x).collect())
            .unwrap();
        let fitted = fit_weights(&traj, &basis, FitMethod::LeastSquares { ridge: 0.0 }).unwrap();
        let e = rmse(&reconstruct(&fitted, &basis, &phases), traj.points());
        assert!(e < 1e-8 * traj.bounding_box_diagonal(), "{e}");
    }
}

proptest! {
    #[test]
    fn normalization_holds_everywhere(k in 2usize..60, overlap in 0.05f64..5.0, x in -3.0f64..4.0) {
        let b = GaussianBasis::new(k, overlap).unwrap();
        prop_assert!((b.eval(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
