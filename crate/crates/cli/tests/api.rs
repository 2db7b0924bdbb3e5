use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use vinedmp_augment::Split;
use vinedmp_cli::dataset::Dataset;
use vinedmp_cli::server::{router, AppState};
use vinedmp_sim::{generate_scene, oracle_demo, OracleConfig, SceneConfig};

fn app(dir: &std::path::Path) -> Router {
    router(AppState::new(dir, None).unwrap(), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

async fn new_scene(app: &Router, seed: u64) -> String {
    let (s, v) = call_json(app, "POST", "/api/scenes", Some(json!({ "seed": seed }))).await;
    assert_eq!(s, StatusCode::OK);
    v["scene_id"].as_str().unwrap().to_string()
}

/// An oracle stroke for the scene with this seed, in the served 480×640 image.
fn oracle_points(seed: u64) -> Vec<[f64; 2]> {
    let scene = generate_scene(seed, &SceneConfig::default()).unwrap();
    let demo = oracle_demo(&scene, seed, &OracleConfig::default()).unwrap();
    (0..demo.len()).map(|i| demo.xy(i)).collect()
}

#[tokio::test]
async fn health_and_unknown_routes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, v) = call_json(&app, "GET", "/api/health", None).await;
    assert_eq!((s, v), (StatusCode::OK, json!({ "status": "ok" })));
    assert_eq!(call(&app, "GET", "/api/nope", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/scenes/missing", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/api/jobs/missing", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn scene_record_and_image() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_scene(&app, 3).await;
    let (s, v) = call_json(&app, "GET", &format!("/api/scenes/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["rng_seed"], 3);
    let (s, png) = call(&app, "GET", &format!("/api/scenes/{id}/image"), None).await;
    assert_eq!(s, StatusCode::OK);
    let img = image::load_from_memory(&png).unwrap();
    assert_eq!((img.width(), img.height()), (640, 480));
    // Without a seed the server picks one.
    let (s, _) = call_json(&app, "POST", "/api/scenes", None).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn malformed_demos_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_scene(&app, 4).await;
    let uri = format!("/api/scenes/{id}/demo");
    let one = json!({ "points": [[10.0, 10.0]] });
    assert_eq!(call(&app, "POST", &uri, Some(one)).await.0, StatusCode::BAD_REQUEST);
    let outside = json!({ "points": [[10.0, 10.0], [900.0, 10.0]] });
    assert_eq!(call(&app, "POST", &uri, Some(outside)).await.0, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &uri, Some(json!({ "pts": [] }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let req = Request::builder().method("POST").uri(&uri).body(Body::from("{not json")).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
    let ok = json!({ "points": [[10.0, 10.0], [20.0, 10.0]] });
    assert_eq!(call(&app, "POST", "/api/scenes/nope/demo", Some(ok)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn demo_then_accept_persists_one_sample() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_scene(&app, 6).await;
    let points = oracle_points(6);
    let (s, report) = call_json(&app, "POST", &format!("/api/scenes/{id}/demo"), Some(json!({ "points": points }))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(report["success"], true);
    assert_eq!(report["final_occlusion"], 0.0);
    assert_eq!(Dataset::open(dir.path()).unwrap().manifest.samples.len(), 0);

    let (s, v) = call_json(&app, "POST", &format!("/api/scenes/{id}/accept"), Some(json!({ "points": points }))).await;
    assert_eq!(s, StatusCode::OK);
    let sample = v["sample_id"].as_str().unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    assert_eq!(ds.manifest.samples.len(), 1);
    let e = ds.manifest.get(sample).unwrap();
    assert_eq!(e.split, Split::Train);
    let stored = ds.load_trajectory(e).unwrap();
    assert_eq!(stored.len(), points.len());
    for (i, p) in points.iter().enumerate() {
        let q = stored.xy(i);
        assert!((p[0] - q[0]).abs() <= 0.5 && (p[1] - q[1]).abs() <= 0.5);
    }
    assert_eq!(ds.load_scene(e).unwrap().unwrap().rng_seed, 6);
}

#[tokio::test]
async fn failed_demos_are_not_stored() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_scene(&app, 8).await;
    // A short stroke in the top-left corner touches nothing.
    let miss = json!({ "points": [[5.0, 5.0], [30.0, 5.0]] });
    let (s, report) = call_json(&app, "POST", &format!("/api/scenes/{id}/demo"), Some(miss.clone())).await;
    assert_eq!((s, &report["success"]), (StatusCode::OK, &json!(false)));
    assert_eq!(call(&app, "POST", &format!("/api/scenes/{id}/accept"), Some(miss)).await.0, StatusCode::CONFLICT);
    assert_eq!(Dataset::open(dir.path()).unwrap().manifest.samples.len(), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_accepts_for_distinct_scenes_both_persist() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (a, b) = (new_scene(&app, 10).await, new_scene(&app, 11).await);
    let (pa, pb) = (oracle_points(10), oracle_points(11));
    let ua = format!("/api/scenes/{a}/accept");
    let ub = format!("/api/scenes/{b}/accept");
    let (ra, rb) = tokio::join!(
        call_json(&app, "POST", &ua, Some(json!({ "points": pa }))),
        call_json(&app, "POST", &ub, Some(json!({ "points": pb }))),
    );
    assert_eq!((ra.0, rb.0), (StatusCode::OK, StatusCode::OK));
    assert_ne!(ra.1["sample_id"], rb.1["sample_id"]);
    let ds = Dataset::open(dir.path()).unwrap();
    assert_eq!(ds.manifest.samples.len(), 2);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn training_job_enables_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_scene(&app, 12).await;
    assert_eq!(call(&app, "GET", &format!("/api/predict/{id}"), None).await.0, StatusCode::CONFLICT);

    for (seed, split) in [(12, "train"), (13, "train"), (14, "dev")] {
        let sid = new_scene(&app, seed).await;
        let body = json!({ "points": oracle_points(seed), "split": split });
        assert_eq!(call(&app, "POST", &format!("/api/scenes/{sid}/accept"), Some(body)).await.0, StatusCode::OK);
    }
    let config = json!({
        "config": { "epochs": 400, "batch_size": 2 },
        "model": { "input_size": 16, "channels": [4] }
    });
    let (s, v) = call_json(&app, "POST", "/api/train", Some(config.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let job = v["job_id"].as_str().unwrap().to_string();
    let (s2, _) = call(&app, "POST", "/api/train", Some(config)).await;

    let mut status = Value::Null;
    for _ in 0..600 {
        status = call_json(&app, "GET", &format!("/api/jobs/{job}"), None).await.1;
        if status["state"] == "done" || status["state"] == "failed" {
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    assert_eq!(status["state"], "done", "{status}");
    assert_eq!(s2, StatusCode::CONFLICT);
    assert_eq!(status["dev_loss"].as_array().unwrap().len(), 400);
    assert!(dir.path().join(status["checkpoint"].as_str().unwrap()).is_file());

    let (s, v) = call_json(&app, "GET", &format!("/api/predict/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["points"].as_array().unwrap().len() >= 2);
    assert!(v["yaw"].is_f64());
}

#[tokio::test]
async fn bad_training_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, _) = call(&app, "POST", "/api/train", Some(json!({ "config": { "epochs": 0 } }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}
