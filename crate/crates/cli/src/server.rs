use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use vinedmp_augment::Split;
use vinedmp_core::{Frame, Trajectory};
use vinedmp_learner::{predict_trajectory, ModelConfig, PredictOptions, TrainConfig, VisionDmpModel};
use vinedmp_sim::{execute, generate_scene, render, ExecuteConfig, Scene};

use crate::commands::train_dataset;
use crate::dataset::{to_image, to_scene, Dataset};

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        Self(StatusCode::BAD_REQUEST, msg.into())
    }

    fn not_found(msg: impl Into<String>) -> Self {
        Self(StatusCode::NOT_FOUND, msg.into())
    }

    fn conflict(msg: impl Into<String>) -> Self {
        Self(StatusCode::CONFLICT, msg.into())
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub job_id: String,
    pub state: JobState,
    pub epoch: usize,
    pub epochs: usize,
    pub train_loss: Vec<f64>,
    pub dev_loss: Vec<f64>,
    pub test_loss: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct AppState {
    data: PathBuf,
    /// Serializes every dataset mutation.
    dataset: Mutex<Dataset>,
    scenes: RwLock<HashMap<String, Scene>>,
    model: RwLock<Option<Arc<VisionDmpModel>>>,
    jobs: Mutex<HashMap<String, JobStatus>>,
    next_job: AtomicU64,
}

impl AppState {
    pub fn new(data: &Path, model: Option<VisionDmpModel>) -> anyhow::Result<Arc<Self>> {
        let dataset = Dataset::open_or_create(data)?;
        Ok(Arc::new(Self {
            data: data.to_path_buf(),
            dataset: Mutex::new(dataset),
            scenes: RwLock::new(HashMap::new()),
            model: RwLock::new(model.map(Arc::new)),
            jobs: Mutex::new(HashMap::new()),
            next_job: AtomicU64::new(1),
        }))
    }

    fn image_size(&self) -> (u32, u32) {
        self.dataset.lock().unwrap().manifest.image_size()
    }

    fn scene(&self, id: &str) -> ApiResult<Scene> {
        self.scenes
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown scene {id}")))
    }
}

/// The API routes, plus static files from `assets` when given.
pub fn router(state: Arc<AppState>, assets: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/scenes", post(create_scene))
        .route("/api/scenes/{id}", get(get_scene))
        .route("/api/scenes/{id}/image", get(scene_image))
        .route("/api/scenes/{id}/demo", post(run_demo))
        .route("/api/scenes/{id}/accept", post(accept_demo))
        .route("/api/predict/{id}", get(predict))
        .route("/api/train", post(start_training))
        .route("/api/jobs/{id}", get(job_status))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneRequest {
    seed: Option<u64>,
}

async fn create_scene(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: SceneRequest = parse_body(&body)?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let cfg = st.dataset.lock().unwrap().manifest.provenance.scene_config.clone();
    let st2 = st.clone();
    blocking(move || {
        let scene = generate_scene(seed, &cfg).map_err(ApiError::internal)?;
        let id = format!("scene-{seed}");
        st2.scenes.write().unwrap().insert(id.clone(), scene);
        Ok(Json(json!({ "scene_id": id, "seed": seed })))
    })
    .await
}

async fn get_scene(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let scene = st.scene(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], scene.to_json_pretty()).into_response())
}

async fn scene_image(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let scene = st.scene(&id)?;
    let size = st.image_size();
    let png = blocking(move || {
        let img = render(&scene.at_rest(), size);
        let mut buf = std::io::Cursor::new(Vec::new());
        img.write_to(&mut buf, image::ImageFormat::Png).map_err(ApiError::internal)?;
        Ok(buf.into_inner())
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemoRequest {
    points: Vec<[f64; 2]>,
    #[serde(default)]
    split: Option<Split>,
}

/// Execution outcome with the gripper path in image pixels.
#[derive(Debug, Serialize)]
struct DemoResponse {
    success: bool,
    final_occlusion: f64,
    leaf_angles: Vec<Vec<f64>>,
    gripper_path: Trajectory,
}

fn run_stroke(scene: &Scene, points: &[[f64; 2]], size: (u32, u32)) -> ApiResult<(Trajectory, DemoResponse)> {
    let traj = Trajectory::from_xy(Frame::ImagePx, points).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let sim = to_scene(scene, &traj, size).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut s = scene.clone();
    let report = execute(&mut s, &sim, &ExecuteConfig::default()).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let gripper_path = to_image(scene, &report.gripper_path, size).map_err(ApiError::internal)?;
    Ok((
        traj,
        DemoResponse {
            success: report.success,
            final_occlusion: report.final_occlusion,
            leaf_angles: report.leaf_angles,
            gripper_path,
        },
    ))
}

async fn run_demo(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<DemoResponse>> {
    let scene = st.scene(&id)?;
    let req: DemoRequest = parse_body(&body)?;
    let size = st.image_size();
    blocking(move || Ok(Json(run_stroke(&scene, &req.points, size)?.1))).await
}

async fn accept_demo(
    State(st): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> ApiResult<Json<serde_json::Value>> {
    let scene = st.scene(&id)?;
    let req: DemoRequest = parse_body(&body)?;
    let st2 = st.clone();
    blocking(move || {
        let mut ds = st2.dataset.lock().unwrap();
        let size = ds.manifest.image_size();
        let (traj, outcome) = run_stroke(&scene, &req.points, size)?;
        if !outcome.success {
            return Err(ApiError::conflict("demonstration does not unveil the stem; not stored"));
        }
        let mut n = ds.manifest.samples.len();
        let sample_id = loop {
            let candidate = format!("demo{n:05}");
            if ds.manifest.get(&candidate).is_none() {
                break candidate;
            }
            n += 1;
        };
        let image = render(&scene.at_rest(), size);
        let split = req.split.unwrap_or(Split::Train);
        let added = ds
            .add(&sample_id, split, &image, &traj, Some(&scene.at_rest()), None)
            .and_then(|_| ds.save_manifest());
        if let Err(e) = added {
            ds.manifest.samples.retain(|e| e.id != sample_id);
            return Err(ApiError::internal(e));
        }
        Ok(Json(json!({ "sample_id": sample_id })))
    })
    .await
}

async fn predict(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let model = st
        .model
        .read()
        .unwrap()
        .clone()
        .ok_or_else(|| ApiError::conflict("no trained model loaded"))?;
    let scene = st.scene(&id)?;
    let size = st.image_size();
    blocking(move || {
        let img = render(&scene.at_rest(), size);
        let p = predict_trajectory(&model, &img, None, &PredictOptions::default()).map_err(ApiError::internal)?;
        let points: Vec<[f64; 2]> = (0..p.pixels.len()).map(|i| p.pixels.xy(i)).collect();
        Ok(Json(json!({ "points": points, "yaw": p.yaw })))
    })
    .await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRequest {
    #[serde(default)]
    config: TrainConfig,
    #[serde(default)]
    model: ModelConfig,
}

async fn start_training(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<serde_json::Value>> {
    let req: TrainRequest = parse_body(&body)?;
    req.config.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    req.model.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    let job_id = {
        let mut jobs = st.jobs.lock().unwrap();
        if jobs.values().any(|j| matches!(j.state, JobState::Pending | JobState::Running)) {
            return Err(ApiError::conflict("a training job is already running"));
        }
        let job_id = format!("job-{}", st.next_job.fetch_add(1, Ordering::Relaxed));
        jobs.insert(
            job_id.clone(),
            JobStatus {
                job_id: job_id.clone(),
                state: JobState::Pending,
                epoch: 0,
                epochs: req.config.epochs,
                train_loss: Vec::new(),
                dev_loss: Vec::new(),
                test_loss: Vec::new(),
                best_epoch: None,
                checkpoint: None,
                error: None,
            },
        );
        job_id
    };
    let st2 = st.clone();
    let id = job_id.clone();
    std::thread::spawn(move || run_job(&st2, &id, &req.config, &req.model));
    Ok(Json(json!({ "job_id": job_id })))
}

fn run_job(st: &AppState, id: &str, config: &TrainConfig, model: &ModelConfig) {
    let update = |f: &mut dyn FnMut(&mut JobStatus)| {
        if let Some(j) = st.jobs.lock().unwrap().get_mut(id) {
            f(j);
        }
    };
    update(&mut |j| j.state = JobState::Running);
    let models = st.data.join("models");
    let out = models.join(format!("{id}.ckpt"));
    let result = std::fs::create_dir_all(&models)
        .map_err(anyhow::Error::from)
        .and_then(|_| {
            train_dataset(&st.data, &out, model, config, |s| {
                update(&mut |j| {
                    j.epoch = s.epoch + 1;
                    j.train_loss.push(s.train_loss);
                    j.dev_loss.push(s.dev_loss);
                    j.test_loss.extend(s.test_loss);
                })
            })
        });
    match result {
        Ok(outcome) => {
            *st.model.write().unwrap() = Some(Arc::new(outcome.model));
            update(&mut |j| {
                j.state = JobState::Done;
                j.best_epoch = Some(outcome.report.best_epoch);
                j.checkpoint = Some(format!("models/{id}.ckpt"));
            });
        }
        Err(e) => update(&mut |j| {
            j.state = JobState::Failed;
            j.error = Some(format!("{e:#}"));
        }),
    }
}

async fn job_status(State(st): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<JobStatus>> {
    st.jobs
        .lock()
        .unwrap()
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("unknown job {id}")))
}

/// Binds `port` on all interfaces and serves until interrupted.
pub async fn serve(port: u16, state: Arc<AppState>, assets: Option<PathBuf>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
        .await
        .map_err(|e| crate::UserError(format!("cannot bind port {port}: {e}")))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, assets.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
