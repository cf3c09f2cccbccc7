//! HTTP API: one search job at a time, results served from the last saved file.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use zoorank_core::pipeline::resolve_data_path;
use zoorank_core::{
    rank_runs, run_pipeline, DataFormat, HyperparameterConfig, Metric, ProgressEvent, ResultsFile, RunRecord,
    RunStatus, Scope, SearchRequest, Strategy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentRun {
    pub run_index: usize,
    pub config: HyperparameterConfig,
    pub epochs_finished: usize,
    pub last_loss: Option<f64>,
}

/// Progress snapshot of a submitted search. `runs_completed` never decreases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchJob {
    pub job_id: String,
    pub state: JobState,
    pub strategy: Strategy,
    pub budget: usize,
    pub runs_completed: usize,
    pub current_run: Option<CurrentRun>,
    pub best_accuracy: Option<f64>,
    pub results_path: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBody {
    pub dataset_path: String,
    pub format: DataFormat,
    pub budget: usize,
    pub strategy: Strategy,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub test_fraction: Option<f64>,
    #[serde(default)]
    pub subset: Option<usize>,
    #[serde(default)]
    pub per_class: Option<usize>,
    #[serde(default)]
    pub label_column: Option<String>,
}

fn default_seed() -> u64 {
    SearchRequest::DEFAULT_SEED
}

#[derive(Default)]
struct ServiceState {
    jobs: BTreeMap<String, SearchJob>,
    active: Option<String>,
    results: Option<Arc<ResultsFile>>,
    submitted: usize,
}

struct Shared {
    results_dir: PathBuf,
    state: Mutex<ServiceState>,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(results_dir: PathBuf, initial: Option<ResultsFile>) -> Self {
        let state = ServiceState { results: initial.map(Arc::new), ..ServiceState::default() };
        AppState { shared: Arc::new(Shared { results_dir, state: Mutex::new(state) }) }
    }

    fn lock(&self) -> MutexGuard<'_, ServiceState> {
        // A panicking worker must not take the API down with it.
        self.shared.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn update(&self, job_id: &str, f: impl FnOnce(&mut SearchJob)) {
        if let Some(job) = self.lock().jobs.get_mut(job_id) {
            f(job);
        }
    }
}

pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl ToString) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, message: message.to_string() }
    }

    fn not_found(message: impl ToString) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, message: message.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/search", post(submit_search))
        .route("/api/jobs/{job_id}", get(get_job))
        .route("/api/results", get(get_results))
        .route("/api/runs/{run_id}", get(get_run))
        .route("/api/ranking", get(get_ranking))
        .route("/api/recommendation", get(get_recommendation))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn submit_search(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let body: SearchBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))?;
    if body.budget == 0 {
        return Err(ApiError::bad_request("budget must be at least 1"));
    }
    let mut request =
        SearchRequest::new(resolve_data_path(Path::new(&body.dataset_path)), body.format, body.budget, body.strategy);
    request.seed = body.seed;
    if let Some(f) = body.test_fraction {
        if !(f > 0.0 && f < 1.0) {
            return Err(ApiError::bad_request(format!("test_fraction {f} must lie strictly between 0 and 1")));
        }
        request.test_fraction = f;
    }
    if body.subset.is_some() && body.per_class.is_some() {
        return Err(ApiError::bad_request("subset and per_class are mutually exclusive"));
    }
    request.subset = body.subset;
    request.per_class = body.per_class;
    if let Some(c) = body.label_column {
        request.label_column = c;
    }
    if !request.data.is_file() {
        return Err(ApiError::bad_request(format!("dataset {} not found", request.data.display())));
    }

    let job_id = {
        let mut s = state.lock();
        if let Some(active) = &s.active {
            let message = format!("job {active} is still running");
            return Ok((StatusCode::CONFLICT, Json(json!({ "error": message, "job_id": active }))));
        }
        s.submitted += 1;
        let job_id = format!("job-{:04}", s.submitted);
        s.jobs.insert(
            job_id.clone(),
            SearchJob {
                job_id: job_id.clone(),
                state: JobState::Pending,
                strategy: request.strategy,
                budget: request.budget,
                runs_completed: 0,
                current_run: None,
                best_accuracy: None,
                results_path: None,
                error: None,
            },
        );
        s.active = Some(job_id.clone());
        job_id
    };
    let worker_state = state.clone();
    let worker_id = job_id.clone();
    tokio::task::spawn_blocking(move || run_job(worker_state, worker_id, request));
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": job_id }))))
}

fn run_job(state: AppState, job_id: String, request: SearchRequest) {
    tracing::info!(%job_id, "search started");
    state.update(&job_id, |j| j.state = JobState::Running);
    let mut sink = |event: ProgressEvent| match event {
        ProgressEvent::RunStarted { run_index, config, .. } => state.update(&job_id, |j| {
            j.current_run = Some(CurrentRun { run_index, config, epochs_finished: 0, last_loss: None });
        }),
        ProgressEvent::EpochFinished { epoch, loss, .. } => state.update(&job_id, |j| {
            if let Some(run) = &mut j.current_run {
                run.epochs_finished = epoch + 1;
                run.last_loss = Some(loss);
            }
        }),
        ProgressEvent::RunFinished { status, accuracy, .. } => state.update(&job_id, |j| {
            j.runs_completed += 1;
            j.current_run = None;
            if status == RunStatus::Completed {
                j.best_accuracy = Some(j.best_accuracy.map_or(accuracy, |b| b.max(accuracy)));
            }
        }),
    };
    let outcome = run_pipeline::<f32>(&request, &mut sink).map_err(|e| e.to_string()).and_then(|results| {
        let path = state.shared.results_dir.join(format!("{job_id}.json"));
        results.save(&path).map_err(|e| e.to_string())?;
        // Serve exactly what is on disk.
        let stored = ResultsFile::load(&path).map_err(|e| e.to_string())?;
        Ok((path, stored))
    });
    let mut s = state.lock();
    let job = s.jobs.get_mut(&job_id).expect("job registered before its worker starts");
    match outcome {
        Ok((path, stored)) => {
            job.state = JobState::Completed;
            job.current_run = None;
            job.results_path = Some(path.display().to_string());
            s.results = Some(Arc::new(stored));
            tracing::info!(%job_id, "search completed");
        }
        Err(message) => {
            tracing::warn!(%job_id, %message, "search failed");
            job.state = JobState::Failed;
            job.current_run = None;
            job.error = Some(message);
        }
    }
    s.active = None;
}

async fn get_job(State(state): State<AppState>, UrlPath(job_id): UrlPath<String>) -> ApiResult<Json<SearchJob>> {
    let job = state.lock().jobs.get(&job_id).cloned();
    job.map(Json).ok_or_else(|| ApiError::not_found(format!("unknown job {job_id}")))
}

fn current_results(state: &AppState) -> ApiResult<Arc<ResultsFile>> {
    state.lock().results.clone().ok_or_else(|| ApiError::not_found("no completed search yet"))
}

async fn get_results(State(state): State<AppState>) -> ApiResult<Json<ResultsFile>> {
    Ok(Json(current_results(&state)?.as_ref().clone()))
}

async fn get_run(State(state): State<AppState>, UrlPath(run_id): UrlPath<String>) -> ApiResult<Response> {
    let results = current_results(&state)?;
    let run = results.run(&run_id).ok_or_else(|| ApiError::not_found(format!("unknown run {run_id}")))?;
    Ok(Json(run).into_response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub rank: usize,
    pub run_id: String,
    pub value: f64,
    pub status: RunStatus,
    pub parameter_count: u64,
    pub config: HyperparameterConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResponse {
    pub metric: Metric,
    /// `None` for the overall ranking.
    pub class: Option<usize>,
    pub ranking: Vec<RankingEntry>,
}

async fn get_ranking(
    State(state): State<AppState>,
    query: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult<Json<RankingResponse>> {
    let Query(params) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    if let Some(key) = params.keys().find(|k| !matches!(k.as_str(), "metric" | "class")) {
        return Err(ApiError::bad_request(format!("unknown query parameter {key:?}")));
    }
    let metric = match params.get("metric") {
        Some(m) => m.parse::<Metric>().map_err(ApiError::bad_request)?,
        None => Metric::Accuracy,
    };
    let class = match params.get("class") {
        Some(c) => Some(c.parse::<usize>().map_err(|_| ApiError::bad_request(format!("class {c:?} is not an index")))?),
        None => None,
    };
    let results = current_results(&state)?;
    if let Some(k) = class {
        if k >= results.dataset.num_classes {
            return Err(ApiError::bad_request(format!(
                "class {k} out of range, the dataset has {} classes",
                results.dataset.num_classes
            )));
        }
    }
    let ranked =
        rank_runs(&results.runs, metric, class.map_or(Scope::Overall, Scope::Class)).map_err(ApiError::bad_request)?;
    let ranking = ranked
        .iter()
        .enumerate()
        .map(|(i, r)| RankingEntry {
            rank: i + 1,
            run_id: r.run.run_id.clone(),
            value: r.value,
            status: r.run.status,
            parameter_count: r.run.parameter_count,
            config: r.run.config.clone(),
        })
        .collect();
    Ok(Json(RankingResponse { metric, class, ranking }))
}

/// The stored recommendation block plus the full record of the best run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResponse {
    pub ranked: Vec<String>,
    pub best: String,
    pub best_run: RunRecord,
}

async fn get_recommendation(State(state): State<AppState>) -> ApiResult<Json<RecommendationResponse>> {
    let results = current_results(&state)?;
    let best = results.best().ok_or_else(|| ApiError::not_found("results hold no runs"))?;
    Ok(Json(RecommendationResponse {
        ranked: results.recommendation.ranked.clone(),
        best: results.recommendation.best.clone(),
        best_run: best.clone(),
    }))
}
