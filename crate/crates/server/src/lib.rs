//! HTTP API over the decision engine and simulator. Decision endpoints
//! are pure; simulations run as background jobs polled by id.

pub mod jobs;

use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use skbd_core::report::{oc_csv, to_json_value};
use skbd_core::scenarios::{fixed_scenarios, insertion_scenarios};
use skbd_core::service::{self, SimulationRequest};
use skbd_core::Error;
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use jobs::{JobStatus, JobStore};

#[derive(Debug, Clone)]
pub struct Settings {
    /// Worker threads per simulation; `None` uses every core.
    pub threads: Option<usize>,
    /// Simulations allowed to run at once.
    pub concurrent_jobs: usize,
    pub job_ttl: Duration,
    /// Allowed browser origin; any origin when `None`.
    pub cors_origin: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            threads: None,
            concurrent_jobs: 1,
            job_ttl: Duration::from_secs(3600),
            cors_origin: None,
        }
    }
}

#[derive(Clone)]
struct AppState {
    jobs: JobStore,
    slots: Arc<Semaphore>,
    threads: Option<usize>,
}

/// A JSON error body with an HTTP status.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": message }),
        }
    }

    fn not_found(id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            body: json!({ "error": format!("no simulation job {id}") }),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NoDataAtCurrent(_)
            | Error::EmptyObservedSet
            | Error::DuplicateDose(_)
            | Error::ScenarioMismatch(_)
            | Error::UndefinedMtd
            | Error::RejectionBudgetExhausted(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        let mut body = json!({ "error": e.to_string() });
        if let Error::InvalidParameter { field, .. } = &e {
            body["field"] = json!(field);
        }
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(self.body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn parse<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    serde_json::from_str(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

/// JSON with every float at ten significant digits.
fn rounded<T: Serialize>(status: StatusCode, value: &T) -> ApiResult {
    Ok((status, axum::Json(to_json_value(value)?)).into_response())
}

async fn health() -> ApiResult {
    rounded(
        StatusCode::OK,
        &json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }),
    )
}

async fn decision(body: String) -> ApiResult {
    let req: service::DecisionRequest = parse(&body)?;
    rounded(StatusCode::OK, &service::decision(&req)?)
}

async fn table(body: String) -> ApiResult {
    let req: service::TableRequest = parse(&body)?;
    rounded(StatusCode::OK, &service::table(&req)?)
}

async fn insertion_check(body: String) -> ApiResult {
    let req: service::InsertionCheckRequest = parse(&body)?;
    rounded(StatusCode::OK, &service::insertion_check(&req)?)
}

async fn scenarios_fixed() -> ApiResult {
    rounded(StatusCode::OK, &fixed_scenarios())
}

async fn scenarios_insertion() -> ApiResult {
    rounded(StatusCode::OK, &insertion_scenarios())
}

async fn submit(State(state): State<AppState>, body: String) -> ApiResult {
    let req: SimulationRequest = parse(&body)?;
    // Reject bad requests up front rather than as failed jobs.
    req.config.validate()?;
    let scenarios = req.scenarios.resolve()?;
    service::check_scenarios(&req.config, &scenarios)?;
    if req.replicates == 0 {
        return Err(Error::InvalidParameter {
            field: "replicates".into(),
            message: "must be at least 1".into(),
        }
        .into());
    }
    let (id, progress) = state.jobs.create();
    progress.set_total(scenarios.len() * req.config.designs.len() * req.replicates);
    let job_id = id.clone();
    tokio::spawn(async move {
        let Ok(_permit) = state.slots.clone().acquire_owned().await else {
            return;
        };
        state.jobs.start(&job_id);
        let threads = state.threads;
        let p = progress.clone();
        let outcome = tokio::task::spawn_blocking(move || {
            let cb = |done: usize, _total: usize| p.advance(done);
            service::simulate(
                &req.config,
                &scenarios,
                req.replicates,
                req.seed,
                threads,
                Some(&cb),
            )
            .map_err(|e| e.to_string())
        })
        .await
        .unwrap_or_else(|e| Err(format!("simulation aborted: {e}")));
        if let Err(e) = &outcome {
            log::warn!("simulation {job_id} failed: {e}");
        }
        state.jobs.finish(&job_id, outcome);
    });
    rounded(
        StatusCode::ACCEPTED,
        &json!({ "id": id, "status": JobStatus::Queued }),
    )
}

#[derive(Deserialize)]
struct PollQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn poll(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<PollQuery>,
) -> ApiResult {
    let view = state
        .jobs
        .view(&id)
        .ok_or_else(|| ApiError::not_found(&id))?;
    match q.format.as_deref() {
        None | Some("json") => rounded(StatusCode::OK, &view),
        Some("csv") => {
            let rows = view.result.ok_or_else(|| ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": "simulation has no result yet", "status": view.status }),
            })?;
            let csv = oc_csv(&rows, &[])?;
            Ok((
                [(
                    header::CONTENT_TYPE,
                    HeaderValue::from_static("text/csv; charset=utf-8"),
                )],
                csv,
            )
                .into_response())
        }
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other}"))),
    }
}

pub fn router(settings: &Settings) -> Router {
    let state = AppState {
        jobs: JobStore::new(settings.job_ttl),
        slots: Arc::new(Semaphore::new(settings.concurrent_jobs.max(1))),
        threads: settings.threads,
    };
    let origin = match settings.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(o)) => AllowOrigin::exact(o),
        _ => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods(Any)
        .allow_headers(Any);
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/decision", post(decision))
        .route("/v1/table", post(table))
        .route("/v1/insertion/check", post(insertion_check))
        .route("/v1/scenarios/fixed", get(scenarios_fixed))
        .route("/v1/scenarios/insertion", get(scenarios_insertion))
        .route("/v1/simulations", post(submit))
        .route("/v1/simulations/{id}", get(poll))
        .layer(cors)
        .with_state(state)
}
