//! HTTP/JSON front end over `ccb-core`.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `GET /health` | | `{"status":"ok"}` |
//! | `GET /v1/version` | | defaults in effect |
//! | `POST /v1/partition` | [`PartitionRequest`] | [`PartitionResponse`] |
//! | `POST /v1/sweep` | [`SweepRequest`] | [`SweepResponse`] |
//! | `POST /v1/embed` | [`EmbedRequest`] | [`EmbedResponse`] |
//! | `POST /v1/cost` | [`CostRequest`] | [`CostResponse`] |
//! | `POST /v1/segment` | [`SegmentRequest`] | [`SegmentResponse`] |
//! | `POST /v1/eval` | [`EvalRequest`] | [`EvalResponse`] |
//!
//! Failures reply with an [`ErrorBody`]: status 400 for `io`, 422 for
//! `config`, 500 for `solver`.

pub mod ops;

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use ccb_api::*;
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Solves allowed to run at once; later requests wait.
    pub max_concurrent: usize,
    pub body_limit_bytes: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            max_concurrent: std::thread::available_parallelism().map_or(2, |n| n.get()),
            body_limit_bytes: 256 << 20,
        }
    }
}

#[derive(Clone)]
struct AppState {
    permits: Arc<Semaphore>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        let status = match kind {
            ErrorKind::Io => StatusCode::BAD_REQUEST,
            ErrorKind::Config => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::Solver => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            body: ErrorBody {
                kind,
                message: message.into(),
            },
        }
    }
}

impl From<ccb_core::Error> for ApiError {
    fn from(e: ccb_core::Error) -> Self {
        let body = ErrorBody::from(&e);
        ApiError::new(body.kind, body.message)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        // malformed bodies are a client mistake in the request parameters
        let mut e = ApiError::new(ErrorKind::Config, r.body_text());
        e.status = StatusCode::BAD_REQUEST;
        e
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(self.body)).into_response()
    }
}

/// `Json` with rejections rendered as [`ErrorBody`].
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Json<T>(pub T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

async fn run_blocking<Req, Resp>(
    state: &AppState,
    name: &'static str,
    req: Req,
    f: fn(&Req) -> ccb_core::Result<Resp>,
) -> Result<Json<Resp>, ApiError>
where
    Req: Send + 'static,
    Resp: Send + 'static,
{
    let _permit = state
        .permits
        .clone()
        .acquire_owned()
        .await
        .map_err(|_| ApiError::new(ErrorKind::Solver, "server is shutting down"))?;
    let started = std::time::Instant::now();
    let out = tokio::task::spawn_blocking(move || f(&req))
        .await
        .map_err(|e| ApiError::new(ErrorKind::Solver, format!("worker panicked: {e}")))?;
    match &out {
        Ok(_) => tracing::info!(op = name, secs = started.elapsed().as_secs_f64(), "ok"),
        Err(e) => tracing::warn!(op = name, error = %e, "failed"),
    }
    Ok(Json(out?))
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn version() -> Json<VersionResponse> {
    Json(VersionResponse::current())
}

macro_rules! route {
    ($name:ident, $req:ty, $resp:ty, $op:path) => {
        async fn $name(
            State(s): State<AppState>,
            Json(req): Json<$req>,
        ) -> Result<Json<$resp>, ApiError> {
            run_blocking(&s, stringify!($name), req, $op).await
        }
    };
}

route!(
    partition,
    PartitionRequest,
    PartitionResponse,
    ops::partition
);
route!(sweep, SweepRequest, SweepResponse, ops::sweep);
route!(embed, EmbedRequest, EmbedResponse, ops::embed);
route!(cost, CostRequest, CostResponse, ops::cost);
route!(segment, SegmentRequest, SegmentResponse, ops::segment);
route!(eval, EvalRequest, EvalResponse, ops::eval);

pub fn router(config: &ServerConfig) -> Router {
    let state = AppState {
        permits: Arc::new(Semaphore::new(config.max_concurrent.max(1))),
    };
    Router::new()
        .route("/health", get(health))
        .route("/v1/version", get(version))
        .route("/v1/partition", post(partition))
        .route("/v1/sweep", post(sweep))
        .route("/v1/embed", post(embed))
        .route("/v1/cost", post(cost))
        .route("/v1/segment", post(segment))
        .route("/v1/eval", post(eval))
        .layer(DefaultBodyLimit::max(config.body_limit_bytes))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    config: ServerConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(&config))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `127.0.0.1:0` and serves in the background; returns the base URL.
pub async fn spawn_local(config: ServerConfig) -> std::io::Result<String> {
    let listener = TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = serve(listener, config, std::future::pending()).await {
            tracing::error!(error = %e, "in-process server stopped");
        }
    });
    Ok(format!("http://{addr}"))
}
