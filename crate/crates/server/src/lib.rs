//! Read-only HTTP/JSON API over a finished artifact directory.
//!
//! Routes:
//!
//! * `GET /search?q=<text>&n=<int>`
//! * `GET /domains?sort=k|size&limit=<int>`
//! * `GET /domains/{code}`
//! * `GET /domains/{code}/patents?kind=top|random&seed=<int>`
//! * `GET /healthz`
//! * `/ui/` static files, when a UI directory is configured
//!
//! Errors are JSON bodies `{"schema_version", "error": {"code", "message"}}`
//! with status 400 for malformed parameters and 404 for unknown domains.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Serialize;
use techrates::search::engine::QueryError;
use techrates::search::{SearchEngine, SCHEMA_VERSION};
use tower_http::services::ServeDir;

type Params = Query<HashMap<String, String>>;

#[derive(Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorResponse {
    schema_version: u32,
    error: ErrorBody,
}

pub struct ApiError(QueryError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            QueryError::UnknownDomain(_) => StatusCode::NOT_FOUND,
            QueryError::EmptyQuery | QueryError::BadParameter { .. } => StatusCode::BAD_REQUEST,
        };
        let body = ErrorResponse {
            schema_version: SCHEMA_VERSION,
            error: ErrorBody {
                code: self.0.code(),
                message: self.0.to_string(),
            },
        };
        (status, Json(body)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        ApiError(e)
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn number<T: std::str::FromStr>(params: &HashMap<String, String>, name: &str) -> Result<Option<T>, QueryError> {
    params
        .get(name)
        .map(|v| v.parse().map_err(|_| QueryError::bad(name, format!("expected a non-negative integer, got {v:?}"))))
        .transpose()
}

async fn search(State(engine): State<Arc<SearchEngine>>, Query(params): Params) -> ApiResult<impl Serialize> {
    let q = params.get("q").ok_or_else(|| QueryError::bad("q", "missing"))?;
    Ok(Json(engine.search(q, number(&params, "n")?)?))
}

async fn domains(State(engine): State<Arc<SearchEngine>>, Query(params): Params) -> ApiResult<impl Serialize> {
    Ok(Json(engine.domains(params.get("sort").map(String::as_str), number(&params, "limit")?)?))
}

async fn domain(State(engine): State<Arc<SearchEngine>>, UrlPath(code): UrlPath<String>) -> ApiResult<impl Serialize> {
    Ok(Json(engine.domain(&code)?))
}

async fn patents(
    State(engine): State<Arc<SearchEngine>>,
    UrlPath(code): UrlPath<String>,
    Query(params): Params,
) -> ApiResult<impl Serialize> {
    let kind = params.get("kind").map(String::as_str);
    Ok(Json(engine.patents(&code, kind, number(&params, "seed")?)?))
}

async fn healthz(State(engine): State<Arc<SearchEngine>>) -> impl IntoResponse {
    Json(engine.health())
}

async fn not_found() -> Response {
    let body = ErrorResponse {
        schema_version: SCHEMA_VERSION,
        error: ErrorBody {
            code: "not_found",
            message: "no such route".into(),
        },
    };
    (StatusCode::NOT_FOUND, Json(body)).into_response()
}

pub fn router(engine: Arc<SearchEngine>, ui_dir: Option<&Path>) -> Router {
    let mut app = Router::new()
        .route("/search", get(search))
        .route("/domains", get(domains))
        .route("/domains/{code}", get(domain))
        .route("/domains/{code}/patents", get(patents))
        .route("/healthz", get(healthz))
        .fallback(not_found)
        .with_state(engine);
    if let Some(dir) = ui_dir {
        app = app.nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true));
    }
    app
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub artifacts: PathBuf,
    pub bind: SocketAddr,
    pub seed: u64,
    pub ui_dir: Option<PathBuf>,
}

/// Loads the artifacts and serves until the process is interrupted.
pub async fn serve(options: ServeOptions) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let engine = SearchEngine::load(&options.artifacts, options.seed)?;
    log::info!(
        "serving {} domains from {} on http://{}",
        engine.domain_count(),
        options.artifacts.display(),
        options.bind
    );
    let app = router(Arc::new(engine), options.ui_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(options.bind).await?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
