//! Read-only JSON service over a loaded index.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use cardlake::{Operator, PipelineConfig, SemanticMethod};
use serde::Deserialize;
use serde_json::json;

use crate::api::{self, ApiError, DEFAULT_K};
use crate::index::Index;

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type Shared = State<Arc<Index>>;
type Reply<T> = Result<Json<T>, ApiError>;

fn parse<T: std::str::FromStr>(raw: Option<&str>, default: T, name: &str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    match raw {
        None => Ok(default),
        Some(v) => v.parse().map_err(|e| ApiError::BadRequest(format!("{name}: {e}"))),
    }
}

fn required<'a>(raw: &'a Option<String>, name: &str) -> Result<&'a str, ApiError> {
    raw.as_deref()
        .ok_or_else(|| ApiError::BadRequest(format!("missing query parameter `{name}`")))
}

#[derive(Deserialize)]
struct SearchParams {
    q: Option<String>,
    method: Option<String>,
    k: Option<String>,
}

async fn search(State(index): Shared, Query(p): Query<SearchParams>) -> Reply<cardlake::RetrievalResult> {
    let method = parse(p.method.as_deref(), SemanticMethod::Dense, "method")?;
    let k = parse(p.k.as_deref(), DEFAULT_K, "k")?;
    Ok(Json(api::search(&index, required(&p.q, "q")?, method, k)?))
}

#[derive(Deserialize)]
struct PipelineParams {
    q: Option<String>,
    semantic: Option<String>,
    operator: Option<String>,
    k: Option<String>,
}

async fn pipeline(State(index): Shared, Query(p): Query<PipelineParams>) -> Reply<cardlake::RetrievalResult> {
    let semantic = parse(p.semantic.as_deref(), SemanticMethod::Dense, "semantic")?;
    let operator = parse(p.operator.as_deref(), Operator::Unionable, "operator")?;
    let k = parse(p.k.as_deref(), DEFAULT_K, "k")?;
    let config = PipelineConfig::new(semantic, operator, k);
    Ok(Json(api::pipeline(&index, required(&p.q, "q")?, &config)?))
}

async fn table(State(index): Shared, Path(id): Path<String>) -> Reply<cardlake::lake::EvidenceTable> {
    Ok(Json(api::table(&index, &id)?))
}

async fn card(State(index): Shared, Path(id): Path<String>) -> Reply<api::CardResponse> {
    Ok(Json(api::card(&index, &id)?))
}

#[derive(Deserialize)]
struct IntegrateParams {
    anchor: Option<String>,
    tables: Option<String>,
}

async fn integrate(State(index): Shared, Query(p): Query<IntegrateParams>) -> Reply<api::IntegrateResponse> {
    let tables = api::split_ids(p.tables.as_deref().unwrap_or(""));
    Ok(Json(api::integrate(&index, required(&p.anchor, "anchor")?, &tables)?))
}

#[derive(Deserialize)]
struct ScoreParams {
    q: Option<String>,
    cards: Option<String>,
}

async fn score(State(index): Shared, Query(p): Query<ScoreParams>) -> Reply<api::ScoreResponse> {
    let cards = api::split_ids(p.cards.as_deref().unwrap_or(""));
    Ok(Json(api::score(&index, required(&p.q, "q")?, &cards)?))
}

async fn health(State(index): Shared) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "format": index.manifest.format,
        "cards": index.lake().corpus.len(),
        "tables": index.lake().tables.len(),
    }))
}

/// Card and table ids contain slashes, so the id routes capture the rest of
/// the path.
pub fn router(index: Arc<Index>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/search", get(search))
        .route("/pipeline", get(pipeline))
        .route("/table/{*id}", get(table))
        .route("/card/{*id}", get(card))
        .route("/integrate", get(integrate))
        .route("/nuggets/score", get(score))
        .with_state(index)
}

pub async fn serve(index: Index, addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(index)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
