//! JSON HTTP API over a [`Service`].

use std::collections::BTreeMap;
use std::future::Future;
use std::path::{Component, Path as FsPath};
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    list_proteome_results, CurationRequest, Direction, OrderBy, PipelineResult, RequestMode, RequestStatus,
    ResultQuery, Service, ServiceError,
};
use crate::structmodel::StructureSource;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "NOT_FOUND",
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let (status, code) = match &e {
            ServiceError::InvalidAccession(_) => (StatusCode::BAD_REQUEST, "INVALID_ACCESSION"),
            ServiceError::InvalidSubclass(_) => (StatusCode::BAD_REQUEST, "INVALID_SUBCLASS"),
            ServiceError::MissingEmail => (StatusCode::BAD_REQUEST, "MISSING_EMAIL"),
            ServiceError::EmptySelection => (StatusCode::BAD_REQUEST, "EMPTY_SELECTION"),
            ServiceError::ModeMismatch(..) => (StatusCode::BAD_REQUEST, "MODE_MISMATCH"),
            ServiceError::UnknownToken(_) => (StatusCode::NOT_FOUND, "UNKNOWN_REQUEST"),
            ServiceError::UnknownRun(_) => (StatusCode::NOT_FOUND, "UNKNOWN_RUN"),
            ServiceError::RunIncomplete(_) => (StatusCode::SERVICE_UNAVAILABLE, "RUN_INCOMPLETE"),
            ServiceError::EmptyRun => (StatusCode::SERVICE_UNAVAILABLE, "EMPTY_RUN"),
            ServiceError::ShuttingDown => (StatusCode::SERVICE_UNAVAILABLE, "SHUTTING_DOWN"),
            ServiceError::Client(_) | ServiceError::Detector(_) | ServiceError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL")
            }
        };
        ApiError {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
pub struct SubmitBody {
    pub accession: String,
    pub email: String,
    #[serde(default)]
    pub mode: Option<RequestMode>,
    #[serde(default)]
    pub subclasses: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
pub struct ProteomeBody {
    pub proteome_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RequestView {
    pub request: CurationRequest,
    pub region_count: Option<usize>,
    pub result: Option<PipelineResult>,
}

async fn submit(State(svc): State<Arc<Service>>, body: Option<Json<SubmitBody>>) -> ApiResult<Response> {
    let Json(body) = body.ok_or_else(|| ApiError::bad_request("BAD_BODY", "expected a JSON body"))?;
    let id = svc.submit_request(
        &body.accession,
        &body.email,
        body.mode.unwrap_or(RequestMode::Basic),
        body.subclasses.as_deref().unwrap_or(&[]),
    )?;
    Ok((StatusCode::CREATED, Json(json!({"id": id}))).into_response())
}

async fn get_request(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<RequestView>> {
    let (request, result) = svc.get_request(&id)?;
    Ok(Json(RequestView {
        request,
        region_count: result.as_ref().map(|r| r.bundle.region_count()),
        result,
    }))
}

fn safe_relative(path: &str) -> bool {
    let p = FsPath::new(path);
    !path.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
}

fn content_type(path: &str) -> &'static str {
    match path.rsplit('.').next() {
        Some("json") => "application/json",
        Some("pdb" | "txt" | "tsv" | "fasta") => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

async fn get_output(State(svc): State<Arc<Service>>, Path((id, path)): Path<(String, String)>) -> ApiResult<Response> {
    let (request, _) = svc.get_request(&id)?;
    if request.status != RequestStatus::Done {
        return Err(ApiError::not_found(format!("request {id} has no outputs yet")));
    }
    if !safe_relative(&path) {
        return Err(ApiError::bad_request(
            "BAD_PATH",
            format!("invalid output path '{path}'"),
        ));
    }
    let file = svc.artifact_dir(&id).join(&path);
    let bytes = tokio::fs::read(&file)
        .await
        .map_err(|_| ApiError::not_found(format!("no output '{path}'")))?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

async fn submit_proteome(State(svc): State<Arc<Service>>, body: Option<Json<ProteomeBody>>) -> ApiResult<Response> {
    let Json(body) = body.ok_or_else(|| ApiError::bad_request("BAD_BODY", "expected a JSON body"))?;
    let run_id = svc.submit_proteome(&body.proteome_id)?;
    Ok((StatusCode::CREATED, Json(json!({"run_id": run_id}))).into_response())
}

async fn get_run(State(svc): State<Arc<Service>>, Path(run_id): Path<String>) -> ApiResult<Response> {
    let run = svc.get_run(&run_id)?;
    Ok(Json(run).into_response())
}

fn parse_query(raw: &BTreeMap<String, String>) -> ApiResult<ResultQuery> {
    let mut q = ResultQuery::default();
    for (key, value) in raw {
        let v = value.trim();
        if v.is_empty() {
            continue;
        }
        let bad = || ApiError::bad_request("BAD_QUERY", format!("invalid value '{v}' for '{key}'"));
        match key.as_str() {
            "db" => {
                q.db = Some(match v.to_ascii_uppercase().as_str() {
                    "PDB" => StructureSource::Pdb,
                    "ALPHAFOLD" | "AF" => StructureSource::Alphafold,
                    _ => return Err(bad()),
                })
            }
            "has_trr" => q.has_trr = Some(v.parse().map_err(|_| bad())?),
            "component" => q.component = Some(v.to_string()),
            "order_by" => {
                q.order_by = Some(match v {
                    "exec_seconds" => OrderBy::ExecSeconds,
                    "component" => OrderBy::Component,
                    "db" => OrderBy::Db,
                    _ => return Err(bad()),
                })
            }
            "dir" => {
                q.dir = match v.to_ascii_lowercase().as_str() {
                    "asc" => Direction::Asc,
                    "desc" => Direction::Desc,
                    _ => return Err(bad()),
                }
            }
            _ => return Err(ApiError::bad_request("BAD_QUERY", format!("unknown parameter '{key}'"))),
        }
    }
    Ok(q)
}

async fn results(
    State(svc): State<Arc<Service>>,
    Path(run_id): Path<String>,
    Query(raw): Query<BTreeMap<String, String>>,
) -> ApiResult<Response> {
    let query = parse_query(&raw)?;
    let run = svc.get_run(&run_id)?;
    Ok(Json(list_proteome_results(&run, &query)).into_response())
}

async fn stats(State(svc): State<Arc<Service>>, Path(run_id): Path<String>) -> ApiResult<Response> {
    let run = svc.get_run(&run_id)?;
    if !run.status.is_terminal() {
        return Err(ServiceError::RunIncomplete(run_id).into());
    }
    let stats = run.stats.ok_or(ServiceError::EmptyRun)?;
    Ok(Json(stats).into_response())
}

async fn taxonomy(State(svc): State<Arc<Service>>) -> Response {
    let mut classes: BTreeMap<u8, Vec<serde_json::Value>> = BTreeMap::new();
    for info in &svc.pipeline().taxonomy.subclasses {
        classes
            .entry(info.id.class())
            .or_default()
            .push(json!({"id": info.id.to_string(), "name": info.name}));
    }
    let classes: Vec<_> = classes
        .into_iter()
        .map(|(class, subclasses)| json!({"class": class, "subclasses": subclasses}))
        .collect();
    Json(json!({ "classes": classes })).into_response()
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/api/requests", post(submit))
        .route("/api/requests/{id}", get(get_request))
        .route("/api/requests/{id}/outputs/{*path}", get(get_output))
        .route("/api/proteomes", post(submit_proteome))
        .route("/api/proteomes/{run_id}", get(get_run))
        .route("/api/proteomes/{run_id}/results", get(results))
        .route("/api/proteomes/{run_id}/stats", get(stats))
        .route("/api/taxonomy", get(taxonomy))
        .with_state(service)
}

/// Serve the API on `listener` until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, service: Arc<Service>, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}
