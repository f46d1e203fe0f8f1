//! Stateless HTTP face of the sandbox and pipeline.
//!
//! Every request is served from scratch under the configured limits; the
//! only shared state is the in-flight counter. Execution failures travel
//! as 200 responses with a structured status, because callers want the
//! failure taxonomy, not a transport error. Only malformed requests and
//! the over-capacity guard use error status codes.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Json, Response};
use axum::routing::{get, post};
use axum::Router;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use draftflow_core::{
    check, execute, run_one, CodegenBackend, ErrorKind, IdentityRefine, Limits, PipelineConfig,
    PipelineRecord, RefineBackend, RemoteBackend, RepairPolicy, RemoteRefine, Status,
    TemplateBackend,
};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Listen address; DF_BIND_ADDR overrides, default 127.0.0.1:8787.
    pub bind_addr: Option<String>,
    /// Concurrent request ceiling, at least 1. Default 16.
    pub max_in_flight: Option<usize>,
    /// Sandbox limits; omitted fields keep their defaults.
    pub limits: Limits,
    pub codegen_url: Option<String>,
    pub codegen_token: Option<String>,
    pub codegen_model: Option<String>,
    pub refine_url: Option<String>,
    pub refine_token: Option<String>,
}

impl ServiceConfig {
    pub fn from_file(path: &std::path::Path) -> Result<ServiceConfig, String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Clone)]
struct RemoteCodegenSpec {
    url: String,
    token: Option<String>,
    model: String,
}

#[derive(Debug, Clone)]
struct RemoteRefineSpec {
    url: String,
    token: Option<String>,
}

struct Inner {
    limits: Limits,
    gate: Arc<Semaphore>,
    codegen: Option<RemoteCodegenSpec>,
    refine: Option<RemoteRefineSpec>,
}

type AppState = Arc<Inner>;

fn build_state(config: &ServiceConfig) -> Result<AppState, String> {
    let max_in_flight = config.max_in_flight.unwrap_or(16);
    if max_in_flight < 1 {
        return Err("max_in_flight must be at least 1".to_string());
    }
    let codegen = config
        .codegen_url
        .clone()
        .or_else(|| std::env::var("DF_CODEGEN_URL").ok())
        .map(|url| RemoteCodegenSpec {
            url,
            token: config
                .codegen_token
                .clone()
                .or_else(|| std::env::var("DF_CODEGEN_TOKEN").ok()),
            model: config
                .codegen_model
                .clone()
                .or_else(|| std::env::var("DF_CODEGEN_MODEL").ok())
                .unwrap_or_else(|| "default".to_string()),
        });
    let refine = config
        .refine_url
        .clone()
        .or_else(|| std::env::var("DF_REFINE_URL").ok())
        .map(|url| RemoteRefineSpec {
            url,
            token: config
                .refine_token
                .clone()
                .or_else(|| std::env::var("DF_REFINE_TOKEN").ok()),
        });
    Ok(Arc::new(Inner {
        limits: config.limits.clone(),
        gate: Arc::new(Semaphore::new(max_in_flight)),
        codegen,
        refine,
    }))
}

pub fn resolve_bind_addr(config: &ServiceConfig) -> String {
    std::env::var("DF_BIND_ADDR")
        .ok()
        .or_else(|| config.bind_addr.clone())
        .unwrap_or_else(|| "127.0.0.1:8787".to_string())
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/check", post(check_handler))
        .route("/v1/render", post(render_handler))
        .route("/v1/pipeline", post(pipeline_handler))
        .with_state(state)
}

/// Binds the listener and returns the bound address plus the serve
/// future, so callers (and tests) can use port 0 and learn the real port
/// before the service starts taking requests.
pub async fn bind(
    config: &ServiceConfig,
) -> Result<(SocketAddr, impl Future<Output = std::io::Result<()>>), String> {
    let state = build_state(config)?;
    let addr = resolve_bind_addr(config);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| format!("bind {addr}: {e}"))?;
    let local = listener.local_addr().map_err(|e| e.to_string())?;
    let app = router(state);
    Ok((local, async move { axum::serve(listener, app).await }))
}

fn bad_request(message: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(json!({ "error": message }))).into_response()
}

fn over_capacity() -> Response {
    (
        StatusCode::TOO_MANY_REQUESTS,
        Json(json!({ "error": "over capacity, retry later" })),
    )
        .into_response()
}

fn internal(message: String) -> Response {
    (
        StatusCode::INTERNAL_SERVER_ERROR,
        Json(json!({ "error": message })),
    )
        .into_response()
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("invalid request body: {e}")))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "ok": true }))
}

#[derive(Deserialize)]
struct CodeRequest {
    code: String,
}

#[derive(Serialize)]
struct CheckResponse {
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_kind: Option<ErrorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

async fn check_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let req: CodeRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let permit = match state.gate.clone().try_acquire_owned() {
        Ok(p) => p,
        Err(_) => return over_capacity(),
    };
    let limits = state.limits.clone();
    let report = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        check(req.code.as_bytes(), &limits)
    })
    .await;
    match report {
        Ok(report) => Json(CheckResponse {
            status: report.status,
            error_kind: report.error_kind,
            error: report.error_detail,
        })
        .into_response(),
        Err(e) => internal(e.to_string()),
    }
}

#[derive(Serialize)]
struct RenderResponse {
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_b64_ppm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_kind: Option<ErrorKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

async fn render_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let req: CodeRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    let permit = match state.gate.clone().try_acquire_owned() {
        Ok(p) => p,
        Err(_) => return over_capacity(),
    };
    let limits = state.limits.clone();
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        execute(req.code.as_bytes(), &limits)
    })
    .await;
    match result {
        Ok((report, image)) => Json(RenderResponse {
            status: report.status,
            digest: report.digest,
            image_b64_ppm: image
                .map(|img| base64::engine::general_purpose::STANDARD.encode(img.to_ppm())),
            error_kind: report.error_kind,
            error: report.error_detail,
        })
        .into_response(),
        Err(e) => internal(e.to_string()),
    }
}

#[derive(Deserialize)]
struct PipelineRequest {
    prompt: String,
    codegen: String,
    #[serde(default)]
    refine: Option<String>,
}

async fn pipeline_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let req: PipelineRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    match req.codegen.as_str() {
        "template" => {}
        "remote" if state.codegen.is_some() => {}
        "remote" => return bad_request("remote codegen is not configured".to_string()),
        other => return bad_request(format!("unknown codegen backend '{other}'")),
    }
    match req.refine.as_deref() {
        None | Some("none") | Some("identity") => {}
        Some("remote") if state.refine.is_some() => {}
        Some("remote") => return bad_request("remote refine is not configured".to_string()),
        Some(other) => return bad_request(format!("unknown refine backend '{other}'")),
    }
    let permit = match state.gate.clone().try_acquire_owned() {
        Ok(p) => p,
        Err(_) => return over_capacity(),
    };
    let state2 = state.clone();
    let result = tokio::task::spawn_blocking(move || -> PipelineRecord {
        let _permit = permit;
        let remote_codegen = match req.codegen.as_str() {
            "remote" => {
                let spec = state2.codegen.clone().expect("checked above");
                Some(RemoteBackend::new(
                    &spec.url,
                    spec.token.as_deref(),
                    &spec.model,
                    RepairPolicy::default(),
                ))
            }
            _ => None,
        };
        let codegen: &dyn CodegenBackend = match &remote_codegen {
            Some(r) => r,
            None => &TemplateBackend,
        };
        let remote_refine = match req.refine.as_deref() {
            Some("remote") => {
                let spec = state2.refine.clone().expect("checked above");
                Some(RemoteRefine::new(&spec.url, spec.token.as_deref()))
            }
            _ => None,
        };
        let refiner: Option<&dyn RefineBackend> = match req.refine.as_deref() {
            None | Some("none") => None,
            Some("identity") => Some(&IdentityRefine),
            Some("remote") => remote_refine.as_ref().map(|r| r as &dyn RefineBackend),
            Some(_) => unreachable!("checked above"),
        };
        let config = PipelineConfig {
            limits: state2.limits.clone(),
            ..PipelineConfig::default()
        };
        run_one("0-0", &req.prompt, codegen, refiner, &config, None)
    })
    .await;
    match result {
        Ok(record) => Json(record).into_response(),
        Err(e) => internal(e.to_string()),
    }
}
