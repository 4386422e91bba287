//! JSON-over-HTTP access to template validation, preview, generation and
//! the bundled examples. Handlers keep no state between requests.

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::body::Bytes;
use axum::extract::Path;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use quizforge_core::corpus;
use quizforge_core::template::{instantiate, load_template_value, trial_issues, Issue, QuizTemplate};
use quizforge_core::xmlout::generate_xml;

/// Largest bank a single request may ask for.
pub const MAX_N: u64 = 1000;
pub const MANIFEST_HEADER: &str = "x-quizforge-manifest";

#[derive(Debug)]
pub enum ApiError {
    /// The body is not JSON at all.
    Malformed(String),
    /// JSON that fails schema, expression or generation checks.
    Invalid(Vec<Issue>),
    NotFound(String),
}

impl ApiError {
    fn one(path: &str, message: impl Into<String>) -> Self {
        ApiError::Invalid(vec![Issue { path: path.into(), message: message.into() }])
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, errors) = match self {
            ApiError::Malformed(m) => (StatusCode::BAD_REQUEST, vec![Issue { path: String::new(), message: m }]),
            ApiError::Invalid(v) => (StatusCode::UNPROCESSABLE_ENTITY, v),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, vec![Issue { path: String::new(), message: m }]),
        };
        (status, Json(json!({ "errors": errors }))).into_response()
    }
}

fn parse_body(body: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::Malformed(format!("malformed JSON: {e}")))
}

fn template_from(value: Value) -> Result<QuizTemplate, ApiError> {
    load_template_value(value).map_err(|e| ApiError::Invalid(e.issues()))
}

/// Request envelope fields other than the template.
fn field<T: for<'de> Deserialize<'de>>(body: &Value, name: &str) -> Result<Option<T>, ApiError> {
    match body.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| ApiError::one(name, e.to_string())),
    }
}

fn required<T: for<'de> Deserialize<'de>>(body: &Value, name: &str) -> Result<T, ApiError> {
    field(body, name)?.ok_or_else(|| ApiError::one(name, "missing field"))
}

fn envelope(body: &[u8]) -> Result<(Value, QuizTemplate), ApiError> {
    let body = parse_body(body)?;
    if !body.is_object() {
        return Err(ApiError::one("", "expected a JSON object"));
    }
    let t = template_from(required::<Value>(&body, "template")?)?;
    Ok((body, t))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleSummary {
    pub id: u32,
    pub slug: &'static str,
    pub title: &'static str,
    pub description: &'static str,
}

pub fn validate(body: &[u8]) -> Result<Value, ApiError> {
    let t = template_from(parse_body(body)?)?;
    let issues = trial_issues(&t, 0);
    if !issues.is_empty() {
        return Err(ApiError::Invalid(issues));
    }
    Ok(json!({ "ok": true, "name": t.name(), "stories": t.story_count() }))
}

pub fn preview(body: &[u8]) -> Result<Value, ApiError> {
    let (body, t) = envelope(body)?;
    let seed: u64 = required(&body, "seed")?;
    let index: u64 = field(&body, "index")?.unwrap_or(0);
    let story: Option<usize> = field(&body, "story")?;
    let q = instantiate(&t, seed, index, story).map_err(|e| ApiError::one("template", e.to_string()))?;
    Ok(serde_json::to_value(q).expect("plain data"))
}

/// XML text, its manifest as one-line JSON, and the download file name.
pub fn generate(body: &[u8]) -> Result<(String, String, String), ApiError> {
    let (body, t) = envelope(body)?;
    let n: u64 = required(&body, "n")?;
    if n > MAX_N {
        return Err(ApiError::one("n", format!("n must be at most {MAX_N}")));
    }
    let seed: u64 = required(&body, "seed")?;
    let story: Option<usize> = field(&body, "story")?;
    let (xml, manifest) = generate_xml(&t, n, seed, story).map_err(|e| ApiError::one("template", e.to_string()))?;
    let manifest = serde_json::to_string(&manifest).expect("plain data");
    Ok((xml, manifest, format!("{}.xml", t.name())))
}

pub fn examples() -> Vec<ExampleSummary> {
    corpus::list_examples()
        .iter()
        .map(|e| ExampleSummary { id: e.id, slug: e.slug, title: e.title, description: e.description })
        .collect()
}

pub fn example_document(id: u32) -> Result<Value, ApiError> {
    let e = corpus::example(id).ok_or_else(|| ApiError::NotFound(format!("no example {id}")))?;
    Ok(serde_json::from_str(e.source).expect("bundled examples are JSON"))
}

async fn validate_handler(body: Bytes) -> Result<Json<Value>, ApiError> {
    validate(&body).map(Json)
}

async fn preview_handler(body: Bytes) -> Result<Json<Value>, ApiError> {
    preview(&body).map(Json)
}

async fn generate_handler(body: Bytes) -> Result<Response, ApiError> {
    let (xml, manifest, file) = generate(&body)?;
    let disposition = format!("attachment; filename=\"{}\"", file.replace(['"', '\\'], "_"));
    let headers = [
        (header::CONTENT_TYPE, HeaderValue::from_static("application/xml")),
        (header::CONTENT_DISPOSITION, HeaderValue::from_str(&disposition).map_err(|e| ApiError::one("name", e.to_string()))?),
        (header::HeaderName::from_static(MANIFEST_HEADER), HeaderValue::from_str(&manifest).expect("ascii JSON")),
    ];
    Ok((headers, xml).into_response())
}

async fn examples_handler() -> Json<Vec<ExampleSummary>> {
    Json(examples())
}

async fn example_handler(Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let id: u32 = id.parse().map_err(|_| ApiError::NotFound(format!("no example {id}")))?;
    example_document(id).map(Json)
}

/// The API routes, with CORS open to any origin so a separately served
/// builder page can call them.
pub fn router() -> Router {
    let cors = CorsLayer::new()
        .allow_origin(tower_http::cors::Any)
        .allow_methods(tower_http::cors::Any)
        .allow_headers(tower_http::cors::Any)
        .expose_headers([header::CONTENT_DISPOSITION, header::HeaderName::from_static(MANIFEST_HEADER)]);
    Router::new()
        .route("/api/validate", post(validate_handler))
        .route("/api/preview", post(preview_handler))
        .route("/api/generate", post(generate_handler))
        .route("/api/examples", get(examples_handler))
        .route("/api/examples/{id}", get(example_handler))
        .layer(cors)
}

/// API routes plus static files from `root`, if given.
pub fn app(root: Option<PathBuf>) -> Router {
    match root {
        Some(dir) => router().fallback_service(ServeDir::new(dir)),
        None => router(),
    }
}

pub async fn serve(addr: SocketAddr, root: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app(root)).await
}
