use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use posiqueue::actions::{ActionKind, ActionRecord};
use posiqueue::engine::{Engine, SharedClock, DEFAULT_PAGE_SIZE};
use posiqueue::queue::{FilterSpec, Metric, SortKey};
use posiqueue::{Error, Kind};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::RwLock;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

pub struct AppState {
    pub engine: RwLock<Engine>,
    pub clock: SharedClock,
    pub moderator: String,
    pub auth_token: Option<String>,
}

impl AppState {
    pub fn new(engine: Engine, clock: SharedClock, moderator: impl Into<String>, auth_token: Option<String>) -> Self {
        AppState {
            engine: RwLock::new(engine),
            clock,
            moderator: moderator.into(),
            auth_token,
        }
    }
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub detail: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, detail: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.into(),
            detail: detail.into(),
        }
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", detail)
    }

    fn payload(detail: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload", detail)
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::UnknownToken { .. } | Error::InvalidQuery(_) => StatusCode::BAD_REQUEST,
        Error::NotFound { .. } => StatusCode::NOT_FOUND,
        Error::Duplicate(_) | Error::Capacity(_) | Error::AlreadyVoted { .. } | Error::NotHighlighted(_) => {
            StatusCode::CONFLICT
        }
        Error::PageOutOfRange { .. }
        | Error::InvalidPayload(_)
        | Error::WrongKind { .. }
        | Error::InvalidFlair(_)
        | Error::EmptyReasons
        | Error::Json(_) => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError {
            status: status_for(&e),
            code: e.code().to_string(),
            detail: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn ok<T: serde::Serialize>(v: T) -> ApiResult<Json<Value>> {
    serde_json::to_value(v)
        .map(Json)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "json", e.to_string()))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::payload(format!("request body: {e}")))
}

async fn health(State(st): State<Shared>) -> ApiResult<Json<Value>> {
    let e = st.engine.read().await;
    ok(json!({
        "status": "ok",
        "posts": e.corpus().count(Kind::Post),
        "comments": e.corpus().count(Kind::Comment),
        "actions": e.log().len(),
    }))
}

struct QueueQuery {
    spec: FilterSpec,
    sort: SortKey,
    page: usize,
    page_size: usize,
}

fn parse_count(name: &str, raw: &str) -> ApiResult<usize> {
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("{name} must be a positive integer, got `{raw}`")))
}

fn parse_queue_query(params: &[(String, String)]) -> ApiResult<QueueQuery> {
    let mut q = QueueQuery {
        spec: FilterSpec::default(),
        sort: SortKey::default(),
        page: 1,
        page_size: DEFAULT_PAGE_SIZE,
    };
    let mut seen = std::collections::HashSet::new();
    for (k, v) in params {
        if !seen.insert(k.as_str()) {
            return Err(ApiError::bad_request(format!("parameter `{k}` given twice")));
        }
        match k.as_str() {
            "sort" => q.sort = v.parse()?,
            "page" => q.page = parse_count("page", v)?,
            "page_size" => q.page_size = parse_count("page_size", v)?,
            key if key.starts_with("min_") => {
                let metric: Metric = key.parse()?;
                let value: f64 = v
                    .parse()
                    .map_err(|_| ApiError::bad_request(format!("{key} must be a number, got `{v}`")))?;
                q.spec.set(metric, value)?;
            }
            other => return Err(ApiError::bad_request(format!("unknown parameter `{other}`"))),
        }
    }
    Ok(q)
}

async fn queue(
    State(st): State<Shared>,
    params: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let q = parse_queue_query(&params)?;
    let now = st.clock.now();
    let e = st.engine.read().await;
    ok(e.queue_page(&q.spec, q.sort, q.page, q.page_size, now)?)
}

fn require_kind(e: &Engine, id: &str, kind: Kind) -> ApiResult<()> {
    let c = e.corpus().contribution(id)?;
    if c.kind == kind {
        return Ok(());
    }
    let hint = match kind {
        Kind::Post => format!("`{id}` is a comment; use /api/comments/{id}/hover"),
        Kind::Comment => format!("`{id}` is a post; use /api/posts/{id}/hover"),
    };
    Err(ApiError::new(StatusCode::NOT_FOUND, "not_found", hint))
}

async fn post_detail(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let now = st.clock.now();
    let e = st.engine.read().await;
    require_kind(&e, &id, Kind::Post)?;
    ok(e.post_detail(&id, now)?)
}

async fn post_hover(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let e = st.engine.read().await;
    require_kind(&e, &id, Kind::Post)?;
    ok(e.post_hover(&id)?)
}

async fn comment_hover(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let e = st.engine.read().await;
    require_kind(&e, &id, Kind::Comment)?;
    ok(e.comment_hover(&id)?)
}

async fn filter_meta(State(st): State<Shared>) -> ApiResult<Json<Value>> {
    let e = st.engine.read().await;
    ok(e.filter_meta())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionBody {
    target_id: String,
    #[serde(default)]
    payload: Value,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct ExplainPayload {
    reasons: Vec<String>,
    custom: Vec<String>,
}

fn explain_payload(v: &Value) -> ApiResult<ExplainPayload> {
    if v.is_null() {
        return Ok(ExplainPayload::default());
    }
    serde_json::from_value(v.clone()).map_err(|e| ApiError::payload(format!("explain payload: {e}")))
}

async fn action(State(st): State<Shared>, Path(token): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let kind: ActionKind = token.parse()?;
    let body: ActionBody = parse_body(&body)?;
    let now = st.clock.now();
    let mut e = st.engine.write().await;
    let outcome = match kind {
        ActionKind::Explain => {
            let p = explain_payload(&body.payload)?;
            e.explain(&body.target_id, &p.reasons, &p.custom, &st.moderator, now)?
        }
        _ => {
            let rec = ActionRecord::new(now, st.moderator.clone(), kind, body.target_id).with_payload(body.payload);
            e.perform(rec)?
        }
    };
    ok(outcome)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreviewBody {
    target_id: String,
    #[serde(default)]
    reasons: Vec<String>,
    #[serde(default)]
    custom: Vec<String>,
}

async fn explanation_preview(State(st): State<Shared>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: PreviewBody = parse_body(&body)?;
    let e = st.engine.read().await;
    let text = e.preview_explanation(&body.target_id, &body.reasons, &body.custom)?;
    ok(json!({ "target_id": body.target_id, "text": text }))
}

async fn bestof_current(State(st): State<Shared>) -> ApiResult<Json<Value>> {
    let now = st.clock.now();
    let e = st.engine.read().await;
    ok(e.bestof_at(now))
}

async fn reasons_get(State(st): State<Shared>) -> ApiResult<Json<Value>> {
    let e = st.engine.read().await;
    ok(json!({ "reasons": e.reasons().list() }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReasonsBody {
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    labels: Vec<String>,
}

async fn reasons_put(State(st): State<Shared>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: ReasonsBody = parse_body(&body)?;
    let labels: Vec<String> = body.label.into_iter().chain(body.labels).collect();
    if labels.is_empty() {
        return Err(ApiError::payload("give `label` or `labels`"));
    }
    let mut e = st.engine.write().await;
    for l in &labels {
        if e.reasons().find(l).is_some() {
            return Err(Error::Duplicate(format!("reason `{}`", l.trim())).into());
        }
    }
    let mut added = Vec::new();
    for l in &labels {
        added.push(e.add_reason(l)?);
    }
    ok(json!({ "added": added, "reasons": e.reasons().list() }))
}

async fn require_token(State(st): State<Shared>, req: Request, next: Next) -> Response {
    let Some(token) = st.auth_token.as_deref() else {
        return next.run(req).await;
    };
    if req.method() == Method::OPTIONS || req.uri().path() == "/api/health" {
        return next.run(req).await;
    }
    let given = req
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given == Some(token) {
        next.run(req).await
    } else {
        ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response()
    }
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

fn cors(origins: &[String]) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::PUT, Method::OPTIONS])
        .allow_headers([header::AUTHORIZATION, header::CONTENT_TYPE]);
    let parsed: Vec<HeaderValue> = origins.iter().filter_map(|o| o.parse().ok()).collect();
    if parsed.is_empty() {
        layer.allow_origin(Any)
    } else {
        layer.allow_origin(AllowOrigin::list(parsed))
    }
}

pub fn router(state: Shared, cors_origins: &[String]) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/queue", get(queue))
        .route("/api/posts/{id}", get(post_detail))
        .route("/api/posts/{id}/hover", get(post_hover))
        .route("/api/comments/{id}/hover", get(comment_hover))
        .route("/api/filters/meta", get(filter_meta))
        .route("/api/actions/{action}", post(action))
        .route("/api/explanations/preview", post(explanation_preview))
        .route("/api/bestof/current", get(bestof_current))
        .route("/api/config/reasons", get(reasons_get).put(reasons_put))
        .fallback(fallback)
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .layer(cors(cors_origins))
        .with_state(state)
}
