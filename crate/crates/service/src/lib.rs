//! Read-only HTTP API over one immutable dataset.
//!
//! All endpoints are `GET` and stateless; identical requests return
//! identical bodies. Errors come back as JSON objects with `error`,
//! `message` and, for bad queries, the offending `parameter`.

mod view;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use barry_core::audit::{audit_series, AuditReport, DEFAULT_TOLERANCE};
use barry_core::ingest::{builtin_scenarios, ScenarioInfo};
use barry_core::owi::{builtin_spec, infer_spec, DatasetSeries, BUILTIN_SPECS};
use barry_core::render::{frame_to_svg, jitter_overlaps, project_frame, FrameScene, RenderError, ViewConfig};
use barry_core::simplex::CartesianPoint;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use tower_http::cors::CorsLayer;

pub use view::{parse_axes, parse_grid, ParamError, ViewParams};

pub const DEFAULT_PORT: u16 = 8007;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
    #[error("no aggregation spec fits the dataset: {0}")]
    NoSpec(String),
}

/// Dataset plus the spec used when a request names none.
#[derive(Debug)]
pub struct AppState {
    dataset: DatasetSeries,
    default_spec: String,
}

impl AppState {
    /// `default_spec` of `None` picks the richest built-in spec the dataset carries.
    pub fn new(dataset: DatasetSeries, default_spec: Option<&str>) -> Result<Self, ServeError> {
        let spec = match default_spec {
            Some(name) => builtin_spec(name),
            None => infer_spec(&dataset),
        }
        .map_err(|e| ServeError::NoSpec(e.to_string()))?;
        Ok(Self { dataset, default_spec: spec.name().to_string() })
    }

    pub fn dataset(&self) -> &DatasetSeries {
        &self.dataset
    }

    pub fn default_spec(&self) -> &str {
        &self.default_spec
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/snaps/{id}/projection", get(projection))
        .route("/api/snaps/{id}/frame.svg", get(frame_svg))
        .route("/api/audit", get(audit))
        .route("/api/scenarios", get(scenarios))
        .fallback(not_found)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds before returning so an occupied port fails fast.
pub async fn bind(port: u16) -> Result<tokio::net::TcpListener, ServeError> {
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    tokio::net::TcpListener::bind(addr).await.map_err(|source| match source.kind() {
        std::io::ErrorKind::AddrInUse => ServeError::PortInUse(port),
        _ => ServeError::Bind { addr, source },
    })
}

pub async fn serve(state: AppState, port: u16) -> Result<(), ServeError> {
    let listener = bind(port).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter: Option<&'static str>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(e: ParamError) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody { error: "invalid_parameter", message: e.to_string(), parameter: Some(e.parameter) },
        }
    }

    fn not_found(message: String) -> Self {
        Self { status: StatusCode::NOT_FOUND, body: ErrorBody { error: "not_found", message, parameter: None } }
    }

    fn from_render(e: RenderError) -> Self {
        match e {
            RenderError::SnapNotFound(_) => Self::not_found(e.to_string()),
            // strict normalization rejected a session's data under this view
            RenderError::Session { .. } => Self::bad_request(ParamError::new("mode", e.to_string())),
            other => Self {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                body: ErrorBody { error: "internal", message: other.to_string(), parameter: None },
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn fixed6(v: f64) -> Box<RawValue> {
    let s = format!("{v:.6}");
    let s = if s == "-0.000000" { "0.000000".to_string() } else { s };
    RawValue::from_string(s).expect("formatted float is valid JSON")
}

fn ser_f6<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    fixed6(*v).serialize(s)
}

fn ser_vec6<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    v.iter().map(|x| fixed6(*x)).collect::<Vec<_>>().serialize(s)
}

fn ser_point6<S: Serializer>(p: &CartesianPoint, s: S) -> Result<S::Ok, S::Error> {
    ser_vec6(p.coords(), s)
}

#[derive(Debug, Serialize)]
pub struct VertexEntry {
    pub axis: String,
    #[serde(serialize_with = "ser_point6")]
    pub position: CartesianPoint,
    #[serde(serialize_with = "ser_point6")]
    pub screen: CartesianPoint,
}

#[derive(Debug, Serialize)]
pub struct SessionEntry {
    pub session_id: String,
    #[serde(serialize_with = "ser_vec6")]
    pub coords: Vec<f64>,
    #[serde(serialize_with = "ser_point6")]
    pub position: CartesianPoint,
    #[serde(serialize_with = "ser_point6")]
    pub screen: CartesianPoint,
    pub color: &'static str,
}

#[derive(Debug, Serialize)]
pub struct GridlineEntry {
    pub axis: usize,
    #[serde(serialize_with = "ser_f6")]
    pub level: f64,
    #[serde(serialize_with = "ser_point6")]
    pub from: CartesianPoint,
    #[serde(serialize_with = "ser_point6")]
    pub to: CartesianPoint,
}

#[derive(Debug, Serialize)]
pub struct RotationEntry {
    #[serde(serialize_with = "ser_f6")]
    pub azimuth: f64,
    #[serde(serialize_with = "ser_f6")]
    pub elevation: f64,
}

/// One projected frame; mirrors the scene the SVG renderer draws.
#[derive(Debug, Serialize)]
pub struct ProjectionResponse {
    pub snap_id: u64,
    pub odometer: String,
    pub spec: String,
    pub mode: &'static str,
    pub n: usize,
    pub rotation: RotationEntry,
    pub vertices: Vec<VertexEntry>,
    pub gridlines: Vec<GridlineEntry>,
    pub sessions: Vec<SessionEntry>,
}

impl ProjectionResponse {
    pub fn new(snap_id: u64, view: &ViewConfig, scene: &FrameScene) -> Self {
        Self {
            snap_id,
            odometer: scene.odometer.clone(),
            spec: view.spec.name().to_string(),
            mode: view.mode.name(),
            n: scene.n(),
            rotation: RotationEntry { azimuth: scene.rotation.azimuth(), elevation: scene.rotation.elevation() },
            vertices: scene
                .labels
                .iter()
                .zip(scene.embedding.vertices())
                .map(|(l, v)| VertexEntry { axis: l.text.clone(), position: *v, screen: l.anchor })
                .collect(),
            gridlines: scene
                .gridlines
                .iter()
                .map(|g| GridlineEntry { axis: g.axis, level: g.level, from: g.from, to: g.to })
                .collect(),
            sessions: scene
                .dots
                .iter()
                .map(|d| SessionEntry {
                    session_id: d.session_id.clone(),
                    coords: d.coords.coords().to_vec(),
                    position: d.position,
                    screen: d.screen,
                    color: d.color,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SnapRange {
    pub first: Option<u64>,
    pub last: Option<u64>,
    pub count: usize,
}

#[derive(Debug, Serialize)]
pub struct MetaResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub metrics: Vec<String>,
    pub sample_interval_ms: f64,
    pub snaps: SnapRange,
    pub snap_ids: Vec<u64>,
    pub session_ids: Vec<String>,
    pub default_spec: String,
    /// Built-in specs whose source metrics the dataset carries.
    pub specs: Vec<&'static str>,
}

fn parse_snap_id(raw: &str) -> Result<u64, ApiError> {
    raw.parse().map_err(|_| ApiError::bad_request(ParamError::new("id", format!("'{raw}' is not a snap id"))))
}

/// Shared by the projection and SVG endpoints.
fn scene_for(
    state: &AppState,
    raw_id: &str,
    q: &HashMap<String, String>,
) -> Result<(u64, ViewConfig, FrameScene), ApiError> {
    let id = parse_snap_id(raw_id)?;
    let view = ViewParams::from_query(q)
        .and_then(|p| p.resolve(&state.dataset, &state.default_spec))
        .map_err(ApiError::bad_request)?;
    let scene = project_frame(&state.dataset, id, &view).map_err(ApiError::from_render)?;
    let scene = jitter_overlaps(&scene, view.jitter_radius, view.palette_seed);
    Ok((id, view, scene))
}

async fn meta(State(state): State<Arc<AppState>>) -> Json<MetaResponse> {
    let d = &state.dataset;
    let ids: Vec<u64> = d.snap_ids().collect();
    Json(MetaResponse {
        label: d.label().map(str::to_string),
        metrics: d.metrics().to_vec(),
        sample_interval_ms: d.sample_interval_ms(),
        snaps: SnapRange { first: ids.first().copied(), last: ids.last().copied(), count: ids.len() },
        snap_ids: ids,
        session_ids: d.session_ids().into_iter().map(str::to_string).collect(),
        default_spec: state.default_spec.clone(),
        specs: BUILTIN_SPECS
            .into_iter()
            .filter(|name| builtin_spec(name).is_ok_and(|s| s.sources().all(|m| d.has_metric(m))))
            .collect(),
    })
}

async fn projection(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<ProjectionResponse>, ApiError> {
    let (id, view, scene) = scene_for(&state, &id, &q)?;
    Ok(Json(ProjectionResponse::new(id, &view, &scene)))
}

async fn frame_svg(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let (_, _, scene) = scene_for(&state, &id, &q)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], frame_to_svg(&scene)).into_response())
}

async fn audit(
    State(state): State<Arc<AppState>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<AuditReport>, ApiError> {
    let tol =
        match q.get("tol") {
            None => DEFAULT_TOLERANCE,
            Some(raw) => raw.trim().parse::<f64>().ok().filter(|t| t.is_finite() && *t >= 0.0).ok_or_else(|| {
                ApiError::bad_request(ParamError::new("tol", format!("'{raw}' is not a tolerance >= 0")))
            })?,
        };
    Ok(Json(audit_series(&state.dataset, tol)))
}

async fn scenarios() -> Json<Vec<ScenarioInfo>> {
    Json(builtin_scenarios())
}

async fn not_found() -> ApiError {
    ApiError::not_found("no such endpoint".into())
}
