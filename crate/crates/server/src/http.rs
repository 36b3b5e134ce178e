//! Read-only HTTP service over one immutable scene.
//!
//! | route                  | response                                    |
//! |------------------------|---------------------------------------------|
//! | `GET /healthz`         | `{"status":"ok"}`                           |
//! | `GET /api/scene`       | canonical scene JSON                        |
//! | `GET /api/legend`      | the scene's legend                          |
//! | `GET /api/entity/{id}` | `{"id", "tooltip"}` or 404                  |
//! | `POST /api/layout`     | `{"positions", "transition"}`               |
//! | `GET /{path}`          | viewer assets from the static dir, else 404 |

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use datagarden_core::layout::{grouped_layout, organic_layout, plan_transition, LayoutResult, Position};
use datagarden_core::scene::{canonical_string, serialize_scene, SceneDocument};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

pub struct AppState {
    scene: SceneDocument,
    scene_json: String,
    legend_json: String,
}

impl AppState {
    pub fn new(scene: SceneDocument) -> Arc<Self> {
        let scene_json = serialize_scene(&scene);
        let legend_json = canonical_string(scene.legend()).expect("legend serializes");
        Arc::new(Self {
            scene,
            scene_json,
            legend_json,
        })
    }

    pub fn scene(&self) -> &SceneDocument {
        &self.scene
    }
}

fn json_body(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    let body = canonical_string(&json!({ "error": message.into() })).expect("string map");
    json_body(status, body)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMode {
    Organic,
    Grouped,
}

fn default_spacing() -> f64 {
    2.0
}
fn default_seed() -> u64 {
    42
}
fn default_duration() -> f64 {
    1.5
}
fn default_stagger() -> f64 {
    0.01
}
fn default_min_sep() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutRequest {
    pub mode: LayoutMode,
    #[serde(default)]
    pub group_by: Option<String>,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_stagger")]
    pub stagger: f64,
    /// Organic mode only.
    #[serde(default = "default_min_sep")]
    pub min_sep: f64,
}

#[derive(Debug, Serialize)]
struct LayoutResponse<'a> {
    positions: &'a std::collections::BTreeMap<String, Position>,
    transition: datagarden_core::layout::TransitionPlan,
}

/// Computes the requested layout and the transition from the scene's stored
/// positions. Errors are request-level problems (422).
pub fn compute_layout(scene: &SceneDocument, req: &LayoutRequest) -> Result<String, String> {
    let target: LayoutResult = match (req.mode, &req.group_by) {
        (LayoutMode::Grouped, None) => return Err("grouped mode requires group_by".into()),
        (LayoutMode::Organic, Some(_)) => return Err("group_by is only valid in grouped mode".into()),
        (LayoutMode::Grouped, Some(q)) => {
            grouped_layout(scene.entities(), q, scene.schema(), req.spacing).map_err(|e| e.to_string())?
        }
        (LayoutMode::Organic, None) => {
            let ids: Vec<&str> = scene.entities().iter().map(|e| e.id.as_str()).collect();
            organic_layout(&ids, scene.bounds(), req.min_sep, req.seed).map_err(|e| e.to_string())?
        }
    };
    let transition =
        plan_transition(&scene.layout(), &target, req.duration, req.stagger).map_err(|e| e.to_string())?;
    canonical_string(&LayoutResponse {
        positions: &target.positions,
        transition,
    })
    .map_err(|e| e.to_string())
}

async fn healthz() -> Response {
    json_body(StatusCode::OK, r#"{"status":"ok"}"#.to_string())
}

async fn scene(State(state): State<Arc<AppState>>) -> Response {
    json_body(StatusCode::OK, state.scene_json.clone())
}

async fn legend(State(state): State<Arc<AppState>>) -> Response {
    json_body(StatusCode::OK, state.legend_json.clone())
}

async fn entity(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match state.scene.entity(&id) {
        Some(e) => {
            let body = canonical_string(&json!({ "id": e.id, "tooltip": e.tooltip })).expect("strings only");
            json_body(StatusCode::OK, body)
        }
        None => error(StatusCode::NOT_FOUND, format!("no such entity `{id}`")),
    }
}

async fn layout(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: LayoutRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed layout request: {e}")),
    };
    let state = state.clone();
    let result = tokio::task::spawn_blocking(move || compute_layout(&state.scene, &req)).await;
    match result {
        Ok(Ok(body)) => json_body(StatusCode::OK, body),
        Ok(Err(msg)) => error(StatusCode::UNPROCESSABLE_ENTITY, msg),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn not_found() -> Response {
    error(StatusCode::NOT_FOUND, "not found")
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/api/scene", get(scene))
        .route("/api/legend", get(legend))
        .route("/api/entity/{id}", get(entity))
        .route("/api/layout", post(layout))
        .route("/api/{*rest}", get(not_found).post(not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).fallback(get(not_found))),
        None => api.fallback(not_found),
    }
}
