use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use barry_core::ingest::{generate_scenario, DefectInjection, DefectKind, ScenarioSpec};
use barry_core::render::{render_frame, ViewConfig};
use barry_core::simplex::ViewRotation;
use barry_service::{bind, router, AppState, ServeError};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn fig6_app() -> Router {
    let d = generate_scenario(&ScenarioSpec::builtin("fig6", None, Some(10), 42).unwrap()).unwrap();
    router(Arc::new(AppState::new(d, None).unwrap()))
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String, Vec<u8>) {
    let response = app.clone().oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let status = response.status();
    let content_type =
        response.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let body = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, content_type, body)
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, _, body) = get(app, uri).await;
    (status, serde_json::from_slice(&body).unwrap())
}

#[tokio::test]
async fn meta_echoes_dataset() {
    let (status, meta) = get_json(&fig6_app(), "/api/meta").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(meta["session_ids"].as_array().unwrap().len(), 60);
    assert_eq!(meta["snaps"]["first"], 1);
    assert_eq!(meta["snaps"]["last"], 10);
    assert_eq!(meta["snaps"]["count"], 10);
    assert_eq!(meta["sample_interval_ms"], 1000.0);
    assert_eq!(meta["default_spec"], "session3");
}

#[tokio::test]
async fn projection_sessions_sum_to_one() {
    let app = fig6_app();
    let (status, p) = get_json(&app, "/api/snaps/8/projection").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(p["snap_id"], 8);
    assert_eq!(p["odometer"], "8");
    let sessions = p["sessions"].as_array().unwrap();
    assert_eq!(sessions.len(), 60);
    for s in sessions {
        let sum: f64 = s["coords"].as_array().unwrap().iter().map(|c| c.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }
    assert_eq!(p["gridlines"].as_array().unwrap().len(), 27);

    let (_, _, raw) = get(&app, "/api/snaps/8/projection").await;
    let text = String::from_utf8(raw.clone()).unwrap();
    let first = text.split("\"coords\":[").nth(1).unwrap().split(']').next().unwrap();
    assert!(first.split(',').all(|c| c.split('.').nth(1).unwrap().len() == 6), "{first}");
    // stateless: same request, same bytes
    assert_eq!(get(&app, "/api/snaps/8/projection").await.2, raw);
}

#[tokio::test]
async fn tetrahedron_projection_via_rotation_params() {
    let app = fig6_app();
    let (status, a) = get_json(&app, "/api/snaps/2/projection?mode=slack&n=4&az=0&el=0").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(a["n"], 4);
    let (_, b) = get_json(&app, "/api/snaps/2/projection?mode=slack&n=4&az=360&el=0").await;
    assert_eq!(a["sessions"], b["sessions"]);
    let (_, c) = get_json(&app, "/api/snaps/2/projection?mode=slack&n=4&az=90&el=0").await;
    assert_eq!(a["sessions"][0]["coords"], c["sessions"][0]["coords"]);
    assert_ne!(a["sessions"][0]["screen"], c["sessions"][0]["screen"]);
}

#[tokio::test]
async fn unknown_snap_is_404() {
    let (status, body) = get_json(&fig6_app(), "/api/snaps/999999/projection").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "not_found");
    assert!(body["message"].as_str().unwrap().contains("999999"));
    let (status, _) = get_json(&fig6_app(), "/api/nothing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_query_names_parameter() {
    let app = fig6_app();
    for (uri, parameter) in [
        ("/api/snaps/1/projection?az=north", "az"),
        ("/api/snaps/1/projection?mode=fuzzy", "mode"),
        ("/api/snaps/1/projection?spec=session4", "spec"),
        ("/api/snaps/1/projection?n=5", "n"),
        ("/api/snaps/1/frame.svg?jitter=-2", "jitter"),
        ("/api/snaps/x/projection", "id"),
        ("/api/audit?tol=-1", "tol"),
    ] {
        let (status, body) = get_json(&app, uri).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{uri}");
        assert_eq!(body["parameter"], parameter, "{uri}");
    }
}

#[tokio::test]
async fn frame_svg_matches_direct_render() {
    let d = generate_scenario(&ScenarioSpec::builtin("fig6", None, Some(10), 42).unwrap()).unwrap();
    let app = fig6_app();
    let (status, content_type, body) = get(&app, "/api/snaps/3/frame.svg?jitter=0.02").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(content_type, "image/svg+xml");
    let mut view = ViewConfig::builtin("session3").unwrap();
    view.jitter_radius = 0.02;
    assert_eq!(body, render_frame(&d, 3, &view).unwrap());

    let (_, _, body) = get(&app, "/api/snaps/3/frame.svg?mode=slack&az=45&el=10").await;
    let mut view = ViewConfig::builtin("session3").unwrap();
    view.mode = barry_core::simplex::NormalizationMode::Slack;
    view.rotation = ViewRotation::new(45.0, 10.0).unwrap();
    assert_eq!(body, render_frame(&d, 3, &view).unwrap());
}

#[tokio::test]
async fn audit_and_scenarios() {
    let spec = ScenarioSpec::builtin("fig6", None, Some(3), 42).unwrap().with_defects(DefectInjection {
        count: 3,
        kind: DefectKind::DoubleCounted,
        magnitude_ms: 200,
    });
    let app = router(Arc::new(AppState::new(generate_scenario(&spec).unwrap(), None).unwrap()));
    let (status, report) = get_json(&app, "/api/audit?tol=0.01").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["findings"].as_array().unwrap().len(), 3);
    assert_eq!(report["totals"]["double_counted"], 3);
    let (_, strict) = get_json(&app, "/api/audit?tol=0.5").await;
    assert_eq!(strict["findings"].as_array().unwrap().len(), 0);

    // over-full snapshots fail strict (and slack) normalization but rescale
    let snap = report["findings"][0]["snap_id"].as_u64().unwrap();
    let (status, body) = get_json(&app, &format!("/api/snaps/{snap}/projection")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["parameter"], "mode");
    let (status, _) = get_json(&app, &format!("/api/snaps/{snap}/projection?mode=rescale")).await;
    assert_eq!(status, StatusCode::OK);

    let (_, list) = get_json(&app, "/api/scenarios").await;
    let names: Vec<&str> = list.as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"fig6") && names.contains(&"drift"));
}

#[tokio::test]
async fn cors_is_permissive() {
    let response = fig6_app()
        .oneshot(Request::get("/api/meta").header("origin", "http://localhost:5173").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(response.headers().get("access-control-allow-origin").unwrap(), "*");
}

#[tokio::test]
async fn occupied_port_is_reported() {
    let first = bind(0).await.unwrap();
    let port = first.local_addr().unwrap().port();
    assert!(matches!(bind(port).await, Err(ServeError::PortInUse(p)) if p == port));
}
