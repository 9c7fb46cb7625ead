// Copyright (c) The photonlab Authors
// SPDX-License-Identifier: Apache-2.0

//! Serve protocol driven in-process through the router.

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use photonlab::io::{fixtures, serialize_setup};
use photonlab::serve::{router, SEQUENCE_HEADER};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = send_raw(app, method, uri, body.map(|b| b.to_string())).await;
    let v = if text.is_empty() {
        Value::Null
    } else {
        serde_json::from_str(&text).unwrap_or(Value::String(text))
    };
    (status, v)
}

async fn send_raw(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<String>,
) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn session(app: &Router, fixture: &str) -> u64 {
    let (st, v) = send(
        app,
        "POST",
        "/sessions",
        Some(json!({ "fixture": fixture })),
    )
    .await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    v["session"].as_u64().unwrap()
}

#[tokio::test]
async fn health_and_fixture_list() {
    let app = router();
    let (st, v) = send(&app, "GET", "/health", None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    let (_, v) = send(&app, "GET", "/fixtures", None).await;
    let names: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"mach-zehnder") && names.contains(&"teleportation"));
}

#[tokio::test]
async fn expand_and_inspect_mach_zehnder() {
    let app = router();
    let sid = session(&app, "mach-zehnder").await;
    let (st, v) = send(&app, "GET", &format!("/sessions/{sid}/nodes/0"), None).await;
    assert_eq!(st, StatusCode::CONFLICT, "{v}");

    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/tree"), None).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert!((v["detectors"]["d1"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["detectors"]["d2"].as_f64().unwrap().abs() < 1e-9);

    let (st, v) = send(
        &app,
        "GET",
        &format!("/sessions/{sid}/nodes/0?basis=DA&format=polar"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let kets = v["kets"].as_array().unwrap();
    assert_eq!(kets.len(), 2);
    assert_eq!(kets[0]["basis"], "(1,4)→D");
    assert!((kets[0]["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let (_, full) = send(&app, "GET", &format!("/sessions/{sid}/tree"), None).await;
    assert_eq!(full["version"], 1);
    assert_eq!(full["nodes"][0]["id"], 0);
}

#[tokio::test]
async fn operator_view_matches_matrix() {
    let app = router();
    let sid = session(&app, "mach-zehnder").await;
    let (st, v) = send(
        &app,
        "GET",
        &format!("/sessions/{sid}/operators/bs1?format=polar-tau"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let entries = v["operator"]["entries"].as_array().unwrap();
    // 50/50 splitter: 16 entries of modulus 1/√2 over four directions and two polarizations.
    assert_eq!(entries.len(), 16);
    for e in entries {
        let r = (e["re"].as_f64().unwrap().powi(2) + e["im"].as_f64().unwrap().powi(2)).sqrt();
        assert!((r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(e["value"]["format"], "polar-tau");
    }
    let (_, v) = send(&app, "GET", &format!("/sessions/{sid}/operators/d1"), None).await;
    assert!(
        v["operator"].is_object(),
        "detectors show their null-outcome operator"
    );
}

#[tokio::test]
async fn rejected_edit_keeps_the_board() {
    let app = router();
    let sid = session(&app, "mach-zehnder").await;
    send(&app, "POST", &format!("/sessions/{sid}/tree"), None).await;

    let bad = json!({ "id": "m2", "kind": "mirror", "x": 3, "y": 1, "rotation": 45 });
    let (st, v) = send(
        &app,
        "PUT",
        &format!("/sessions/{sid}/elements/m2"),
        Some(bad),
    )
    .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    assert!(
        v["error"].as_str().unwrap().contains("m2") || v["error"].as_str().unwrap().contains("m1")
    );
    let (_, v) = send(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert!(v["tree"].is_object(), "failed edit must not clear the tree");

    let slab = json!({ "id": "slab", "kind": "glass_slab", "x": 5, "y": 1, "params": { "phase": std::f64::consts::FRAC_PI_2 } });
    let (st, v) = send(
        &app,
        "POST",
        &format!("/sessions/{sid}/elements"),
        Some(slab),
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let (_, v) = send(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert!(v["tree"].is_null());
    let (_, v) = send(&app, "POST", &format!("/sessions/{sid}/tree"), None).await;
    assert!((v["detectors"]["d1"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let (st, _) = send(
        &app,
        "DELETE",
        &format!("/sessions/{sid}/elements/slab"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK);
    let (st, _) = send(
        &app,
        "DELETE",
        &format!("/sessions/{sid}/elements/slab"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn validate_reports_position() {
    let app = router();
    let good = serialize_setup(&fixtures::sagnac());
    let (st, v) = send_raw(&app, "POST", "/validate", Some(good.clone())).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let bad = good.replacen("\"rotation\": 45", "\"rotation\": 45, \"spin\": 1", 1);
    let (st, text) = send_raw(&app, "POST", "/validate", Some(bad)).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["valid"], false);
    assert!(v["error"].as_str().unwrap().contains("line"), "{v}");
}

#[tokio::test]
async fn sequence_number_is_echoed() {
    let app = router();
    let req = Request::builder()
        .uri("/health")
        .header(SEQUENCE_HEADER, "42")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[SEQUENCE_HEADER], "42");
}

#[tokio::test]
async fn entanglement_and_blink_for_a_bell_pair() {
    let app = router();
    let sid = session(&app, "bell-chsh").await;
    send(&app, "POST", &format!("/sessions/{sid}/tree"), None).await;
    let (_, tree) = send(&app, "GET", &format!("/sessions/{sid}/tree"), None).await;
    let node = tree["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|n| n["step"] == 1 && n["photons"] == 2)
        .unwrap()["id"]
        .as_u64()
        .unwrap();
    let (st, v) = send(
        &app,
        "GET",
        &format!("/sessions/{sid}/nodes/{node}/entanglement"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    for h in v["entropies"].as_array().unwrap() {
        assert!((h.as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    let (st, v) = send(
        &app,
        "GET",
        &format!("/sessions/{sid}/nodes/{node}/blink?seed=5"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["states"].as_array().unwrap().len(), 2);
    let (_, again) = send(
        &app,
        "GET",
        &format!("/sessions/{sid}/nodes/{node}/blink?seed=5"),
        None,
    )
    .await;
    assert_eq!(v, again);
}

#[tokio::test]
async fn sampling_and_csv_are_seeded() {
    let app = router();
    let sid = session(&app, "bb84").await;
    let (st, v) = send(
        &app,
        "POST",
        &format!("/sessions/{sid}/sample"),
        Some(json!({ "n": 100, "seed": 3 })),
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let total: u64 = v["detections"]
        .as_object()
        .unwrap()
        .values()
        .map(|c| c.as_u64().unwrap())
        .sum();
    assert_eq!(total, 100);
    let (st, a) = send_raw(
        &app,
        "GET",
        &format!("/sessions/{sid}/csv?n=20&seed=9"),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::OK);
    let (_, b) = send_raw(
        &app,
        "GET",
        &format!("/sessions/{sid}/csv?n=20&seed=9"),
        None,
    )
    .await;
    assert_eq!(a, b);
    assert!(a.starts_with("run,seed,in:alice_bit"));
    assert_eq!(a.lines().count(), 21);
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = router();
    let a = session(&app, "mach-zehnder").await;
    let b = session(&app, "mach-zehnder").await;
    assert_ne!(a, b);
    send(&app, "DELETE", &format!("/sessions/{a}/elements/m2"), None).await;
    let (_, va) = send(&app, "GET", &format!("/sessions/{a}"), None).await;
    let (_, vb) = send(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(va["board"]["elements"], 6);
    assert_eq!(vb["board"]["elements"], 7);
    let (st, _) = send(&app, "DELETE", &format!("/sessions/{a}"), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, _) = send(&app, "GET", &format!("/sessions/{a}"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

/// A loop that re-injects half of the light each round past a
/// nondemolition detector, so the tree doubles every pass and only a
/// cancellation ends an unbounded expansion.
fn slow_setup() -> Value {
    json!({
        "version": 1,
        "name": "slow",
        "grid": { "width": 13, "height": 10 },
        "elements": [
            { "id": "src", "kind": "single_photon_source", "x": 0, "y": 1 },
            { "id": "bs", "kind": "beam_splitter", "x": 2, "y": 1, "rotation": 45 },
            { "id": "m1", "kind": "mirror", "x": 5, "y": 1, "rotation": 135 },
            { "id": "probe", "kind": "nondemolition_detector", "x": 5, "y": 3 },
            { "id": "m2", "kind": "mirror", "x": 5, "y": 4, "rotation": 45 },
            { "id": "m3", "kind": "mirror", "x": 2, "y": 4, "rotation": 135 }
        ]
    })
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn long_expansion_can_be_cancelled() {
    let app = router();
    let (st, v) = send(
        &app,
        "POST",
        "/sessions",
        Some(json!({ "setup": slow_setup() })),
    )
    .await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    let sid = v["session"].as_u64().unwrap();
    let expander = {
        let app = app.clone();
        tokio::spawn(async move {
            send(
                &app,
                "POST",
                &format!("/sessions/{sid}/tree"),
                Some(json!({ "min_branch_probability": 0.0, "max_steps": 100000, "max_nodes": 100000000 })),
            )
            .await
        })
    };
    tokio::time::sleep(Duration::from_millis(20)).await;
    let (st, _) = send(&app, "POST", &format!("/sessions/{sid}/cancel"), None).await;
    assert_eq!(st, StatusCode::OK);
    let (st, v) = expander.await.unwrap();
    assert_eq!(st, StatusCode::CONFLICT, "{v}");
    assert_eq!(v["error"], "expansion cancelled");

    // The session stays usable after a cancelled expansion.
    let (st, v) = send(
        &app,
        "POST",
        &format!("/sessions/{sid}/tree"),
        Some(json!({ "max_nodes": 50 })),
    )
    .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["budget_exhausted"], true);
}
