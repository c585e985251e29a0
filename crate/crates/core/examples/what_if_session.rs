//! Drives the JSON API in process: an exploratory session around one target variable.
//!
//! ```text
//! cargo run --example what_if_session
//! ```
//!
//! The same router is what `requisites serve` exposes over HTTP.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use requisites::model::default_network;
use requisites::service::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Value) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method} {uri} -> {status}");
    value
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let app = router(Arc::new(AppState::new(Arc::new(default_network().clone()))?));

    let session = call(&app, "POST", "/sessions", json!({ "mode": "exploratory", "target": "specificity" })).await;
    let id = session["id"].as_str().unwrap().to_string();
    println!("  blanket: {}", session["blanket"]);

    for commitment in ["high", "medium", "low"] {
        call(&app, "PATCH", &format!("/sessions/{id}/evidence"), json!({ "degree_of_commitment": commitment })).await;
        let result = call(&app, "POST", &format!("/sessions/{id}/propagate"), json!({})).await;
        println!(
            "  degree_of_commitment={commitment}: P(specificity=high) = {:.3}, P(revision=yes) = {:.3}",
            result["posteriors"]["specificity"]["probabilities"]["high"].as_f64().unwrap(),
            result["revision"]["probabilities"]["yes"].as_f64().unwrap(),
        );
    }

    let rejected = call(&app, "PATCH", &format!("/sessions/{id}/evidence"), json!({ "stakeholders_expertise": "low" })).await;
    println!("  {}: {}", rejected["code"], rejected["message"]);
    Ok(())
}
