//! HTTP front end: `POST /query` and `GET /healthz` over a shared engine.

use std::sync::Arc;

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use oceanq::Engine;
use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    question: String,
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    format_version: Option<u32>,
    documents: u64,
    paragraphs: u64,
    pairs: u64,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, message: String) -> Response {
    let body = serde_json::to_string(&ErrorBody { error: message }).expect("error body serializes");
    json_response(status, body)
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new().route("/query", post(query)).route("/healthz", get(health)).with_state(engine)
}

async fn query(State(engine): State<Arc<Engine>>, body: Bytes) -> Response {
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, format!("malformed request: {e}")),
    };
    let result = tokio::task::spawn_blocking(move || engine.answer(&req.question)).await;
    match result {
        Ok(Ok(r)) => json_response(StatusCode::OK, r.to_json_line()),
        Ok(Err(e)) if e.is_input_error() => error_response(StatusCode::BAD_REQUEST, e.to_string()),
        Ok(Err(e)) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health(State(engine): State<Arc<Engine>>) -> Response {
    let stats = &engine.ocean().stats;
    let body = Health {
        status: "ok",
        format_version: engine.manifest().map(|m| m.format_version),
        documents: stats.num_documents,
        paragraphs: stats.num_paragraphs,
        pairs: stats.num_pairs,
    };
    json_response(StatusCode::OK, serde_json::to_string(&body).expect("health serializes"))
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutting down");
}

pub fn serve(engine: Engine, host: &str, port: u16) -> Result<()> {
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async {
        let listener =
            tokio::net::TcpListener::bind((host, port)).await.with_context(|| format!("binding {host}:{port}"))?;
        let addr = listener.local_addr()?;
        eprintln!("listening on http://{addr}");
        axum::serve(listener, router(Arc::new(engine)))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .context("serving")
    })
}
