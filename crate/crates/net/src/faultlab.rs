//! HTTP front end of the fault lab: serves a [`Fixture`] on `/graphql/`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{RawQuery, State};
use axum::http::{header, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;

use gqlharvest_core::synth::{Fixture, Reply};

use crate::proxy::extract_graphql;
use crate::server::{self, ServerHandle};
use crate::NetError;

fn reply(r: Reply) -> Response {
    let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], r.body).into_response()
}

async fn graphql_post(State(fx): State<Arc<Fixture>>, body: Bytes) -> Response {
    reply(fx.handle(&body))
}

async fn graphql_get(State(fx): State<Arc<Fixture>>, RawQuery(q): RawQuery) -> Response {
    match extract_graphql(&Method::GET, q.as_deref(), b"").into_iter().next() {
        Some(op) => reply(fx.execute(&op.query, &op.variables, op.operation_name.as_deref())),
        None => (StatusCode::BAD_REQUEST, "missing query parameter").into_response(),
    }
}

/// A running fault-lab server.
pub struct FaultlabHandle {
    server: ServerHandle,
}

impl FaultlabHandle {
    pub fn addr(&self) -> SocketAddr {
        self.server.addr()
    }

    /// Base URL, e.g. `http://127.0.0.1:41234`.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr())
    }

    /// GraphQL endpoint URL.
    pub fn url(&self) -> String {
        format!("{}/graphql/", self.base_url())
    }

    pub fn stop(self) {
        self.server.stop();
    }

    pub fn wait_for_ctrl_c(self) {
        self.server.wait_for_ctrl_c();
    }
}

pub fn start_faultlab(fixture: Fixture, listen: &str) -> Result<FaultlabHandle, NetError> {
    let fx = Arc::new(fixture);
    let app = Router::new()
        .route("/graphql/", post(graphql_post).get(graphql_get))
        .route("/graphql", post(graphql_post).get(graphql_get))
        .route("/health", get(|| async { "ok" }))
        .with_state(fx);
    let listener = server::bind(listen)?;
    let server = server::spawn(listener, app, 4)?;
    tracing::info!(addr = %server.addr(), "faultlab listening");
    Ok(FaultlabHandle { server })
}
