//! Recording reverse proxy.
//!
//! Every request is forwarded to the upstream unchanged. GraphQL requests on
//! the configured path are additionally parsed, canonicalized and handed to a
//! single store-writer thread through an ordered queue once the upstream has
//! answered; the client's response never waits on the store.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::extract::{Request, State};
use axum::http::{HeaderMap, HeaderName, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use bytes::Bytes;
use serde::Serialize;
use serde_json::Value;

use gqlharvest_core::query::{canonicalize, parse_operation};
use gqlharvest_core::store::{now_seconds, Observation, QueryStore};

use crate::server::{self, ServerHandle};
use crate::NetError;

/// Path of the plain-text counters, served by the proxy itself.
pub const METRICS_PATH: &str = "/_harvest/metrics";

const MAX_BODY: usize = 32 * 1024 * 1024;

const HOP_BY_HOP: [&str; 10] = [
    "connection",
    "keep-alive",
    "proxy-authenticate",
    "proxy-authorization",
    "te",
    "trailer",
    "transfer-encoding",
    "upgrade",
    "proxy-connection",
    "content-length",
];

#[derive(Debug, Clone)]
pub struct RecorderConfig {
    pub listen: String,
    /// Base URL of the upstream, e.g. `http://127.0.0.1:8000`.
    pub upstream: String,
    pub graphql_path: String,
    /// `None` keeps the store in memory only.
    pub store_dir: Option<PathBuf>,
    /// Compact the store after this many journaled events.
    pub compact_every: Option<u64>,
    pub worker_threads: usize,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:0".into(),
            upstream: "http://127.0.0.1:8000".into(),
            graphql_path: "/graphql/".into(),
            store_dir: None,
            compact_every: None,
            worker_threads: 4,
        }
    }
}

#[derive(Debug, Default)]
struct Metrics {
    requests_total: AtomicU64,
    /// Parseable GraphQL operations handed to the writer.
    graphql_requests_total: AtomicU64,
    parse_failures_total: AtomicU64,
    upstream_failures_total: AtomicU64,
    journaled_total: AtomicU64,
    storage_errors_total: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetricsSnapshot {
    pub requests_total: u64,
    pub graphql_requests_total: u64,
    pub parse_failures_total: u64,
    pub upstream_failures_total: u64,
    pub journaled_total: u64,
    pub storage_errors_total: u64,
    pub unique_queries: u64,
}

impl MetricsSnapshot {
    pub fn render(&self) -> String {
        format!(
            "requests_total {}\ngraphql_requests_total {}\nparse_failures_total {}\nupstream_failures_total {}\njournaled_total {}\nstorage_errors_total {}\nunique_queries {}\n",
            self.requests_total,
            self.graphql_requests_total,
            self.parse_failures_total,
            self.upstream_failures_total,
            self.journaled_total,
            self.storage_errors_total,
            self.unique_queries
        )
    }
}

struct ProxyState {
    client: reqwest::Client,
    upstream: String,
    graphql_path: String,
    queue: mpsc::Sender<Observation>,
    metrics: Arc<Metrics>,
    store: Arc<Mutex<QueryStore>>,
}

fn snapshot(metrics: &Metrics, store: &Mutex<QueryStore>) -> MetricsSnapshot {
    let unique = store.lock().map(|s| s.len() as u64).unwrap_or(0);
    MetricsSnapshot {
        requests_total: metrics.requests_total.load(Ordering::SeqCst),
        graphql_requests_total: metrics.graphql_requests_total.load(Ordering::SeqCst),
        parse_failures_total: metrics.parse_failures_total.load(Ordering::SeqCst),
        upstream_failures_total: metrics.upstream_failures_total.load(Ordering::SeqCst),
        journaled_total: metrics.journaled_total.load(Ordering::SeqCst),
        storage_errors_total: metrics.storage_errors_total.load(Ordering::SeqCst),
        unique_queries: unique,
    }
}

/// One GraphQL operation as sent by a client.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphqlRequest {
    pub query: String,
    pub variables: Value,
    pub operation_name: Option<String>,
}

fn from_json_object(v: &Value) -> Option<GraphqlRequest> {
    let query = v.get("query")?.as_str()?.to_string();
    let variables = match v.get("variables") {
        Some(Value::String(s)) => serde_json::from_str(s).unwrap_or(Value::Null),
        Some(other) => other.clone(),
        None => Value::Null,
    };
    let operation_name = v.get("operationName").and_then(Value::as_str).map(str::to_string);
    Some(GraphqlRequest {
        query,
        variables,
        operation_name,
    })
}

/// GraphQL operations carried by a request: a POST body with a `query`
/// member (or a batch array of such objects), or GET query parameters.
pub fn extract_graphql(method: &Method, query_string: Option<&str>, body: &[u8]) -> Vec<GraphqlRequest> {
    if *method == Method::GET {
        let Some(qs) = query_string else { return Vec::new() };
        let Ok(url) = reqwest::Url::parse(&format!("http://x/?{qs}")) else {
            return Vec::new();
        };
        let mut obj = serde_json::Map::new();
        for (k, v) in url.query_pairs() {
            obj.insert(k.into_owned(), Value::String(v.into_owned()));
        }
        return from_json_object(&Value::Object(obj)).into_iter().collect();
    }
    if *method != Method::POST {
        return Vec::new();
    }
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Array(items)) => items.iter().filter_map(from_json_object).collect(),
        Ok(v) => from_json_object(&v).into_iter().collect(),
        Err(_) => Vec::new(),
    }
}

fn path_matches(path: &str, graphql_path: &str) -> bool {
    path.trim_end_matches('/') == graphql_path.trim_end_matches('/')
}

fn filtered(headers: &HeaderMap, drop_host: bool) -> HeaderMap {
    let mut out = HeaderMap::with_capacity(headers.len());
    let listed: Vec<HeaderName> = headers
        .get_all("connection")
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .filter_map(|n| HeaderName::from_bytes(n.trim().as_bytes()).ok())
        .collect();
    for (name, value) in headers {
        let n = name.as_str();
        if HOP_BY_HOP.contains(&n) || listed.contains(name) || (drop_host && n == "host") {
            continue;
        }
        out.append(name.clone(), value.clone());
    }
    out
}

async fn metrics_handler(State(st): State<Arc<ProxyState>>) -> impl IntoResponse {
    snapshot(&st.metrics, &st.store).render()
}

async fn forward(State(st): State<Arc<ProxyState>>, req: Request) -> Response {
    st.metrics.requests_total.fetch_add(1, Ordering::SeqCst);
    let (parts, body) = req.into_parts();
    let body: Bytes = match axum::body::to_bytes(body, MAX_BODY).await {
        Ok(b) => b,
        Err(_) => return (StatusCode::PAYLOAD_TOO_LARGE, "request body too large").into_response(),
    };
    let path_and_query = parts.uri.path_and_query().map_or("/", |p| p.as_str());
    let url = format!("{}{}", st.upstream, path_and_query);
    let upstream = st
        .client
        .request(parts.method.clone(), &url)
        .headers(filtered(&parts.headers, true))
        .body(body.clone())
        .send()
        .await;
    let resp = match upstream {
        Ok(r) => r,
        Err(e) => {
            st.metrics.upstream_failures_total.fetch_add(1, Ordering::SeqCst);
            tracing::warn!(error = %e, %url, "upstream unreachable");
            return (StatusCode::BAD_GATEWAY, "upstream unreachable").into_response();
        }
    };
    let status = resp.status();
    let headers = filtered(resp.headers(), false);
    let bytes = match resp.bytes().await {
        Ok(b) => b,
        Err(e) => {
            st.metrics.upstream_failures_total.fetch_add(1, Ordering::SeqCst);
            tracing::warn!(error = %e, %url, "upstream body failed");
            return (StatusCode::BAD_GATEWAY, "upstream body failed").into_response();
        }
    };
    if path_matches(parts.uri.path(), &st.graphql_path) {
        record(&st, &parts.method, parts.uri.query(), &body);
    }
    let mut out = Response::new(Body::from(bytes));
    *out.status_mut() = status;
    *out.headers_mut() = headers;
    out
}

fn record(st: &ProxyState, method: &Method, query_string: Option<&str>, body: &[u8]) {
    let ops = extract_graphql(method, query_string, body);
    if ops.is_empty() && *method == Method::POST {
        st.metrics.parse_failures_total.fetch_add(1, Ordering::SeqCst);
        return;
    }
    for op in ops {
        let doc = match parse_operation(&op.query, op.operation_name.as_deref()) {
            Ok(d) => d,
            Err(e) => {
                st.metrics.parse_failures_total.fetch_add(1, Ordering::SeqCst);
                tracing::debug!(error = %e, "unparseable GraphQL request");
                continue;
            }
        };
        let variables = if op.variables.is_null() {
            Value::Object(Default::default())
        } else {
            op.variables
        };
        let ev = Observation {
            key: canonicalize(&doc, &variables),
            query: op.query,
            variables,
            operation_name: op.operation_name.or_else(|| doc.operation_name.clone()),
            operation_kind: doc.operation_kind,
            ts: now_seconds(),
        };
        st.metrics.graphql_requests_total.fetch_add(1, Ordering::SeqCst);
        let _ = st.queue.send(ev);
    }
}

fn writer_loop(
    rx: mpsc::Receiver<Observation>,
    store: Arc<Mutex<QueryStore>>,
    metrics: Arc<Metrics>,
    compact_every: Option<u64>,
) {
    let mut since_compaction = 0u64;
    for ev in rx {
        let Ok(mut s) = store.lock() else { return };
        match s.record(ev) {
            Ok(_) => {
                metrics.journaled_total.fetch_add(1, Ordering::SeqCst);
            }
            Err(e) => {
                metrics.storage_errors_total.fetch_add(1, Ordering::SeqCst);
                tracing::error!(error = %e, "journal write failed");
            }
        }
        since_compaction += 1;
        if compact_every.is_some_and(|n| since_compaction >= n) {
            since_compaction = 0;
            if let Err(e) = s.compact() {
                tracing::error!(error = %e, "compaction failed");
            }
        }
    }
    if let Ok(mut s) = store.lock() {
        if let Err(e) = s.compact() {
            tracing::error!(error = %e, "final compaction failed");
        }
    }
}

/// A running recorder. [`stop`](Self::stop) drains the queue and compacts.
pub struct RecorderHandle {
    server: Option<ServerHandle>,
    writer: Option<JoinHandle<()>>,
    metrics: Arc<Metrics>,
    store: Arc<Mutex<QueryStore>>,
}

impl RecorderHandle {
    pub fn addr(&self) -> SocketAddr {
        self.server.as_ref().expect("running").addr()
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        snapshot(&self.metrics, &self.store)
    }

    /// Runs `f` on a consistent view of the store.
    pub fn with_store<T>(&self, f: impl FnOnce(&QueryStore) -> T) -> T {
        let s = self.store.lock().expect("store lock");
        f(&s)
    }

    /// Waits until every accepted GraphQL request has been journaled.
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        loop {
            let m = self.metrics();
            if m.journaled_total + m.storage_errors_total >= m.graphql_requests_total {
                return true;
            }
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
    }

    pub fn stop(mut self) -> MetricsSnapshot {
        self.shutdown();
        self.metrics()
    }

    pub fn wait_for_ctrl_c(mut self) -> MetricsSnapshot {
        if let Some(s) = self.server.take() {
            s.wait_for_ctrl_c();
        }
        self.shutdown();
        self.metrics()
    }

    fn shutdown(&mut self) {
        if let Some(s) = self.server.take() {
            s.stop();
        }
        if let Some(w) = self.writer.take() {
            let _ = w.join();
        }
    }
}

impl Drop for RecorderHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

pub fn start_recorder(config: RecorderConfig) -> Result<RecorderHandle, NetError> {
    let upstream = config.upstream.trim_end_matches('/').to_string();
    reqwest::Url::parse(&upstream).map_err(|_| NetError::Upstream(config.upstream.clone()))?;
    let store = match &config.store_dir {
        Some(dir) => QueryStore::open(dir)?,
        None => QueryStore::in_memory(),
    };
    let store = Arc::new(Mutex::new(store));
    let metrics = Arc::new(Metrics::default());
    let (tx, rx) = mpsc::channel();
    let writer = {
        let (store, metrics) = (store.clone(), metrics.clone());
        std::thread::Builder::new()
            .name("store-writer".into())
            .spawn(move || writer_loop(rx, store, metrics, config.compact_every))?
    };
    let client = reqwest::Client::builder()
        .redirect(reqwest::redirect::Policy::none())
        .build()
        .map_err(|e| NetError::Http(e.to_string()))?;
    let state = Arc::new(ProxyState {
        client,
        upstream,
        graphql_path: config.graphql_path.clone(),
        queue: tx,
        metrics: metrics.clone(),
        store: store.clone(),
    });
    let app = Router::new()
        .route(METRICS_PATH, get(metrics_handler))
        .fallback(forward)
        .with_state(state);
    let listener = server::bind(&config.listen)?;
    let server = server::spawn(listener, app, config.worker_threads)?;
    tracing::info!(addr = %server.addr(), upstream = %config.upstream, "recorder listening");
    Ok(RecorderHandle {
        server: Some(server),
        writer: Some(writer),
        metrics,
        store,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn post_get_and_batch_extraction() {
        let one = extract_graphql(&Method::POST, None, br#"{"query":"{ a }","variables":{"x":1},"operationName":null}"#);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].variables, serde_json::json!({"x": 1}));
        let batch = extract_graphql(&Method::POST, None, br#"[{"query":"{ a }"},{"query":"{ b }"},{"nope":1}]"#);
        assert_eq!(batch.len(), 2);
        let get = extract_graphql(
            &Method::GET,
            Some("query=%7B%20a%20%7D&variables=%7B%22x%22%3A2%7D&operationName=Q"),
            b"",
        );
        assert_eq!(get[0].query, "{ a }");
        assert_eq!(get[0].variables, serde_json::json!({"x": 2}));
        assert_eq!(get[0].operation_name.as_deref(), Some("Q"));
        assert!(extract_graphql(&Method::POST, None, b"not json").is_empty());
        assert!(extract_graphql(&Method::PUT, None, br#"{"query":"{ a }"}"#).is_empty());
    }

    #[test]
    fn hop_by_hop_headers_are_dropped() {
        let mut h = HeaderMap::new();
        h.insert("connection", "close, x-secret".parse().unwrap());
        h.insert("x-secret", "1".parse().unwrap());
        h.insert("transfer-encoding", "chunked".parse().unwrap());
        h.insert("host", "a".parse().unwrap());
        h.insert("x-kept", "2".parse().unwrap());
        let out = filtered(&h, true);
        assert_eq!(out.len(), 1);
        assert!(out.contains_key("x-kept"));
    }

    #[test]
    fn graphql_path_ignores_trailing_slash() {
        assert!(path_matches("/graphql", "/graphql/"));
        assert!(path_matches("/graphql/", "/graphql/"));
        assert!(!path_matches("/graphql/x", "/graphql/"));
    }
}
