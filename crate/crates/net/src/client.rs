//! Blocking HTTP client for suite replay and schema fetching.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::{HeaderMap, HeaderName, HeaderValue, CONTENT_TYPE};
use serde_json::Value;

use gqlharvest_core::schema::{ingest_introspection, SchemaModel, INTROSPECTION_QUERY};
use gqlharvest_core::suite::{run_with, Exchange, SuiteResult, TestCase};

use crate::NetError;

#[derive(Debug, Clone)]
pub struct HttpClient {
    client: Client,
}

impl HttpClient {
    /// `headers` are sent with every request, e.g. `("Authorization", "Bearer x")`.
    pub fn new(timeout: Duration, headers: &[(String, String)]) -> Result<Self, NetError> {
        let mut map = HeaderMap::new();
        for (k, v) in headers {
            let name = HeaderName::from_bytes(k.as_bytes()).map_err(|e| NetError::Http(format!("header {k}: {e}")))?;
            let value = HeaderValue::from_str(v).map_err(|e| NetError::Http(format!("header {k}: {e}")))?;
            map.append(name, value);
        }
        let client = Client::builder()
            .timeout(timeout)
            .default_headers(map)
            .build()
            .map_err(|e| NetError::Http(e.to_string()))?;
        Ok(Self { client })
    }

    /// POSTs a JSON body; transport errors and timeouts become `Err`.
    pub fn post_json(&self, url: &str, body: &Value) -> Exchange {
        let resp = self
            .client
            .post(url)
            .header(CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send()
            .map_err(describe)?;
        let status = resp.status().as_u16();
        let bytes = resp.bytes().map_err(describe)?;
        Ok((status, bytes.to_vec()))
    }
}

fn describe(e: reqwest::Error) -> String {
    if e.is_timeout() {
        format!("timeout: {e}")
    } else if e.is_connect() {
        format!("connect: {e}")
    } else {
        e.to_string()
    }
}

/// Replays every case against `endpoint` with up to `parallelism` requests
/// in flight. Results are ordered by case id.
pub fn run_suite(cases: &[TestCase], endpoint: &str, parallelism: usize, client: &HttpClient) -> SuiteResult {
    run_with(cases, parallelism, |c| client.post_json(endpoint, &c.request_body()))
}

/// Fetches a schema from a live endpoint with the standard introspection query.
pub fn fetch_schema(endpoint: &str, client: &HttpClient) -> Result<SchemaModel, NetError> {
    let body = serde_json::json!({ "query": INTROSPECTION_QUERY, "variables": {} });
    let (status, bytes) = client.post_json(endpoint, &body).map_err(NetError::Http)?;
    if status != 200 {
        return Err(NetError::Http(format!("introspection returned status {status}")));
    }
    let doc: Value = serde_json::from_slice(&bytes).map_err(|e| NetError::Http(format!("introspection body: {e}")))?;
    Ok(ingest_introspection(&doc)?)
}
