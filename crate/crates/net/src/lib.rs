//! Network side of the harvester: the recording reverse proxy, the fault
//! lab mock server, and the HTTP client used to replay suites.

pub mod client;
pub mod faultlab;
pub mod proxy;
mod server;

pub use client::{fetch_schema, run_suite, HttpClient};
pub use faultlab::{start_faultlab, FaultlabHandle};
pub use proxy::{start_recorder, MetricsSnapshot, RecorderConfig, RecorderHandle};
pub use server::ServerHandle;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid upstream url '{0}'")]
    Upstream(String),
    #[error("runtime: {0}")]
    Runtime(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] gqlharvest_core::store::StoreError),
    #[error("http: {0}")]
    Http(String),
    #[error("schema: {0}")]
    Schema(#[from] gqlharvest_core::schema::SchemaError),
}
