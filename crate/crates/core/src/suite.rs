//! Test cases materialized from harvested queries, the portable manifest
//! format, and the suite runner.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::exec::{self, Mode};
use crate::oracle::{derive_oracles, validate, OracleTree, ValidationReport};
use crate::query::{parse_operation, OperationKind, QueryDocument, QueryError};
use crate::schema::SchemaModel;
use crate::store::QueryRecord;

/// Where a test case came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub key: String,
    pub times_called: u64,
    pub created_at: String,
    pub updated_at: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub query: String,
    pub variables: Value,
    pub operation_name: Option<String>,
    pub oracle: OracleTree,
    pub origin: Origin,
}

impl TestCase {
    /// `{query, variables, operationName}` as POSTed to the endpoint.
    pub fn request_body(&self) -> Value {
        serde_json::json!({
            "query": self.query,
            "variables": self.variables,
            "operationName": self.operation_name,
        })
    }

    pub fn document(&self) -> Result<QueryDocument, QueryError> {
        parse_operation(&self.query, self.operation_name.as_deref())
    }

    /// Response keys of the top-level selections.
    pub fn entry_points(&self) -> Vec<String> {
        self.oracle.root.iter().map(|f| f.response_key.clone()).collect()
    }
}

/// `<operation name or "anonymous">-<8 hex digits of the key>`.
pub fn case_id(record: &QueryRecord) -> String {
    let name = record.operation_name.as_deref().unwrap_or("anonymous");
    format!("{name}-{}", record.key.short())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationError {
    pub key: String,
    pub operation_name: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    /// Keys of mutation records, which are never replayed.
    pub skipped_mutations: Vec<String>,
    pub errors: Vec<GenerationError>,
}

/// One test case per QUERY record, in record order. Mutations and records
/// that no longer derive against `schema` are reported, not fatal.
pub fn generate(
    records: &[QueryRecord],
    schema: &SchemaModel,
    mode: Mode,
) -> (Vec<TestCase>, GenerationReport) {
    let derived = exec::map(mode, records, |r| {
        if r.operation_kind == OperationKind::Mutation {
            return None;
        }
        Some(
            parse_operation(&r.query, r.operation_name.as_deref())
                .and_then(|doc| derive_oracles(schema, &doc)),
        )
    });
    let mut cases = Vec::new();
    let mut report = GenerationReport::default();
    for (r, d) in records.iter().zip(derived) {
        match d {
            None => {
                tracing::info!(key = %r.key, "skipping mutation record");
                report.skipped_mutations.push(r.key.to_hex());
            }
            Some(Err(e)) => {
                tracing::warn!(key = %r.key, error = %e, "cannot derive oracles");
                report.errors.push(GenerationError {
                    key: r.key.to_hex(),
                    operation_name: r.operation_name.clone(),
                    message: e.to_string(),
                });
            }
            Some(Ok(oracle)) => cases.push(TestCase {
                id: case_id(r),
                query: r.query.clone(),
                variables: r.variables.clone(),
                operation_name: r.operation_name.clone(),
                oracle,
                origin: Origin {
                    key: r.key.to_hex(),
                    times_called: r.times_called,
                    created_at: crate::store::format_timestamp(&r.created_at),
                    updated_at: crate::store::format_timestamp(&r.updated_at),
                },
            }),
        }
    }
    (cases, report)
}

pub fn manifest_string(cases: &[TestCase]) -> String {
    let mut out = String::new();
    for c in cases {
        out.push_str(&serde_json::to_string(c).expect("test case serializes"));
        out.push('\n');
    }
    out
}

pub fn export_manifest(cases: &[TestCase], path: &Path) -> std::io::Result<()> {
    std::fs::write(path, manifest_string(cases))
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("manifest line {line}: {message}")]
    Format { line: usize, message: String },
}

pub fn parse_manifest(text: &str) -> Result<Vec<TestCase>, ManifestError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| ManifestError::Format {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn import_manifest(path: &Path) -> Result<Vec<TestCase>, ManifestError> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

/// Result of one HTTP exchange: status and body, or a transport error.
pub type Exchange = Result<(u16, Vec<u8>), String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: String,
    pub entry_points: Vec<String>,
    pub report: ValidationReport,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub tests: usize,
    pub passing: usize,
    pub failing: usize,
    pub assertions_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub totals: Totals,
    pub wall_time_secs: f64,
    pub cases: Vec<CaseResult>,
}

impl SuiteResult {
    pub fn from_cases(mut cases: Vec<CaseResult>, wall_time: Duration) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let passing = cases.iter().filter(|c| c.report.passed).count();
        SuiteResult {
            totals: Totals {
                tests: cases.len(),
                passing,
                failing: cases.len() - passing,
                assertions_evaluated: cases.iter().map(|c| c.report.assertions_evaluated).sum(),
            },
            wall_time_secs: wall_time.as_secs_f64(),
            cases,
        }
    }

    pub fn passed(&self) -> bool {
        self.totals.failing == 0
    }
}

/// Runs every case through `exchange` on up to `parallelism` workers.
pub fn run_with<F>(cases: &[TestCase], parallelism: usize, exchange: F) -> SuiteResult
where
    F: Fn(&TestCase) -> Exchange + Sync + Send,
{
    let start = Instant::now();
    let results = exec::map_bounded(parallelism, cases, |c| {
        let report = match exchange(c) {
            Ok((status, body)) => validate(&c.oracle, status, &body),
            Err(msg) => ValidationReport::transport_failure(msg),
        };
        CaseResult {
            id: c.id.clone(),
            entry_points: c.entry_points(),
            report,
        }
    });
    SuiteResult::from_cases(results, start.elapsed())
}
