//! Command implementations behind the `gqlharvest` binary.
//!
//! Every command reads its inputs from files or endpoints and writes its
//! outputs to files; identical inputs give byte-identical outputs.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use gqlharvest_core::coverage::{coverage_of, coverage_universe, diff, CoverageOptions};
use gqlharvest_core::exec::Mode;
use gqlharvest_core::query::OperationKind;
use gqlharvest_core::report::summarize;
use gqlharvest_core::schema::{ingest_introspection, parse_sdl, SchemaModel, SchemaTuple};
use gqlharvest_core::store::{parse_timestamp, FilterSpec, QueryStore};
use gqlharvest_core::suite::{export_manifest, generate, import_manifest, SuiteResult, TestCase};
use gqlharvest_core::synth::{FaultSpec, Fixture};
use gqlharvest_net::{fetch_schema, run_suite, start_faultlab, start_recorder, HttpClient, RecorderConfig};

#[derive(Debug, Parser)]
#[command(name = "gqlharvest", version, about = "Harvest GraphQL traffic into schema-conformance tests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run the recording reverse proxy until interrupted.
    Record(RecordArgs),
    /// Generate a test manifest from a store.
    Generate(GenerateArgs),
    /// Replay a manifest against an endpoint.
    Run(RunArgs),
    /// Compute schema coverage of a manifest.
    Coverage(CoverageArgs),
    /// Summarize a pipeline run as a metric table.
    Report(ReportArgs),
    /// Serve a schema with synthetic data and injected faults.
    Faultlab(FaultlabArgs),
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: String,
    /// Upstream base URL, e.g. `http://127.0.0.1:4000`.
    #[arg(long)]
    pub upstream: String,
    #[arg(long, default_value = "/graphql/")]
    pub path: String,
    #[arg(long)]
    pub store: PathBuf,
    /// Compact the journal into a snapshot after this many observations.
    #[arg(long)]
    pub compact_every: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// SDL file, introspection JSON file, or http(s) endpoint.
    #[arg(long)]
    pub schema: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub min_calls: Option<u64>,
    /// Keep records last seen at or after this time.
    #[arg(long)]
    pub since: Option<String>,
    /// Keep records last seen at or before this time.
    #[arg(long)]
    pub until: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value_t = 4)]
    pub parallelism: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    pub timeout: f64,
    /// Shell command run once before the suite, e.g. to reset a staging database.
    #[arg(long)]
    pub pre_hook: Option<String>,
    /// Static header sent with every request, as `Name: value`.
    #[arg(long = "header")]
    pub headers: Vec<String>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long)]
    pub schema: String,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Reference tuple set to diff against (array of `{object, field}`).
    #[arg(long)]
    pub against: Option<PathBuf>,
    /// Count mutation-root tuples in the universe.
    #[arg(long)]
    pub include_mutation: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub schema: String,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Report written by `run`.
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Write the summary as JSON here as well.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FaultlabArgs {
    /// SDL file to serve.
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// FaultSpec JSON file; repeatable.
    #[arg(long = "fault")]
    pub faults: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:4000")]
    pub listen: String,
}

/// Runs one parsed command line. Errors map to exit code 2.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Cmd::Record(a) => record(a),
        Cmd::Generate(a) => generate_cmd(a),
        Cmd::Run(a) => run_cmd(a),
        Cmd::Coverage(a) => coverage_cmd(a),
        Cmd::Report(a) => report_cmd(a),
        Cmd::Faultlab(a) => faultlab(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn is_endpoint(src: &str) -> bool {
    src.starts_with("http://") || src.starts_with("https://")
}

/// Loads a schema from an SDL file, an introspection JSON file or a live endpoint.
pub fn load_schema(src: &str) -> Result<SchemaModel> {
    if is_endpoint(src) {
        let client = HttpClient::new(Duration::from_secs(30), &[])?;
        return fetch_schema(src, &client).with_context(|| format!("introspecting {src}"));
    }
    let text = fs::read_to_string(src).with_context(|| format!("reading schema {src}"))?;
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {src}"))?;
        Ok(ingest_introspection(&doc).with_context(|| format!("ingesting {src}"))?)
    } else {
        Ok(parse_sdl(&text).with_context(|| format!("parsing {src}"))?)
    }
}

fn load_manifest(path: &Path) -> Result<Vec<TestCase>> {
    if !path.exists() {
        bail!("manifest {} not found; create it with `gqlharvest generate`", path.display());
    }
    import_manifest(path).with_context(|| format!("reading manifest {}", path.display()))
}

fn load_store(path: &Path) -> Result<QueryStore> {
    if !path.is_dir() {
        bail!("store {} not found; capture traffic with `gqlharvest record`", path.display());
    }
    QueryStore::load(path).with_context(|| format!("reading store {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn record(a: RecordArgs) -> Result<ExitCode> {
    let handle = start_recorder(RecorderConfig {
        listen: a.listen,
        upstream: a.upstream,
        graphql_path: a.path,
        store_dir: Some(a.store),
        compact_every: a.compact_every,
        ..RecorderConfig::default()
    })?;
    println!("listening on http://{}", handle.addr());
    std::io::stdout().flush()?;
    let metrics = handle.wait_for_ctrl_c();
    print!("{}", metrics.render());
    Ok(ExitCode::SUCCESS)
}

fn generate_cmd(a: GenerateArgs) -> Result<ExitCode> {
    let schema = load_schema(&a.schema)?;
    let store = load_store(&a.store)?;
    let time = |s: &Option<String>| -> Result<_> {
        s.as_deref().map(|t| parse_timestamp(t).map_err(|e| anyhow!("bad timestamp '{t}': {e}"))).transpose()
    };
    let filter = FilterSpec {
        min_times_called: a.min_calls,
        since: time(&a.since)?,
        until: time(&a.until)?,
        operation_kind: None,
    };
    let records = store.export(&filter);
    let (cases, report) = generate(&records, &schema, Mode::default());
    export_manifest(&cases, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    for e in &report.errors {
        eprintln!(
            "skipped {} ({}): {}",
            e.key,
            e.operation_name.as_deref().unwrap_or("anonymous"),
            e.message
        );
    }
    eprintln!(
        "{} cases from {} records; {} mutations skipped, {} invalid",
        cases.len(),
        records.len(),
        report.skipped_mutations.len(),
        report.errors.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn parse_header(h: &str) -> Result<(String, String)> {
    let (k, v) = h
        .split_once(':')
        .ok_or_else(|| anyhow!("header '{h}' is not of the form 'Name: value'"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn run_cmd(a: RunArgs) -> Result<ExitCode> {
    let cases = load_manifest(&a.manifest)?;
    let headers = a.headers.iter().map(|h| parse_header(h)).collect::<Result<Vec<_>>>()?;
    if a.timeout.is_nan() || a.timeout <= 0.0 {
        bail!("--timeout must be positive");
    }
    let client = HttpClient::new(Duration::from_secs_f64(a.timeout), &headers)?;
    if let Some(hook) = &a.pre_hook {
        let status = Command::new("sh")
            .arg("-c")
            .arg(hook)
            .status()
            .with_context(|| format!("running pre-hook '{hook}'"))?;
        if !status.success() {
            bail!("pre-hook '{hook}' failed with {status}");
        }
    }
    let result = run_suite(&cases, &a.endpoint, a.parallelism.max(1), &client);
    let text = serde_json::to_string_pretty(&result)? + "\n";
    write_file(&a.report, &text)?;
    let t = result.totals;
    println!(
        "{} tests, {} passing, {} failing, {} assertions",
        t.tests, t.passing, t.failing, t.assertions_evaluated
    );
    Ok(if result.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Reads a tuple set: either a bare array or a coverage file's `covered_tuples`.
pub fn read_tuple_set(path: &Path) -> Result<BTreeSet<SchemaTuple>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let arr = match v {
        Value::Object(mut m) => m
            .remove("covered_tuples")
            .ok_or_else(|| anyhow!("{} has no covered_tuples", path.display()))?,
        other => other,
    };
    serde_json::from_value(arr).with_context(|| format!("{} is not a tuple array", path.display()))
}

fn coverage_cmd(a: CoverageArgs) -> Result<ExitCode> {
    let schema = load_schema(&a.schema)?;
    let cases = load_manifest(&a.manifest)?;
    let docs = cases
        .iter()
        .map(|c| c.document().with_context(|| format!("case {}", c.id)))
        .collect::<Result<Vec<_>>>()?;
    let options = CoverageOptions {
        include_mutation: a.include_mutation,
    };
    let report = coverage_of(&docs, &schema, options, Mode::default())?;
    let mut out = json!({
        "schema_tuples": report.schema_tuples,
        "covered": report.covered_tuples.len(),
        "schema_cov": report.schema_cov_percent,
        "entry_points_total": report.entry_points_total,
        "entry_points_covered": report.entry_points_covered,
        "covered_tuples": report.covered_tuples,
    });
    if let Some(path) = &a.against {
        let reference = read_tuple_set(path)?;
        let universe = coverage_universe(&schema, options);
        let d = diff(&reference, &report.covered_tuples, &universe);
        out["diff"] = json!({
            "distinct_tuples": d.distinct_tuples(),
            "only_in_reference": d.only_in_a,
            "only_in_manifest": d.only_in_b,
            "intersection": d.intersection,
            "uncovered_by_both": d.uncovered_by_both,
        });
    }
    write_file(&a.out, &(serde_json::to_string_pretty(&out)? + "\n"))?;
    println!(
        "{} of {} tuples covered ({})",
        report.covered_tuples.len(),
        report.schema_tuples,
        report.schema_cov_percent
    );
    Ok(ExitCode::SUCCESS)
}

fn report_cmd(a: ReportArgs) -> Result<ExitCode> {
    let schema = load_schema(&a.schema)?;
    let store = load_store(&a.store)?;
    let cases = load_manifest(&a.manifest)?;
    let result: Option<SuiteResult> = match &a.result {
        Some(p) => {
            if !p.exists() {
                bail!("result {} not found; produce it with `gqlharvest run --report`", p.display());
            }
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let unique = store
        .records()
        .filter(|r| r.operation_kind == OperationKind::Query)
        .count();
    let summary = summarize(&schema, unique, &cases, result.as_ref())?;
    print!("{}", summary.render_text());
    if let Some(out) = &a.out {
        write_file(out, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn faultlab(a: FaultlabArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.schema).with_context(|| format!("reading {}", a.schema.display()))?;
    let schema = parse_sdl(&text).with_context(|| format!("parsing {}", a.schema.display()))?;
    let faults = a
        .faults
        .iter()
        .map(|p| {
            let t = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            FaultSpec::parse(&t).with_context(|| format!("parsing {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let fixture = Fixture::new(schema, a.seed, faults)?;
    let handle = start_faultlab(fixture, &a.listen)?;
    println!("listening on {}", handle.url());
    std::io::stdout().flush()?;
    handle.wait_for_ctrl_c();
    Ok(ExitCode::SUCCESS)
}
