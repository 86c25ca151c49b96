//! Acceptance criteria 1 to 10, run in order with one PASS/FAIL line each.
//! Exits nonzero if any criterion fails or exceeds its time budget.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use gqlharvest_core::coverage::{coverage_of, diff, CoverageOptions};
use gqlharvest_core::exec::Mode;
use gqlharvest_core::fixtures::{GET_TEASERS_QUERY, GET_TEASERS_RESPONSE, TEASER_SCHEMA_SDL};
use gqlharvest_core::oracle::{count_planned_assertions, derive_oracles, validate, Check, Verdict};
use gqlharvest_core::query::{canonicalize, parse_operation, parse_query, reached_tuples};
use gqlharvest_core::report::failure_groups;
use gqlharvest_core::schema::{parse_sdl, SchemaTuple};
use gqlharvest_core::store::{Observation, QueryStore};
use gqlharvest_core::suite::generate;
use gqlharvest_core::synth::random::{random_query, random_schema};
use gqlharvest_core::synth::{conformant_response, FaultKind, FaultSpec, Fixture};
use gqlharvest_net::{run_suite, start_faultlab, start_recorder, HttpClient, RecorderConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

/// Per key: times_called, created_at, updated_at, query.
type FoldedState = BTreeMap<String, (u64, String, String, String)>;

type Criterion = (&'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn tuple(o: &str, f: &str) -> SchemaTuple {
    SchemaTuple {
        object: o.into(),
        field: f.into(),
    }
}

fn client() -> HttpClient {
    HttpClient::new(Duration::from_secs(10), &[]).expect("client")
}

fn c1_tuple_universe() -> Outcome {
    let schema = parse_sdl(TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    let n = schema.tuple_universe().len();
    ensure!(n == 13, "expected 13 tuples, got {n}");
    Ok("13 tuples".into())
}

fn c2_static_coverage() -> Outcome {
    let schema = parse_sdl(TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    let doc = parse_query(GET_TEASERS_QUERY).map_err(|e| e.to_string())?;
    let reached = reached_tuples(&doc, &schema).map_err(|e| e.to_string())?;
    let expected: BTreeSet<_> = [
        tuple("Query", "teasers"),
        tuple("Teaser", "title"),
        tuple("Teaser", "subTitle"),
        tuple("Teaser", "url"),
    ]
    .into();
    ensure!(reached == expected, "reached {reached:?}");
    let cov = coverage_of(&[doc], &schema, CoverageOptions::default(), Mode::default()).map_err(|e| e.to_string())?;
    ensure!(cov.schema_cov_percent == "30.8%", "rendered {}", cov.schema_cov_percent);
    Ok(format!("4/13 = {}", cov.schema_cov_percent))
}

fn c3_assertion_count() -> Outcome {
    let schema = parse_sdl(TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    let doc = parse_query(GET_TEASERS_QUERY).map_err(|e| e.to_string())?;
    let tree = derive_oracles(&schema, &doc).map_err(|e| e.to_string())?;
    let report = validate(&tree, 200, GET_TEASERS_RESPONSE.as_bytes());
    ensure!(report.passed, "failures: {:?}", report.failures().collect::<Vec<_>>());
    ensure!(report.assertions_evaluated == 22, "evaluated {}", report.assertions_evaluated);
    Ok("passed, 22 assertions".into())
}

/// Records `requests` through a proxy in front of `lab_url`, then generates
/// the suite from the captured store.
fn harvest(lab_url: &str, requests: &[Value], schema_sdl: &str) -> Result<Vec<gqlharvest_core::suite::TestCase>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rec = start_recorder(RecorderConfig {
        listen: "127.0.0.1:0".into(),
        upstream: lab_url.into(),
        store_dir: Some(dir.path().into()),
        ..RecorderConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let proxied = format!("http://{}/graphql/", rec.addr());
    let c = client();
    for r in requests {
        c.post_json(&proxied, r)?;
    }
    ensure!(rec.wait_idle(Duration::from_secs(5)), "recorder did not drain");
    rec.stop();
    let store = QueryStore::load(dir.path()).map_err(|e| e.to_string())?;
    let schema = parse_sdl(schema_sdl).map_err(|e| e.to_string())?;
    let records = store.export(&Default::default());
    let (cases, report) = generate(&records, &schema, Mode::default());
    ensure!(report.errors.is_empty(), "generation errors {:?}", report.errors);
    Ok(cases)
}

const UNPUBLISHED_URL_FAULT: &str = r#"{"id":"unpublished-url","kind":"NULL_NONNULL_FIELD",
  "target":{"object":"Teaser","field":"url"},
  "trigger":{"sibling":{"field":"publishedOnSite","in":[false,null]}}}"#;

fn c4_fault_detection() -> Outcome {
    let schema = parse_sdl(TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    let fault = FaultSpec::parse(UNPUBLISHED_URL_FAULT).map_err(|e| e.to_string())?;
    // First seed whose two teasers include an unpublished one.
    let seed = (0..256)
        .find(|s| {
            let fx = Fixture::new(schema.clone(), *s, vec![]).expect("fixture");
            let r = fx.execute("{ teasers(first: 2) { publishedOnSite } }", &json!({}), None);
            let v: Value = serde_json::from_slice(&r.body).expect("json");
            v["data"]["teasers"]
                .as_array()
                .is_some_and(|ts| ts.iter().any(|t| t.is_object() && t["publishedOnSite"] != json!(true)))
        })
        .ok_or("no seed yields an unpublished teaser")?;
    let fx = Fixture::new(schema, seed, vec![fault]).map_err(|e| e.to_string())?;
    let lab = start_faultlab(fx, "127.0.0.1:0").map_err(|e| e.to_string())?;
    let cases = harvest(&lab.base_url(), &[json!({"query": GET_TEASERS_QUERY})], TEASER_SCHEMA_SDL)?;
    ensure!(cases.len() == 1, "expected one case, got {}", cases.len());
    let result = run_suite(&cases, &lab.url(), 1, &client());
    let case = &result.cases[0];
    ensure!(case.id.starts_with("GetTeasers-"), "case id {}", case.id);
    let fails: Vec<_> = case.report.failures().collect();
    ensure!(!fails.is_empty(), "GetTeasers passed against the faulty server");
    let url_path = |p: &str| {
        p.strip_prefix("data.teasers[")
            .and_then(|r| r.strip_suffix("].url"))
            .is_some_and(|i| i.parse::<usize>().is_ok())
    };
    for f in &fails {
        ensure!(f.check == Check::NotNull && url_path(&f.path), "unexpected failure {f:?}");
    }
    Ok(format!("seed {seed}: NOT_NULL at {}", fails[0].path))
}

fn c5_fault_kinds() -> Outcome {
    let requests = [
        json!({"query": "query Teasers { teasers(first: 3) { title subTitle url duration } }"}),
        json!({"query": "query Video($id: ID!) { video(id: $id) { id title videoType teaser { title } } }", "variables": {"id": "v1"}}),
    ];
    let specs: [(FaultKind, &str, &str, &str); 7] = [
        (FaultKind::NullNonnullField, r#"{"object":"Teaser","field":"url"}"#, "teasers", "data.teasers[*].url"),
        (FaultKind::WrongScalarType, r#"{"object":"Teaser","field":"duration"}"#, "teasers", "data.teasers[*].duration"),
        (FaultKind::MissingField, r#"{"object":"Teaser","field":"subTitle"}"#, "teasers", "data.teasers[*].subTitle"),
        (FaultKind::NonMemberEnum, r#"{"object":"Video","field":"videoType"}"#, "video", "data.video.videoType"),
        (FaultKind::ListAsScalar, r#"{"entry_point":"teasers"}"#, "teasers", "data.teasers"),
        (FaultKind::ErrorsMember, r#"{"entry_point":"video"}"#, "video", "errors"),
        (FaultKind::Http5xx, r#"{"entry_point":"teasers"}"#, "teasers", "$status"),
    ];
    let schema = parse_sdl(TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    let clean = start_faultlab(Fixture::new(schema.clone(), 1, vec![]).map_err(|e| e.to_string())?, "127.0.0.1:0")
        .map_err(|e| e.to_string())?;
    let cases = harvest(&clean.base_url(), &requests, TEASER_SCHEMA_SDL)?;
    ensure!(run_suite(&cases, &clean.url(), 2, &client()).passed(), "suite fails without faults");
    let mut detected = 0;
    for (kind, target, entry, path) in specs {
        let kind_name = serde_json::to_value(kind).map_err(|e| e.to_string())?;
        let text = format!(r#"{{"id":"k","kind":{kind_name},"target":{target}}}"#);
        let spec = FaultSpec::parse(&text).map_err(|e| e.to_string())?;
        let fx = Fixture::new(schema.clone(), 1, vec![spec]).map_err(|e| e.to_string())?;
        let lab = start_faultlab(fx, "127.0.0.1:0").map_err(|e| e.to_string())?;
        let result = run_suite(&cases, &lab.url(), 2, &client());
        ensure!(result.totals.failing >= 1, "{kind_name}: no failing test");
        let groups = failure_groups(&result);
        ensure!(groups.len() == 1, "{kind_name}: expected one failure group, got {groups:?}");
        let g = &groups[0];
        ensure!(
            g.entry_point == entry && g.path == path,
            "{kind_name}: group ({}, {}) does not name the target ({entry}, {path})",
            g.entry_point,
            g.path
        );
        detected += 1;
    }
    Ok(format!("{detected}/7 kinds detected, one group each"))
}

fn c6_soundness() -> Outcome {
    let mut assertions = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + seed);
        let schema = random_schema(&mut rng);
        let q = random_query(&schema, &mut rng);
        let doc = parse_query(&q.text).map_err(|e| format!("seed {seed}: {e}"))?;
        let tree = derive_oracles(&schema, &doc).map_err(|e| format!("seed {seed}: {e}"))?;
        let body = conformant_response(&schema, &doc, &q.variables, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        let report = validate(&tree, 200, body.to_string().as_bytes());
        let failing = report.outcomes.iter().filter(|o| o.verdict == Verdict::Fail).count();
        ensure!(failing == 0, "seed {seed}: {failing} failing assertions\n{}", q.text);
        ensure!(
            count_planned_assertions(&tree, &body) == report.assertions_evaluated,
            "seed {seed}: evaluated count differs from plan"
        );
        assertions += report.assertions_evaluated;
    }
    Ok(format!("1000 pairs, {assertions} assertions, 0 failing"))
}

/// The 37 distinct combinations, each with two textual spellings that share
/// a canonical key.
fn combinations() -> Vec<[Value; 2]> {
    let mut out = Vec::new();
    for n in 0..30 {
        out.push([
            json!({"query": "query T($n: Int!) { teasers(first: $n) { url title } }", "variables": {"n": n}}),
            json!({"query": "query T( $n : Int! ){teasers(first:$n){\n  url\n  title\n}}", "variables": {"n": n}}),
        ]);
    }
    for i in 0..7 {
        let q = format!("{{ video(id: \"v{i}\") {{ id title }} }}");
        out.push([json!({"query": q}), json!({"query": format!("# spelled differently\n{q}\n")})]);
    }
    out
}

fn blast(url: &str, total: usize, threads: usize, stop: &AtomicBool) -> usize {
    let combos = combinations();
    let next = AtomicUsize::new(0);
    let ok = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| {
                let c = client();
                loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= total || stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let combo = &combos[i % combos.len()];
                    if c.post_json(url, &combo[(i / combos.len()) % 2]).is_ok_and(|r| r.0 == 200) {
                        ok.fetch_add(1, Ordering::SeqCst);
                    }
                }
            });
        }
    });
    ok.into_inner()
}

/// Independent replay: latest snapshot plus its journal, folded by key.
fn fold_files(dir: &Path) -> Result<FoldedState, String> {
    let generation = fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            name.strip_prefix("snapshot.")?.strip_suffix(".jsonl")?.parse::<u64>().ok()
        })
        .max()
        .unwrap_or(0);
    let lines = |name: String| -> Vec<Value> {
        let text = fs::read_to_string(dir.join(name)).unwrap_or_default();
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        complete.lines().map(|l| serde_json::from_str(l).expect("complete line parses")).collect()
    };
    let s = |v: &Value, k: &str| v[k].as_str().unwrap_or_default().to_string();
    let mut state = BTreeMap::new();
    for r in lines(format!("snapshot.{generation}.jsonl")) {
        let t = r["times_called"].as_u64().unwrap_or(0);
        state.insert(s(&r, "key"), (t, s(&r, "created_at"), s(&r, "updated_at"), s(&r, "query")));
    }
    for ev in lines(format!("journal.{generation}.jsonl")) {
        let ts = s(&ev, "ts");
        let e = state.entry(s(&ev, "key")).or_insert((0, ts.clone(), ts.clone(), s(&ev, "query")));
        e.0 += 1;
        if ts > e.2 {
            e.2 = ts;
        }
    }
    Ok(state)
}

fn c7_recorder_dedup() -> Outcome {
    let schema = parse_sdl(TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    let lab = start_faultlab(Fixture::new(schema, 0, vec![]).map_err(|e| e.to_string())?, "127.0.0.1:0")
        .map_err(|e| e.to_string())?;

    // In-process recorder: exact dedup under load.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rec = start_recorder(RecorderConfig {
        listen: "127.0.0.1:0".into(),
        upstream: lab.base_url(),
        store_dir: Some(dir.path().into()),
        compact_every: Some(1500),
        worker_threads: 8,
        ..RecorderConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let ok = blast(&format!("http://{}/graphql/", rec.addr()), 10_000, 16, &AtomicBool::new(false));
    ensure!(ok == 10_000, "only {ok} of 10000 requests succeeded");
    ensure!(rec.wait_idle(Duration::from_secs(30)), "recorder did not drain");
    rec.stop();
    let store = QueryStore::load(dir.path()).map_err(|e| e.to_string())?;
    ensure!(store.len() == 37, "expected 37 records, got {}", store.len());
    ensure!(store.total_calls() == 10_000, "times_called sums to {}", store.total_calls());

    // Recorder process killed mid-run: replay equals an independent fold.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store_arg = dir.path().to_str().ok_or("non-utf8 temp path")?;
    let upstream = lab.base_url();
    let mut server = common::spawn(&[
        "record", "--listen", "127.0.0.1:0", "--upstream", &upstream, "--store", store_arg, "--compact-every", "700",
    ]);
    let url = format!("{}/graphql/", server.url);
    let stop = AtomicBool::new(false);
    let metrics_url = format!("{}/_harvest/metrics", server.url);
    let journaled_at_kill = std::thread::scope(|s| {
        let sender = s.spawn(|| blast(&url, 20_000, 16, &stop));
        let metrics = reqwest::blocking::Client::new();
        let deadline = Instant::now() + Duration::from_secs(60);
        let mut journaled = 0;
        while journaled < 2_500 && Instant::now() < deadline {
            std::thread::sleep(Duration::from_millis(10));
            let text = metrics.get(&metrics_url).send().and_then(|r| r.text()).unwrap_or_default();
            journaled = text
                .lines()
                .find_map(|l| l.strip_prefix("journaled_total "))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(journaled);
        }
        let _ = server.child.kill();
        let _ = server.child.wait();
        stop.store(true, Ordering::SeqCst);
        let _ = sender.join();
        journaled
    });
    ensure!(journaled_at_kill >= 2_500, "recorder journaled only {journaled_at_kill} before deadline");
    let expected = fold_files(dir.path())?;
    let replayed = QueryStore::load(dir.path()).map_err(|e| e.to_string())?;
    let got: BTreeMap<_, _> = replayed
        .records()
        .map(|r| {
            let v = serde_json::to_value(r).expect("record serializes");
            let s = |k: &str| v[k].as_str().unwrap_or_default().to_string();
            (s("key"), (r.times_called, s("created_at"), s("updated_at"), r.query.clone()))
        })
        .collect();
    ensure!(got == expected, "replayed state differs from the journal fold");
    let survived: u64 = got.values().map(|v| v.0).sum();
    ensure!(got.len() <= 37 && survived >= journaled_at_kill, "survivors {survived} < journaled {journaled_at_kill}");
    Ok(format!(
        "37 records summing to 10000; kill after {journaled_at_kill} journaled, {survived} calls replayed exactly"
    ))
}

fn c8_suite_diff() -> Outcome {
    fn brute(a: &[SchemaTuple], b: &[SchemaTuple], u: &[SchemaTuple]) -> (usize, usize, usize, usize) {
        let only_a = a.iter().filter(|t| !b.contains(t)).count();
        let only_b = b.iter().filter(|t| !a.contains(t)).count();
        let both = a.iter().filter(|t| b.contains(t)).count();
        let neither = u.iter().filter(|t| !a.contains(t) && !b.contains(t)).count();
        (only_a, only_b, both, neither)
    }
    let mut lines = Vec::new();
    // Full-size and 1/10-scaled versions of the reference/generated overlap.
    for (universe, a_size, b_size, shared, want_only_b, want_neither) in
        [(1884, 1429, 506, 483, 23, 432), (188, 143, 51, 48, 3, 42)]
    {
        let mut u: Vec<SchemaTuple> = (0..universe).map(|i| tuple(&format!("T{}", i / 12), &format!("f{i}"))).collect();
        u.shuffle(&mut ChaCha8Rng::seed_from_u64(universe as u64));
        let a: Vec<_> = u[..a_size].to_vec();
        let b: Vec<_> = u[a_size - shared..a_size - shared + b_size].to_vec();
        let d = diff(
            &a.iter().cloned().collect(),
            &b.iter().cloned().collect(),
            &u.iter().cloned().collect(),
        );
        let (only_a, only_b, both, neither) = brute(&a, &b, &u);
        ensure!(
            (d.only_in_a.len(), d.only_in_b.len(), d.intersection.len(), d.uncovered_by_both.len())
                == (only_a, only_b, both, neither),
            "diff disagrees with brute force at universe {universe}"
        );
        ensure!(d.only_in_b.iter().all(|t| b.contains(t) && !a.contains(t)), "only_in_b membership");
        ensure!(d.uncovered_by_both.iter().all(|t| !a.contains(t) && !b.contains(t)), "uncovered membership");
        ensure!(
            only_b == want_only_b && neither == want_neither,
            "universe {universe}: only_in_b {only_b}, uncovered {neither}"
        );
        lines.push(format!("|U|={universe}: only_in_b={only_b}, uncovered={neither}"));
    }
    Ok(lines.join("; "))
}

fn c9_nullability_matrix() -> Outcome {
    let values = [("null list", json!(null)), ("list with null", json!(["a", null])), ("clean list", json!(["a", "b"]))];
    let table: [(&str, [bool; 3]); 4] = [
        ("[String]", [true, true, true]),
        ("[String]!", [false, true, true]),
        ("[String!]", [true, false, true]),
        ("[String!]!", [false, false, true]),
    ];
    let mut exact = 0;
    for (ty, expected) in table {
        let schema = parse_sdl(&format!("type Query {{ f: {ty} }}")).map_err(|e| e.to_string())?;
        let doc = parse_query("{ f }").map_err(|e| e.to_string())?;
        let tree = derive_oracles(&schema, &doc).map_err(|e| e.to_string())?;
        for ((label, v), want) in values.iter().zip(expected) {
            let body = json!({ "data": { "f": v } }).to_string();
            let got = validate(&tree, 200, body.as_bytes()).passed;
            ensure!(got == want, "{ty} with {label}: expected {}, got {}", verdict(want), verdict(got));
            exact += 1;
        }
    }
    Ok(format!("{exact}/12 entries"))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store_dir = dir.path().join("store");
    let schema_file = dir.path().join("schema.graphql");
    fs::write(&schema_file, TEASER_SCHEMA_SDL).map_err(|e| e.to_string())?;
    {
        let mut store = QueryStore::open(&store_dir).map_err(|e| e.to_string())?;
        let base = gqlharvest_core::store::parse_timestamp("2024-03-01 12:00:00")?;
        for (i, combo) in combinations().iter().enumerate().take(25) {
            for (j, req) in combo.iter().enumerate() {
                let q = req["query"].as_str().unwrap_or_default();
                let vars = req.get("variables").cloned().unwrap_or(json!({}));
                let doc = parse_operation(q, None).map_err(|e| e.to_string())?;
                store
                    .record(Observation {
                        key: canonicalize(&doc, &vars),
                        query: q.into(),
                        variables: vars,
                        operation_name: doc.operation_name.clone(),
                        operation_kind: doc.operation_kind,
                        ts: base + chrono_secs((i * 7 + j) as i64),
                    })
                    .map_err(|e| e.to_string())?;
            }
        }
    }
    let path = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let (store_arg, schema_arg) = (store_dir.to_string_lossy().into_owned(), schema_file.to_string_lossy().into_owned());
    for round in ["1", "2"] {
        let out = common::gqlharvest(&[
            "generate", "--store", &store_arg, "--schema", &schema_arg, "--out", &path(&format!("manifest{round}.jsonl")),
        ]);
        ensure!(out.status.success(), "generate failed: {}", String::from_utf8_lossy(&out.stderr));
        let out = common::gqlharvest(&[
            "coverage", "--schema", &schema_arg, "--manifest", &path(&format!("manifest{round}.jsonl")),
            "--out", &path(&format!("coverage{round}.json")),
        ]);
        ensure!(out.status.success(), "coverage failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |n: &str| fs::read(dir.path().join(n)).map_err(|e| e.to_string());
    let (m1, m2) = (read("manifest1.jsonl")?, read("manifest2.jsonl")?);
    let (c1, c2) = (read("coverage1.json")?, read("coverage2.json")?);
    ensure!(!m1.is_empty() && m1 == m2, "manifests differ");
    ensure!(c1 == c2, "coverage files differ");
    Ok(format!("manifest {} bytes, coverage {} bytes, identical", m1.len(), c1.len()))
}

fn chrono_secs(s: i64) -> chrono::Duration {
    chrono::Duration::seconds(s)
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("tuple universe", 1, c1_tuple_universe),
        ("static coverage", 1, c2_static_coverage),
        ("assertion count", 1, c3_assertion_count),
        ("fault detection", 5, c4_fault_detection),
        ("fault-kind completeness", 30, c5_fault_kinds),
        ("soundness", 60, c6_soundness),
        ("recorder dedup under load", 120, c7_recorder_dedup),
        ("suite diff", 1, c8_suite_diff),
        ("nullability matrix", 1, c9_nullability_matrix),
        ("determinism", 10, c10_determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(detail) if secs > budget as f64 => Err(format!("{detail}; took {secs:.2}s, budget {budget}s")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {why}", i + 1);
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
