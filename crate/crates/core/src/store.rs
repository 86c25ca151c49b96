//! Persistent store of harvested queries.
//!
//! Each observation is appended to a JSON Lines journal before it is folded
//! into memory, so replaying the journal from the latest snapshot rebuilds
//! the exact in-memory state. Compaction writes a new snapshot with one line
//! per key and starts an empty journal; files carry a generation number so a
//! crash at any point of compaction leaves a consistent pair on disk:
//!
//! ```text
//! <dir>/snapshot.<gen>.jsonl   records as of the start of journal <gen>
//! <dir>/journal.<gen>.jsonl    observations after that snapshot
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::query::{CanonicalKey, OperationKind};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

/// Renders a timestamp as `YYYY-MM-DD HH:MM:SS` (UTC).
pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Accepts `YYYY-MM-DD HH:MM:SS`, RFC 3339, or a bare `YYYY-MM-DD` date.
pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(n) = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT) {
        return Ok(Utc.from_utc_datetime(&n));
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Ok(d.with_timezone(&Utc));
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    Err(format!("unrecognized timestamp '{s}'"))
}

/// Current time truncated to whole seconds.
pub fn now_seconds() -> DateTime<Utc> {
    Utc.timestamp_opt(Utc::now().timestamp(), 0)
        .single()
        .expect("valid timestamp")
}

mod ts_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        parse_timestamp(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query: String,
    pub variables: Value,
    pub operation_name: Option<String>,
    #[serde(with = "ts_serde")]
    pub created_at: DateTime<Utc>,
    #[serde(with = "ts_serde")]
    pub updated_at: DateTime<Utc>,
    pub times_called: u64,
    pub key: CanonicalKey,
    pub operation_kind: OperationKind,
}

/// One observed GraphQL request, as written to the journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub key: CanonicalKey,
    pub query: String,
    pub variables: Value,
    pub operation_name: Option<String>,
    pub operation_kind: OperationKind,
    #[serde(with = "ts_serde")]
    pub ts: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterSpec {
    pub min_times_called: Option<u64>,
    pub since: Option<DateTime<Utc>>,
    pub until: Option<DateTime<Utc>>,
    pub operation_kind: Option<OperationKind>,
}

impl FilterSpec {
    pub fn matches(&self, r: &QueryRecord) -> bool {
        self.min_times_called.is_none_or(|m| r.times_called >= m)
            && self.since.is_none_or(|s| r.updated_at >= s)
            && self.until.is_none_or(|u| r.updated_at <= u)
            && self.operation_kind.is_none_or(|k| r.operation_kind == k)
    }
}

struct Journal {
    dir: PathBuf,
    generation: u64,
    file: File,
}

impl Journal {
    fn path(dir: &Path, generation: u64) -> PathBuf {
        dir.join(format!("journal.{generation}.jsonl"))
    }

    fn append(&mut self, line: &str) -> Result<(), StoreError> {
        let path = Self::path(&self.dir, self.generation);
        let mut buf = String::with_capacity(line.len() + 1);
        buf.push_str(line);
        buf.push('\n');
        self.file.write_all(buf.as_bytes()).map_err(io_err(&path))
    }
}

/// Keyed collection of [`QueryRecord`]s, optionally backed by a directory.
pub struct QueryStore {
    records: BTreeMap<CanonicalKey, QueryRecord>,
    journal: Option<Journal>,
}

impl std::fmt::Debug for QueryStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QueryStore")
            .field("records", &self.records.len())
            .field("dir", &self.journal.as_ref().map(|j| &j.dir))
            .finish()
    }
}

fn generations(dir: &Path, prefix: &str) -> Result<Vec<u64>, StoreError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let name = entry.map_err(io_err(dir))?.file_name();
        let name = name.to_string_lossy();
        if let Some(g) = name
            .strip_prefix(prefix)
            .and_then(|r| r.strip_suffix(".jsonl"))
            .and_then(|g| g.parse().ok())
        {
            out.push(g);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Reads JSON Lines. A final line without its newline is a torn write and
/// is dropped; any other unparseable line is corruption.
fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut line = String::new();
    let mut n = 0;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(io_err(path))?;
        if read == 0 {
            break;
        }
        n += 1;
        let complete = line.ends_with('\n');
        let text = line.trim_end();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str(text) {
            Ok(v) => out.push(v),
            Err(_) if !complete => break,
            Err(e) => {
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: n,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

impl QueryStore {
    pub fn in_memory() -> Self {
        Self {
            records: BTreeMap::new(),
            journal: None,
        }
    }

    /// Opens (creating if needed) a store directory and replays its journal.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let generation = generations(dir, "snapshot.")?.last().copied().unwrap_or(0);
        let mut store = Self::in_memory();
        let snap = dir.join(format!("snapshot.{generation}.jsonl"));
        for r in read_lines::<QueryRecord>(&snap)? {
            store.records.insert(r.key, r);
        }
        let jpath = Journal::path(dir, generation);
        for ev in read_lines::<Observation>(&jpath)? {
            store.apply(&ev);
        }
        // Drop a torn tail so the next append starts on a fresh line.
        if let Ok(bytes) = fs::read(&jpath) {
            if !bytes.is_empty() && !bytes.ends_with(b"\n") {
                let keep = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
                let f = OpenOptions::new().write(true).open(&jpath).map_err(io_err(&jpath))?;
                f.set_len(keep as u64).map_err(io_err(&jpath))?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&jpath)
            .map_err(io_err(&jpath))?;
        store.journal = Some(Journal {
            dir: dir.to_path_buf(),
            generation,
            file,
        });
        Ok(store)
    }

    /// Loads a store directory without taking it over for writing.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(io_err(dir)(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "store directory does not exist",
            )));
        }
        let generation = generations(dir, "snapshot.")?.last().copied().unwrap_or(0);
        let mut store = Self::in_memory();
        for r in read_lines::<QueryRecord>(&dir.join(format!("snapshot.{generation}.jsonl")))? {
            store.records.insert(r.key, r);
        }
        for ev in read_lines::<Observation>(&Journal::path(dir, generation))? {
            store.apply(&ev);
        }
        Ok(store)
    }

    /// Folds one observation into memory without journaling it.
    pub fn apply(&mut self, ev: &Observation) -> QueryRecord {
        let rec = self
            .records
            .entry(ev.key)
            .and_modify(|r| {
                r.times_called += 1;
                if ev.ts > r.updated_at {
                    r.updated_at = ev.ts;
                }
            })
            .or_insert_with(|| QueryRecord {
                query: ev.query.clone(),
                variables: if ev.variables.is_null() {
                    Value::Object(Default::default())
                } else {
                    ev.variables.clone()
                },
                operation_name: ev.operation_name.clone(),
                created_at: ev.ts,
                updated_at: ev.ts,
                times_called: 1,
                key: ev.key,
                operation_kind: ev.operation_kind,
            });
        rec.clone()
    }

    /// Journals and applies one observation. New keys start at
    /// `times_called = 1`; repeats bump the count and `updated_at` only.
    pub fn record(&mut self, ev: Observation) -> Result<QueryRecord, StoreError> {
        if let Some(j) = &mut self.journal {
            let line = serde_json::to_string(&ev).expect("observation serializes");
            j.append(&line)?;
        }
        Ok(self.apply(&ev))
    }

    /// Writes a snapshot with one line per key and switches to a fresh journal.
    pub fn compact(&mut self) -> Result<(), StoreError> {
        let Some(j) = &self.journal else {
            return Ok(());
        };
        let dir = j.dir.clone();
        let old = j.generation;
        let next = old + 1;
        let tmp = dir.join(format!("snapshot.{next}.tmp"));
        {
            let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
            for r in self.records.values() {
                let mut line = serde_json::to_string(r).expect("record serializes");
                line.push('\n');
                f.write_all(line.as_bytes()).map_err(io_err(&tmp))?;
            }
            f.sync_all().map_err(io_err(&tmp))?;
        }
        let jpath = Journal::path(&dir, next);
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&jpath)
            .map_err(io_err(&jpath))?;
        let snap = dir.join(format!("snapshot.{next}.jsonl"));
        fs::rename(&tmp, &snap).map_err(io_err(&snap))?;
        self.journal = Some(Journal {
            dir: dir.clone(),
            generation: next,
            file,
        });
        let _ = fs::remove_file(Journal::path(&dir, old));
        let _ = fs::remove_file(dir.join(format!("snapshot.{old}.jsonl")));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &CanonicalKey) -> Option<&QueryRecord> {
        self.records.get(key)
    }

    pub fn records(&self) -> impl Iterator<Item = &QueryRecord> {
        self.records.values()
    }

    pub fn total_calls(&self) -> u64 {
        self.records.values().map(|r| r.times_called).sum()
    }

    /// Matching records ordered by descending `times_called`, then
    /// ascending `created_at`, then key.
    pub fn export(&self, filter: &FilterSpec) -> Vec<QueryRecord> {
        let mut out: Vec<QueryRecord> = self
            .records
            .values()
            .filter(|r| filter.matches(r))
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            b.times_called
                .cmp(&a.times_called)
                .then(a.created_at.cmp(&b.created_at))
                .then(a.key.cmp(&b.key))
        });
        out
    }

    /// Writes `records` as a snapshot-format JSON Lines file.
    pub fn write_records(path: &Path, records: &[QueryRecord]) -> Result<(), StoreError> {
        let mut out = String::new();
        for r in records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        fs::write(path, out).map_err(io_err(path))
    }
}
