//! Run summary: the pipeline's metric table plus failures grouped by
//! (entry point, wildcarded path, check kind).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coverage::{coverage_of, CoverageOptions};
use crate::exec::Mode;
use crate::oracle::{wildcard_path, Verdict};
use crate::query::QueryError;
use crate::schema::SchemaModel;
use crate::suite::{SuiteResult, TestCase};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FailureGroup {
    pub entry_point: String,
    pub path: String,
    pub check: String,
    pub failing_cases: Vec<String>,
    pub outcomes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub struct RunSummary {
    pub types: usize,
    pub entry_points: usize,
    pub unique_queries: usize,
    pub assertions_evaluated: usize,
    pub passing: usize,
    pub failing: usize,
    pub schema_tuples: usize,
    pub covered_tuples: usize,
    pub schema_cov: String,
    pub failure_groups: Vec<FailureGroup>,
}

/// `data.teasers[1].url` → `teasers`; format-level paths have no entry point.
fn entry_point_of(path: &str) -> Option<&str> {
    let rest = path.strip_prefix("data.")?;
    let end = rest.find(['.', '[']).unwrap_or(rest.len());
    Some(&rest[..end])
}

/// Groups failing outcomes. Format and transport failures belong to every
/// entry point of their case, joined with `,`.
pub fn failure_groups(result: &SuiteResult) -> Vec<FailureGroup> {
    let mut groups: BTreeMap<(String, String, String), FailureGroup> = BTreeMap::new();
    for case in &result.cases {
        for o in case.report.outcomes.iter().filter(|o| o.verdict == Verdict::Fail) {
            let entry = entry_point_of(&o.path)
                .map(str::to_string)
                .unwrap_or_else(|| case.entry_points.join(","));
            let path = wildcard_path(&o.path);
            let check = o.check.kind_name().to_string();
            let g = groups
                .entry((entry.clone(), path.clone(), check.clone()))
                .or_insert_with(|| FailureGroup {
                    entry_point: entry,
                    path,
                    check,
                    failing_cases: Vec::new(),
                    outcomes: 0,
                });
            g.outcomes += 1;
            if g.failing_cases.last() != Some(&case.id) {
                g.failing_cases.push(case.id.clone());
            }
        }
    }
    groups.into_values().collect()
}

/// Builds the summary. `unique_queries` is the store's record count; the
/// suite result is optional so a summary can be produced before a run.
pub fn summarize(
    schema: &SchemaModel,
    unique_queries: usize,
    cases: &[TestCase],
    result: Option<&SuiteResult>,
) -> Result<RunSummary, QueryError> {
    let docs = cases.iter().map(TestCase::document).collect::<Result<Vec<_>, _>>()?;
    let cov = coverage_of(&docs, schema, CoverageOptions::default(), Mode::Sequential)?;
    let totals = result.map(|r| r.totals).unwrap_or_default();
    Ok(RunSummary {
        types: schema.types.len(),
        entry_points: schema.entry_point_count(),
        unique_queries,
        assertions_evaluated: totals.assertions_evaluated,
        passing: totals.passing,
        failing: totals.failing,
        schema_tuples: cov.schema_tuples,
        covered_tuples: cov.covered_tuples.len(),
        schema_cov: cov.schema_cov_percent,
        failure_groups: result.map(failure_groups).unwrap_or_default(),
    })
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |out: &mut String, cells: Vec<&str>| {
        let n = cells.len();
        for (i, (c, w)) in cells.into_iter().zip(&widths).enumerate() {
            if i + 1 == n {
                out.push_str(c);
            } else {
                let _ = write!(out, "{c:<w$}  ");
            }
        }
        out.push('\n');
    };
    line(out, header.to_vec());
    for r in rows {
        line(out, r.iter().map(String::as_str).collect());
    }
}

impl RunSummary {
    pub fn render_text(&self) -> String {
        let metrics = [
            ("TYPES", self.types.to_string()),
            ("ENTRY_POINTS", self.entry_points.to_string()),
            ("UNIQUE_QUERIES", self.unique_queries.to_string()),
            ("ASSERTIONS_EVALUATED", self.assertions_evaluated.to_string()),
            ("PASSING", self.passing.to_string()),
            ("FAILING", self.failing.to_string()),
            ("SCHEMA_TUPLES", self.schema_tuples.to_string()),
            ("COVERED_TUPLES", self.covered_tuples.to_string()),
            ("SCHEMA_COV", self.schema_cov.clone()),
        ];
        let rows: Vec<Vec<String>> = metrics.iter().map(|(k, v)| vec![k.to_string(), v.clone()]).collect();
        let mut out = String::new();
        table(&mut out, &["METRIC", "VALUE"], &rows);
        if !self.failure_groups.is_empty() {
            out.push('\n');
            let rows: Vec<Vec<String>> = self
                .failure_groups
                .iter()
                .map(|g| {
                    vec![
                        g.entry_point.clone(),
                        g.path.clone(),
                        g.check.clone(),
                        g.failing_cases.len().to_string(),
                        g.outcomes.to_string(),
                    ]
                })
                .collect();
            table(&mut out, &["ENTRY_POINT", "PATH", "CHECK", "CASES", "OUTCOMES"], &rows);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{GET_TEASERS_QUERY, GET_TEASERS_RESPONSE, TEASER_SCHEMA_SDL};
    use crate::oracle::derive_oracles;
    use crate::query::parse_query;
    use crate::schema::parse_sdl;
    use crate::suite::{run_with, Origin};

    fn case(schema: &SchemaModel, id: &str, q: &str) -> TestCase {
        TestCase {
            id: id.into(),
            query: q.into(),
            variables: serde_json::json!({}),
            operation_name: None,
            oracle: derive_oracles(schema, &parse_query(q).unwrap()).unwrap(),
            origin: Origin {
                key: String::new(),
                times_called: 1,
                created_at: String::new(),
                updated_at: String::new(),
            },
        }
    }

    #[test]
    fn empty_pipeline_has_zero_counts() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let r = summarize(&s, 0, &[], None).unwrap();
        assert_eq!(
            (r.unique_queries, r.assertions_evaluated, r.passing, r.failing, r.covered_tuples),
            (0, 0, 0, 0, 0)
        );
        assert_eq!((r.types, r.entry_points, r.schema_tuples), (5, 2, 13));
        assert_eq!(r.schema_cov, "0.0%");
    }

    #[test]
    fn failures_group_by_entry_path_and_check() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let cases = vec![
            case(&s, "a", GET_TEASERS_QUERY),
            case(&s, "b", "{ teasers(first: 2) { url } }"),
            case(&s, "c", "{ video(id: \"1\") { id } }"),
        ];
        let broken = GET_TEASERS_RESPONSE.replace("\"url\": \"https://youtu.be/jNQXAC9IVRw\"", "\"url\": null");
        assert_ne!(broken, GET_TEASERS_RESPONSE, "fixture shape changed");
        let result = run_with(&cases, 2, |c| {
            if c.id == "c" {
                Ok((500, b"oops".to_vec()))
            } else {
                Ok((200, broken.clone().into_bytes()))
            }
        });
        let r = summarize(&s, 3, &cases, Some(&result)).unwrap();
        assert_eq!((r.passing, r.failing), (0, 3));
        assert_eq!(r.failure_groups.len(), 2);
        let url = &r.failure_groups[0];
        assert_eq!(
            (url.entry_point.as_str(), url.path.as_str(), url.check.as_str()),
            ("teasers", "data.teasers[*].url", "NOT_NULL")
        );
        assert_eq!(url.failing_cases, ["a", "b"]);
        let status = &r.failure_groups[1];
        assert_eq!((status.entry_point.as_str(), status.check.as_str()), ("video", "STATUS_IS_200"));
        let text = r.render_text();
        assert!(text.contains("SCHEMA_COV            "));
        assert!(text.contains("data.teasers[*].url"));
    }
}
