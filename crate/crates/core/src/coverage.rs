//! Schema coverage: the share of `{object, field}` tuples a set of queries
//! reaches, and set differences between two covered-tuple sets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::exec::{self, Mode};
use crate::query::{reached_tuples, OperationKind, QueryDocument, QueryError};
use crate::schema::{SchemaModel, SchemaTuple};

/// Exact ratio of covered to total tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub covered: usize,
    pub total: usize,
}

impl Ratio {
    pub fn new(covered: usize, total: usize) -> Self {
        Self { covered, total }
    }

    /// Percentage in tenths, rounded half up. `0/0` is 0.
    pub fn per_mille(&self) -> u64 {
        if self.total == 0 {
            return 0;
        }
        let (c, t) = (self.covered as u128, self.total as u128);
        ((c * 2000 + t) / (2 * t)) as u64
    }

    pub fn as_f64(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pm = self.per_mille();
        write!(f, "{}.{}%", pm / 10, pm % 10)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverageOptions {
    /// Count mutation-root tuples and entry points in the universe.
    pub include_mutation: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub schema_tuples: usize,
    pub covered_tuples: BTreeSet<SchemaTuple>,
    pub schema_cov: Ratio,
    /// `schema_cov` rendered with one decimal.
    pub schema_cov_percent: String,
    pub entry_points_total: usize,
    pub entry_points_covered: usize,
}

/// Tuple universe used for coverage under `options`.
pub fn coverage_universe(schema: &SchemaModel, options: CoverageOptions) -> BTreeSet<SchemaTuple> {
    let mut u = schema.tuple_universe();
    if !options.include_mutation {
        if let Some(m) = &schema.mutation_type_name {
            u.retain(|t| &t.object != m);
        }
    }
    u
}

/// Coverage of a suite of documents. Mutation documents contribute nothing
/// unless `options.include_mutation` is set.
pub fn coverage_of(
    docs: &[QueryDocument],
    schema: &SchemaModel,
    options: CoverageOptions,
    mode: Mode,
) -> Result<CoverageReport, QueryError> {
    let per_doc = exec::map(mode, docs, |d| {
        if d.operation_kind == OperationKind::Mutation && !options.include_mutation {
            Ok(BTreeSet::new())
        } else {
            reached_tuples(d, schema)
        }
    });
    let mut covered = BTreeSet::new();
    for set in per_doc {
        covered.extend(set?);
    }
    Ok(report_for(covered, schema, options))
}

/// Builds the report for an already-computed covered set.
pub fn report_for(
    covered: BTreeSet<SchemaTuple>,
    schema: &SchemaModel,
    options: CoverageOptions,
) -> CoverageReport {
    let universe = coverage_universe(schema, options);
    let covered: BTreeSet<SchemaTuple> = covered.intersection(&universe).cloned().collect();
    let mut roots = vec![schema.query_type_name.as_str()];
    if options.include_mutation {
        roots.extend(schema.mutation_type_name.as_deref());
    }
    let entry_points_total = roots
        .iter()
        .filter_map(|r| schema.get_type(r))
        .map(|t| t.fields.len())
        .sum();
    let entry_points_covered = covered
        .iter()
        .filter(|t| roots.contains(&t.object.as_str()))
        .count();
    let schema_cov = Ratio::new(covered.len(), universe.len());
    CoverageReport {
        schema_tuples: universe.len(),
        schema_cov_percent: schema_cov.to_string(),
        covered_tuples: covered,
        schema_cov,
        entry_points_total,
        entry_points_covered,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteDiff {
    pub only_in_a: BTreeSet<SchemaTuple>,
    pub only_in_b: BTreeSet<SchemaTuple>,
    pub intersection: BTreeSet<SchemaTuple>,
    pub uncovered_by_both: BTreeSet<SchemaTuple>,
}

impl SuiteDiff {
    /// Tuples reached by `b` but not by `a` (DISTINCT_TUPLES when `a` is the
    /// reference suite).
    pub fn distinct_tuples(&self) -> usize {
        self.only_in_b.len()
    }
}

pub fn diff(
    a: &BTreeSet<SchemaTuple>,
    b: &BTreeSet<SchemaTuple>,
    universe: &BTreeSet<SchemaTuple>,
) -> SuiteDiff {
    SuiteDiff {
        only_in_a: a.difference(b).cloned().collect(),
        only_in_b: b.difference(a).cloned().collect(),
        intersection: a.intersection(b).cloned().collect(),
        uncovered_by_both: universe
            .iter()
            .filter(|t| !a.contains(*t) && !b.contains(*t))
            .cloned()
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{GET_TEASERS_QUERY, TEASER_SCHEMA_SDL};
    use crate::query::parse_query;
    use crate::schema::parse_sdl;

    #[test]
    fn get_teasers_covers_thirty_point_eight_percent() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let d = parse_query(GET_TEASERS_QUERY).unwrap();
        let r = coverage_of(&[d], &s, CoverageOptions::default(), Mode::Sequential).unwrap();
        assert_eq!(r.schema_tuples, 13);
        assert_eq!(r.covered_tuples.len(), 4);
        assert_eq!(r.schema_cov_percent, "30.8%");
        assert_eq!((r.entry_points_covered, r.entry_points_total), (1, 2));
    }

    #[test]
    fn empty_suite() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let r = coverage_of(&[], &s, CoverageOptions::default(), Mode::Parallel).unwrap();
        assert_eq!(r.covered_tuples.len(), 0);
        assert_eq!(r.schema_cov.per_mille(), 0);
        assert_eq!(r.schema_cov_percent, "0.0%");
    }

    #[test]
    fn rounding_half_up() {
        assert_eq!(Ratio::new(506, 1884).to_string(), "26.9%");
        assert_eq!(Ratio::new(426, 875).to_string(), "48.7%");
        assert_eq!(Ratio::new(1429, 1884).to_string(), "75.8%");
        assert_eq!(Ratio::new(1, 8).to_string(), "12.5%");
        assert_eq!(Ratio::new(1, 16).to_string(), "6.3%");
        assert_eq!(Ratio::new(0, 0).to_string(), "0.0%");
    }

    #[test]
    fn mutations_excluded_by_default() {
        let s = parse_sdl("type Query { a: Int } type Mutation { m: Int n: Int }").unwrap();
        let q = parse_query("{ a }").unwrap();
        let m = parse_query("mutation { m }").unwrap();
        let docs = [q, m];
        let r = coverage_of(&docs, &s, CoverageOptions::default(), Mode::Sequential).unwrap();
        assert_eq!((r.covered_tuples.len(), r.schema_tuples), (1, 1));
        let opts = CoverageOptions { include_mutation: true };
        let r = coverage_of(&docs, &s, opts, Mode::Sequential).unwrap();
        assert_eq!((r.covered_tuples.len(), r.schema_tuples), (2, 3));
        assert_eq!((r.entry_points_covered, r.entry_points_total), (2, 3));
    }

    #[test]
    fn identical_sets_have_no_exclusive_tuples() {
        let u: BTreeSet<_> = (0..5).map(|i| SchemaTuple::new("T", format!("f{i}"))).collect();
        let a: BTreeSet<_> = u.iter().take(3).cloned().collect();
        let d = diff(&a, &a, &u);
        assert!(d.only_in_a.is_empty() && d.only_in_b.is_empty());
        assert_eq!(d.intersection, a);
        assert_eq!(d.uncovered_by_both.len(), 2);
    }
}
