//! Schema-derived oracles for a query and their evaluation against a response.
//!
//! An [`OracleTree`] holds three response-level format checks and a tree of
//! [`FieldOracle`]s mirroring the query's selection set. Each field oracle
//! carries a flat check list derived from the declared type, read level by
//! level: an optional `NOT_NULL`, then either `IS_LIST` (everything after it
//! applies to each element) or the terminal kind/type check.
//!
//! Assertion counting: each evaluated check is one assertion. The `PRESENT`
//! check of a top-level field is the entry-point presence assertion.
//! `__typename` selections carry only their typename check. A composite
//! value gets an `IS_MAP` check only when `__typename` is not selected
//! directly under it, because the typename comparison already asserts the
//! value is an object. With these rules the `GetTeasers` example evaluates
//! 22 assertions.

mod derive;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::schema::TypeRef;

pub use derive::derive_oracles;
pub use validate::{count_planned_assertions, validate};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Check {
    #[serde(rename = "STATUS_IS_200")]
    StatusIs200,
    BodyIsJsonObject,
    NoErrorsMember,
    Present,
    NotNull,
    IsList,
    IsMap,
    IsString,
    IsBool,
    IsInt,
    IsNumeric,
    EnumMember(Vec<String>),
    TypenameEquals(String),
    TypenameIn(Vec<String>),
    /// The HTTP exchange itself failed (timeout, connection refused).
    Transport,
}

impl Check {
    /// Kind name without operands, as used in reports and failure groups.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Check::StatusIs200 => "STATUS_IS_200",
            Check::BodyIsJsonObject => "BODY_IS_JSON_OBJECT",
            Check::NoErrorsMember => "NO_ERRORS_MEMBER",
            Check::Present => "PRESENT",
            Check::NotNull => "NOT_NULL",
            Check::IsList => "IS_LIST",
            Check::IsMap => "IS_MAP",
            Check::IsString => "IS_STRING",
            Check::IsBool => "IS_BOOL",
            Check::IsInt => "IS_INT",
            Check::IsNumeric => "IS_NUMERIC",
            Check::EnumMember(_) => "ENUM_MEMBER",
            Check::TypenameEquals(_) => "TYPENAME_EQUALS",
            Check::TypenameIn(_) => "TYPENAME_IN",
            Check::Transport => "TRANSPORT",
        }
    }

    pub fn is_format(&self) -> bool {
        matches!(
            self,
            Check::StatusIs200 | Check::BodyIsJsonObject | Check::NoErrorsMember | Check::Transport
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::EnumMember(v) => write!(f, "ENUM_MEMBER({})", v.join("|")),
            Check::TypenameEquals(t) => write!(f, "TYPENAME_EQUALS({t})"),
            Check::TypenameIn(v) => write!(f, "TYPENAME_IN({})", v.join("|")),
            other => f.write_str(other.kind_name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldOracle {
    /// Alias if present, else the field name.
    pub response_key: String,
    pub field_name: String,
    pub parent_type: String,
    pub declared_type: TypeRef,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<FieldOracle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_typename: Option<String>,
    /// Runtime types for which this oracle applies (selection made inside a
    /// narrowing fragment). `None` means always.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only_for: Option<Vec<String>>,
    /// Selected under `@skip`/`@include`; absence is not a failure.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conditional: bool,
}

impl FieldOracle {
    pub fn is_typename(&self) -> bool {
        self.field_name == "__typename"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTree {
    pub format_oracles: Vec<Check>,
    pub root: Vec<FieldOracle>,
}

impl OracleTree {
    pub fn format_triple() -> Vec<Check> {
        vec![Check::StatusIs200, Check::BodyIsJsonObject, Check::NoErrorsMember]
    }

    /// Depth-first iterator over all field oracles.
    pub fn walk(&self) -> impl Iterator<Item = &FieldOracle> {
        let mut stack: Vec<&FieldOracle> = self.root.iter().rev().collect();
        std::iter::from_fn(move || {
            let next = stack.pop()?;
            stack.extend(next.children.iter().rev());
            Some(next)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub path: String,
    pub check: Check,
    pub verdict: Verdict,
    pub observed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub assertions_evaluated: usize,
    pub outcomes: Vec<Outcome>,
    /// Conditional checks that could not be decided; not assertions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Outcome>,
}

impl ValidationReport {
    pub fn from_outcomes(outcomes: Vec<Outcome>, skipped: Vec<Outcome>) -> Self {
        ValidationReport {
            passed: outcomes.iter().all(|o| o.verdict != Verdict::Fail),
            assertions_evaluated: outcomes.len(),
            outcomes,
            skipped,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| o.verdict == Verdict::Fail)
    }

    /// Report for an exchange that never produced a response.
    pub fn transport_failure(message: impl Into<String>) -> Self {
        Self::from_outcomes(
            vec![Outcome {
                path: "$transport".into(),
                check: Check::Transport,
                verdict: Verdict::Fail,
                observed: message.into(),
            }],
            Vec::new(),
        )
    }
}

/// `data.teasers[3].url` → `data.teasers[*].url`.
pub fn wildcard_path(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    let mut in_index = false;
    for c in path.chars() {
        match c {
            '[' => {
                in_index = true;
                out.push_str("[*]");
            }
            ']' if in_index => in_index = false,
            _ if in_index => {}
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wildcards_indices() {
        assert_eq!(wildcard_path("data.a[0].b[12].c"), "data.a[*].b[*].c");
        assert_eq!(wildcard_path("data.a"), "data.a");
    }

    #[test]
    fn serialized_tags_match_kind_names() {
        let all = [
            Check::StatusIs200,
            Check::BodyIsJsonObject,
            Check::NoErrorsMember,
            Check::Present,
            Check::NotNull,
            Check::IsList,
            Check::IsMap,
            Check::IsString,
            Check::IsBool,
            Check::IsInt,
            Check::IsNumeric,
            Check::EnumMember(vec!["A".into()]),
            Check::TypenameEquals("T".into()),
            Check::TypenameIn(vec!["T".into()]),
            Check::Transport,
        ];
        for c in all {
            let v = serde_json::to_value(&c).unwrap();
            let tag = match &v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Object(m) => m.keys().next().unwrap().clone(),
                other => panic!("unexpected encoding {other}"),
            };
            assert_eq!(tag, c.kind_name());
            assert_eq!(serde_json::from_value::<Check>(v).unwrap(), c);
        }
    }

    #[test]
    fn check_serialization_is_screaming() {
        assert_eq!(serde_json::to_string(&Check::NotNull).unwrap(), "\"NOT_NULL\"");
        assert_eq!(
            serde_json::to_string(&Check::TypenameEquals("Teaser".into())).unwrap(),
            "{\"TYPENAME_EQUALS\":\"Teaser\"}"
        );
    }
}
