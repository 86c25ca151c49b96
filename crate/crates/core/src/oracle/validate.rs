use serde_json::{Map, Value};

use super::{Check, FieldOracle, OracleTree, Outcome, ValidationReport, Verdict};

/// Short, deterministic description of an observed JSON value.
fn summarize(v: Option<&Value>) -> String {
    match v {
        None => "missing".into(),
        Some(Value::Null) => "null".into(),
        Some(Value::Bool(b)) => format!("boolean {b}"),
        Some(Value::Number(n)) => format!("number {n}"),
        Some(Value::String(s)) => {
            let mut short: String = s.chars().take(40).collect();
            if short.len() < s.len() {
                short.push('…');
            }
            format!("string {short:?}")
        }
        Some(Value::Array(a)) => format!("list of {}", a.len()),
        Some(Value::Object(o)) => format!("object with {} keys", o.len()),
    }
}

fn is_int(v: &Value) -> bool {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i32::try_from(i).is_ok()
            } else if let Some(f) = n.as_f64() {
                f.fract() == 0.0 && f >= f64::from(i32::MIN) && f <= f64::from(i32::MAX)
            } else {
                false
            }
        }
        _ => false,
    }
}

fn holds(check: &Check, v: &Value) -> bool {
    match check {
        Check::NotNull => !v.is_null(),
        Check::IsList => v.is_array(),
        Check::IsMap => v.is_object(),
        Check::IsString => v.is_string(),
        Check::IsBool => v.is_boolean(),
        Check::IsInt => is_int(v),
        Check::IsNumeric => v.is_number(),
        Check::EnumMember(values) => v.as_str().is_some_and(|s| values.iter().any(|m| m == s)),
        Check::TypenameEquals(t) => v.as_str() == Some(t.as_str()),
        Check::TypenameIn(ts) => v.as_str().is_some_and(|s| ts.iter().any(|t| t == s)),
        Check::Present
        | Check::StatusIs200
        | Check::BodyIsJsonObject
        | Check::NoErrorsMember
        | Check::Transport => true,
    }
}

struct Evaluator {
    outcomes: Vec<Outcome>,
    skipped: Vec<Outcome>,
}

/// How a field oracle relates to the object it would be read from.
enum Applicability {
    Applies,
    NotApplicable,
    Undecidable,
}

fn applicability(oracle: &FieldOracle, parent: &Map<String, Value>) -> Applicability {
    match &oracle.only_for {
        None => Applicability::Applies,
        Some(types) => match parent.get("__typename").and_then(Value::as_str) {
            None => Applicability::Undecidable,
            Some(t) if types.iter().any(|x| x == t) => Applicability::Applies,
            Some(_) => Applicability::NotApplicable,
        },
    }
}

impl Evaluator {
    fn record(&mut self, path: &str, check: &Check, ok: bool, observed: Option<&Value>) -> bool {
        self.outcomes.push(Outcome {
            path: path.to_string(),
            check: check.clone(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            observed: summarize(observed),
        });
        ok
    }

    fn skip(&mut self, path: &str, check: &Check, why: &str) {
        self.skipped.push(Outcome {
            path: path.to_string(),
            check: check.clone(),
            verdict: Verdict::Skipped,
            observed: why.to_string(),
        });
    }

    fn fields(&mut self, oracles: &[FieldOracle], parent: &Map<String, Value>, path: &str) {
        for o in oracles {
            self.field(o, parent, path);
        }
    }

    fn field(&mut self, o: &FieldOracle, parent: &Map<String, Value>, parent_path: &str) {
        let path = format!("{parent_path}.{}", o.response_key);
        match applicability(o, parent) {
            Applicability::Applies => {}
            Applicability::NotApplicable => return,
            Applicability::Undecidable => {
                self.skip(&path, &o.checks[0], "__typename not selected; type condition undecidable");
                return;
            }
        }
        let value = parent.get(&o.response_key);
        if o.conditional && value.is_none() {
            self.skip(&path, &o.checks[0], "field under @skip/@include absent");
            return;
        }
        if o.is_typename() {
            for c in &o.checks {
                let ok = value.is_some_and(|v| holds(c, v));
                self.record(&path, c, ok, value);
            }
            return;
        }
        let Some(value) = value else {
            self.record(&path, &Check::Present, false, None);
            return;
        };
        let rest = match o.checks.split_first() {
            Some((Check::Present, rest)) => {
                self.record(&path, &Check::Present, true, Some(value));
                rest
            }
            _ => &o.checks[..],
        };
        self.level(rest, value, &path, &o.children);
    }

    fn level(&mut self, checks: &[Check], value: &Value, path: &str, children: &[FieldOracle]) {
        for (i, c) in checks.iter().enumerate() {
            if *c != Check::NotNull && value.is_null() {
                // Nullable level holding null: nothing further to check.
                return;
            }
            match c {
                Check::IsList => {
                    let Some(items) = value.as_array() else {
                        self.record(path, c, false, Some(value));
                        return;
                    };
                    self.record(path, c, true, Some(value));
                    for (idx, item) in items.iter().enumerate() {
                        self.level(&checks[i + 1..], item, &format!("{path}[{idx}]"), children);
                    }
                    return;
                }
                _ => {
                    if !self.record(path, c, holds(c, value), Some(value)) {
                        return;
                    }
                }
            }
        }
        if value.is_null() || children.is_empty() {
            return;
        }
        match value.as_object() {
            Some(obj) => self.fields(children, obj, path),
            None => self.fields(children, &Map::new(), path),
        }
    }
}

/// Evaluates `tree` against one HTTP response.
///
/// Format oracles run first, in order, and the first failure ends the
/// evaluation. Schema oracles then walk `data` in tree order, once per list
/// element.
pub fn validate(tree: &OracleTree, status_code: u16, body: &[u8]) -> ValidationReport {
    let mut ev = Evaluator {
        outcomes: Vec::new(),
        skipped: Vec::new(),
    };
    let status_json = Value::from(status_code);
    let parsed: Option<Value> = serde_json::from_slice(body).ok();
    for c in &tree.format_oracles {
        let (ok, observed) = match c {
            Check::StatusIs200 => (status_code == 200, format!("status {status_code}")),
            Check::BodyIsJsonObject => match &parsed {
                Some(v) => (v.is_object(), summarize(Some(v))),
                None => (false, "not valid JSON".to_string()),
            },
            Check::NoErrorsMember => {
                let errors = parsed.as_ref().and_then(|v| v.get("errors"));
                (errors.is_none(), summarize(errors))
            }
            other => (holds(other, &status_json), String::new()),
        };
        let path = match c {
            Check::StatusIs200 => "$status",
            Check::NoErrorsMember => "errors",
            _ => "$body",
        };
        ev.outcomes.push(Outcome {
            path: path.to_string(),
            check: c.clone(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            observed,
        });
        if !ok {
            return ValidationReport::from_outcomes(ev.outcomes, ev.skipped);
        }
    }
    let empty = Map::new();
    let data = parsed
        .as_ref()
        .and_then(|v| v.get("data"))
        .and_then(Value::as_object)
        .unwrap_or(&empty);
    ev.fields(&tree.root, data, "data");
    ValidationReport::from_outcomes(ev.outcomes, ev.skipped)
}

fn count_fields(oracles: &[FieldOracle], parent: &Map<String, Value>) -> usize {
    oracles.iter().map(|o| count_field(o, parent)).sum()
}

fn count_field(o: &FieldOracle, parent: &Map<String, Value>) -> usize {
    if !matches!(applicability(o, parent), Applicability::Applies) {
        return 0;
    }
    let value = parent.get(&o.response_key);
    match value {
        None if o.conditional => 0,
        _ if o.is_typename() => o.checks.len(),
        None => 1,
        Some(v) => {
            let has_present = o.checks.first() == Some(&Check::Present);
            let rest = if has_present { &o.checks[1..] } else { &o.checks[..] };
            usize::from(has_present) + count_level(rest, v, &o.children)
        }
    }
}

fn count_level(checks: &[Check], v: &Value, children: &[FieldOracle]) -> usize {
    let mut n = 0;
    for (i, c) in checks.iter().enumerate() {
        if v.is_null() {
            return n + usize::from(*c == Check::NotNull);
        }
        n += 1;
        if *c == Check::IsList {
            return n + v
                .as_array()
                .map_or(0, |items| items.iter().map(|item| count_level(&checks[i + 1..], item, children)).sum());
        }
    }
    match v.as_object() {
        Some(obj) if !children.is_empty() => n + count_fields(children, obj),
        _ => n,
    }
}

/// Number of assertions a fully passing response with the shape of `body`
/// (list lengths, nulls, runtime types) would evaluate.
pub fn count_planned_assertions(tree: &OracleTree, body: &Value) -> usize {
    let empty = Map::new();
    let data = body.get("data").and_then(Value::as_object).unwrap_or(&empty);
    tree.format_oracles.len() + count_fields(&tree.root, data)
}
