//! GraphQL input values (argument literals, defaults, directive arguments).

use std::fmt::{self, Write};

use crate::lexer::{Cursor, SyntaxError, Tok};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Variable(String),
    /// Integer literal kept as its (already normalized) decimal text so that
    /// values outside 64-bit range survive a round trip.
    Int(String),
    Float(f64),
    String(String),
    Boolean(bool),
    Null,
    Enum(String),
    List(Vec<Value>),
    Object(Vec<(String, Value)>),
}

impl Value {
    /// Visits every variable name referenced inside this value.
    pub fn for_each_variable<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Value::Variable(v) => f(v),
            Value::List(items) => items.iter().for_each(|v| v.for_each_variable(f)),
            Value::Object(fields) => fields.iter().for_each(|(_, v)| v.for_each_variable(f)),
            _ => {}
        }
    }

    /// Converts a constant value to JSON. Variables resolve through `vars`
    /// and become `null` when unbound.
    pub fn to_json(&self, vars: &serde_json::Map<String, serde_json::Value>) -> serde_json::Value {
        use serde_json::Value as J;
        match self {
            Value::Variable(v) => vars.get(v).cloned().unwrap_or(J::Null),
            Value::Int(i) => i
                .parse::<i64>()
                .map(J::from)
                .unwrap_or_else(|_| J::String(i.clone())),
            Value::Float(f) => serde_json::Number::from_f64(*f).map_or(J::Null, J::Number),
            Value::String(s) | Value::Enum(s) => J::String(s.clone()),
            Value::Boolean(b) => J::Bool(*b),
            Value::Null => J::Null,
            Value::List(items) => J::Array(items.iter().map(|v| v.to_json(vars)).collect()),
            Value::Object(fields) => J::Object(
                fields
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json(vars)))
                    .collect(),
            ),
        }
    }

    /// Canonical text: normalized literals, sorted object keys, single spaces.
    pub fn write_canonical(&self, out: &mut String) {
        match self {
            Value::Variable(v) => {
                out.push('$');
                out.push_str(v);
            }
            Value::Int(i) => out.push_str(i),
            Value::Float(f) => {
                let _ = write!(out, "{f:?}");
            }
            Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
            Value::Boolean(b) => out.push_str(if *b { "true" } else { "false" }),
            Value::Null => out.push_str("null"),
            Value::Enum(e) => out.push_str(e),
            Value::List(items) => {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    v.write_canonical(out);
                }
                out.push(']');
            }
            Value::Object(fields) => {
                let mut sorted: Vec<_> = fields.iter().collect();
                sorted.sort_by(|a, b| a.0.cmp(&b.0));
                out.push('{');
                for (i, (k, v)) in sorted.into_iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    out.push_str(k);
                    out.push_str(": ");
                    v.write_canonical(out);
                }
                out.push('}');
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_canonical(&mut s);
        f.write_str(&s)
    }
}

fn normalize_int(text: &str) -> String {
    if text == "-0" {
        "0".to_string()
    } else {
        text.to_string()
    }
}

pub(crate) fn parse_value(cur: &mut Cursor, constant: bool) -> Result<Value, SyntaxError> {
    let pos = cur.pos();
    match cur.peek().clone() {
        Tok::Punct('$') => {
            if constant {
                return Err(SyntaxError::new(pos, "variable not allowed in constant value"));
            }
            cur.next();
            let (name, _) = cur.expect_name()?;
            Ok(Value::Variable(name))
        }
        Tok::Int(i) => {
            cur.next();
            Ok(Value::Int(normalize_int(&i)))
        }
        Tok::Float(f) => {
            cur.next();
            let v: f64 = f
                .parse()
                .map_err(|_| SyntaxError::new(pos, "invalid float literal"))?;
            Ok(Value::Float(if v == 0.0 { 0.0 } else { v }))
        }
        Tok::Str(s) | Tok::BlockStr(s) => {
            cur.next();
            Ok(Value::String(s))
        }
        Tok::Name(n) => {
            cur.next();
            Ok(match n.as_str() {
                "true" => Value::Boolean(true),
                "false" => Value::Boolean(false),
                "null" => Value::Null,
                _ => Value::Enum(n),
            })
        }
        Tok::Punct('[') => {
            cur.next();
            let mut items = Vec::new();
            while !cur.eat_punct(']') {
                if cur.at_eof() {
                    return Err(cur.unexpected("']'"));
                }
                items.push(parse_value(cur, constant)?);
            }
            Ok(Value::List(items))
        }
        Tok::Punct('{') => {
            cur.next();
            let mut fields: Vec<(String, Value)> = Vec::new();
            while !cur.eat_punct('}') {
                let (name, npos) = cur.expect_name()?;
                if fields.iter().any(|(k, _)| *k == name) {
                    return Err(SyntaxError::new(
                        npos,
                        format!("duplicate input field '{name}'"),
                    ));
                }
                cur.expect_punct(':')?;
                fields.push((name, parse_value(cur, constant)?));
            }
            Ok(Value::Object(fields))
        }
        _ => Err(cur.unexpected("a value")),
    }
}
