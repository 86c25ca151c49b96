use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{Directive, QueryDocument, Selection, SelectionSet};
use crate::value::Value;

/// SHA-256 over the canonical query text and canonical variables document.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub [u8; 32]);

impl CanonicalKey {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn short(&self) -> String {
        hex::encode(&self.0[..4])
    }

    pub fn from_hex(s: &str) -> Result<Self, String> {
        let bytes = hex::decode(s).map_err(|e| format!("invalid key '{s}': {e}"))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| format!("key '{s}' is not 32 bytes"))?;
        Ok(CanonicalKey(arr))
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.to_hex())
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CanonicalKey::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

fn write_args(out: &mut String, args: &[(String, Value)]) {
    if args.is_empty() {
        return;
    }
    let mut sorted: Vec<&(String, Value)> = args.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    out.push('(');
    for (i, (n, v)) in sorted.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(n);
        out.push_str(": ");
        v.write_canonical(out);
    }
    out.push(')');
}

fn write_directives(out: &mut String, dirs: &[Directive]) {
    for d in dirs {
        out.push_str(" @");
        out.push_str(&d.name);
        write_args(out, &d.arguments);
    }
}

fn write_set(out: &mut String, set: &SelectionSet) {
    out.push_str(" {");
    for sel in &set.items {
        out.push(' ');
        match sel {
            Selection::Field(f) => {
                if let Some(a) = &f.alias {
                    out.push_str(a);
                    out.push_str(": ");
                }
                out.push_str(&f.name);
                write_args(out, &f.arguments);
                write_directives(out, &f.directives);
                if let Some(s) = &f.selection_set {
                    write_set(out, s);
                }
            }
            Selection::FragmentSpread(s) => {
                out.push_str("...");
                out.push_str(&s.name);
                write_directives(out, &s.directives);
            }
            Selection::InlineFragment(i) => {
                out.push_str("...");
                if let Some(t) = &i.type_condition {
                    out.push_str(" on ");
                    out.push_str(t);
                }
                write_directives(out, &i.directives);
                write_set(out, &i.selection_set);
            }
        }
    }
    out.push_str(" }");
}

/// Single-line re-serialization of the document. Arguments are sorted by
/// name and literals normalized; selection order is kept.
pub fn canonical_text(doc: &QueryDocument) -> String {
    let mut out = String::new();
    out.push_str(doc.operation_kind.keyword());
    if let Some(n) = &doc.operation_name {
        out.push(' ');
        out.push_str(n);
    }
    if !doc.variable_definitions.is_empty() {
        out.push('(');
        for (i, v) in doc.variable_definitions.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push('$');
            out.push_str(&v.name);
            out.push_str(": ");
            out.push_str(&v.type_ref.to_string());
            if let Some(d) = &v.default {
                out.push_str(" = ");
                d.write_canonical(&mut out);
            }
        }
        out.push(')');
    }
    write_directives(&mut out, &doc.directives);
    write_set(&mut out, &doc.selection_set);
    for fd in doc.fragments.values() {
        out.push_str(" fragment ");
        out.push_str(&fd.name);
        out.push_str(" on ");
        out.push_str(&fd.type_condition);
        write_directives(&mut out, &fd.directives);
        write_set(&mut out, &fd.selection_set);
    }
    out
}

fn write_json(out: &mut String, v: &serde_json::Value) {
    use serde_json::Value as J;
    match v {
        J::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string encodes"));
                out.push(':');
                write_json(out, &map[k]);
            }
            out.push('}');
        }
        J::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(out, item);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Compact JSON with object keys sorted at every level. `null` renders as `{}`
/// so absent and empty variables share one form.
pub fn canonical_json(v: &serde_json::Value) -> String {
    let mut out = String::new();
    if v.is_null() {
        out.push_str("{}");
    } else {
        write_json(&mut out, v);
    }
    out
}

pub fn canonicalize(doc: &QueryDocument, variables: &serde_json::Value) -> CanonicalKey {
    let mut h = Sha256::new();
    h.update(canonical_text(doc).as_bytes());
    h.update([0u8]);
    h.update(canonical_json(variables).as_bytes());
    CanonicalKey(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::GET_TEASERS_QUERY;
    use crate::query::parse_query;
    use serde_json::json;

    fn key(q: &str, v: serde_json::Value) -> CanonicalKey {
        canonicalize(&parse_query(q).unwrap(), &v)
    }

    #[test]
    fn whitespace_and_comments_do_not_matter() {
        let reformatted = "query   GetTeasers{teasers(first:2){title,subTitle # c\n url __typename}}";
        assert_eq!(key(GET_TEASERS_QUERY, json!({})), key(reformatted, json!({})));
    }

    #[test]
    fn argument_value_matters() {
        let other = GET_TEASERS_QUERY.replace("first: 2", "first: 3");
        assert_ne!(key(GET_TEASERS_QUERY, json!({})), key(&other, json!({})));
    }

    #[test]
    fn canonical_text_of_get_teasers() {
        let d = parse_query(GET_TEASERS_QUERY).unwrap();
        assert_eq!(
            canonical_text(&d),
            "query GetTeasers { teasers(first: 2) { title subTitle url __typename } }"
        );
    }

    #[test]
    fn argument_order_is_normalized_but_field_order_is_not() {
        assert_eq!(key("{ a(x: 1, y: 2) }", json!(null)), key("{ a(y: 2 x: 1) }", json!(null)));
        assert_ne!(key("{ a b }", json!(null)), key("{ b a }", json!(null)));
    }

    #[test]
    fn alias_and_name_changes_matter() {
        let base = key("query Q { a }", json!({}));
        assert_ne!(base, key("query Q { z: a }", json!({})));
        assert_ne!(base, key("query R { a }", json!({})));
        assert_ne!(base, key("query Q { a b }", json!({})));
    }

    #[test]
    fn variables_are_key_order_insensitive_and_null_equals_empty() {
        let q = "query Q($a: Int, $b: Int) { x(a: $a, b: $b) }";
        assert_eq!(key(q, json!({"a": 1, "b": 2})), key(q, json!({"b": 2, "a": 1})));
        assert_ne!(key(q, json!({"a": 1})), key(q, json!({"a": 2})));
        assert_eq!(key(q, json!(null)), key(q, json!({})));
    }

    #[test]
    fn key_is_stable_across_processes() {
        // Frozen digest: no per-process salt.
        let k = key("{ x }", json!({}));
        let mut h = Sha256::new();
        h.update(b"query { x }\0{}");
        assert_eq!(k.0, <[u8; 32]>::from(h.finalize()));
    }

    #[test]
    fn hex_round_trip() {
        let k = key("{ x }", json!({}));
        assert_eq!(CanonicalKey::from_hex(&k.to_hex()).unwrap(), k);
        assert!(CanonicalKey::from_hex("abcd").is_err());
    }
}
