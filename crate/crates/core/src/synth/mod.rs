//! Deterministic synthetic GraphQL execution for the fault lab.
//!
//! Every leaf value is a hash of `(seed, object identity, field, arguments)`,
//! so the same request against the same fixture always yields the same
//! bytes. Execution first builds a [`Resolved`] tree that still knows which
//! schema field produced each entry; faults rewrite that tree before it is
//! rendered.

mod fault;
pub mod random;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde_json::{Map, Value as Json};
use sha2::{Digest, Sha256};

use crate::query::{
    canonical_json, parse_operation, reached_tuples, root_type_name, Directive, Field,
    OperationKind, QueryDocument, QueryError, Selection, SelectionSet,
};
use crate::schema::{introspection_document, SchemaModel, TypeKind, TypeRef};

pub use fault::{FaultError, FaultKind, FaultSpec, FaultTarget, Trigger};

/// Upper bound on list lengths requested through arguments.
const MAX_LIST_LEN: i64 = 100;

/// Argument names read as a requested list length.
const LENGTH_ARGUMENTS: [&str; 4] = ["first", "last", "limit", "size"];

#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Null,
    Leaf(Json),
    List(Vec<Resolved>),
    Object(ResolvedObject),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedObject {
    /// Runtime object type.
    pub typename: String,
    /// Stable identity the object's data is derived from.
    pub identity: String,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub field: String,
    /// Arguments with variables substituted.
    pub args: Map<String, Json>,
    pub value: Resolved,
}

impl Resolved {
    pub fn to_json(&self) -> Json {
        match self {
            Resolved::Null => Json::Null,
            Resolved::Leaf(v) => v.clone(),
            Resolved::List(items) => Json::Array(items.iter().map(Resolved::to_json).collect()),
            Resolved::Object(o) => o.to_json(),
        }
    }

    /// Serializes with object keys in selection order.
    pub fn write_json(&self, out: &mut String) {
        match self {
            Resolved::Null => out.push_str("null"),
            Resolved::Leaf(v) => out.push_str(&v.to_string()),
            Resolved::List(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_json(out);
                }
                out.push(']');
            }
            Resolved::Object(o) => o.write_json(out),
        }
    }
}

impl ResolvedObject {
    pub fn to_json(&self) -> Json {
        Json::Object(self.entries.iter().map(|e| (e.key.clone(), e.value.to_json())).collect())
    }

    pub fn write_json(&self, out: &mut String) {
        out.push('{');
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&Json::String(e.key.clone()).to_string());
            out.push(':');
            e.value.write_json(out);
        }
        out.push('}');
    }
}

/// Seeded source of field values.
#[derive(Debug, Clone, Copy)]
pub struct DataGen {
    seed: u64,
}

impl DataGen {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn hash(&self, parts: &[&str]) -> u64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for p in parts {
            h.update(p.as_bytes());
            h.update([0]);
        }
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 8 bytes"))
    }

    /// Value of a scalar or enum named `type_name`.
    pub fn leaf(&self, schema: &SchemaModel, type_name: &str, identity: &str) -> Json {
        let h = self.hash(&[identity, "value"]);
        match type_name {
            "String" => Json::String(format!("s{:06x}", h & 0xff_ffff)),
            "ID" => Json::String(format!("{:x}", h & 0xffff_ffff)),
            "Int" => Json::from((h % 2001) as i64 - 1000),
            "Float" => Json::from((h % 200_001) as f64 / 100.0 - 1000.0),
            "Boolean" => Json::Bool(h & 1 == 1),
            other => match schema.get_type(other) {
                Some(t) if t.kind == TypeKind::Enum && !t.enum_values.is_empty() => {
                    Json::String(t.enum_values[(h % t.enum_values.len() as u64) as usize].clone())
                }
                _ => Json::String(format!("{other}:{:x}", h & 0xffff)),
            },
        }
    }

    fn is_null(&self, identity: &str) -> bool {
        self.hash(&[identity, "null"]).is_multiple_of(4)
    }

    fn list_len(&self, identity: &str) -> usize {
        (self.hash(&[identity, "len"]) % 4) as usize
    }
}

fn directive_excludes(dirs: &[Directive], vars: &Map<String, Json>) -> bool {
    dirs.iter().any(|d| {
        let cond = d.arguments.iter().find(|(n, _)| n == "if").map(|(_, v)| v.to_json(vars));
        matches!(
            (d.name.as_str(), cond),
            ("skip", Some(Json::Bool(true))) | ("include", Some(Json::Bool(false)))
        )
    })
}

/// Variables with declared defaults filled in.
pub fn effective_variables(doc: &QueryDocument, provided: &Json) -> Map<String, Json> {
    let mut vars = provided.as_object().cloned().unwrap_or_default();
    for def in &doc.variable_definitions {
        if !vars.contains_key(&def.name) {
            if let Some(d) = &def.default {
                vars.insert(def.name.clone(), d.to_json(&Map::new()));
            }
        }
    }
    vars
}

pub(crate) struct Resolver<'a> {
    pub schema: &'a SchemaModel,
    pub doc: &'a QueryDocument,
    pub vars: Map<String, Json>,
    pub gen: DataGen,
    /// Composite types that must not be nulled or emptied, so that fault
    /// targets beneath them are always reached.
    pub keep: BTreeSet<String>,
    /// Fields that must never resolve to null.
    pub keep_fields: BTreeSet<(String, String)>,
}

impl<'a> Resolver<'a> {
    fn collect(
        &self,
        runtime: &str,
        set: &'a SelectionSet,
        out: &mut IndexMap<String, Vec<&'a Field>>,
        visited: &mut BTreeSet<&'a str>,
    ) {
        for sel in &set.items {
            match sel {
                Selection::Field(f) => {
                    if !directive_excludes(&f.directives, &self.vars) {
                        out.entry(f.response_key().to_string()).or_default().push(f);
                    }
                }
                Selection::InlineFragment(i) => {
                    if directive_excludes(&i.directives, &self.vars) {
                        continue;
                    }
                    let applies = i
                        .type_condition
                        .as_deref()
                        .is_none_or(|c| self.schema.possible_types(c).contains(runtime));
                    if applies {
                        self.collect(runtime, &i.selection_set, out, visited);
                    }
                }
                Selection::FragmentSpread(s) => {
                    if directive_excludes(&s.directives, &self.vars) || !visited.insert(&s.name) {
                        continue;
                    }
                    let Some(fd) = self.doc.fragment(&s.name) else { continue };
                    if self.schema.possible_types(&fd.type_condition).contains(runtime) {
                        self.collect(runtime, &fd.selection_set, out, visited);
                    }
                }
            }
        }
    }

    fn must_keep(&self, t: &TypeRef) -> bool {
        let base = t.base_name();
        self.keep.contains(base)
            || self
                .schema
                .possible_types(base)
                .iter()
                .any(|p| self.keep.contains(p))
    }

    pub fn object(&self, runtime: &str, identity: &str, sets: &[&'a SelectionSet]) -> ResolvedObject {
        let mut groups = IndexMap::new();
        let mut visited = BTreeSet::new();
        for s in sets {
            self.collect(runtime, s, &mut groups, &mut visited);
        }
        let mut entries = Vec::with_capacity(groups.len());
        for (key, fields) in groups {
            let f = fields[0];
            if f.name == "__typename" {
                entries.push(Entry {
                    key,
                    field: f.name.clone(),
                    args: Map::new(),
                    value: Resolved::Leaf(Json::String(runtime.to_string())),
                });
                continue;
            }
            let Some(def) = self.schema.field_def(runtime, &f.name) else {
                continue;
            };
            let args: Map<String, Json> = f
                .arguments
                .iter()
                .map(|(n, v)| (n.clone(), v.to_json(&self.vars)))
                .collect();
            let ident = field_identity(identity, &f.name, &args);
            let subs: Vec<&SelectionSet> = fields.iter().filter_map(|f| f.selection_set.as_ref()).collect();
            let requested_len = LENGTH_ARGUMENTS
                .iter()
                .find_map(|a| args.get(*a).and_then(Json::as_i64))
                .map(|n| n.clamp(0, MAX_LIST_LEN) as usize);
            let keep_field = self.keep_fields.contains(&(runtime.to_string(), f.name.clone()));
            let value = self.value(&def.type_ref, &ident, &subs, requested_len, keep_field);
            entries.push(Entry {
                key,
                field: f.name.clone(),
                args,
                value,
            });
        }
        ResolvedObject {
            typename: runtime.to_string(),
            identity: identity.to_string(),
            entries,
        }
    }

    fn value(
        &self,
        t: &TypeRef,
        ident: &str,
        subs: &[&'a SelectionSet],
        requested_len: Option<usize>,
        keep_field: bool,
    ) -> Resolved {
        match t {
            TypeRef::NonNull(inner) => self.inner(inner, ident, subs, requested_len, keep_field),
            other => {
                if !keep_field && !self.must_keep(other) && self.gen.is_null(ident) {
                    Resolved::Null
                } else {
                    self.inner(other, ident, subs, requested_len, keep_field)
                }
            }
        }
    }

    fn inner(
        &self,
        t: &TypeRef,
        ident: &str,
        subs: &[&'a SelectionSet],
        requested_len: Option<usize>,
        keep_field: bool,
    ) -> Resolved {
        match t {
            TypeRef::NonNull(inner) => self.inner(inner, ident, subs, requested_len, keep_field),
            TypeRef::List(elem) => {
                let mut len = requested_len.unwrap_or_else(|| self.gen.list_len(ident));
                if len == 0 && requested_len.is_none() && (keep_field || self.must_keep(elem)) {
                    len = 1;
                }
                Resolved::List(
                    (0..len)
                        .map(|i| self.value(elem, &format!("{ident}[{i}]"), subs, None, keep_field))
                        .collect(),
                )
            }
            TypeRef::Named(name) => match self.schema.kind_of(name) {
                Some(k) if k.is_composite() => {
                    let candidates = self.schema.possible_types(name);
                    let preferred: Vec<&String> =
                        candidates.iter().filter(|c| self.keep.contains(*c)).collect();
                    let pool: Vec<&String> = if preferred.is_empty() {
                        candidates.iter().collect()
                    } else {
                        preferred
                    };
                    if pool.is_empty() {
                        return Resolved::Null;
                    }
                    let pick = pool[(self.gen.hash(&[ident, "type"]) % pool.len() as u64) as usize];
                    Resolved::Object(self.object(pick, ident, subs))
                }
                _ => Resolved::Leaf(self.gen.leaf(self.schema, name, ident)),
            },
        }
    }
}

/// Identity of the value a field produces on the object `parent`.
pub fn field_identity(parent: &str, field: &str, args: &Map<String, Json>) -> String {
    if args.is_empty() {
        format!("{parent}.{field}")
    } else {
        format!("{parent}.{field}{}", canonical_json(&Json::Object(args.clone())))
    }
}

/// Executes `doc` against synthetic data. The root object has identity equal
/// to the root type name.
pub fn resolve(
    schema: &SchemaModel,
    doc: &QueryDocument,
    variables: &Json,
    seed: u64,
) -> Result<ResolvedObject, QueryError> {
    resolve_keeping(schema, doc, variables, seed, BTreeSet::new(), BTreeSet::new())
}

pub(crate) fn resolve_keeping(
    schema: &SchemaModel,
    doc: &QueryDocument,
    variables: &Json,
    seed: u64,
    keep: BTreeSet<String>,
    keep_fields: BTreeSet<(String, String)>,
) -> Result<ResolvedObject, QueryError> {
    let root = root_type_name(doc, schema)?.to_string();
    let r = Resolver {
        schema,
        doc,
        vars: effective_variables(doc, variables),
        gen: DataGen::new(seed),
        keep,
        keep_fields,
    };
    Ok(r.object(&root, &root, &[&doc.selection_set]))
}

/// A `{"data": ...}` document satisfying every oracle derived for `doc`.
pub fn conformant_response(
    schema: &SchemaModel,
    doc: &QueryDocument,
    variables: &Json,
    seed: u64,
) -> Result<Json, QueryError> {
    let data = resolve(schema, doc, variables, seed)?;
    Ok(serde_json::json!({ "data": data.to_json() }))
}

/// A fixture schema, seed and enabled faults: the state of one fault-lab
/// server.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub schema: SchemaModel,
    pub seed: u64,
    pub faults: Vec<FaultSpec>,
    keep: BTreeSet<String>,
    keep_fields: BTreeSet<(String, String)>,
}

/// Status and body of one HTTP reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

fn error_reply(status: u16, message: &str) -> Reply {
    Reply {
        status,
        body: serde_json::json!({ "errors": [{ "message": message }] })
            .to_string()
            .into_bytes(),
    }
}

fn selects_schema_introspection(doc: &QueryDocument) -> bool {
    doc.selection_set
        .items
        .iter()
        .any(|s| matches!(s, Selection::Field(f) if f.name == "__schema"))
}

impl Fixture {
    pub fn new(schema: SchemaModel, seed: u64, faults: Vec<FaultSpec>) -> Result<Self, FaultError> {
        for f in &faults {
            f.check_against(&schema)?;
        }
        let keep_fields = faults.iter().map(|f| f.resolved_target(&schema)).collect();
        let keep = fault::types_reaching(&schema, &faults);
        Ok(Self {
            schema,
            seed,
            faults,
            keep,
            keep_fields,
        })
    }

    /// Answers one decoded GraphQL request.
    pub fn execute(&self, query: &str, variables: &Json, operation_name: Option<&str>) -> Reply {
        let doc = match parse_operation(query, operation_name) {
            Ok(d) => d,
            Err(e) => return error_reply(400, &e.to_string()),
        };
        if selects_schema_introspection(&doc) {
            let body = serde_json::json!({ "data": { "__schema": introspection_document(&self.schema) } });
            return Reply {
                status: 200,
                body: body.to_string().into_bytes(),
            };
        }
        if let Err(e) = reached_tuples(&doc, &self.schema) {
            return error_reply(400, &e.to_string());
        }
        if doc.operation_kind == OperationKind::Mutation && self.schema.mutation_type_name.is_none() {
            return error_reply(400, "schema has no mutation type");
        }
        let data = match resolve_keeping(
            &self.schema,
            &doc,
            variables,
            self.seed,
            self.keep.clone(),
            self.keep_fields.clone(),
        ) {
            Ok(d) => d,
            Err(e) => return error_reply(400, &e.to_string()),
        };
        let gen = DataGen::new(self.seed);
        let mut data = data;
        let hits = fault::apply(&self.schema, gen, &self.faults, &mut data);
        if hits.http_5xx {
            return error_reply(500, "Internal Server Error");
        }
        let mut body = String::from("{\"data\":");
        data.write_json(&mut body);
        if !hits.errors.is_empty() {
            body.push_str(",\"errors\":");
            body.push_str(&Json::Array(hits.errors).to_string());
        }
        body.push('}');
        Reply {
            status: 200,
            body: body.into_bytes(),
        }
    }

    /// Answers a POST body of the form `{query, variables, operationName}`.
    pub fn handle(&self, body: &[u8]) -> Reply {
        let Ok(req) = serde_json::from_slice::<Json>(body) else {
            return error_reply(400, "request body is not JSON");
        };
        let Some(query) = req.get("query").and_then(Json::as_str) else {
            return error_reply(400, "request has no query");
        };
        let vars = req.get("variables").cloned().unwrap_or(Json::Null);
        let op = req.get("operationName").and_then(Json::as_str);
        self.execute(query, &vars, op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{GET_TEASERS_QUERY, TEASER_SCHEMA_SDL};
    use crate::oracle::{derive_oracles, validate};
    use crate::query::parse_query;
    use crate::schema::parse_sdl;
    use serde_json::json;

    #[test]
    fn get_teasers_shape() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let d = parse_query(GET_TEASERS_QUERY).unwrap();
        let tree = derive_oracles(&s, &d).unwrap();
        for seed in 0..50 {
            let body = conformant_response(&s, &d, &json!({}), seed).unwrap();
            let teasers = &body["data"]["teasers"];
            assert!(teasers.is_null() || teasers.as_array().unwrap().len() == 2);
            let r = validate(&tree, 200, body.to_string().as_bytes());
            assert!(r.passed, "seed {seed}: {:?}", r.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn rendering_keeps_selection_order_and_is_stable() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let fx = Fixture::new(s, 7, vec![]).unwrap();
        let q = "{ teasers(first: 3) { url title __typename } }";
        let a = fx.execute(q, &json!({}), None);
        let b = fx.execute(q, &json!(null), None);
        assert_eq!(a, b);
        let text = String::from_utf8(a.body).unwrap();
        if let (Some(u), Some(t)) = (text.find("\"url\""), text.find("\"title\"")) {
            assert!(u < t);
        }
    }

    #[test]
    fn non_null_float_always_number() {
        let s = parse_sdl("type Query { f: Float! g: [Float!]! }").unwrap();
        let d = parse_query("{ f g }").unwrap();
        for seed in 0..100 {
            let b = conformant_response(&s, &d, &json!({}), seed).unwrap();
            assert!(b["data"]["f"].is_number());
            assert!(b["data"]["g"].as_array().unwrap().iter().all(Json::is_number));
        }
    }

    #[test]
    fn nullable_fields_are_null_about_a_quarter_of_the_time() {
        let s = parse_sdl("type Query { x: Int }").unwrap();
        let d = parse_query("{ x }").unwrap();
        let nulls = (0..2000)
            .filter(|seed| conformant_response(&s, &d, &json!({}), *seed).unwrap()["data"]["x"].is_null())
            .count();
        assert!((400..600).contains(&nulls), "{nulls}");
    }

    #[test]
    fn list_length_follows_argument_and_variables() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let fx = Fixture::new(s, 1, vec![FaultSpec::parse(
            r#"{"id":"keep","kind":"MISSING_FIELD","target":{"object":"Teaser","field":"duration"}}"#,
        )
        .unwrap()])
        .unwrap();
        let r = fx.execute("query ($n: Int = 4) { teasers(first: $n) { title } }", &json!({}), None);
        let v: Json = serde_json::from_slice(&r.body).unwrap();
        assert_eq!(v["data"]["teasers"].as_array().unwrap().len(), 4);
        let r = fx.execute("query ($n: Int = 4) { teasers(first: $n) { title } }", &json!({"n": 6}), None);
        let v: Json = serde_json::from_slice(&r.body).unwrap();
        assert_eq!(v["data"]["teasers"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn skip_and_include_are_honored() {
        let s = parse_sdl("type Query { a: Int! b: Int! }").unwrap();
        let d = parse_query("query ($x: Boolean!) { a @skip(if: $x) b @include(if: false) }").unwrap();
        let b = conformant_response(&s, &d, &json!({"x": true}), 0).unwrap();
        assert_eq!(b, json!({"data": {}}));
        let b = conformant_response(&s, &d, &json!({"x": false}), 0).unwrap();
        assert!(b["data"]["a"].is_number());
    }

    #[test]
    fn introspection_is_answered() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let fx = Fixture::new(s.clone(), 0, vec![]).unwrap();
        let r = fx.execute(crate::schema::INTROSPECTION_QUERY, &json!({}), None);
        assert_eq!(r.status, 200);
        let v: Json = serde_json::from_slice(&r.body).unwrap();
        let back = crate::schema::ingest_introspection(&v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn bad_requests_are_400() {
        let fx = Fixture::new(parse_sdl(TEASER_SCHEMA_SDL).unwrap(), 0, vec![]).unwrap();
        assert_eq!(fx.handle(b"nope").status, 400);
        assert_eq!(fx.handle(br#"{"query": "{ nope }"}"#).status, 400);
        assert_eq!(fx.handle(br#"{"query": "{ teasers(first: 1) { url } }"}"#).status, 200);
    }
}
