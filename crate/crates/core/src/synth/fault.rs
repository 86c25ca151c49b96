//! Injectable schema faults, applied by rewriting a resolved response.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::{field_identity, DataGen, Entry, Resolved, ResolvedObject};
use crate::schema::{is_builtin_scalar, SchemaModel, TypeKind, TypeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FaultKind {
    /// A non-null field resolves to null.
    NullNonnullField,
    /// A leaf holds a JSON value of the wrong scalar type.
    WrongScalarType,
    /// A requested key is absent from its object.
    MissingField,
    /// An enum leaf holds a string outside the enum.
    NonMemberEnum,
    /// A list-typed field holds a scalar.
    ListAsScalar,
    /// The response carries an `errors` member naming the field.
    ErrorsMember,
    /// The server answers 500 when the field is requested.
    #[serde(rename = "HTTP_5XX")]
    Http5xx,
}

impl FaultKind {
    pub const ALL: [FaultKind; 7] = [
        FaultKind::NullNonnullField,
        FaultKind::WrongScalarType,
        FaultKind::MissingField,
        FaultKind::NonMemberEnum,
        FaultKind::ListAsScalar,
        FaultKind::ErrorsMember,
        FaultKind::Http5xx,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FaultTarget {
    Field { object: String, field: String },
    EntryPoint { entry_point: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// The targeted field was called with argument `name` bound to one of `in`.
    Argument {
        name: String,
        #[serde(rename = "in")]
        values: Vec<Json>,
    },
    /// The object holding the target has leaf field `field` equal to one of `in`.
    Sibling {
        field: String,
        #[serde(rename = "in")]
        values: Vec<Json>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub id: String,
    pub kind: FaultKind,
    pub target: FaultTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<Trigger>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FaultError {
    #[error("invalid fault spec: {0}")]
    Parse(String),
    #[error("fault {id}: no field {object}.{field} in the fixture schema")]
    UnknownTarget { id: String, object: String, field: String },
    #[error("fault {id}: {reason}")]
    Incompatible { id: String, reason: String },
}

impl FaultSpec {
    pub fn parse(text: &str) -> Result<Self, FaultError> {
        serde_json::from_str(text).map_err(|e| FaultError::Parse(e.to_string()))
    }

    /// `(object, field)` of the target; entry points live on the query root.
    pub fn resolved_target(&self, schema: &SchemaModel) -> (String, String) {
        match &self.target {
            FaultTarget::Field { object, field } => (object.clone(), field.clone()),
            FaultTarget::EntryPoint { entry_point } => {
                (schema.query_type_name.clone(), entry_point.clone())
            }
        }
    }

    pub fn check_against(&self, schema: &SchemaModel) -> Result<(), FaultError> {
        let (object, field) = self.resolved_target(schema);
        let def = schema
            .get_type(&object)
            .filter(|t| t.kind.has_fields())
            .and_then(|t| t.field(&field))
            .ok_or_else(|| FaultError::UnknownTarget {
                id: self.id.clone(),
                object: object.clone(),
                field: field.clone(),
            })?;
        let incompatible = |reason: String| FaultError::Incompatible {
            id: self.id.clone(),
            reason,
        };
        let base = def.type_ref.base_name();
        let base_kind = schema.kind_of(base);
        match self.kind {
            FaultKind::NullNonnullField if !def.type_ref.is_non_null() => {
                return Err(incompatible(format!("{object}.{field} is nullable")))
            }
            FaultKind::WrongScalarType
                if !(is_builtin_scalar(base) || base_kind == Some(TypeKind::Enum)) =>
            {
                return Err(incompatible(format!(
                    "{object}.{field} is not a built-in scalar or enum"
                )))
            }
            FaultKind::NonMemberEnum if base_kind != Some(TypeKind::Enum) => {
                return Err(incompatible(format!("{object}.{field} is not an enum")))
            }
            FaultKind::ListAsScalar if !matches!(def.type_ref.nullable(), TypeRef::List(_)) => {
                return Err(incompatible(format!("{object}.{field} is not a list")))
            }
            _ => {}
        }
        match &self.trigger {
            Some(Trigger::Argument { name, .. }) if def.argument(name).is_none() => Err(incompatible(
                format!("{object}.{field} has no argument {name}"),
            )),
            Some(Trigger::Sibling { field: sib, .. }) => {
                let ok = schema.field_def(&object, sib).is_some_and(|d| {
                    !matches!(d.type_ref.nullable(), TypeRef::List(_))
                        && !schema
                            .kind_of(d.type_ref.base_name())
                            .is_some_and(TypeKind::is_composite)
                });
                if ok {
                    Ok(())
                } else {
                    Err(incompatible(format!("{object}.{sib} is not a scalar sibling")))
                }
            }
            _ => Ok(()),
        }
    }
}

/// Composite types from which some fault target can be reached, the target
/// owners included.
pub(crate) fn types_reaching(schema: &SchemaModel, faults: &[FaultSpec]) -> BTreeSet<String> {
    let mut keep: BTreeSet<String> = BTreeSet::new();
    for f in faults {
        let (object, _) = f.resolved_target(schema);
        keep.extend(schema.possible_types(&object));
        keep.insert(object);
    }
    loop {
        let mut grew = false;
        for t in schema.types.values().filter(|t| t.kind.has_fields()) {
            if keep.contains(&t.name) {
                continue;
            }
            let reaches = t.fields.iter().any(|fd| {
                let base = fd.type_ref.base_name();
                keep.contains(base) || schema.possible_types(base).iter().any(|p| keep.contains(p))
            });
            if reaches {
                keep.insert(t.name.clone());
                for i in &t.implemented_interfaces {
                    keep.insert(i.clone());
                }
                grew = true;
            }
        }
        if !grew {
            return keep;
        }
    }
}

#[derive(Debug, Default)]
pub(crate) struct Hits {
    pub http_5xx: bool,
    pub errors: Vec<Json>,
}

fn corrupt_leaves(v: &mut Resolved, replacement: &Json) {
    match v {
        Resolved::List(items) if items.is_empty() => items.push(Resolved::Leaf(replacement.clone())),
        Resolved::List(items) => items.iter_mut().for_each(|i| corrupt_leaves(i, replacement)),
        other => *other = Resolved::Leaf(replacement.clone()),
    }
}

fn wrong_scalar_for(schema: &SchemaModel, base: &str) -> Json {
    match base {
        "Int" | "Float" => Json::String("42".into()),
        "Boolean" => Json::String("true".into()),
        _ if schema.kind_of(base) == Some(TypeKind::Enum) => Json::from(42),
        _ => Json::from(42),
    }
}

struct Applier<'a> {
    schema: &'a SchemaModel,
    gen: DataGen,
    faults: Vec<(&'a FaultSpec, BTreeSet<String>, String)>,
    hits: Hits,
}

impl Applier<'_> {
    fn sibling_value(&self, obj: &ResolvedObject, field: &str) -> Json {
        if let Some(e) = obj.entries.iter().find(|e| e.field == field && e.args.is_empty()) {
            return e.value.to_json();
        }
        let Some(def) = self.schema.field_def(&obj.typename, field) else {
            return Json::Null;
        };
        let ident = field_identity(&obj.identity, field, &Map::new());
        if !def.type_ref.is_non_null() && self.gen.is_null(&ident) {
            return Json::Null;
        }
        self.gen.leaf(self.schema, def.type_ref.base_name(), &ident)
    }

    fn triggered(&self, spec: &FaultSpec, obj: &ResolvedObject, entry: &Entry) -> bool {
        match &spec.trigger {
            None => true,
            Some(Trigger::Argument { name, values }) => {
                let v = entry.args.get(name).cloned().unwrap_or(Json::Null);
                values.contains(&v)
            }
            Some(Trigger::Sibling { field, values }) => values.contains(&self.sibling_value(obj, field)),
        }
    }

    fn object(&mut self, obj: &mut ResolvedObject, path: &mut Vec<Json>) {
        let mut fire: Vec<Vec<usize>> = Vec::with_capacity(obj.entries.len());
        for e in &obj.entries {
            let firing = self
                .faults
                .iter()
                .enumerate()
                .filter(|(_, (spec, owners, field))| {
                    *field == e.field && owners.contains(&obj.typename) && self.triggered(spec, obj, e)
                })
                .map(|(i, _)| i)
                .collect();
            fire.push(firing);
        }
        let mut remove = vec![false; obj.entries.len()];
        for (idx, entry) in obj.entries.iter_mut().enumerate() {
            path.push(Json::String(entry.key.clone()));
            for &fi in &fire[idx] {
                let spec = self.faults[fi].0;
                let def = self.schema.field_def(&obj.typename, &entry.field);
                let base = def.map(|d| d.type_ref.base_name()).unwrap_or("String");
                match spec.kind {
                    FaultKind::NullNonnullField => entry.value = Resolved::Null,
                    FaultKind::WrongScalarType => {
                        corrupt_leaves(&mut entry.value, &wrong_scalar_for(self.schema, base))
                    }
                    FaultKind::MissingField => remove[idx] = true,
                    FaultKind::NonMemberEnum => {
                        corrupt_leaves(&mut entry.value, &Json::String("NOT_A_MEMBER".into()))
                    }
                    FaultKind::ListAsScalar => entry.value = Resolved::Leaf(Json::String("not a list".into())),
                    FaultKind::ErrorsMember => self.hits.errors.push(serde_json::json!({
                        "message": format!("injected fault {}", spec.id),
                        "path": path.clone(),
                    })),
                    FaultKind::Http5xx => self.hits.http_5xx = true,
                }
            }
            if !remove[idx] {
                self.value(&mut entry.value, path);
            }
            path.pop();
        }
        let mut i = 0;
        obj.entries.retain(|_| {
            i += 1;
            !remove[i - 1]
        });
    }

    fn value(&mut self, v: &mut Resolved, path: &mut Vec<Json>) {
        match v {
            Resolved::List(items) => {
                for (i, item) in items.iter_mut().enumerate() {
                    path.push(Json::from(i));
                    self.value(item, path);
                    path.pop();
                }
            }
            Resolved::Object(o) => self.object(o, path),
            Resolved::Null | Resolved::Leaf(_) => {}
        }
    }
}

pub(crate) fn apply(schema: &SchemaModel, gen: DataGen, faults: &[FaultSpec], root: &mut ResolvedObject) -> Hits {
    let faults = faults
        .iter()
        .map(|f| {
            let (object, field) = f.resolved_target(schema);
            (f, schema.possible_types(&object), field)
        })
        .collect();
    let mut a = Applier {
        schema,
        gen,
        faults,
        hits: Hits::default(),
    };
    a.object(root, &mut Vec::new());
    a.hits
}

#[cfg(test)]
mod tests {
    use super::super::Fixture;
    use super::*;
    use crate::fixtures::{GET_TEASERS_QUERY, TEASER_SCHEMA_SDL};
    use crate::oracle::{derive_oracles, validate, Check, Verdict};
    use crate::query::parse_query;
    use crate::schema::parse_sdl;
    use serde_json::json;

    fn spec(text: &str) -> FaultSpec {
        FaultSpec::parse(text).unwrap()
    }

    fn failures(fx: &Fixture, q: &str) -> Vec<(String, Check)> {
        let tree = derive_oracles(&fx.schema, &parse_query(q).unwrap()).unwrap();
        let reply = fx.execute(q, &json!({}), None);
        validate(&tree, reply.status, &reply.body)
            .outcomes
            .into_iter()
            .filter(|o| o.verdict == Verdict::Fail)
            .map(|o| (o.path, o.check))
            .collect()
    }

    #[test]
    fn spec_json_shape() {
        let s = spec(
            r#"{"id":"l4","kind":"NULL_NONNULL_FIELD","target":{"object":"Teaser","field":"url"},
                "trigger":{"sibling":{"field":"publishedOnSite","in":[false,null]}}}"#,
        );
        assert_eq!(s.kind, FaultKind::NullNonnullField);
        assert!(matches!(s.trigger, Some(Trigger::Sibling { .. })));
        let e = spec(r#"{"id":"e","kind":"HTTP_5XX","target":{"entry_point":"video"}}"#);
        assert_eq!(e.target, FaultTarget::EntryPoint { entry_point: "video".into() });
        let back: FaultSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(FaultSpec::parse(r#"{"id":"x","kind":"NOPE","target":{"entry_point":"v"}}"#).is_err());
    }

    #[test]
    fn targets_are_checked() {
        let schema = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let bad = [
            r#"{"id":"a","kind":"MISSING_FIELD","target":{"object":"Teaser","field":"price"}}"#,
            r#"{"id":"b","kind":"NULL_NONNULL_FIELD","target":{"object":"Teaser","field":"subTitle"}}"#,
            r#"{"id":"c","kind":"NON_MEMBER_ENUM","target":{"object":"Teaser","field":"title"}}"#,
            r#"{"id":"d","kind":"LIST_AS_SCALAR","target":{"entry_point":"video"}}"#,
            r#"{"id":"e","kind":"WRONG_SCALAR_TYPE","target":{"object":"Video","field":"teaser"}}"#,
            r#"{"id":"f","kind":"MISSING_FIELD","target":{"object":"Teaser","field":"url"},"trigger":{"argument":{"name":"x","in":[1]}}}"#,
        ];
        for b in bad {
            assert!(Fixture::new(schema.clone(), 0, vec![spec(b)]).is_err(), "{b}");
        }
    }

    #[test]
    fn unpublished_teasers_lose_their_url() {
        let schema = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let fault = spec(
            r#"{"id":"l4","kind":"NULL_NONNULL_FIELD","target":{"object":"Teaser","field":"url"},
                "trigger":{"sibling":{"field":"publishedOnSite","in":[false,null]}}}"#,
        );
        let q = "{ teasers(first: 10) { url publishedOnSite } }";
        for seed in 0..20 {
            let fx = Fixture::new(schema.clone(), seed, vec![fault.clone()]).unwrap();
            let reply = fx.execute(q, &json!({}), None);
            let v: Json = serde_json::from_slice(&reply.body).unwrap();
            for t in v["data"]["teasers"].as_array().unwrap() {
                let published = t["publishedOnSite"] == json!(true);
                assert_eq!(t["url"].is_null(), !published, "{t}");
            }
            // The sibling need not be selected for the trigger to see it.
            let fails = failures(&fx, GET_TEASERS_QUERY);
            assert!(fails.iter().all(|(p, c)| p.ends_with(".url") && *c == Check::NotNull));
        }
    }

    #[test]
    fn each_kind_corrupts_its_target() {
        let schema = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let q = "{ teasers(first: 2) { title subTitle url } video(id: \"1\") { videoType teaser { duration } } }";
        let cases = [
            (r#"{"id":"1","kind":"NULL_NONNULL_FIELD","target":{"object":"Teaser","field":"title"}}"#, "title", Check::NotNull),
            (r#"{"id":"2","kind":"WRONG_SCALAR_TYPE","target":{"object":"Teaser","field":"duration"}}"#, "duration", Check::IsNumeric),
            (r#"{"id":"3","kind":"MISSING_FIELD","target":{"object":"Teaser","field":"subTitle"}}"#, "subTitle", Check::Present),
            (r#"{"id":"4","kind":"NON_MEMBER_ENUM","target":{"object":"Video","field":"videoType"}}"#, "videoType", Check::EnumMember(vec!["ANALYSIS".into(), "INTERVIEW".into(), "PRESENTATION".into()])),
            (r#"{"id":"5","kind":"LIST_AS_SCALAR","target":{"entry_point":"teasers"}}"#, "teasers", Check::IsList),
            (r#"{"id":"6","kind":"ERRORS_MEMBER","target":{"entry_point":"video"}}"#, "errors", Check::NoErrorsMember),
            (r#"{"id":"7","kind":"HTTP_5XX","target":{"object":"Teaser","field":"url"}}"#, "$status", Check::StatusIs200),
        ];
        for seed in 0..10 {
            for (text, at, check) in &cases {
                let fx = Fixture::new(schema.clone(), seed, vec![spec(text)]).unwrap();
                let fails = failures(&fx, q);
                assert!(!fails.is_empty(), "seed {seed} {text}");
                assert!(
                    fails.iter().all(|(p, c)| p.ends_with(at) && c == check),
                    "seed {seed} {text}: {fails:?}"
                );
            }
        }
    }

    #[test]
    fn argument_trigger() {
        let schema = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let fault = spec(
            r#"{"id":"a","kind":"ERRORS_MEMBER","target":{"entry_point":"video"},
                "trigger":{"argument":{"name":"id","in":["13"]}}}"#,
        );
        let fx = Fixture::new(schema, 0, vec![fault]).unwrap();
        assert!(failures(&fx, "{ video(id: \"1\") { id } }").is_empty());
        let f = failures(&fx, "{ video(id: \"13\") { id } }");
        assert_eq!(f, vec![("errors".to_string(), Check::NoErrorsMember)]);
        let reply = fx.execute("{ v: video(id: \"13\") { id } }", &json!({}), None);
        let v: Json = serde_json::from_slice(&reply.body).unwrap();
        assert_eq!(v["errors"][0]["path"], json!(["v"]));
    }

    #[test]
    fn zero_fault_fixture_passes() {
        let schema = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        for seed in 0..20 {
            let fx = Fixture::new(schema.clone(), seed, vec![]).unwrap();
            assert!(failures(&fx, "{ teasers(first: 3) { title subTitle url duration publishedOnSite __typename } video(id: \"1\") { id title url videoType teaser { url } } }").is_empty());
        }
    }
}
