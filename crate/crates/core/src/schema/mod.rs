//! GraphQL type-system model and the schema tuple universe used for coverage.
//!
//! A [`SchemaModel`] is built once, from SDL ([`parse_sdl`]) or from an
//! introspection result ([`ingest_introspection`]), validated, and then only
//! read. Every type reference in the model resolves either to a declared
//! type or to one of the five built-in scalars.

mod introspection;
mod render;
mod sdl;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lexer::SyntaxError;

pub use introspection::{ingest_introspection, introspection_document, INTROSPECTION_QUERY};
pub use render::render_sdl;
pub use sdl::parse_sdl;
pub(crate) use sdl::parse_type_ref as parse_type_ref_from;

pub const BUILTIN_SCALARS: [&str; 5] = ["Int", "Float", "String", "Boolean", "ID"];

pub fn is_builtin_scalar(name: &str) -> bool {
    BUILTIN_SCALARS.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("type '{name}' referenced by {referenced_by} is not declared")]
    Reference { name: String, referenced_by: String },
    #[error("type '{0}' is declared more than once")]
    DuplicateType(String),
    #[error("'{owner}' declares '{member}' more than once")]
    DuplicateMember { owner: String, member: String },
    #[error("invalid schema: {0}")]
    Invalid(String),
    #[error("introspection document: {0}")]
    Format(String),
    #[error("type '{parent}' has no field '{field}'")]
    UnknownField { parent: String, field: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TypeKind {
    Object,
    Interface,
    Union,
    Enum,
    Scalar,
    InputObject,
}

impl TypeKind {
    pub fn is_composite(self) -> bool {
        matches!(self, TypeKind::Object | TypeKind::Interface | TypeKind::Union)
    }

    pub fn has_fields(self) -> bool {
        matches!(self, TypeKind::Object | TypeKind::Interface)
    }

    pub fn introspection_name(self) -> &'static str {
        match self {
            TypeKind::Object => "OBJECT",
            TypeKind::Interface => "INTERFACE",
            TypeKind::Union => "UNION",
            TypeKind::Enum => "ENUM",
            TypeKind::Scalar => "SCALAR",
            TypeKind::InputObject => "INPUT_OBJECT",
        }
    }
}

/// Wrapped type reference: `Named`, `[T]` or `T!`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeRef {
    Named(String),
    List(Box<TypeRef>),
    NonNull(Box<TypeRef>),
}

impl TypeRef {
    pub fn named(name: impl Into<String>) -> Self {
        TypeRef::Named(name.into())
    }

    pub fn list(inner: TypeRef) -> Self {
        TypeRef::List(Box::new(inner))
    }

    /// Wraps in NON_NULL unless already non-null.
    pub fn non_null(inner: TypeRef) -> Self {
        match inner {
            TypeRef::NonNull(_) => inner,
            other => TypeRef::NonNull(Box::new(other)),
        }
    }

    /// The innermost named type.
    pub fn base_name(&self) -> &str {
        match self {
            TypeRef::Named(n) => n,
            TypeRef::List(t) | TypeRef::NonNull(t) => t.base_name(),
        }
    }

    pub fn is_non_null(&self) -> bool {
        matches!(self, TypeRef::NonNull(_))
    }

    /// Strips one outer NON_NULL, if any.
    pub fn nullable(&self) -> &TypeRef {
        match self {
            TypeRef::NonNull(t) => t,
            other => other,
        }
    }

    fn parse_str(s: &str) -> Option<TypeRef> {
        let s = s.trim();
        if let Some(inner) = s.strip_suffix('!') {
            let inner = Self::parse_str(inner)?;
            return (!inner.is_non_null()).then(|| TypeRef::NonNull(Box::new(inner)));
        }
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            return Some(TypeRef::list(Self::parse_str(inner)?));
        }
        let valid = !s.is_empty()
            && s.chars().all(|c| c == '_' || c.is_ascii_alphanumeric())
            && !s.starts_with(|c: char| c.is_ascii_digit());
        valid.then(|| TypeRef::named(s))
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Named(n) => f.write_str(n),
            TypeRef::List(t) => write!(f, "[{t}]"),
            TypeRef::NonNull(t) => write!(f, "{t}!"),
        }
    }
}

impl FromStr for TypeRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_str(s).ok_or_else(|| format!("invalid type reference '{s}'"))
    }
}

impl Serialize for TypeRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TypeRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentDef {
    pub name: String,
    pub type_ref: TypeRef,
    /// Non-null without a default value.
    pub required: bool,
    /// Canonical text of the default value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub type_ref: TypeRef,
    #[serde(default)]
    pub arguments: Vec<ArgumentDef>,
}

impl FieldDef {
    pub fn argument(&self, name: &str) -> Option<&ArgumentDef> {
        self.arguments.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeDef {
    pub name: String,
    pub kind: TypeKind,
    #[serde(default)]
    pub fields: Vec<FieldDef>,
    #[serde(default)]
    pub input_fields: Vec<ArgumentDef>,
    #[serde(default)]
    pub enum_values: Vec<String>,
    #[serde(default)]
    pub union_members: Vec<String>,
    #[serde(default)]
    pub implemented_interfaces: Vec<String>,
}

impl TypeDef {
    pub fn new(name: impl Into<String>, kind: TypeKind) -> Self {
        Self {
            name: name.into(),
            kind,
            fields: Vec::new(),
            input_fields: Vec::new(),
            enum_values: Vec::new(),
            union_members: Vec::new(),
            implemented_interfaces: Vec::new(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }

    fn sorted(&self) -> TypeDef {
        let mut t = self.clone();
        t.fields.sort_by(|a, b| a.name.cmp(&b.name));
        for f in &mut t.fields {
            f.arguments.sort_by(|a, b| a.name.cmp(&b.name));
        }
        t.input_fields.sort_by(|a, b| a.name.cmp(&b.name));
        t.enum_values.sort();
        t.union_members.sort();
        t.implemented_interfaces.sort();
        t
    }
}

/// `{object, field}` pair, the unit of schema coverage.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaTuple {
    pub object: String,
    pub field: String,
}

impl SchemaTuple {
    pub fn new(object: impl Into<String>, field: impl Into<String>) -> Self {
        Self {
            object: object.into(),
            field: field.into(),
        }
    }
}

impl fmt::Display for SchemaTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.object, self.field)
    }
}

/// Immutable, validated type system.
///
/// Equality ignores declaration order of types, fields, arguments, enum
/// values, union members and interfaces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaModel {
    pub types: IndexMap<String, TypeDef>,
    pub query_type_name: String,
    pub mutation_type_name: Option<String>,
}

impl PartialEq for SchemaModel {
    fn eq(&self, other: &Self) -> bool {
        if self.query_type_name != other.query_type_name
            || self.mutation_type_name != other.mutation_type_name
            || self.types.len() != other.types.len()
        {
            return false;
        }
        self.types.iter().all(|(name, t)| {
            other
                .types
                .get(name)
                .is_some_and(|o| t.sorted() == o.sorted())
        })
    }
}

impl Eq for SchemaModel {}

/// The `__typename` meta-field, available on every composite type.
pub fn typename_field() -> FieldDef {
    FieldDef {
        name: "__typename".into(),
        type_ref: TypeRef::non_null(TypeRef::named("String")),
        arguments: Vec::new(),
    }
}

impl SchemaModel {
    /// Builds and validates a model from already-constructed type definitions.
    pub fn new(
        types: Vec<TypeDef>,
        query_type_name: impl Into<String>,
        mutation_type_name: Option<String>,
    ) -> Result<Self, SchemaError> {
        let mut map = IndexMap::new();
        for t in types {
            if is_builtin_scalar(&t.name) && t.kind == TypeKind::Scalar {
                continue;
            }
            if map.contains_key(&t.name) {
                return Err(SchemaError::DuplicateType(t.name));
            }
            map.insert(t.name.clone(), t);
        }
        let model = SchemaModel {
            types: map,
            query_type_name: query_type_name.into(),
            mutation_type_name,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn get_type(&self, name: &str) -> Option<&TypeDef> {
        self.types.get(name)
    }

    pub fn query_type(&self) -> &TypeDef {
        &self.types[&self.query_type_name]
    }

    pub fn mutation_type(&self) -> Option<&TypeDef> {
        self.mutation_type_name
            .as_deref()
            .and_then(|n| self.types.get(n))
    }

    /// Kind of a named type, counting built-in scalars as SCALAR.
    pub fn kind_of(&self, name: &str) -> Option<TypeKind> {
        if is_builtin_scalar(name) {
            return Some(TypeKind::Scalar);
        }
        self.types.get(name).map(|t| t.kind)
    }

    /// Concrete object types a value of `name` may have at runtime.
    pub fn possible_types(&self, name: &str) -> BTreeSet<String> {
        match self.types.get(name) {
            Some(t) if t.kind == TypeKind::Object => BTreeSet::from([t.name.clone()]),
            Some(t) if t.kind == TypeKind::Union => t.union_members.iter().cloned().collect(),
            Some(t) if t.kind == TypeKind::Interface => self
                .types
                .values()
                .filter(|o| {
                    o.kind == TypeKind::Object && o.implemented_interfaces.contains(&t.name)
                })
                .map(|o| o.name.clone())
                .collect(),
            _ => BTreeSet::new(),
        }
    }

    /// Looks up a field on an OBJECT or INTERFACE type. `__typename` resolves
    /// to a synthetic `String!` field on every such type.
    pub fn resolve_field(&self, parent_type: &str, field_name: &str) -> Result<FieldDef, SchemaError> {
        let parent = self
            .types
            .get(parent_type)
            .filter(|t| t.kind.is_composite())
            .ok_or_else(|| SchemaError::UnknownField {
                parent: parent_type.to_string(),
                field: field_name.to_string(),
            })?;
        if field_name == "__typename" {
            return Ok(typename_field());
        }
        parent
            .field(field_name)
            .cloned()
            .ok_or_else(|| SchemaError::UnknownField {
                parent: parent_type.to_string(),
                field: field_name.to_string(),
            })
    }

    /// Borrowing variant of [`resolve_field`](Self::resolve_field) for declared fields only.
    pub fn field_def(&self, parent_type: &str, field_name: &str) -> Option<&FieldDef> {
        self.types.get(parent_type)?.field(field_name)
    }

    /// One tuple per declared field of every OBJECT and INTERFACE type.
    pub fn tuple_universe(&self) -> BTreeSet<SchemaTuple> {
        self.types
            .values()
            .filter(|t| t.kind.has_fields())
            .flat_map(|t| {
                t.fields
                    .iter()
                    .map(move |f| SchemaTuple::new(&t.name, &f.name))
            })
            .collect()
    }

    /// Number of query entry points (fields of the root query type).
    pub fn entry_point_count(&self) -> usize {
        self.query_type().fields.len()
    }

    /// Copy with every list sorted by name; used for canonical comparisons and printing.
    pub fn canonical(&self) -> SchemaModel {
        let mut names: Vec<&String> = self.types.keys().collect();
        names.sort();
        SchemaModel {
            types: names
                .into_iter()
                .map(|n| (n.clone(), self.types[n].sorted()))
                .collect(),
            query_type_name: self.query_type_name.clone(),
            mutation_type_name: self.mutation_type_name.clone(),
        }
    }

    fn check_ref(&self, r: &TypeRef, by: impl FnOnce() -> String) -> Result<(), SchemaError> {
        let name = r.base_name();
        if is_builtin_scalar(name) || self.types.contains_key(name) {
            Ok(())
        } else {
            Err(SchemaError::Reference {
                name: name.to_string(),
                referenced_by: by(),
            })
        }
    }

    fn validate(&self) -> Result<(), SchemaError> {
        for t in self.types.values() {
            if t.name.starts_with("__") {
                return Err(SchemaError::Invalid(format!(
                    "type name '{}' uses the reserved '__' prefix",
                    t.name
                )));
            }
            let mut seen = BTreeSet::new();
            for f in &t.fields {
                if !seen.insert(f.name.as_str()) {
                    return Err(SchemaError::DuplicateMember {
                        owner: t.name.clone(),
                        member: f.name.clone(),
                    });
                }
                self.check_ref(&f.type_ref, || format!("{}.{}", t.name, f.name))?;
                for a in &f.arguments {
                    self.check_ref(&a.type_ref, || format!("{}.{}({})", t.name, f.name, a.name))?;
                }
            }
            let mut seen = BTreeSet::new();
            for a in &t.input_fields {
                if !seen.insert(a.name.as_str()) {
                    return Err(SchemaError::DuplicateMember {
                        owner: t.name.clone(),
                        member: a.name.clone(),
                    });
                }
                self.check_ref(&a.type_ref, || format!("{}.{}", t.name, a.name))?;
            }
            let mut seen = BTreeSet::new();
            for v in &t.enum_values {
                if !seen.insert(v.as_str()) {
                    return Err(SchemaError::DuplicateMember {
                        owner: t.name.clone(),
                        member: v.clone(),
                    });
                }
            }
            match t.kind {
                TypeKind::Object | TypeKind::Interface if t.fields.is_empty() => {
                    return Err(SchemaError::Invalid(format!(
                        "'{}' must declare at least one field",
                        t.name
                    )))
                }
                TypeKind::Enum if t.enum_values.is_empty() => {
                    return Err(SchemaError::Invalid(format!(
                        "enum '{}' must declare at least one value",
                        t.name
                    )))
                }
                TypeKind::InputObject if t.input_fields.is_empty() => {
                    return Err(SchemaError::Invalid(format!(
                        "input '{}' must declare at least one field",
                        t.name
                    )))
                }
                _ => {}
            }
            for m in &t.union_members {
                match self.types.get(m) {
                    Some(o) if o.kind == TypeKind::Object => {}
                    Some(_) => {
                        return Err(SchemaError::Invalid(format!(
                            "union '{}' member '{m}' is not an object type",
                            t.name
                        )))
                    }
                    None => {
                        return Err(SchemaError::Reference {
                            name: m.clone(),
                            referenced_by: format!("union {}", t.name),
                        })
                    }
                }
            }
            for iface in &t.implemented_interfaces {
                let Some(i) = self.types.get(iface) else {
                    return Err(SchemaError::Reference {
                        name: iface.clone(),
                        referenced_by: format!("{} implements", t.name),
                    });
                };
                if i.kind != TypeKind::Interface {
                    return Err(SchemaError::Invalid(format!(
                        "'{}' implements '{iface}', which is not an interface",
                        t.name
                    )));
                }
                for f in &i.fields {
                    let Some(own) = t.field(&f.name) else {
                        return Err(SchemaError::Invalid(format!(
                            "'{}' implements '{iface}' but lacks field '{}'",
                            t.name, f.name
                        )));
                    };
                    if !self.is_subtype(&own.type_ref, &f.type_ref) {
                        return Err(SchemaError::Invalid(format!(
                            "'{}.{}' of type {} is not compatible with '{iface}.{}' of type {}",
                            t.name, f.name, own.type_ref, f.name, f.type_ref
                        )));
                    }
                }
            }
        }
        match self.types.get(&self.query_type_name) {
            Some(t) if t.kind == TypeKind::Object => {}
            Some(_) => {
                return Err(SchemaError::Invalid(format!(
                    "query root '{}' is not an object type",
                    self.query_type_name
                )))
            }
            None => {
                return Err(SchemaError::Reference {
                    name: self.query_type_name.clone(),
                    referenced_by: "schema query root".into(),
                })
            }
        }
        if let Some(m) = &self.mutation_type_name {
            match self.types.get(m) {
                Some(t) if t.kind == TypeKind::Object => {}
                _ => {
                    return Err(SchemaError::Invalid(format!(
                        "mutation root '{m}' is not a declared object type"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Covariant field-type compatibility for interface implementations.
    fn is_subtype(&self, sub: &TypeRef, sup: &TypeRef) -> bool {
        match (sub, sup) {
            (TypeRef::NonNull(a), TypeRef::NonNull(b)) => self.is_subtype(a, b),
            (TypeRef::NonNull(a), b) => self.is_subtype(a, b),
            (_, TypeRef::NonNull(_)) => false,
            (TypeRef::List(a), TypeRef::List(b)) => self.is_subtype(a, b),
            (TypeRef::Named(a), TypeRef::Named(b)) => {
                a == b || self.possible_types(b).contains(a) && self.kind_of(a) == Some(TypeKind::Object)
                    || self
                        .types
                        .get(a)
                        .is_some_and(|t| t.implemented_interfaces.contains(b))
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typeref_text_round_trip() {
        for s in ["String", "[String]", "[String!]!", "[[Int]!]", "ID!"] {
            let t: TypeRef = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("String!!".parse::<TypeRef>().is_err());
        assert!("[String".parse::<TypeRef>().is_err());
    }

    #[test]
    fn non_null_never_doubles() {
        let t = TypeRef::non_null(TypeRef::non_null(TypeRef::named("Int")));
        assert_eq!(t.to_string(), "Int!");
    }

    #[test]
    fn query_root_must_exist() {
        let err = SchemaModel::new(vec![], "Query", None).unwrap_err();
        assert!(matches!(err, SchemaError::Reference { .. }));
    }
}
