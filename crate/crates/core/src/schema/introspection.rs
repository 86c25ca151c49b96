use serde_json::{json, Map, Value as Json};

use crate::lexer::Cursor;
use crate::value::parse_value;

use super::{is_builtin_scalar, ArgumentDef, FieldDef, SchemaError, SchemaModel, TypeDef, TypeKind, TypeRef, BUILTIN_SCALARS};

/// The standard full introspection query.
pub const INTROSPECTION_QUERY: &str = r#"query IntrospectionQuery {
  __schema {
    queryType { name }
    mutationType { name }
    subscriptionType { name }
    types { ...FullType }
    directives {
      name
      description
      locations
      args { ...InputValue }
    }
  }
}

fragment FullType on __Type {
  kind
  name
  description
  fields(includeDeprecated: true) {
    name
    description
    args { ...InputValue }
    type { ...TypeRef }
    isDeprecated
    deprecationReason
  }
  inputFields { ...InputValue }
  interfaces { ...TypeRef }
  enumValues(includeDeprecated: true) {
    name
    description
    isDeprecated
    deprecationReason
  }
  possibleTypes { ...TypeRef }
}

fragment InputValue on __InputValue {
  name
  description
  type { ...TypeRef }
  defaultValue
}

fragment TypeRef on __Type {
  kind
  name
  ofType {
    kind
    name
    ofType {
      kind
      name
      ofType {
        kind
        name
        ofType {
          kind
          name
          ofType {
            kind
            name
            ofType {
              kind
              name
              ofType {
                kind
                name
              }
            }
          }
        }
      }
    }
  }
}
"#;

fn type_ref_json(schema: &SchemaModel, r: &TypeRef) -> Json {
    match r {
        TypeRef::Named(n) => json!({
            "kind": schema.kind_of(n).map(TypeKind::introspection_name),
            "name": n,
            "ofType": null,
        }),
        TypeRef::List(t) => json!({"kind": "LIST", "name": null, "ofType": type_ref_json(schema, t)}),
        TypeRef::NonNull(t) => json!({"kind": "NON_NULL", "name": null, "ofType": type_ref_json(schema, t)}),
    }
}

fn input_value_json(schema: &SchemaModel, a: &ArgumentDef) -> Json {
    json!({
        "name": a.name,
        "description": null,
        "type": type_ref_json(schema, &a.type_ref),
        "defaultValue": a.default_value,
    })
}

fn named_ref(schema: &SchemaModel, name: &str) -> Json {
    type_ref_json(schema, &TypeRef::named(name))
}

fn type_json(schema: &SchemaModel, t: &TypeDef) -> Json {
    let fields = t.kind.has_fields().then(|| {
        t.fields
            .iter()
            .map(|f| {
                json!({
                    "name": f.name,
                    "description": null,
                    "args": f.arguments.iter().map(|a| input_value_json(schema, a)).collect::<Vec<_>>(),
                    "type": type_ref_json(schema, &f.type_ref),
                    "isDeprecated": false,
                    "deprecationReason": null,
                })
            })
            .collect::<Vec<_>>()
    });
    let input_fields = (t.kind == TypeKind::InputObject).then(|| {
        t.input_fields
            .iter()
            .map(|a| input_value_json(schema, a))
            .collect::<Vec<_>>()
    });
    let interfaces = (t.kind.has_fields()).then(|| {
        t.implemented_interfaces
            .iter()
            .map(|i| named_ref(schema, i))
            .collect::<Vec<_>>()
    });
    let enum_values = (t.kind == TypeKind::Enum).then(|| {
        t.enum_values
            .iter()
            .map(|v| json!({"name": v, "description": null, "isDeprecated": false, "deprecationReason": null}))
            .collect::<Vec<_>>()
    });
    let possible = matches!(t.kind, TypeKind::Union | TypeKind::Interface).then(|| {
        schema
            .possible_types(&t.name)
            .iter()
            .map(|p| named_ref(schema, p))
            .collect::<Vec<_>>()
    });
    json!({
        "kind": t.kind.introspection_name(),
        "name": t.name,
        "description": null,
        "fields": fields,
        "inputFields": input_fields,
        "interfaces": interfaces,
        "enumValues": enum_values,
        "possibleTypes": possible,
    })
}

/// The `__schema` object a server would return for `schema`.
pub fn introspection_document(schema: &SchemaModel) -> Json {
    let mut types: Vec<Json> = BUILTIN_SCALARS
        .iter()
        .map(|s| type_json(schema, &TypeDef::new(*s, TypeKind::Scalar)))
        .collect();
    types.extend(schema.types.values().map(|t| type_json(schema, t)));
    json!({
        "queryType": {"name": schema.query_type_name},
        "mutationType": schema.mutation_type_name.as_ref().map(|m| json!({"name": m})),
        "subscriptionType": null,
        "types": types,
        "directives": [],
    })
}

fn fmt_err(msg: impl Into<String>) -> SchemaError {
    SchemaError::Format(msg.into())
}

fn str_field<'a>(obj: &'a Map<String, Json>, key: &str) -> Result<&'a str, SchemaError> {
    obj.get(key)
        .and_then(Json::as_str)
        .ok_or_else(|| fmt_err(format!("missing string member '{key}'")))
}

fn array_field<'a>(obj: &'a Map<String, Json>, key: &str) -> &'a [Json] {
    obj.get(key)
        .and_then(Json::as_array)
        .map(Vec::as_slice)
        .unwrap_or(&[])
}

fn parse_type_ref(v: &Json) -> Result<TypeRef, SchemaError> {
    let obj = v.as_object().ok_or_else(|| fmt_err("type reference is not an object"))?;
    match str_field(obj, "kind")? {
        "NON_NULL" => {
            let inner = parse_type_ref(obj.get("ofType").unwrap_or(&Json::Null))?;
            if inner.is_non_null() {
                return Err(fmt_err("NON_NULL wraps NON_NULL"));
            }
            Ok(TypeRef::NonNull(Box::new(inner)))
        }
        "LIST" => Ok(TypeRef::list(parse_type_ref(
            obj.get("ofType").unwrap_or(&Json::Null),
        )?)),
        _ => Ok(TypeRef::named(str_field(obj, "name")?)),
    }
}

fn parse_input_value(v: &Json) -> Result<ArgumentDef, SchemaError> {
    let obj = v.as_object().ok_or_else(|| fmt_err("input value is not an object"))?;
    let type_ref = parse_type_ref(obj.get("type").unwrap_or(&Json::Null))?;
    let default_value = match obj.get("defaultValue").and_then(Json::as_str) {
        Some(text) => {
            let mut cur = Cursor::new(text)?;
            Some(parse_value(&mut cur, true)?.to_string())
        }
        None => None,
    };
    Ok(ArgumentDef {
        name: str_field(obj, "name")?.to_string(),
        required: type_ref.is_non_null() && default_value.is_none(),
        type_ref,
        default_value,
    })
}

fn root_name(schema: &Map<String, Json>, key: &str) -> Option<String> {
    schema
        .get(key)
        .and_then(|v| v.get("name"))
        .and_then(Json::as_str)
        .map(str::to_string)
}

/// Builds a [`SchemaModel`] from an introspection result. Accepts either the
/// full response (`{"data": {"__schema": ...}}`) or the `{"__schema": ...}` object.
pub fn ingest_introspection(doc: &Json) -> Result<SchemaModel, SchemaError> {
    let schema = doc
        .get("data")
        .and_then(|d| d.get("__schema"))
        .or_else(|| doc.get("__schema"))
        .and_then(Json::as_object)
        .ok_or_else(|| fmt_err("missing data.__schema envelope"))?;
    let query_type_name =
        root_name(schema, "queryType").ok_or_else(|| fmt_err("missing queryType"))?;
    let mutation_type_name = root_name(schema, "mutationType");

    let mut types = Vec::new();
    for tv in array_field(schema, "types") {
        let obj = tv.as_object().ok_or_else(|| fmt_err("type entry is not an object"))?;
        let name = str_field(obj, "name")?;
        if name.starts_with("__") || is_builtin_scalar(name) {
            continue;
        }
        let kind = match str_field(obj, "kind")? {
            "OBJECT" => TypeKind::Object,
            "INTERFACE" => TypeKind::Interface,
            "UNION" => TypeKind::Union,
            "ENUM" => TypeKind::Enum,
            "SCALAR" => TypeKind::Scalar,
            "INPUT_OBJECT" => TypeKind::InputObject,
            other => return Err(fmt_err(format!("unknown type kind '{other}'"))),
        };
        let mut t = TypeDef::new(name, kind);
        for f in array_field(obj, "fields") {
            let fo = f.as_object().ok_or_else(|| fmt_err("field is not an object"))?;
            t.fields.push(FieldDef {
                name: str_field(fo, "name")?.to_string(),
                type_ref: parse_type_ref(fo.get("type").unwrap_or(&Json::Null))?,
                arguments: array_field(fo, "args")
                    .iter()
                    .map(parse_input_value)
                    .collect::<Result<_, _>>()?,
            });
        }
        t.input_fields = array_field(obj, "inputFields")
            .iter()
            .map(parse_input_value)
            .collect::<Result<_, _>>()?;
        t.enum_values = array_field(obj, "enumValues")
            .iter()
            .map(|v| {
                v.get("name")
                    .and_then(Json::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| fmt_err("enum value without name"))
            })
            .collect::<Result<_, _>>()?;
        let names = |key: &str| -> Result<Vec<String>, SchemaError> {
            array_field(obj, key)
                .iter()
                .map(|v| {
                    v.get("name")
                        .and_then(Json::as_str)
                        .map(str::to_string)
                        .ok_or_else(|| fmt_err(format!("{key} entry without name")))
                })
                .collect()
        };
        t.implemented_interfaces = names("interfaces")?;
        if kind == TypeKind::Union {
            t.union_members = names("possibleTypes")?;
        }
        types.push(t);
    }
    SchemaModel::new(types, query_type_name, mutation_type_name)
}
