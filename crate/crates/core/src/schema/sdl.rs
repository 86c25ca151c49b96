use crate::lexer::{Cursor, SyntaxError, Tok};
use crate::value::parse_value;

use super::{ArgumentDef, FieldDef, SchemaError, SchemaModel, TypeDef, TypeKind, TypeRef};

/// Parses SDL text into a validated [`SchemaModel`].
///
/// Directives, directive definitions, `extend` blocks and subscription roots
/// are accepted and ignored. Without a `schema { ... }` block the roots are
/// `Query` and, when declared, `Mutation`.
pub fn parse_sdl(sdl_text: &str) -> Result<SchemaModel, SchemaError> {
    let mut cur = Cursor::new(sdl_text)?;
    let mut types = Vec::new();
    let mut query_root: Option<String> = None;
    let mut mutation_root: Option<String> = None;
    let mut saw_schema_block = false;

    while !cur.at_eof() {
        skip_description(&mut cur);
        let (kw, pos) = cur.expect_name()?;
        match kw.as_str() {
            "schema" => {
                if saw_schema_block {
                    return Err(SyntaxError::new(pos, "duplicate schema definition").into());
                }
                saw_schema_block = true;
                skip_directives(&mut cur)?;
                cur.expect_punct('{')?;
                while !cur.eat_punct('}') {
                    let (op, opos) = cur.expect_name()?;
                    cur.expect_punct(':')?;
                    let (ty, _) = cur.expect_name()?;
                    match op.as_str() {
                        "query" => query_root = Some(ty),
                        "mutation" => mutation_root = Some(ty),
                        "subscription" => {}
                        _ => {
                            return Err(SyntaxError::new(
                                opos,
                                format!("unknown root operation '{op}'"),
                            )
                            .into())
                        }
                    }
                }
            }
            "type" | "interface" => {
                let kind = if kw == "type" {
                    TypeKind::Object
                } else {
                    TypeKind::Interface
                };
                let (name, _) = cur.expect_name()?;
                let mut t = TypeDef::new(name, kind);
                t.implemented_interfaces = parse_implements(&mut cur)?;
                skip_directives(&mut cur)?;
                if cur.eat_punct('{') {
                    while !cur.eat_punct('}') {
                        t.fields.push(parse_field(&mut cur)?);
                    }
                }
                types.push(t);
            }
            "union" => {
                let (name, _) = cur.expect_name()?;
                let mut t = TypeDef::new(name, TypeKind::Union);
                skip_directives(&mut cur)?;
                if cur.eat_punct('=') {
                    cur.eat_punct('|');
                    loop {
                        t.union_members.push(cur.expect_name()?.0);
                        if !cur.eat_punct('|') {
                            break;
                        }
                    }
                }
                if t.union_members.is_empty() {
                    return Err(SchemaError::Invalid(format!(
                        "union '{}' has no members",
                        t.name
                    )));
                }
                types.push(t);
            }
            "enum" => {
                let (name, _) = cur.expect_name()?;
                let mut t = TypeDef::new(name, TypeKind::Enum);
                skip_directives(&mut cur)?;
                if cur.eat_punct('{') {
                    while !cur.eat_punct('}') {
                        skip_description(&mut cur);
                        let (v, vpos) = cur.expect_name()?;
                        if matches!(v.as_str(), "true" | "false" | "null") {
                            return Err(
                                SyntaxError::new(vpos, format!("'{v}' is not a valid enum value")).into(),
                            );
                        }
                        skip_directives(&mut cur)?;
                        t.enum_values.push(v);
                    }
                }
                types.push(t);
            }
            "scalar" => {
                let (name, _) = cur.expect_name()?;
                skip_directives(&mut cur)?;
                types.push(TypeDef::new(name, TypeKind::Scalar));
            }
            "input" => {
                let (name, _) = cur.expect_name()?;
                let mut t = TypeDef::new(name, TypeKind::InputObject);
                skip_directives(&mut cur)?;
                if cur.eat_punct('{') {
                    while !cur.eat_punct('}') {
                        t.input_fields.push(parse_input_value(&mut cur)?);
                    }
                }
                types.push(t);
            }
            "directive" => skip_directive_definition(&mut cur)?,
            "extend" => skip_extension(&mut cur)?,
            other => {
                return Err(SyntaxError::new(pos, format!("unexpected definition '{other}'")).into())
            }
        }
    }

    let has_type = |n: &str| types.iter().any(|t: &TypeDef| t.name == n);
    let query_type_name = query_root.unwrap_or_else(|| "Query".to_string());
    let mutation_type_name = match mutation_root {
        Some(m) => Some(m),
        None if !saw_schema_block && has_type("Mutation") => Some("Mutation".to_string()),
        None => None,
    };
    SchemaModel::new(types, query_type_name, mutation_type_name)
}

fn skip_description(cur: &mut Cursor) {
    if matches!(cur.peek(), Tok::Str(_) | Tok::BlockStr(_)) {
        cur.next();
    }
}

pub(crate) fn skip_directives(cur: &mut Cursor) -> Result<(), SyntaxError> {
    while cur.eat_punct('@') {
        cur.expect_name()?;
        if cur.eat_punct('(') {
            while !cur.eat_punct(')') {
                cur.expect_name()?;
                cur.expect_punct(':')?;
                parse_value(cur, true)?;
            }
        }
    }
    Ok(())
}

fn parse_implements(cur: &mut Cursor) -> Result<Vec<String>, SyntaxError> {
    let mut out = Vec::new();
    if cur.is_name("implements") {
        cur.next();
        cur.eat_punct('&');
        loop {
            out.push(cur.expect_name()?.0);
            if cur.eat_punct('&') {
                continue;
            }
            // Legacy syntax: space-separated interface names.
            if matches!(cur.peek(), Tok::Name(_)) && !matches!(cur.peek_at(1), Tok::Punct(':')) {
                continue;
            }
            break;
        }
    }
    Ok(out)
}

pub(crate) fn parse_type_ref(cur: &mut Cursor) -> Result<TypeRef, SyntaxError> {
    let inner = if cur.eat_punct('[') {
        let t = parse_type_ref(cur)?;
        cur.expect_punct(']')?;
        TypeRef::list(t)
    } else {
        TypeRef::named(cur.expect_name()?.0)
    };
    Ok(if cur.eat_punct('!') {
        TypeRef::NonNull(Box::new(inner))
    } else {
        inner
    })
}

fn parse_input_value(cur: &mut Cursor) -> Result<ArgumentDef, SyntaxError> {
    skip_description(cur);
    let (name, _) = cur.expect_name()?;
    cur.expect_punct(':')?;
    let type_ref = parse_type_ref(cur)?;
    let default_value = if cur.eat_punct('=') {
        Some(parse_value(cur, true)?.to_string())
    } else {
        None
    };
    skip_directives(cur)?;
    Ok(ArgumentDef {
        name,
        required: type_ref.is_non_null() && default_value.is_none(),
        type_ref,
        default_value,
    })
}

fn parse_field(cur: &mut Cursor) -> Result<FieldDef, SyntaxError> {
    skip_description(cur);
    let (name, _) = cur.expect_name()?;
    let mut arguments = Vec::new();
    if cur.eat_punct('(') {
        while !cur.eat_punct(')') {
            arguments.push(parse_input_value(cur)?);
        }
    }
    cur.expect_punct(':')?;
    let type_ref = parse_type_ref(cur)?;
    skip_directives(cur)?;
    Ok(FieldDef {
        name,
        type_ref,
        arguments,
    })
}

fn skip_directive_definition(cur: &mut Cursor) -> Result<(), SyntaxError> {
    cur.expect_punct('@')?;
    cur.expect_name()?;
    if cur.eat_punct('(') {
        while !cur.eat_punct(')') {
            parse_input_value(cur)?;
        }
    }
    if cur.is_name("repeatable") {
        cur.next();
    }
    cur.expect_keyword("on")?;
    cur.eat_punct('|');
    loop {
        cur.expect_name()?;
        if !cur.eat_punct('|') {
            break;
        }
    }
    Ok(())
}

fn skip_extension(cur: &mut Cursor) -> Result<(), SyntaxError> {
    let (kw, pos) = cur.expect_name()?;
    match kw.as_str() {
        "schema" => {
            skip_directives(cur)?;
            if cur.eat_punct('{') {
                while !cur.eat_punct('}') {
                    cur.expect_name()?;
                    cur.expect_punct(':')?;
                    cur.expect_name()?;
                }
            }
        }
        "type" | "interface" => {
            cur.expect_name()?;
            parse_implements(cur)?;
            skip_directives(cur)?;
            if cur.eat_punct('{') {
                while !cur.eat_punct('}') {
                    parse_field(cur)?;
                }
            }
        }
        "input" => {
            cur.expect_name()?;
            skip_directives(cur)?;
            if cur.eat_punct('{') {
                while !cur.eat_punct('}') {
                    parse_input_value(cur)?;
                }
            }
        }
        "enum" => {
            cur.expect_name()?;
            skip_directives(cur)?;
            if cur.eat_punct('{') {
                while !cur.eat_punct('}') {
                    skip_description(cur);
                    cur.expect_name()?;
                    skip_directives(cur)?;
                }
            }
        }
        "union" => {
            cur.expect_name()?;
            skip_directives(cur)?;
            if cur.eat_punct('=') {
                cur.eat_punct('|');
                loop {
                    cur.expect_name()?;
                    if !cur.eat_punct('|') {
                        break;
                    }
                }
            }
        }
        "scalar" => {
            cur.expect_name()?;
            skip_directives(cur)?;
        }
        other => {
            return Err(SyntaxError::new(
                pos,
                format!("cannot extend '{other}'"),
            ))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::TEASER_SCHEMA_SDL;
    use crate::schema::SchemaTuple;

    #[test]
    fn teaser_schema_declares_five_types() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let mut names: Vec<_> = s.types.keys().cloned().collect();
        names.sort();
        assert_eq!(names, ["Node", "Query", "Teaser", "Video", "VideoTypeEnum"]);
        assert_eq!(s.query_type_name, "Query");
        assert_eq!(s.mutation_type_name, None);
    }

    #[test]
    fn minimal_schema() {
        let s = parse_sdl("type Query { x: Int }").unwrap();
        assert_eq!(s.types.len(), 1);
        let q = s.query_type();
        assert_eq!(q.kind, TypeKind::Object);
        assert_eq!(q.fields[0].type_ref, TypeRef::named("Int"));
    }

    #[test]
    fn undeclared_reference_is_an_error() {
        match parse_sdl("type Query { x: Missing }") {
            Err(SchemaError::Reference { name, .. }) => assert_eq!(name, "Missing"),
            other => panic!("expected reference error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_type() {
        assert!(matches!(
            parse_sdl("type Query { x: Int } type Query { y: Int }"),
            Err(SchemaError::DuplicateType(n)) if n == "Query"
        ));
    }

    #[test]
    fn syntax_error_carries_position() {
        match parse_sdl("type Query {\n  x: \n}") {
            Err(SchemaError::Syntax(e)) => assert_eq!(e.pos.line, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn directives_descriptions_and_extensions_are_ignored() {
        let s = parse_sdl(
            r#"
            directive @auth(role: String = "x") repeatable on FIELD_DEFINITION | OBJECT
            "The root"
            schema @foo { query: Root subscription: Sub }
            """
            Root type
            """
            type Root @key(fields: "id") {
              "a field" a(first: Int = 10 @deprecated): [String!]! @deprecated(reason: "no")
            }
            type Sub { tick: Int }
            extend type Root { b: Int }
            extend scalar DateTime @specifiedBy(url: "x")
            "#,
        )
        .unwrap();
        assert_eq!(s.query_type_name, "Root");
        let root = s.query_type();
        assert_eq!(root.fields.len(), 1);
        let arg = &root.fields[0].arguments[0];
        assert_eq!(arg.default_value.as_deref(), Some("10"));
        assert!(!arg.required);
        assert_eq!(
            s.tuple_universe(),
            [SchemaTuple::new("Root", "a"), SchemaTuple::new("Sub", "tick")]
                .into_iter()
                .collect()
        );
    }

    #[test]
    fn interface_implementation_must_be_compatible() {
        let err = parse_sdl("interface N { id: ID! } type Query implements N { id: String }")
            .unwrap_err();
        assert!(matches!(err, SchemaError::Invalid(_)));
        parse_sdl("interface N { id: ID } type Query implements N { id: ID! }").unwrap();
    }

    #[test]
    fn union_members_must_be_objects() {
        assert!(parse_sdl("enum E { A } union U = E type Query { u: U }").is_err());
        let s = parse_sdl("type A { a: Int } type B { b: Int } union U = | A | B type Query { u: U }")
            .unwrap();
        assert_eq!(s.possible_types("U").len(), 2);
    }

    #[test]
    fn implicit_mutation_root() {
        let s = parse_sdl("type Query { a: Int } type Mutation { m: Int }").unwrap();
        assert_eq!(s.mutation_type_name.as_deref(), Some("Mutation"));
    }
}
