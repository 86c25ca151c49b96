use std::fmt::Write;

use super::{ArgumentDef, SchemaModel, TypeKind};

fn write_args(out: &mut String, args: &[ArgumentDef]) {
    if args.is_empty() {
        return;
    }
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}: {}", a.name, a.type_ref);
        if let Some(d) = &a.default_value {
            let _ = write!(out, " = {d}");
        }
    }
    out.push(')');
}

/// Canonical SDL printer. `parse_sdl(&render_sdl(s)) == s` for every valid model.
pub fn render_sdl(schema: &SchemaModel) -> String {
    let mut out = String::new();
    out.push_str("schema {\n");
    let _ = writeln!(out, "  query: {}", schema.query_type_name);
    if let Some(m) = &schema.mutation_type_name {
        let _ = writeln!(out, "  mutation: {m}");
    }
    out.push_str("}\n");
    for t in schema.types.values() {
        out.push('\n');
        match t.kind {
            TypeKind::Object | TypeKind::Interface => {
                let kw = if t.kind == TypeKind::Object {
                    "type"
                } else {
                    "interface"
                };
                let _ = write!(out, "{kw} {}", t.name);
                if !t.implemented_interfaces.is_empty() {
                    let _ = write!(out, " implements {}", t.implemented_interfaces.join(" & "));
                }
                out.push_str(" {\n");
                for f in &t.fields {
                    let _ = write!(out, "  {}", f.name);
                    write_args(&mut out, &f.arguments);
                    let _ = writeln!(out, ": {}", f.type_ref);
                }
                out.push_str("}\n");
            }
            TypeKind::Union => {
                let _ = writeln!(out, "union {} = {}", t.name, t.union_members.join(" | "));
            }
            TypeKind::Enum => {
                let _ = writeln!(out, "enum {} {{", t.name);
                for v in &t.enum_values {
                    let _ = writeln!(out, "  {v}");
                }
                out.push_str("}\n");
            }
            TypeKind::Scalar => {
                let _ = writeln!(out, "scalar {}", t.name);
            }
            TypeKind::InputObject => {
                let _ = writeln!(out, "input {} {{", t.name);
                for a in &t.input_fields {
                    let _ = write!(out, "  {}: {}", a.name, a.type_ref);
                    if let Some(d) = &a.default_value {
                        let _ = write!(out, " = {d}");
                    }
                    out.push('\n');
                }
                out.push_str("}\n");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::TEASER_SCHEMA_SDL;
    use crate::schema::parse_sdl;

    #[test]
    fn teaser_schema_round_trips() {
        let s = parse_sdl(TEASER_SCHEMA_SDL).unwrap();
        let printed = render_sdl(&s);
        assert_eq!(parse_sdl(&printed).unwrap(), s);
        assert_eq!(render_sdl(&parse_sdl(&printed).unwrap()), printed);
    }

    #[test]
    fn input_defaults_survive() {
        let s = parse_sdl(
            "input F { a: Int = 3, b: [String!] = [\"x\"] } type Query { q(f: F = {a: 1}): Int }",
        )
        .unwrap();
        assert_eq!(parse_sdl(&render_sdl(&s)).unwrap(), s);
    }
}
