//! Seeded generators of valid schemas and queries for property tests and
//! the soundness harness.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{Map, Value as Json};

use crate::schema::{parse_sdl, SchemaModel, TypeKind, TypeRef};

const BUILTINS: [&str; 5] = ["Int", "Float", "String", "Boolean", "ID"];

fn wrap<R: Rng>(rng: &mut R, base: &str) -> String {
    let mut t = base.to_string();
    if rng.random_bool(0.3) {
        if rng.random_bool(0.5) {
            t.push('!');
        }
        t = format!("[{t}]");
        if rng.random_bool(0.15) {
            t = format!("[{t}]");
        }
    }
    if rng.random_bool(0.5) {
        t.push('!');
    }
    t
}

/// SDL text of a random valid schema. Every interface has an implementer
/// and every union at least one member.
pub fn random_schema_sdl<R: Rng>(rng: &mut R) -> String {
    let n_enums = rng.random_range(0..=2);
    let n_scalars = rng.random_range(0..=1);
    let n_objects = rng.random_range(2..=5);
    let n_interfaces = rng.random_range(0..=2);
    let n_unions = rng.random_range(0..=2);

    let mut leaves: Vec<String> = BUILTINS.iter().map(|s| s.to_string()).collect();
    let mut sdl = String::new();
    for e in 0..n_enums {
        let n = rng.random_range(1..=4);
        let values: Vec<String> = (0..n).map(|v| format!("E{e}V{v}")).collect();
        let _ = writeln!(sdl, "enum E{e} {{ {} }}", values.join(" "));
        leaves.push(format!("E{e}"));
    }
    for s in 0..n_scalars {
        let _ = writeln!(sdl, "scalar S{s}");
        leaves.push(format!("S{s}"));
    }

    let mut interface_fields: Vec<Vec<String>> = Vec::new();
    for i in 0..n_interfaces {
        let fields: Vec<String> = (0..rng.random_range(1..=2))
            .map(|j| {
                let base = leaves.choose(rng).expect("leaves").clone();
                format!("i{i}f{j}: {}", wrap(rng, &base))
            })
            .collect();
        let _ = writeln!(sdl, "interface I{i} {{ {} }}", fields.join(" "));
        interface_fields.push(fields);
    }

    let objects: Vec<String> = (0..n_objects).map(|o| format!("O{o}")).collect();
    let interfaces: Vec<String> = (0..n_interfaces).map(|i| format!("I{i}")).collect();
    let unions: Vec<String> = (0..n_unions).map(|u| format!("U{u}")).collect();
    let mut composites: Vec<String> = objects.clone();
    composites.extend(interfaces.iter().cloned());
    composites.extend(unions.iter().cloned());

    let field_type = |rng: &mut R| -> String {
        let pool = if rng.random_bool(0.6) { &leaves } else { &composites };
        let base = pool.choose(rng).expect("non-empty").clone();
        wrap(rng, &base)
    };

    for (o, name) in objects.iter().enumerate() {
        let mut implements: Vec<usize> = (0..n_interfaces)
            .filter(|i| i % n_objects == o || rng.random_bool(0.3))
            .collect();
        implements.dedup();
        let mut fields: Vec<String> = implements.iter().flat_map(|i| interface_fields[*i].clone()).collect();
        for j in 0..rng.random_range(1..=4) {
            fields.push(format!("f{j}: {}", field_type(rng)));
        }
        let imp = if implements.is_empty() {
            String::new()
        } else {
            let names: Vec<String> = implements.iter().map(|i| format!("I{i}")).collect();
            format!(" implements {}", names.join(" & "))
        };
        let _ = writeln!(sdl, "type {name}{imp} {{ {} }}", fields.join(" "));
    }
    for u in &unions {
        let n_members = rng.random_range(1..=3);
        let mut members: Vec<&String> = objects.choose_multiple(rng, n_members).collect();
        members.sort();
        let names: Vec<&str> = members.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(sdl, "union {u} = {}", names.join(" | "));
    }

    let mut query_fields = Vec::new();
    for q in 0..rng.random_range(1..=4) {
        let t = field_type(rng);
        let mut args = Vec::new();
        if t.contains('[') && rng.random_bool(0.7) {
            args.push("first: Int".to_string());
        }
        if rng.random_bool(0.3) {
            args.push("id: ID!".to_string());
        }
        let args = if args.is_empty() {
            String::new()
        } else {
            format!("({})", args.join(", "))
        };
        query_fields.push(format!("q{q}{args}: {t}"));
    }
    let _ = writeln!(sdl, "type Query {{ {} }}", query_fields.join(" "));
    if rng.random_bool(0.2) {
        let _ = writeln!(sdl, "type Mutation {{ m0(x: Int = 1): Int }}");
    }
    sdl
}

pub fn random_schema<R: Rng>(rng: &mut R) -> SchemaModel {
    let sdl = random_schema_sdl(rng);
    parse_sdl(&sdl).unwrap_or_else(|e| panic!("generated schema is invalid: {e}\n{sdl}"))
}

/// A generated operation and the variables to send with it.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomQuery {
    pub text: String,
    pub variables: Json,
}

struct QueryGen<'a, R> {
    schema: &'a SchemaModel,
    rng: &'a mut R,
    max_depth: usize,
    used_keys: BTreeSet<String>,
    aliases: usize,
    fragments: Vec<String>,
    uses_n: bool,
    uses_b: bool,
}

impl<R: Rng> QueryGen<'_, R> {
    fn directive(&mut self) -> &'static str {
        match self.rng.random_range(0..10) {
            0 => " @include(if: true)",
            1 => " @skip(if: true)",
            2 => {
                self.uses_b = true;
                " @include(if: $b)"
            }
            3 => {
                self.uses_b = true;
                " @skip(if: $b)"
            }
            _ => "",
        }
    }

    fn key_for(&mut self, name: &str) -> String {
        if name != "__typename" && !self.used_keys.insert(name.to_string()) {
            self.aliases += 1;
            format!("a{}: {name}", self.aliases)
        } else {
            name.to_string()
        }
    }

    fn fragment_conditions(&self, type_name: &str) -> Vec<String> {
        let possible = self.schema.possible_types(type_name);
        let mut out: BTreeSet<String> = possible.clone();
        out.insert(type_name.to_string());
        for p in &possible {
            if let Some(t) = self.schema.get_type(p) {
                out.extend(t.implemented_interfaces.iter().cloned());
            }
        }
        out.into_iter().collect()
    }

    fn field(&mut self, type_name: &str, depth: usize) -> String {
        let def = self
            .schema
            .get_type(type_name)
            .expect("composite type")
            .fields
            .choose(self.rng)
            .expect("types have fields")
            .clone();
        let mut out = self.key_for(&def.name);
        let mut args = Vec::new();
        for a in &def.arguments {
            match a.name.as_str() {
                "first" if self.rng.random_bool(0.7) => {
                    if self.rng.random_bool(0.3) {
                        self.uses_n = true;
                        args.push("first: $n".to_string());
                    } else {
                        args.push(format!("first: {}", self.rng.random_range(0..4)));
                    }
                }
                "id" => args.push(format!("id: \"{}\"", self.rng.random_range(0..100))),
                _ => {}
            }
        }
        if !args.is_empty() {
            let _ = write!(out, "({})", args.join(", "));
        }
        out.push_str(self.directive());
        let base = def.type_ref.base_name();
        if self.schema.kind_of(base).is_some_and(TypeKind::is_composite) {
            out.push(' ');
            out.push_str(&self.selection_set(base, depth + 1));
        }
        out
    }

    fn selection_set(&mut self, type_name: &str, depth: usize) -> String {
        if depth > self.max_depth {
            return "{ __typename }".into();
        }
        let has_fields = self.schema.kind_of(type_name).is_some_and(TypeKind::has_fields);
        let n = self.rng.random_range(1..=3);
        let mut items = Vec::new();
        for _ in 0..n {
            let r = self.rng.random_range(0..100);
            let item = if r < 55 && has_fields {
                self.field(type_name, depth)
            } else if r < 70 {
                format!("{}{}", self.key_for("__typename"), self.directive())
            } else if r < 88 {
                let conds = self.fragment_conditions(type_name);
                let cond = if self.rng.random_bool(0.15) {
                    type_name.to_string()
                } else {
                    conds.choose(self.rng).expect("non-empty").clone()
                };
                let head = if self.rng.random_bool(0.1) {
                    "...".to_string()
                } else {
                    format!("... on {cond}")
                };
                let cond = if head == "..." { type_name.to_string() } else { cond };
                let dir = self.directive();
                let body = self.selection_set(&cond, depth + 1);
                format!("{head}{dir} {body}")
            } else {
                let conds = self.fragment_conditions(type_name);
                let cond = conds.choose(self.rng).expect("non-empty").clone();
                let name = format!("F{}", self.fragments.len());
                self.fragments.push(String::new());
                let body = self.selection_set(&cond, depth + 1);
                let idx: usize = name[1..].parse().expect("fragment index");
                self.fragments[idx] = format!("fragment {name} on {cond} {body}");
                format!("...{name}{}", self.directive())
            };
            items.push(item);
        }
        format!("{{ {} }}", items.join(" "))
    }
}

/// A random QUERY operation valid against `schema`.
pub fn random_query<R: Rng>(schema: &SchemaModel, rng: &mut R) -> RandomQuery {
    let root = schema.query_type_name.clone();
    let max_depth = rng.random_range(1..=4);
    let mut g = QueryGen {
        schema,
        rng,
        max_depth,
        used_keys: BTreeSet::new(),
        aliases: 0,
        fragments: Vec::new(),
        uses_n: false,
        uses_b: false,
    };
    let body = g.selection_set(&root, 0);
    let (uses_n, uses_b, fragments) = (g.uses_n, g.uses_b, std::mem::take(&mut g.fragments));
    let mut decls = Vec::new();
    let mut vars = Map::new();
    if uses_n {
        if rng.random_bool(0.3) {
            decls.push("$n: Int = 2".to_string());
        } else {
            decls.push("$n: Int".to_string());
            if rng.random_bool(0.8) {
                vars.insert("n".into(), Json::from(rng.random_range(0..4)));
            }
        }
    }
    if uses_b {
        decls.push("$b: Boolean!".to_string());
        vars.insert("b".into(), Json::Bool(rng.random_bool(0.5)));
    }
    let mut text = String::from("query");
    if rng.random_bool(0.5) {
        text.push_str(" Gen");
    }
    if !decls.is_empty() {
        let _ = write!(text, "({})", decls.join(", "));
    }
    text.push(' ');
    text.push_str(&body);
    for f in fragments {
        text.push('\n');
        text.push_str(&f);
    }
    RandomQuery {
        text,
        variables: Json::Object(vars),
    }
}

/// Random type reference over `base`, for property tests of the wrappers.
pub fn random_type_ref<R: Rng>(rng: &mut R, base: &str) -> TypeRef {
    wrap(rng, base).parse().expect("generated type reference parses")
}
