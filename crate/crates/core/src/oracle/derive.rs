use std::collections::BTreeSet;

use super::{Check, FieldOracle, OracleTree};
use crate::query::{
    reached_tuples, root_type_name, Directive, OperationKind, QueryDocument, QueryError,
    Selection, SelectionSet,
};
use crate::schema::{SchemaModel, TypeKind, TypeRef};

struct Scope<'a> {
    /// Static type selections are made on.
    parent: &'a str,
    /// Narrowed runtime types, when inside a type-conditioned fragment.
    only_for: Option<BTreeSet<String>>,
    conditional: bool,
}

struct Deriver<'a> {
    doc: &'a QueryDocument,
    schema: &'a SchemaModel,
}

fn has_condition_directive(dirs: &[Directive]) -> bool {
    dirs.iter().any(|d| d.name == "skip" || d.name == "include")
}

impl Deriver<'_> {
    fn level_checks(&self, t: &TypeRef, typename_selected: bool, out: &mut Vec<Check>) {
        match t {
            TypeRef::NonNull(inner) => {
                out.push(Check::NotNull);
                self.inner_checks(inner, typename_selected, out);
            }
            other => self.inner_checks(other, typename_selected, out),
        }
    }

    fn inner_checks(&self, t: &TypeRef, typename_selected: bool, out: &mut Vec<Check>) {
        match t {
            TypeRef::List(inner) => {
                out.push(Check::IsList);
                self.level_checks(inner, typename_selected, out);
            }
            TypeRef::NonNull(inner) => self.level_checks(inner, typename_selected, out),
            TypeRef::Named(name) => match name.as_str() {
                "String" | "ID" => out.push(Check::IsString),
                "Int" => out.push(Check::IsInt),
                "Float" => out.push(Check::IsNumeric),
                "Boolean" => out.push(Check::IsBool),
                other => match self.schema.get_type(other) {
                    Some(td) if td.kind == TypeKind::Enum => {
                        out.push(Check::EnumMember(td.enum_values.clone()))
                    }
                    Some(td) if td.kind.is_composite() && !typename_selected => out.push(Check::IsMap),
                    // Custom scalars are opaque: nullability only.
                    _ => {}
                },
            },
        }
    }

    fn narrow(&self, scope: &Scope<'_>, condition: &str) -> Option<BTreeSet<String>> {
        let cond_types = self.schema.possible_types(condition);
        let current = scope
            .only_for
            .clone()
            .unwrap_or_else(|| self.schema.possible_types(scope.parent));
        if current.is_subset(&cond_types) {
            scope.only_for.clone()
        } else {
            Some(current.intersection(&cond_types).cloned().collect())
        }
    }

    fn selections(&self, set: &SelectionSet, scope: &Scope<'_>, out: &mut Vec<FieldOracle>) {
        for sel in &set.items {
            match sel {
                Selection::Field(f) => {
                    let conditional = scope.conditional || has_condition_directive(&f.directives);
                    let only_for = scope.only_for.as_ref().map(|s| s.iter().cloned().collect());
                    if f.name == "__typename" {
                        let concrete = self.schema.kind_of(scope.parent) == Some(TypeKind::Object);
                        let check = if concrete {
                            Check::TypenameEquals(scope.parent.to_string())
                        } else {
                            Check::TypenameIn(
                                self.schema.possible_types(scope.parent).into_iter().collect(),
                            )
                        };
                        out.push(FieldOracle {
                            response_key: f.response_key().to_string(),
                            field_name: f.name.clone(),
                            parent_type: scope.parent.to_string(),
                            declared_type: TypeRef::non_null(TypeRef::named("String")),
                            checks: vec![check],
                            children: Vec::new(),
                            expected_typename: concrete.then(|| scope.parent.to_string()),
                            only_for,
                            conditional,
                        });
                        continue;
                    }
                    let def = self
                        .schema
                        .field_def(scope.parent, &f.name)
                        .expect("selection validated before derivation");
                    let base = def.type_ref.base_name();
                    let mut children = Vec::new();
                    if let Some(sub) = &f.selection_set {
                        let child_scope = Scope {
                            parent: base,
                            only_for: None,
                            conditional: false,
                        };
                        self.selections(sub, &child_scope, &mut children);
                    }
                    let typename_selected = children
                        .iter()
                        .any(|c| c.is_typename() && c.only_for.is_none() && !c.conditional);
                    let mut checks = vec![Check::Present];
                    self.level_checks(&def.type_ref, typename_selected, &mut checks);
                    out.push(FieldOracle {
                        response_key: f.response_key().to_string(),
                        field_name: f.name.clone(),
                        parent_type: scope.parent.to_string(),
                        declared_type: def.type_ref.clone(),
                        checks,
                        children,
                        expected_typename: None,
                        only_for,
                        conditional,
                    });
                }
                Selection::InlineFragment(i) => {
                    let (parent, only_for) = match &i.type_condition {
                        Some(c) => (c.as_str(), self.narrow(scope, c)),
                        None => (scope.parent, scope.only_for.clone()),
                    };
                    let inner = Scope {
                        parent,
                        only_for,
                        conditional: scope.conditional || has_condition_directive(&i.directives),
                    };
                    self.selections(&i.selection_set, &inner, out);
                }
                Selection::FragmentSpread(s) => {
                    let fd = self.doc.fragment(&s.name).expect("fragments checked at parse");
                    let inner = Scope {
                        parent: &fd.type_condition,
                        only_for: self.narrow(scope, &fd.type_condition),
                        conditional: scope.conditional
                            || has_condition_directive(&s.directives)
                            || has_condition_directive(&fd.directives),
                    };
                    self.selections(&fd.selection_set, &inner, out);
                }
            }
        }
    }
}

/// Derives the oracle tree for a QUERY operation that is valid against `schema`.
pub fn derive_oracles(schema: &SchemaModel, doc: &QueryDocument) -> Result<OracleTree, QueryError> {
    if doc.operation_kind == OperationKind::Mutation {
        return Err(QueryError::UnsupportedOperation("mutation".into()));
    }
    // Validates every selection against the schema.
    reached_tuples(doc, schema)?;
    let root = root_type_name(doc, schema)?;
    let d = Deriver { doc, schema };
    let mut fields = Vec::new();
    d.selections(
        &doc.selection_set,
        &Scope {
            parent: root,
            only_for: None,
            conditional: false,
        },
        &mut fields,
    );
    Ok(OracleTree {
        format_oracles: OracleTree::format_triple(),
        root: fields,
    })
}
