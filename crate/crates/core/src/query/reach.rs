use std::collections::BTreeSet;

use super::{OperationKind, QueryDocument, QueryError, Selection, SelectionSet};
use crate::schema::{SchemaModel, SchemaTuple, TypeKind};

/// Root type the operation starts from.
pub fn root_type_name<'s>(doc: &QueryDocument, schema: &'s SchemaModel) -> Result<&'s str, QueryError> {
    match doc.operation_kind {
        OperationKind::Query => Ok(&schema.query_type_name),
        OperationKind::Mutation => schema.mutation_type_name.as_deref().ok_or_else(|| {
            QueryError::InvalidSelection {
                path: String::new(),
                message: "schema has no mutation root".into(),
            }
        }),
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Checks a fragment's type condition against the enclosing type and returns
/// the type the fragment's selections are made on.
pub(crate) fn fragment_scope<'a>(
    schema: &SchemaModel,
    parent: &'a str,
    condition: Option<&'a str>,
    path: &str,
) -> Result<&'a str, QueryError> {
    let Some(cond) = condition else {
        return Ok(parent);
    };
    match schema.kind_of(cond) {
        Some(k) if k.is_composite() => {}
        _ => {
            return Err(QueryError::InvalidSelection {
                path: path.to_string(),
                message: format!("fragment type condition '{cond}' is not a composite type"),
            })
        }
    }
    let overlap = schema
        .possible_types(cond)
        .intersection(&schema.possible_types(parent))
        .next()
        .is_some();
    if !overlap {
        return Err(QueryError::InvalidSelection {
            path: path.to_string(),
            message: format!("fragment on '{cond}' can never apply within '{parent}'"),
        });
    }
    Ok(cond)
}

struct Walker<'a> {
    doc: &'a QueryDocument,
    schema: &'a SchemaModel,
    out: BTreeSet<SchemaTuple>,
}

impl Walker<'_> {
    fn walk(&mut self, set: &SelectionSet, parent: &str, path: &str) -> Result<(), QueryError> {
        for sel in &set.items {
            match sel {
                Selection::Field(f) => {
                    let fpath = join(path, f.response_key());
                    let def = self.schema.resolve_field(parent, &f.name).map_err(|_| {
                        QueryError::UnknownField {
                            path: fpath.clone(),
                            parent: parent.to_string(),
                            field: f.name.clone(),
                        }
                    })?;
                    if f.name == "__typename" {
                        if f.selection_set.is_some() {
                            return Err(QueryError::InvalidSelection {
                                path: fpath,
                                message: "__typename has no subfields".into(),
                            });
                        }
                        continue;
                    }
                    if self.schema.kind_of(parent) == Some(TypeKind::Union) {
                        return Err(QueryError::UnknownField {
                            path: fpath,
                            parent: parent.to_string(),
                            field: f.name.clone(),
                        });
                    }
                    self.out.insert(SchemaTuple::new(parent, &f.name));
                    let base = def.type_ref.base_name();
                    let composite = self.schema.kind_of(base).is_some_and(TypeKind::is_composite);
                    match (&f.selection_set, composite) {
                        (Some(s), true) => self.walk(s, base, &fpath)?,
                        (None, false) => {}
                        (Some(_), false) => {
                            return Err(QueryError::InvalidSelection {
                                path: fpath,
                                message: format!("leaf type '{base}' cannot have a selection set"),
                            })
                        }
                        (None, true) => {
                            return Err(QueryError::InvalidSelection {
                                path: fpath,
                                message: format!("composite type '{base}' requires a selection set"),
                            })
                        }
                    }
                }
                Selection::InlineFragment(i) => {
                    let scope = fragment_scope(self.schema, parent, i.type_condition.as_deref(), path)?
                        .to_string();
                    self.walk(&i.selection_set, &scope, path)?;
                }
                Selection::FragmentSpread(s) => {
                    let fd = self
                        .doc
                        .fragment(&s.name)
                        .ok_or_else(|| QueryError::UndefinedFragment(s.name.clone()))?;
                    let scope =
                        fragment_scope(self.schema, parent, Some(&fd.type_condition), path)?.to_string();
                    self.walk(&fd.selection_set, &scope, path)?;
                }
            }
        }
        Ok(())
    }
}

/// Schema tuples the document reaches, determined from its AST alone.
///
/// Fields are attributed to the static parent type: the interface for
/// selections on an interface, the concrete type inside a type-conditioned
/// fragment. `__typename` contributes nothing.
pub fn reached_tuples(doc: &QueryDocument, schema: &SchemaModel) -> Result<BTreeSet<SchemaTuple>, QueryError> {
    let root = root_type_name(doc, schema)?;
    let mut w = Walker {
        doc,
        schema,
        out: BTreeSet::new(),
    };
    w.walk(&doc.selection_set, root, "")?;
    Ok(w.out)
}
