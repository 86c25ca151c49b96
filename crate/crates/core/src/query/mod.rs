//! Executable GraphQL documents: parsing, canonical dedup keys and static
//! reachability of schema tuples.

mod canonical;
mod parser;
mod reach;

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::lexer::SyntaxError;
use crate::schema::TypeRef;
use crate::value::Value;

pub use canonical::{canonical_json, canonical_text, canonicalize, CanonicalKey};
pub use parser::{parse_operation, parse_query};
pub use reach::{reached_tuples, root_type_name};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("fragment '{0}' is not defined")]
    UndefinedFragment(String),
    #[error("fragment '{0}' is defined more than once")]
    DuplicateFragment(String),
    #[error("fragment '{0}' spreads itself")]
    CyclicFragment(String),
    #[error("variable '${0}' is not declared")]
    UndeclaredVariable(String),
    #[error("variable '${0}' is declared more than once")]
    DuplicateVariable(String),
    #[error("document contains no operation")]
    NoOperation,
    #[error("document contains several operations; an operation name is required")]
    AmbiguousOperation,
    #[error("operation '{0}' not found in document")]
    UnknownOperation(String),
    #[error("{0} operations are not supported")]
    UnsupportedOperation(String),
    #[error("unknown field '{field}' on type '{parent}' at {path}")]
    UnknownField {
        path: String,
        parent: String,
        field: String,
    },
    #[error("invalid selection at {path}: {message}")]
    InvalidSelection { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OperationKind {
    Query,
    Mutation,
}

impl OperationKind {
    pub fn keyword(self) -> &'static str {
        match self {
            OperationKind::Query => "query",
            OperationKind::Mutation => "mutation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub name: String,
    pub arguments: Vec<(String, Value)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableDefinition {
    pub name: String,
    pub type_ref: TypeRef,
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub alias: Option<String>,
    pub name: String,
    pub arguments: Vec<(String, Value)>,
    pub directives: Vec<Directive>,
    pub selection_set: Option<SelectionSet>,
}

impl Field {
    /// Key under which the field appears in the response.
    pub fn response_key(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }

    pub fn argument(&self, name: &str) -> Option<&Value> {
        self.arguments
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentSpread {
    pub name: String,
    pub directives: Vec<Directive>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InlineFragment {
    pub type_condition: Option<String>,
    pub directives: Vec<Directive>,
    pub selection_set: SelectionSet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Field(Field),
    FragmentSpread(FragmentSpread),
    InlineFragment(InlineFragment),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionSet {
    pub items: Vec<Selection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentDefinition {
    pub name: String,
    pub type_condition: String,
    pub directives: Vec<Directive>,
    pub selection_set: SelectionSet,
}

/// One operation of an executable document plus the fragments it may use.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDocument {
    pub operation_kind: OperationKind,
    pub operation_name: Option<String>,
    pub variable_definitions: Vec<VariableDefinition>,
    pub directives: Vec<Directive>,
    pub selection_set: SelectionSet,
    /// Fragment definitions in source order.
    pub fragments: IndexMap<String, FragmentDefinition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub name: String,
    pub type_ref: TypeRef,
    pub required: bool,
}

impl QueryDocument {
    pub fn fragment(&self, name: &str) -> Option<&FragmentDefinition> {
        self.fragments.get(name)
    }

    /// Declared variables in declaration order; `required` means the
    /// declared type is non-null at the outermost level.
    pub fn list_variables(&self) -> Vec<VariableInfo> {
        self.variable_definitions
            .iter()
            .map(|v| VariableInfo {
                name: v.name.clone(),
                type_ref: v.type_ref.clone(),
                required: v.type_ref.is_non_null(),
            })
            .collect()
    }

    /// Names of the top-level fields (entry points) in selection order,
    /// looking through fragments.
    pub fn entry_fields(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        self.collect_entry_fields(&self.selection_set, &mut out, &mut seen);
        out
    }

    fn collect_entry_fields(
        &self,
        set: &SelectionSet,
        out: &mut Vec<String>,
        seen: &mut BTreeSet<String>,
    ) {
        for sel in &set.items {
            match sel {
                Selection::Field(f) => {
                    if f.name != "__typename" && seen.insert(f.name.clone()) {
                        out.push(f.name.clone());
                    }
                }
                Selection::InlineFragment(i) => self.collect_entry_fields(&i.selection_set, out, seen),
                Selection::FragmentSpread(s) => {
                    if let Some(fd) = self.fragment(&s.name) {
                        self.collect_entry_fields(&fd.selection_set, out, seen)
                    }
                }
            }
        }
    }

    /// Replaces every fragment spread by an inline fragment carrying the
    /// fragment's type condition and selections. The result has no fragment
    /// definitions.
    pub fn inline_fragments(&self) -> QueryDocument {
        QueryDocument {
            operation_kind: self.operation_kind,
            operation_name: self.operation_name.clone(),
            variable_definitions: self.variable_definitions.clone(),
            directives: self.directives.clone(),
            selection_set: self.inline_set(&self.selection_set),
            fragments: IndexMap::new(),
        }
    }

    fn inline_set(&self, set: &SelectionSet) -> SelectionSet {
        SelectionSet {
            items: set
                .items
                .iter()
                .map(|sel| match sel {
                    Selection::Field(f) => Selection::Field(Field {
                        selection_set: f.selection_set.as_ref().map(|s| self.inline_set(s)),
                        ..f.clone()
                    }),
                    Selection::InlineFragment(i) => Selection::InlineFragment(InlineFragment {
                        type_condition: i.type_condition.clone(),
                        directives: i.directives.clone(),
                        selection_set: self.inline_set(&i.selection_set),
                    }),
                    Selection::FragmentSpread(s) => {
                        let fd = &self.fragments[&s.name];
                        Selection::InlineFragment(InlineFragment {
                            type_condition: Some(fd.type_condition.clone()),
                            directives: s.directives.clone(),
                            selection_set: self.inline_set(&fd.selection_set),
                        })
                    }
                })
                .collect(),
        }
    }
}
