use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;

use crate::lexer::{Cursor, SyntaxError, Tok};
use crate::value::{parse_value, Value};

use super::{
    Directive, Field, FragmentDefinition, FragmentSpread, InlineFragment, OperationKind,
    QueryDocument, QueryError, Selection, SelectionSet, VariableDefinition,
};

struct Operation {
    kind: OperationKind,
    name: Option<String>,
    variables: Vec<VariableDefinition>,
    directives: Vec<Directive>,
    selection_set: SelectionSet,
}

/// Parses a document holding exactly one operation.
pub fn parse_query(text: &str) -> Result<QueryDocument, QueryError> {
    parse_operation(text, None)
}

/// Parses a document and selects the operation called `operation_name`
/// (or the only operation when `None`).
pub fn parse_operation(text: &str, operation_name: Option<&str>) -> Result<QueryDocument, QueryError> {
    let mut cur = Cursor::new(text)?;
    let mut operations: Vec<Operation> = Vec::new();
    let mut fragments: IndexMap<String, FragmentDefinition> = IndexMap::new();

    while !cur.at_eof() {
        if cur.is_punct('{') {
            operations.push(Operation {
                kind: OperationKind::Query,
                name: None,
                variables: Vec::new(),
                directives: Vec::new(),
                selection_set: parse_selection_set(&mut cur)?,
            });
            continue;
        }
        let (kw, pos) = cur.expect_name()?;
        match kw.as_str() {
            "query" | "mutation" => {
                let kind = if kw == "query" {
                    OperationKind::Query
                } else {
                    OperationKind::Mutation
                };
                let name = match cur.peek() {
                    Tok::Name(_) => Some(cur.expect_name()?.0),
                    _ => None,
                };
                let variables = parse_variable_definitions(&mut cur)?;
                let directives = parse_directives(&mut cur)?;
                let selection_set = parse_selection_set(&mut cur)?;
                operations.push(Operation {
                    kind,
                    name,
                    variables,
                    directives,
                    selection_set,
                });
            }
            "subscription" => return Err(QueryError::UnsupportedOperation("subscription".into())),
            "fragment" => {
                let (name, npos) = cur.expect_name()?;
                if name == "on" {
                    return Err(SyntaxError::new(npos, "fragment cannot be named 'on'").into());
                }
                cur.expect_keyword("on")?;
                let (type_condition, _) = cur.expect_name()?;
                let directives = parse_directives(&mut cur)?;
                let selection_set = parse_selection_set(&mut cur)?;
                if fragments.contains_key(&name) {
                    return Err(QueryError::DuplicateFragment(name));
                }
                fragments.insert(
                    name.clone(),
                    FragmentDefinition {
                        name,
                        type_condition,
                        directives,
                        selection_set,
                    },
                );
            }
            other => {
                return Err(SyntaxError::new(
                    pos,
                    format!("expected an operation or fragment, found '{other}'"),
                )
                .into())
            }
        }
    }

    let op = select_operation(operations, operation_name)?;
    check_fragments(&op.selection_set, &fragments)?;
    let doc = QueryDocument {
        operation_kind: op.kind,
        operation_name: op.name,
        variable_definitions: op.variables,
        directives: op.directives,
        selection_set: op.selection_set,
        fragments,
    };
    check_variables(&doc)?;
    Ok(doc)
}

fn select_operation(mut ops: Vec<Operation>, name: Option<&str>) -> Result<Operation, QueryError> {
    match name {
        Some(n) => {
            let idx = ops
                .iter()
                .position(|o| o.name.as_deref() == Some(n))
                .ok_or_else(|| QueryError::UnknownOperation(n.to_string()))?;
            Ok(ops.swap_remove(idx))
        }
        None => match ops.len() {
            0 => Err(QueryError::NoOperation),
            1 => Ok(ops.pop().expect("one operation")),
            _ => Err(QueryError::AmbiguousOperation),
        },
    }
}

fn parse_variable_definitions(cur: &mut Cursor) -> Result<Vec<VariableDefinition>, QueryError> {
    let mut out: Vec<VariableDefinition> = Vec::new();
    if !cur.eat_punct('(') {
        return Ok(out);
    }
    while !cur.eat_punct(')') {
        cur.expect_punct('$')?;
        let (name, _) = cur.expect_name()?;
        cur.expect_punct(':')?;
        let type_ref = crate::schema::parse_type_ref_from(cur)?;
        let default = if cur.eat_punct('=') {
            Some(parse_value(cur, true)?)
        } else {
            None
        };
        parse_directives(cur)?;
        if out.iter().any(|v| v.name == name) {
            return Err(QueryError::DuplicateVariable(name));
        }
        out.push(VariableDefinition {
            name,
            type_ref,
            default,
        });
    }
    Ok(out)
}

fn parse_arguments(cur: &mut Cursor) -> Result<Vec<(String, Value)>, SyntaxError> {
    let mut out: Vec<(String, Value)> = Vec::new();
    if !cur.eat_punct('(') {
        return Ok(out);
    }
    while !cur.eat_punct(')') {
        let (name, pos) = cur.expect_name()?;
        cur.expect_punct(':')?;
        let v = parse_value(cur, false)?;
        if out.iter().any(|(n, _)| *n == name) {
            return Err(SyntaxError::new(pos, format!("duplicate argument '{name}'")));
        }
        out.push((name, v));
    }
    Ok(out)
}

fn parse_directives(cur: &mut Cursor) -> Result<Vec<Directive>, SyntaxError> {
    let mut out = Vec::new();
    while cur.eat_punct('@') {
        let (name, _) = cur.expect_name()?;
        out.push(Directive {
            name,
            arguments: parse_arguments(cur)?,
        });
    }
    Ok(out)
}

fn parse_selection_set(cur: &mut Cursor) -> Result<SelectionSet, SyntaxError> {
    cur.expect_punct('{')?;
    let mut items = Vec::new();
    while !cur.eat_punct('}') {
        if matches!(cur.peek(), Tok::Spread) {
            cur.next();
            let is_named_spread = matches!(cur.peek(), Tok::Name(n) if n != "on");
            if is_named_spread {
                let (name, _) = cur.expect_name()?;
                items.push(Selection::FragmentSpread(FragmentSpread {
                    name,
                    directives: parse_directives(cur)?,
                }));
            } else {
                let type_condition = if cur.is_name("on") {
                    cur.next();
                    Some(cur.expect_name()?.0)
                } else {
                    None
                };
                let directives = parse_directives(cur)?;
                items.push(Selection::InlineFragment(InlineFragment {
                    type_condition,
                    directives,
                    selection_set: parse_selection_set(cur)?,
                }));
            }
            continue;
        }
        if cur.at_eof() {
            return Err(cur.unexpected("'}'"));
        }
        let (first, _) = cur.expect_name()?;
        let (alias, name) = if cur.eat_punct(':') {
            (Some(first), cur.expect_name()?.0)
        } else {
            (None, first)
        };
        let arguments = parse_arguments(cur)?;
        let directives = parse_directives(cur)?;
        let selection_set = if cur.is_punct('{') {
            Some(parse_selection_set(cur)?)
        } else {
            None
        };
        items.push(Selection::Field(Field {
            alias,
            name,
            arguments,
            directives,
            selection_set,
        }));
    }
    if items.is_empty() {
        return Err(SyntaxError::new(cur.pos(), "empty selection set"));
    }
    Ok(SelectionSet { items })
}

fn collect_spreads<'a>(set: &'a SelectionSet, out: &mut Vec<&'a str>) {
    for sel in &set.items {
        match sel {
            Selection::Field(f) => {
                if let Some(s) = &f.selection_set {
                    collect_spreads(s, out);
                }
            }
            Selection::FragmentSpread(s) => out.push(&s.name),
            Selection::InlineFragment(i) => collect_spreads(&i.selection_set, out),
        }
    }
}

fn check_fragments(
    op_set: &SelectionSet,
    fragments: &IndexMap<String, FragmentDefinition>,
) -> Result<(), QueryError> {
    let mut edges: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut roots = Vec::new();
    collect_spreads(op_set, &mut roots);
    for name in &roots {
        if !fragments.contains_key(*name) {
            return Err(QueryError::UndefinedFragment(name.to_string()));
        }
    }
    for (name, fd) in fragments {
        let mut spreads = Vec::new();
        collect_spreads(&fd.selection_set, &mut spreads);
        for s in &spreads {
            if !fragments.contains_key(*s) {
                return Err(QueryError::UndefinedFragment(s.to_string()));
            }
        }
        edges.insert(name.as_str(), spreads);
    }
    // Iterative three-colour DFS for cycle detection.
    let mut state: BTreeMap<&str, u8> = BTreeMap::new();
    for start in fragments.keys() {
        if state.get(start.as_str()).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
        state.insert(start.as_str(), 1);
        while let Some((node, idx)) = stack.pop() {
            let next = edges[node].get(idx).copied();
            match next {
                Some(child) => {
                    stack.push((node, idx + 1));
                    match state.get(child).copied().unwrap_or(0) {
                        0 => {
                            state.insert(child, 1);
                            stack.push((child, 0));
                        }
                        1 => return Err(QueryError::CyclicFragment(child.to_string())),
                        _ => {}
                    }
                }
                None => {
                    state.insert(node, 2);
                }
            }
        }
    }
    Ok(())
}

fn directive_vars<'a>(dirs: &'a [Directive], out: &mut BTreeSet<&'a str>) {
    for d in dirs {
        for (_, v) in &d.arguments {
            v.for_each_variable(&mut |n| {
                out.insert(n);
            });
        }
    }
}

fn used_variables<'a>(
    doc: &'a QueryDocument,
    set: &'a SelectionSet,
    visited: &mut BTreeSet<&'a str>,
    out: &mut BTreeSet<&'a str>,
) {
    for sel in &set.items {
        match sel {
            Selection::Field(f) => {
                for (_, v) in &f.arguments {
                    v.for_each_variable(&mut |n| {
                        out.insert(n);
                    });
                }
                directive_vars(&f.directives, out);
                if let Some(s) = &f.selection_set {
                    used_variables(doc, s, visited, out);
                }
            }
            Selection::InlineFragment(i) => {
                directive_vars(&i.directives, out);
                used_variables(doc, &i.selection_set, visited, out);
            }
            Selection::FragmentSpread(s) => {
                directive_vars(&s.directives, out);
                if visited.insert(&s.name) {
                    if let Some(fd) = doc.fragment(&s.name) {
                        directive_vars(&fd.directives, out);
                        used_variables(doc, &fd.selection_set, visited, out);
                    }
                }
            }
        }
    }
}

fn check_variables(doc: &QueryDocument) -> Result<(), QueryError> {
    let mut used = BTreeSet::new();
    directive_vars(&doc.directives, &mut used);
    used_variables(doc, &doc.selection_set, &mut BTreeSet::new(), &mut used);
    for name in used {
        if !doc.variable_definitions.iter().any(|v| v.name == name) {
            return Err(QueryError::UndeclaredVariable(name.to_string()));
        }
    }
    Ok(())
}
