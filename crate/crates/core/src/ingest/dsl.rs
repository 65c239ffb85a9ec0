//! The compact line-oriented workflow DSL.
//!
//! ```text
//! # comments run to end of line
//! process order "Order handling";      # optional, model id and name
//! start S "Start";
//! task A "Approve Order";
//! xor-split G;
//! end E;
//! flow S -> A;                         # id defaults to S__A
//! flow f2: A -> E;
//! ```
//!
//! Node statements are `<kind> <id> ["name"]`; the name defaults to the id.
//! Ids are bare words (letters, digits, `_`, `.`, `-`) or quoted strings.

use std::collections::HashSet;

use super::lex::{self, Cursor, Tok};
use super::ParseError;
use crate::model::{FlowNode, NodeKind, SequenceFlow, WorkflowModel};

/// Model id used when the text has no `process` statement.
pub const DEFAULT_MODEL_ID: &str = "workflow";

pub fn parse_dsl(text: &str) -> Result<WorkflowModel, ParseError> {
    let dsl = |(line, message): (usize, String)| ParseError::Dsl { line, message };
    let stmts = lex::statements(lex::tokenize(text, false).map_err(dsl)?).map_err(dsl)?;

    let mut model = WorkflowModel::new(DEFAULT_MODEL_ID, "");
    let mut saw_process = false;
    let mut flow_ids: HashSet<String> = HashSet::new();
    for stmt in &stmts {
        let mut cur = Cursor::new(stmt);
        let line = cur.line;
        let keyword = match cur.next() {
            Some(Tok::Word(w)) => w.clone(),
            Some(t) => return Err(ParseError::Dsl { line, message: format!("expected a statement keyword, found {}", lex::describe(t)) }),
            None => unreachable!("statements are nonempty"),
        };
        match keyword.as_str() {
            "process" => {
                if saw_process {
                    return Err(ParseError::Dsl { line, message: "duplicate process statement".into() });
                }
                saw_process = true;
                model.id = cur.id("process id").map_err(dsl)?;
                model.name = cur.opt_str().unwrap_or_default();
            }
            "flow" => {
                let explicit = if matches!(cur.peek2(), Some(Tok::Colon)) {
                    let id = cur.id("flow id").map_err(dsl)?;
                    cur.expect(Tok::Colon).map_err(dsl)?;
                    Some(id)
                } else {
                    None
                };
                let source = cur.id("flow source").map_err(dsl)?;
                cur.expect(Tok::Arrow).map_err(dsl)?;
                let target = cur.id("flow target").map_err(dsl)?;
                let id = explicit.unwrap_or_else(|| SequenceFlow::default_id(&source, &target));
                if !flow_ids.insert(id.clone()) {
                    return Err(ParseError::DuplicateId { id, line });
                }
                model.add_flow(SequenceFlow { id, source, target });
            }
            kw => {
                let kind =
                    NodeKind::from_keyword(kw).ok_or_else(|| ParseError::Dsl { line, message: format!("unknown statement '{kw}'") })?;
                let id = cur.id("node id").map_err(dsl)?;
                let name = cur.opt_str().unwrap_or_else(|| id.clone());
                if model.nodes.contains_key(&id) {
                    return Err(ParseError::DuplicateId { id, line });
                }
                model.add_node(FlowNode { id, name, kind });
            }
        }
        cur.finish().map_err(dsl)?;
    }
    Ok(model)
}

/// Canonical DSL text: one statement per line, nodes then flows, each in
/// canonical order. Defaults are omitted so hand-written files stay terse.
pub fn emit_dsl(model: &WorkflowModel) -> String {
    let mut out = String::new();
    if model.id != DEFAULT_MODEL_ID || !model.name.is_empty() {
        out.push_str("process ");
        out.push_str(&lex::ident(&model.id));
        if !model.name.is_empty() {
            out.push(' ');
            out.push_str(&lex::quote(&model.name));
        }
        out.push_str(";\n");
    }
    for node in model.nodes.values() {
        out.push_str(node.kind.keyword());
        out.push(' ');
        out.push_str(&lex::ident(&node.id));
        if node.name != node.id {
            out.push(' ');
            out.push_str(&lex::quote(&node.name));
        }
        out.push_str(";\n");
    }
    for flow in &model.flows {
        out.push_str("flow ");
        if flow.id != SequenceFlow::default_id(&flow.source, &flow.target) {
            out.push_str(&lex::ident(&flow.id));
            out.push_str(": ");
        }
        out.push_str(&lex::ident(&flow.source));
        out.push_str(" -> ");
        out.push_str(&lex::ident(&flow.target));
        out.push_str(";\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ViolationCode;

    const M1: &str = "start S; task A; end E; flow S->A; flow A->E;";

    #[test]
    fn parses_minimal_model() {
        let m = parse_dsl(M1).unwrap();
        assert_eq!(m.id, DEFAULT_MODEL_ID);
        assert_eq!(m.nodes.len(), 3);
        assert_eq!(m.nodes["A"].name, "A");
        assert_eq!(m.flows[0], SequenceFlow::new("S__A", "S", "A"));
        assert!(m.is_wellformed());
    }

    #[test]
    fn canonical_text_of_minimal_model_is_five_lines() {
        let text = emit_dsl(&parse_dsl(M1).unwrap());
        assert_eq!(text, "start S;\ntask A;\nend E;\nflow S -> A;\nflow A -> E;\n");
        assert_eq!(parse_dsl(&text).unwrap(), parse_dsl(M1).unwrap());
    }

    #[test]
    fn parser_leaves_degree_errors_to_validation() {
        let m = parse_dsl("start S; xor-split G; end E; flow S->G; flow G->E;").unwrap();
        let v = m.validate();
        assert_eq!(v.len(), 1);
        assert_eq!((v[0].code, v[0].subject.as_str()), (ViolationCode::BadDegree, "G"));
    }

    #[test]
    fn names_ids_and_quoting() {
        let m = parse_dsl(
            "process p \"Orders\";\nstart \"Order received\";\ntask approve \"Approve Order\";\ntask x \"\";\nflow f1: \"Order received\" -> approve;\n",
        )
        .unwrap();
        assert_eq!(m.name, "Orders");
        assert_eq!(m.nodes["Order received"].name, "Order received");
        assert_eq!(m.nodes["x"].name, "");
        assert_eq!(m.flows[0].id, "f1");
        assert_eq!(parse_dsl(&emit_dsl(&m)).unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_dsl("start S;\ntask S;\n").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateId { line: 2, .. }), "{err:?}");
        let err = parse_dsl("start S;\n\nwidget W;\n").unwrap_err();
        assert!(matches!(err, ParseError::Dsl { line: 3, .. }), "{err:?}");
        let err = parse_dsl("flow A -> ;").unwrap_err();
        assert!(matches!(err, ParseError::Dsl { line: 1, .. }));
        assert!(parse_dsl("start S").is_err());
        assert!(parse_dsl("flow a: b -> c; flow a: c -> b;").is_err());
        assert!(parse_dsl("task \"\";").is_err());
    }
}
