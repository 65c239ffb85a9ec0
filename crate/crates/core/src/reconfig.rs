//! Reconfiguration as structural patches: applying them, diffing two
//! models into one, and the two patch file formats.
//!
//! Text format, one op per line (`;` also separates ops, `#` comments):
//!
//! ```text
//! description "insert review step";
//! add-node task B "Task B"
//! remove-node g2
//! add-flow f9: B -> E          # id optional, defaults to B__E
//! remove-flow f3
//! reroute-flow A__E: A -> B
//! ```
//!
//! The JSON form carries the same content:
//! `{"description": "...", "ops": [{"op": "add-node", "kind": "task", "id": "B", "name": "Task B"}, ...]}`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::lex::{self, Cursor, Tok};
use crate::model::{FlowNode, NodeKind, SequenceFlow, WorkflowModel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatchOp {
    AddNode(FlowNode),
    RemoveNode(String),
    AddFlow(SequenceFlow),
    RemoveFlow(String),
    RerouteFlow { id: String, source: String, target: String },
}

impl fmt::Display for PatchOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&op_text(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Patch {
    pub description: String,
    pub ops: Vec<PatchOp>,
}

impl Patch {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// `op` is the zero-based index of the first failing op.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchError {
    #[error("op #{} ({op_text}): unknown id '{id}'", .op + 1)]
    UnknownId { op: usize, id: String, op_text: String },
    #[error("op #{} ({op_text}): id '{id}' already exists", .op + 1)]
    DuplicateId { op: usize, id: String, op_text: String },
}

/// Applies `patch` to a copy of `model`. All ops succeed or an error names
/// the first failing one; the input is never modified.
///
/// `RemoveNode(x)` immediately followed by `AddNode` with id `x` replaces the
/// node in place, keeping its position and flows. A plain `RemoveNode` also
/// removes every flow touching the node. The result is not validated.
pub fn apply_patch(model: &WorkflowModel, patch: &Patch) -> Result<WorkflowModel, PatchError> {
    let mut m = model.clone();
    let mut i = 0;
    while i < patch.ops.len() {
        let op = &patch.ops[i];
        let unknown = |id: &str| PatchError::UnknownId { op: i, id: id.to_string(), op_text: op_text(op) };
        let dup = |id: &str| PatchError::DuplicateId { op: i, id: id.to_string(), op_text: op_text(op) };
        let id_taken = |m: &WorkflowModel, id: &str| m.nodes.contains_key(id) || m.flows.iter().any(|f| f.id == id);
        match op {
            PatchOp::AddNode(node) => {
                if id_taken(&m, &node.id) {
                    return Err(dup(&node.id));
                }
                m.add_node(node.clone());
            }
            PatchOp::RemoveNode(id) => {
                if !m.nodes.contains_key(id) {
                    return Err(unknown(id));
                }
                if let Some(PatchOp::AddNode(replacement)) = patch.ops.get(i + 1) {
                    if &replacement.id == id {
                        m.nodes.insert(id.clone(), replacement.clone());
                        i += 2;
                        continue;
                    }
                }
                m.nodes.shift_remove(id);
                m.flows.retain(|f| &f.source != id && &f.target != id);
            }
            PatchOp::AddFlow(flow) => {
                if id_taken(&m, &flow.id) {
                    return Err(dup(&flow.id));
                }
                for end in [&flow.source, &flow.target] {
                    if !m.nodes.contains_key(end) {
                        return Err(unknown(end));
                    }
                }
                m.add_flow(flow.clone());
            }
            PatchOp::RemoveFlow(id) => {
                let pos = m.flows.iter().position(|f| &f.id == id).ok_or_else(|| unknown(id))?;
                m.flows.remove(pos);
            }
            PatchOp::RerouteFlow { id, source, target } => {
                let pos = m.flows.iter().position(|f| &f.id == id).ok_or_else(|| unknown(id))?;
                for end in [source, target] {
                    if !m.nodes.contains_key(end) {
                        return Err(unknown(end));
                    }
                }
                m.flows[pos].source = source.clone();
                m.flows[pos].target = target.clone();
            }
        }
        i += 1;
    }
    Ok(m)
}

/// Equality up to element order and process metadata: same nodes (id,
/// name, kind) and same flows (id, endpoints).
pub fn graph_eq(a: &WorkflowModel, b: &WorkflowModel) -> bool {
    let nodes = |m: &WorkflowModel| m.nodes.values().cloned().map(|n| (n.id, n.name, n.kind.keyword())).collect::<BTreeSet<_>>();
    let flows = |m: &WorkflowModel| m.flows.iter().map(|f| (f.id.clone(), f.source.clone(), f.target.clone())).collect::<BTreeSet<_>>();
    a.nodes.len() == b.nodes.len() && a.flows.len() == b.flows.len() && nodes(a) == nodes(b) && flows(a) == flows(b)
}

/// A patch turning `old` into (a model graph-equal to) `new`.
///
/// Removals come first, then additions, each group sorted by id: flow
/// removals, node removals, in-place node replacements, node additions,
/// reroutes, flow additions. Flows that disappear only because an endpoint
/// node is removed are left to the removal cascade.
pub fn diff(old: &WorkflowModel, new: &WorkflowModel) -> Patch {
    let old_flows: BTreeMap<&str, &SequenceFlow> = old.flows.iter().map(|f| (f.id.as_str(), f)).collect();
    let new_flows: BTreeMap<&str, &SequenceFlow> = new.flows.iter().map(|f| (f.id.as_str(), f)).collect();
    let removed_nodes: BTreeSet<&str> = old.nodes.keys().map(String::as_str).filter(|id| !new.nodes.contains_key(*id)).collect();
    let touches_removed = |f: &SequenceFlow| removed_nodes.contains(f.source.as_str()) || removed_nodes.contains(f.target.as_str());

    let mut ops = Vec::new();
    let mut readd: HashSet<&str> = HashSet::new();
    for (id, f) in &old_flows {
        match new_flows.get(id) {
            None if !touches_removed(f) => ops.push(PatchOp::RemoveFlow(id.to_string())),
            // a surviving flow attached to a removed node would be cascaded away
            Some(_) if touches_removed(f) => {
                readd.insert(id);
            }
            _ => {}
        }
    }
    for id in &removed_nodes {
        ops.push(PatchOp::RemoveNode(id.to_string()));
    }
    let mut common: Vec<&String> = new.nodes.keys().filter(|id| old.nodes.contains_key(*id)).collect();
    common.sort();
    for id in common {
        if old.nodes[id] != new.nodes[id] {
            ops.push(PatchOp::RemoveNode(id.clone()));
            ops.push(PatchOp::AddNode(new.nodes[id].clone()));
        }
    }
    let mut added: Vec<&FlowNode> = new.nodes.values().filter(|n| !old.nodes.contains_key(&n.id)).collect();
    added.sort_by(|a, b| a.id.cmp(&b.id));
    ops.extend(added.into_iter().cloned().map(PatchOp::AddNode));
    for (id, nf) in &new_flows {
        if let Some(of) = old_flows.get(id) {
            if !readd.contains(id) && (of.source != nf.source || of.target != nf.target) {
                ops.push(PatchOp::RerouteFlow { id: id.to_string(), source: nf.source.clone(), target: nf.target.clone() });
            }
        }
    }
    for (id, nf) in &new_flows {
        if !old_flows.contains_key(id) || readd.contains(id) {
            ops.push(PatchOp::AddFlow((*nf).clone()));
        }
    }
    Patch { description: String::new(), ops }
}

// ---------------------------------------------------------------------------
// file formats

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatchParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid JSON patch: {0}")]
    Json(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPatch {
    #[serde(default)]
    description: String,
    ops: Vec<JsonOp>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
enum JsonOp {
    AddNode {
        kind: String,
        id: String,
        #[serde(default)]
        name: Option<String>,
    },
    RemoveNode {
        id: String,
    },
    AddFlow {
        #[serde(default)]
        id: Option<String>,
        source: String,
        target: String,
    },
    RemoveFlow {
        id: String,
    },
    RerouteFlow {
        id: String,
        source: String,
        target: String,
    },
}

/// Parses either format; JSON is recognized by a leading `{`.
pub fn parse_patch(text: &str) -> Result<Patch, PatchParseError> {
    if text.trim_start().starts_with('{') {
        parse_patch_json(text)
    } else {
        parse_patch_text(text)
    }
}

pub fn parse_patch_json(text: &str) -> Result<Patch, PatchParseError> {
    let raw: JsonPatch = serde_json::from_str(text).map_err(|e| PatchParseError::Json(e.to_string()))?;
    let mut ops = Vec::with_capacity(raw.ops.len());
    for op in raw.ops {
        ops.push(match op {
            JsonOp::AddNode { kind, id, name } => {
                let kind = NodeKind::from_keyword(&kind).ok_or_else(|| PatchParseError::Json(format!("unknown node kind '{kind}'")))?;
                let name = name.unwrap_or_else(|| id.clone());
                PatchOp::AddNode(FlowNode { id, name, kind })
            }
            JsonOp::RemoveNode { id } => PatchOp::RemoveNode(id),
            JsonOp::AddFlow { id, source, target } => {
                let id = id.unwrap_or_else(|| SequenceFlow::default_id(&source, &target));
                PatchOp::AddFlow(SequenceFlow { id, source, target })
            }
            JsonOp::RemoveFlow { id } => PatchOp::RemoveFlow(id),
            JsonOp::RerouteFlow { id, source, target } => PatchOp::RerouteFlow { id, source, target },
        });
    }
    Ok(Patch { description: raw.description, ops })
}

pub fn parse_patch_text(text: &str) -> Result<Patch, PatchParseError> {
    let syn = |(line, message): (usize, String)| PatchParseError::Syntax { line, message };
    let stmts = lex::statements(lex::tokenize(text, true).map_err(syn)?).map_err(syn)?;
    let mut patch = Patch::default();
    for stmt in &stmts {
        let mut cur = Cursor::new(stmt);
        let line = cur.line;
        let keyword = match cur.next() {
            Some(Tok::Word(w)) => w.clone(),
            Some(t) => return Err(syn((line, format!("expected an operation, found {}", lex::describe(t))))),
            None => unreachable!("statements are nonempty"),
        };
        let op = match keyword.as_str() {
            "description" => {
                patch.description = cur.opt_str().ok_or_else(|| syn((line, "description needs a quoted string".into())))?;
                cur.finish().map_err(syn)?;
                continue;
            }
            "add-node" => {
                let kind = match cur.next() {
                    Some(Tok::Word(w)) => NodeKind::from_keyword(w).ok_or_else(|| syn((line, format!("unknown node kind '{w}'"))))?,
                    _ => return Err(syn((line, "add-node needs a node kind".into()))),
                };
                let id = cur.id("node id").map_err(syn)?;
                let name = cur.opt_str().unwrap_or_else(|| id.clone());
                PatchOp::AddNode(FlowNode { id, name, kind })
            }
            "remove-node" => PatchOp::RemoveNode(cur.id("node id").map_err(syn)?),
            "remove-flow" => PatchOp::RemoveFlow(cur.id("flow id").map_err(syn)?),
            "add-flow" | "reroute-flow" => {
                let explicit = if matches!(cur.peek2(), Some(Tok::Colon)) {
                    let id = cur.id("flow id").map_err(syn)?;
                    cur.expect(Tok::Colon).map_err(syn)?;
                    Some(id)
                } else {
                    None
                };
                let source = cur.id("flow source").map_err(syn)?;
                cur.expect(Tok::Arrow).map_err(syn)?;
                let target = cur.id("flow target").map_err(syn)?;
                if keyword == "add-flow" {
                    let id = explicit.unwrap_or_else(|| SequenceFlow::default_id(&source, &target));
                    PatchOp::AddFlow(SequenceFlow { id, source, target })
                } else {
                    let id = explicit.ok_or_else(|| syn((line, "reroute-flow needs '<flow id>:'".into())))?;
                    PatchOp::RerouteFlow { id, source, target }
                }
            }
            other => return Err(syn((line, format!("unknown operation '{other}'")))),
        };
        cur.finish().map_err(syn)?;
        patch.ops.push(op);
    }
    Ok(patch)
}

fn op_text(op: &PatchOp) -> String {
    match op {
        PatchOp::AddNode(n) => {
            let mut s = format!("add-node {} {}", n.kind.keyword(), lex::ident(&n.id));
            if n.name != n.id {
                s.push(' ');
                s.push_str(&lex::quote(&n.name));
            }
            s
        }
        PatchOp::RemoveNode(id) => format!("remove-node {}", lex::ident(id)),
        PatchOp::AddFlow(f) => {
            if f.id == SequenceFlow::default_id(&f.source, &f.target) {
                format!("add-flow {} -> {}", lex::ident(&f.source), lex::ident(&f.target))
            } else {
                format!("add-flow {}: {} -> {}", lex::ident(&f.id), lex::ident(&f.source), lex::ident(&f.target))
            }
        }
        PatchOp::RemoveFlow(id) => format!("remove-flow {}", lex::ident(id)),
        PatchOp::RerouteFlow { id, source, target } => {
            format!("reroute-flow {}: {} -> {}", lex::ident(id), lex::ident(source), lex::ident(target))
        }
    }
}

pub fn emit_patch_text(patch: &Patch) -> String {
    let mut out = String::new();
    if !patch.description.is_empty() {
        out.push_str(&format!("description {}\n", lex::quote(&patch.description)));
    }
    for op in &patch.ops {
        out.push_str(&op_text(op));
        out.push('\n');
    }
    out
}

pub fn emit_patch_json(patch: &Patch) -> String {
    let ops = patch
        .ops
        .iter()
        .map(|op| match op {
            PatchOp::AddNode(n) => JsonOp::AddNode { kind: n.kind.keyword().into(), id: n.id.clone(), name: Some(n.name.clone()) },
            PatchOp::RemoveNode(id) => JsonOp::RemoveNode { id: id.clone() },
            PatchOp::AddFlow(f) => JsonOp::AddFlow { id: Some(f.id.clone()), source: f.source.clone(), target: f.target.clone() },
            PatchOp::RemoveFlow(id) => JsonOp::RemoveFlow { id: id.clone() },
            PatchOp::RerouteFlow { id, source, target } => {
                JsonOp::RerouteFlow { id: id.clone(), source: source.clone(), target: target.clone() }
            }
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&JsonPatch { description: patch.description.clone(), ops }).expect("patch serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_dsl;
    use crate::model::ViolationCode;

    const M1: &str = "start S; task A; end E; flow S->A; flow A->E;";
    const M2: &str = "start Start; and-split g1; task A; task B; and-join g2; end End;
        flow f0: Start -> g1; flow f1: g1 -> A; flow f2: g1 -> B;
        flow f3: A -> g2; flow f4: B -> g2; flow f5: g2 -> End;";
    const M3: &str = "start Start; xor-split g1; task A; task B; and-join g2; end End;
        flow f0: Start -> g1; flow f1: g1 -> A; flow f2: g1 -> B;
        flow f3: A -> g2; flow f4: B -> g2; flow f5: g2 -> End;";

    #[test]
    fn insert_task_into_linear_model() {
        let m1 = parse_dsl(M1).unwrap();
        let patch = parse_patch_text("add-node task B\nreroute-flow A__E: A -> B\nadd-flow B -> E\n").unwrap();
        let out = apply_patch(&m1, &patch).unwrap();
        assert!(out.is_wellformed());
        assert_eq!(
            out.flows.iter().map(|f| (f.source.as_str(), f.target.as_str())).collect::<Vec<_>>(),
            vec![("S", "A"), ("A", "B"), ("B", "E")]
        );
    }

    #[test]
    fn removing_join_cascades_flows() {
        let m2 = parse_dsl(M2).unwrap();
        let out = apply_patch(&m2, &Patch { description: String::new(), ops: vec![PatchOp::RemoveNode("g2".into())] }).unwrap();
        assert!(out.flows.iter().all(|f| f.source != "g2" && f.target != "g2"));
        assert_eq!(out.flows.len(), 3);
        let v = out.validate();
        assert!(v.iter().any(|v| v.code == ViolationCode::BadDegree && v.subject == "A"));
        assert!(v.iter().any(|v| v.code == ViolationCode::BadDegree && v.subject == "End"));
    }

    #[test]
    fn replacing_split_kind_yields_deadlocking_model() {
        let m2 = parse_dsl(M2).unwrap();
        let patch = parse_patch_text("remove-node g1\nadd-node xor-split g1\n").unwrap();
        let out = apply_patch(&m2, &patch).unwrap();
        assert_eq!(out, parse_dsl(M3).unwrap());
    }

    #[test]
    fn failures_are_atomic_and_name_the_op() {
        let m1 = parse_dsl(M1).unwrap();
        let before = m1.clone();
        let patch = parse_patch_text("add-node task B\nadd-flow B -> ghost\n").unwrap();
        let err = apply_patch(&m1, &patch).unwrap_err();
        assert!(matches!(&err, PatchError::UnknownId { op: 1, id, .. } if id == "ghost"));
        assert_eq!(m1, before);
        let err = apply_patch(&m1, &parse_patch_text("add-node task A").unwrap()).unwrap_err();
        assert!(matches!(err, PatchError::DuplicateId { op: 0, .. }));
        assert!(matches!(apply_patch(&m1, &parse_patch_text("remove-flow nope").unwrap()), Err(PatchError::UnknownId { op: 0, .. })));
    }

    #[test]
    fn diff_examples() {
        let m1 = parse_dsl(M1).unwrap();
        assert!(diff(&m1, &m1).is_empty());
        let (m2, m3) = (parse_dsl(M2).unwrap(), parse_dsl(M3).unwrap());
        let p = diff(&m2, &m3);
        assert_eq!(p.ops, vec![PatchOp::RemoveNode("g1".into()), PatchOp::AddNode(m3.nodes["g1"].clone())]);
        assert_eq!(apply_patch(&m2, &p).unwrap(), m3);
    }

    #[test]
    fn diff_name_change_and_reroute_through_removed_node() {
        let old = parse_dsl("start S; task A; task B; end E; flow f1: S -> A; flow f2: A -> B; flow f3: B -> E;").unwrap();
        let new = parse_dsl("start S \"Begin\"; task A; end E; task C; flow f1: S -> A; flow f2: A -> C; flow f3: C -> E;").unwrap();
        let p = diff(&old, &new);
        let out = apply_patch(&old, &p).unwrap();
        assert!(graph_eq(&out, &new), "{}", emit_patch_text(&p));
    }

    #[test]
    fn text_and_json_formats_agree() {
        let text = "description \"m1 plus B\"\nadd-node task B \"Task B\"\nreroute-flow A__E: A -> B\nadd-flow fx: B -> E\nremove-flow S__A\nremove-node A\n";
        let p = parse_patch_text(text).unwrap();
        assert_eq!(emit_patch_text(&p), text);
        assert_eq!(parse_patch(&emit_patch_json(&p)).unwrap(), p);
        assert!(parse_patch("{\"ops\": [{\"op\": \"explode\"}]}").is_err());
        assert!(matches!(parse_patch_text("add-node widget X"), Err(PatchParseError::Syntax { line: 1, .. })));
        assert!(parse_patch_text("reroute-flow A -> B").is_err());
    }
}
