//! BPMN 2.0 XML subset reader. Elements are matched on local name, so any
//! namespace prefix (or none) is accepted.

use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::ParseError;
use crate::model::{FlowNode, GatewayDirection, GatewayLogic, NodeKind, SequenceFlow, WorkflowModel};

/// A parsed model plus non-fatal diagnostics (ignored elements and the like).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlParse {
    pub model: WorkflowModel,
    pub warnings: Vec<String>,
}

pub fn parse_bpmn_xml(input: &[u8]) -> Result<WorkflowModel, ParseError> {
    parse_bpmn_xml_with_warnings(input).map(|p| p.model)
}

enum Pending {
    Node(NodeKind),
    Gateway(GatewayLogic, Option<GatewayDirection>, (u32, u32)),
}

pub fn parse_bpmn_xml_with_warnings(input: &[u8]) -> Result<XmlParse, ParseError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let (line, column) = line_col(input, e.valid_up_to());
        ParseError::Xml { line, column, message: "input is not valid UTF-8".into() }
    })?;
    let doc = Document::parse(text).map_err(|e| {
        let pos = e.pos();
        ParseError::Xml { line: pos.row, column: pos.col, message: e.to_string() }
    })?;

    let mut warnings = Vec::new();
    let mut processes = doc.descendants().filter(|n| n.is_element() && n.tag_name().name() == "process");
    let process = processes.next().ok_or(ParseError::NoProcess)?;
    if processes.next().is_some() {
        warnings.push("document contains several processes; only the first is read".to_string());
    }

    let pos = |n: Node| {
        let p = doc.text_pos_at(n.range().start);
        (p.row, p.col)
    };
    let attr = |n: Node, name: &str| -> Result<String, ParseError> {
        match n.attribute(name) {
            Some(v) if !v.is_empty() => Ok(v.to_string()),
            _ => {
                let (line, column) = pos(n);
                Err(ParseError::MissingAttribute { element: n.tag_name().name().to_string(), attribute: name.to_string(), line, column })
            }
        }
    };

    let mut model = WorkflowModel::new(process.attribute("id").unwrap_or(super::DEFAULT_MODEL_ID), process.attribute("name").unwrap_or(""));
    let mut pending: Vec<(String, String, Pending)> = Vec::new();
    let mut flow_pos: Vec<(u32, u32)> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();

    for child in process.children().filter(|n| n.is_element()) {
        let local = child.tag_name().name();
        let kind = match local {
            "startEvent" => Pending::Node(NodeKind::StartEvent),
            "endEvent" => Pending::Node(NodeKind::EndEvent),
            "task" => Pending::Node(NodeKind::Task),
            "exclusiveGateway" | "parallelGateway" => {
                let logic = if local == "exclusiveGateway" { GatewayLogic::Exclusive } else { GatewayLogic::Parallel };
                let declared = match child.attribute("gatewayDirection") {
                    Some("Diverging") => Some(GatewayDirection::Diverging),
                    Some("Converging") => Some(GatewayDirection::Converging),
                    _ => None,
                };
                Pending::Gateway(logic, declared, pos(child))
            }
            "sequenceFlow" => {
                let id = attr(child, "id")?;
                let source = attr(child, "sourceRef")?;
                let target = attr(child, "targetRef")?;
                if seen.insert(id.clone(), ()).is_some() {
                    return Err(ParseError::DuplicateId { id, line: pos(child).0 as usize });
                }
                model.add_flow(SequenceFlow { id, source, target });
                flow_pos.push(pos(child));
                continue;
            }
            // BPMN bookkeeping that carries no control flow
            "incoming" | "outgoing" | "documentation" | "extensionElements" => continue,
            other => {
                let (line, column) = pos(child);
                warnings.push(format!("{line}:{column}: ignoring unsupported element <{other}>"));
                continue;
            }
        };
        let id = attr(child, "id")?;
        if seen.insert(id.clone(), ()).is_some() {
            return Err(ParseError::DuplicateId { id, line: pos(child).0 as usize });
        }
        let name = child.attribute("name").unwrap_or("").to_string();
        pending.push((id, name, kind));
    }

    let known: HashMap<&str, ()> = pending.iter().map(|(id, _, _)| (id.as_str(), ())).collect();
    for (flow, &(line, column)) in model.flows.iter().zip(&flow_pos) {
        for r in [&flow.source, &flow.target] {
            if !known.contains_key(r.as_str()) {
                return Err(ParseError::UnknownReference { flow: flow.id.clone(), reference: r.clone(), line, column });
            }
        }
    }

    let mut nodes = Vec::with_capacity(pending.len());
    for (id, name, p) in pending {
        let kind = match p {
            Pending::Node(k) => k,
            Pending::Gateway(logic, declared, (line, column)) => {
                let din = model.flows.iter().filter(|f| f.target == id).count();
                let dout = model.flows.iter().filter(|f| f.source == id).count();
                if din >= 2 && dout >= 2 {
                    return Err(ParseError::MixedGateway { id, line, column });
                }
                let direction = if dout >= 2 {
                    GatewayDirection::Diverging
                } else if din >= 2 {
                    GatewayDirection::Converging
                } else {
                    declared.unwrap_or(GatewayDirection::Diverging)
                };
                if let Some(d) = declared {
                    if d != direction {
                        warnings.push(format!("{line}:{column}: gateway '{id}' declares {d:?} but its degree makes it {direction:?}"));
                    }
                }
                NodeKind::Gateway { logic, direction }
            }
        };
        nodes.push(FlowNode { id, name, kind });
    }
    for n in nodes {
        model.add_node(n);
    }
    Ok(XmlParse { model, warnings })
}

fn line_col(input: &[u8], offset: usize) -> (u32, u32) {
    let before = &input[..offset.min(input.len())];
    let line = 1 + before.iter().filter(|&&b| b == b'\n').count() as u32;
    let col = 1 + before.iter().rev().take_while(|&&b| b != b'\n').count() as u32;
    (line, col)
}

/// Serializes a model as BPMN XML in the accepted subset.
pub fn emit_bpmn_xml(model: &WorkflowModel) -> String {
    let mut out =
        String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<definitions xmlns=\"http://www.omg.org/spec/BPMN/20100524/MODEL\">\n");
    out.push_str(&format!("  <process id=\"{}\" name=\"{}\">\n", esc(&model.id), esc(&model.name)));
    for n in model.nodes.values() {
        let (tag, dir) = match n.kind {
            NodeKind::StartEvent => ("startEvent", None),
            NodeKind::EndEvent => ("endEvent", None),
            NodeKind::Task => ("task", None),
            NodeKind::Gateway { logic, direction } => {
                (if logic == GatewayLogic::Exclusive { "exclusiveGateway" } else { "parallelGateway" }, Some(direction))
            }
        };
        out.push_str(&format!("    <{tag} id=\"{}\" name=\"{}\"", esc(&n.id), esc(&n.name)));
        if let Some(d) = dir {
            out.push_str(&format!(" gatewayDirection=\"{d:?}\""));
        }
        out.push_str("/>\n");
    }
    for f in &model.flows {
        out.push_str(&format!(
            "    <sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"/>\n",
            esc(&f.id),
            esc(&f.source),
            esc(&f.target)
        ));
    }
    out.push_str("  </process>\n</definitions>\n");
    out
}

fn esc(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => o.push_str("&amp;"),
            '<' => o.push_str("&lt;"),
            '>' => o.push_str("&gt;"),
            '"' => o.push_str("&quot;"),
            '\n' => o.push_str("&#10;"),
            '\t' => o.push_str("&#9;"),
            '\r' => o.push_str("&#13;"),
            c => o.push(c),
        }
    }
    o
}
