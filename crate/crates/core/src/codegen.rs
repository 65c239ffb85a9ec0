//! Translation of a workflow model into a readable Promela program.
//!
//! The encoding is a single `active proctype Workflow()` whose `do` loop has
//! one guarded `atomic` arm per firing rule instance (one per node, one per
//! output of an exclusive split, one per input of an exclusive join). Each
//! sequence flow becomes a `byte tok_<flow>` counter; `lastFired` records
//! the code of the node that fired last, and `fired_<node>` macros expose it
//! to `ltl` blocks. When no arm is enabled the loop breaks and a final
//! `assert` demands proper completion, so deadlocks surface as assertion
//! violations. Token increments are preceded by `assert(tok < BOUND)`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::checker::Property;
use crate::ingest::lex;
use crate::model::{NodeKind, Violation, WorkflowModel};
use crate::semantics::{Net, NetError, COMPLETED_CAP, DEFAULT_BOUND};

/// Promela reserved words (plus the LTL operator words of `ltl` blocks).
pub const PROMELA_KEYWORDS: &[&str] = &[
    "active",
    "assert",
    "atomic",
    "bit",
    "bool",
    "break",
    "byte",
    "c_code",
    "c_decl",
    "c_expr",
    "c_state",
    "c_track",
    "chan",
    "d_proctype",
    "d_step",
    "do",
    "else",
    "empty",
    "enabled",
    "eval",
    "false",
    "fi",
    "for",
    "full",
    "get_priority",
    "goto",
    "hidden",
    "if",
    "in",
    "init",
    "inline",
    "int",
    "len",
    "local",
    "ltl",
    "mtype",
    "nempty",
    "never",
    "nfull",
    "notrace",
    "np_",
    "od",
    "of",
    "pc_value",
    "pid",
    "print",
    "printf",
    "printm",
    "priority",
    "proctype",
    "provided",
    "run",
    "select",
    "set_priority",
    "short",
    "show",
    "skip",
    "timeout",
    "trace",
    "true",
    "typedef",
    "unless",
    "unsigned",
    "xr",
    "xs",
    "always",
    "eventually",
    "until",
    "weakuntil",
    "stronguntil",
    "implies",
    "equivalent",
    "release",
    "U",
    "W",
    "V",
    "X",
    "R",
    "M",
    "_",
    "_pid",
    "_nr_pr",
    "_last",
    "_priority",
    "STDIN",
];

/// Maps `raw` to a Promela identifier not in `taken`.
///
/// Characters outside `[A-Za-z0-9_]` become `_`, a leading digit gets a `_`
/// prefix, keywords get a trailing `_`, collisions get `_2`, `_3`, ... and
/// an empty name becomes `n<code>`.
pub fn sanitize_name(raw: &str, taken: &HashSet<String>, code: u32) -> String {
    let mut base: String = raw.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if base.is_empty() {
        base = format!("n{code}");
    }
    if base.starts_with(|c: char| c.is_ascii_digit()) {
        base.insert(0, '_');
    }
    if PROMELA_KEYWORDS.contains(&base.as_str()) {
        base.push('_');
    }
    if !taken.contains(&base) {
        return base;
    }
    (2..).map(|k| format!("{base}_{k}")).find(|c| !taken.contains(c)).expect("unbounded suffixes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Node,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub bpmn_id: String,
    /// `fired_<name>` for nodes, `tok_<name>` for flows.
    pub ident: String,
    /// Nodes are numbered from 1 in node order (these are the `lastFired`
    /// values); flows continue after the last node.
    pub code: u32,
    pub kind: SymbolKind,
}

/// Bidirectional BPMN id <-> Promela name table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    entries: Vec<Symbol>,
    by_ident: HashMap<String, usize>,
    by_node: HashMap<String, usize>,
    by_flow: HashMap<String, usize>,
    by_code: HashMap<u32, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("symbol table line {line}: {message}")]
pub struct SymbolParseError {
    pub line: usize,
    pub message: String,
}

impl SymbolTable {
    fn push(&mut self, s: Symbol) {
        let i = self.entries.len();
        self.by_ident.insert(s.ident.clone(), i);
        self.by_code.insert(s.code, i);
        match s.kind {
            SymbolKind::Node => self.by_node.insert(s.bpmn_id.clone(), i),
            SymbolKind::Flow => self.by_flow.insert(s.bpmn_id.clone(), i),
        };
        self.entries.push(s);
    }

    pub fn entries(&self) -> &[Symbol] {
        &self.entries
    }

    pub fn by_ident(&self, ident: &str) -> Option<&Symbol> {
        self.by_ident.get(ident).map(|&i| &self.entries[i])
    }

    pub fn by_code(&self, code: u32) -> Option<&Symbol> {
        self.by_code.get(&code).map(|&i| &self.entries[i])
    }

    pub fn node(&self, id: &str) -> Option<&Symbol> {
        self.by_node.get(id).map(|&i| &self.entries[i])
    }

    pub fn flow(&self, id: &str) -> Option<&Symbol> {
        self.by_flow.get(id).map(|&i| &self.entries[i])
    }

    /// `<bpmn-id> <promela-identifier> <code>` per line; ids that are not
    /// bare words are quoted.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.entries {
            let _ = writeln!(out, "{} {} {}", lex::ident(&s.bpmn_id), s.ident, s.code);
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<SymbolTable, SymbolParseError> {
        let mut table = SymbolTable::default();
        let toks = lex::tokenize(text, true).map_err(|(line, message)| SymbolParseError { line, message })?;
        let stmts = lex::statements(toks).map_err(|(line, message)| SymbolParseError { line, message })?;
        for stmt in stmts {
            let line = stmt[0].line;
            let err = |message: &str| SymbolParseError { line, message: message.to_string() };
            let words: Vec<String> = stmt
                .iter()
                .map(|t| match &t.tok {
                    lex::Tok::Word(w) | lex::Tok::Str(w) => Ok(w.clone()),
                    _ => Err(err("unexpected punctuation")),
                })
                .collect::<Result<_, _>>()?;
            let [id, ident, code] = &words[..] else {
                return Err(err("expected '<bpmn-id> <identifier> <code>'"));
            };
            let code: u32 = code.parse().map_err(|_| err("code is not a number"))?;
            let kind = if ident.starts_with("tok_") {
                SymbolKind::Flow
            } else if ident.starts_with("fired_") {
                SymbolKind::Node
            } else {
                return Err(err("identifier must start with tok_ or fired_"));
            };
            if table.by_ident.contains_key(ident) || table.by_code.contains_key(&code) {
                return Err(err("duplicate identifier or code"));
            }
            table.push(Symbol { bpmn_id: id.clone(), ident: ident.clone(), code, kind });
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromelaProgram {
    pub source: String,
    pub symbols: SymbolTable,
    /// Names of the emitted `ltl` blocks, in emission order.
    pub property_names: Vec<String>,
    /// `(property, ltl block name)`; `None` for properties carried by the
    /// final assert (deadlock freedom) or with no block (dead activities).
    pub property_blocks: Vec<(Property, Option<String>)>,
    pub bound: u8,
}

impl PromelaProgram {
    pub fn block_for(&self, p: &Property) -> Option<&str> {
        self.property_blocks.iter().find(|(q, _)| q == p).and_then(|(_, b)| b.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("model must pass validation before translation ({} violation(s))", .0.len())]
    ValidationRequired(Vec<Violation>),
    #[error("property refers to unknown node '{0}'")]
    UnknownPropertyTarget(String),
    #[error("token bound must be at least 1")]
    InvalidBound,
}

pub fn translate(model: &WorkflowModel, properties: &[Property]) -> Result<PromelaProgram, CodegenError> {
    translate_with_bound(model, properties, DEFAULT_BOUND)
}

pub fn translate_with_bound(model: &WorkflowModel, properties: &[Property], bound: u8) -> Result<PromelaProgram, CodegenError> {
    if bound == 0 {
        return Err(CodegenError::InvalidBound);
    }
    let net = match Net::new(model) {
        Ok(n) => n,
        Err(NetError::NotWellFormed(v)) => return Err(CodegenError::ValidationRequired(v)),
        Err(NetError::InvalidBound) => return Err(CodegenError::InvalidBound),
    };
    for p in properties {
        for t in p.targets() {
            if model.node(t).is_none() {
                return Err(CodegenError::UnknownPropertyTarget(t.to_string()));
            }
        }
    }

    // symbols
    let mut table = SymbolTable::default();
    let mut node_names: Vec<String> = Vec::with_capacity(model.nodes.len());
    let mut taken = HashSet::new();
    for (i, node) in model.nodes.values().enumerate() {
        let code = 1 + i as u32;
        let base = sanitize_name(node.display_name(), &taken, code);
        taken.insert(base.clone());
        table.push(Symbol { bpmn_id: node.id.clone(), ident: format!("fired_{base}"), code, kind: SymbolKind::Node });
        node_names.push(base);
    }
    let mut flow_vars: Vec<String> = Vec::with_capacity(model.flows.len());
    let mut taken = HashSet::new();
    for (i, flow) in model.flows.iter().enumerate() {
        let code = 1 + (model.nodes.len() + i) as u32;
        let base = sanitize_name(&flow.id, &taken, code);
        taken.insert(base.clone());
        let var = format!("tok_{base}");
        table.push(Symbol { bpmn_id: flow.id.clone(), ident: var.clone(), code, kind: SymbolKind::Flow });
        flow_vars.push(var);
    }
    let node_name = |id: &str| node_names[model.nodes.get_index_of(id).expect("checked")].as_str();

    let mut src = String::new();
    let w = &mut src;
    let _ = writeln!(w, "/*");
    let _ = writeln!(
        w,
        " * Workflow model: {} ({})",
        comment_safe(if model.name.is_empty() { &model.id } else { &model.name }),
        comment_safe(&model.id)
    );
    let _ = writeln!(w, " * Generated by bpmn-verify; one do-arm per firing rule.");
    let _ = writeln!(w, " */");
    let _ = writeln!(w);
    let _ = writeln!(w, "#define BOUND {bound}");
    let _ = writeln!(w);
    let _ = writeln!(w, "/* tokens on sequence flows */");
    for v in &flow_vars {
        let _ = writeln!(w, "byte {v};");
    }
    let _ = writeln!(w);
    let _ = writeln!(w, "/* end events fired (saturates at {COMPLETED_CAP}) */");
    let _ = writeln!(w, "byte completed;");
    let _ = writeln!(w);
    let code_type = if model.nodes.len() <= u8::MAX as usize { "byte" } else { "short" };
    let _ = writeln!(w, "/* code of the last fired node; 0 = nothing fired yet */");
    let _ = writeln!(w, "{code_type} lastFired;");
    let referenced: HashSet<&str> = properties.iter().flat_map(|p| p.targets()).collect();
    for (i, node) in model.nodes.values().enumerate() {
        if matches!(node.kind, NodeKind::Task | NodeKind::EndEvent) || referenced.contains(node.id.as_str()) {
            let _ = writeln!(w, "#define fired_{} (lastFired == {})", node_names[i], i + 1);
        }
    }

    // requirements
    let mut blocks: Vec<(Property, Option<String>)> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut taken_blocks: HashSet<String> = HashSet::new();
    let mut ltl = String::new();
    for p in properties {
        if blocks.iter().any(|(q, _)| q == p) {
            continue;
        }
        let fired = |id: &str| format!("fired_{}", node_name(id));
        let (raw_name, formula) = match p {
            Property::DeadlockFree | Property::NoDeadActivity => {
                blocks.push((p.clone(), None));
                continue;
            }
            Property::ProperCompletion => ("complete".to_string(), "<> (completed > 0)".to_string()),
            Property::Reachable(n) => (format!("reach_{}", node_name(n)), format!("<> {}", fired(n))),
            Property::NeverFires(n) => (format!("never_{}", node_name(n)), format!("[] !{}", fired(n))),
            Property::Precedence { first, then } => (
                format!("prec_{}_{}", node_name(first), node_name(then)),
                format!("([] !{b}) || (!{b} U {a})", a = fired(first), b = fired(then)),
            ),
            Property::Response { trigger, response } => (
                format!("resp_{}_{}", node_name(trigger), node_name(response)),
                format!("[] ({} -> <> {})", fired(trigger), fired(response)),
            ),
            Property::RawLtl { name, formula } => (name.clone(), formula.clone()),
        };
        let name = sanitize_name(&raw_name, &taken_blocks, names.len() as u32 + 1);
        taken_blocks.insert(name.clone());
        let _ = writeln!(ltl, "/* {} */", comment_safe(&p.flag()));
        let _ = writeln!(ltl, "ltl {name} {{ {formula} }}");
        names.push(name.clone());
        blocks.push((p.clone(), Some(name)));
    }
    if !ltl.is_empty() {
        let _ = writeln!(w);
        let _ = writeln!(w, "/* requirements */");
        w.push_str(&ltl);
    }

    // process
    let _ = writeln!(w);
    let _ = writeln!(w, "active proctype Workflow()");
    let _ = writeln!(w, "{{");
    let _ = writeln!(w, "  /* start events put one token on their outgoing flow */");
    let _ = writeln!(w, "  atomic {{");
    let init: Vec<String> =
        net.initial_marking().tokens().iter().enumerate().filter(|(_, &t)| t > 0).map(|(f, t)| format!("{} = {t}", flow_vars[f])).collect();
    write_stmts(w, "    ", &init);
    let _ = writeln!(w, "  }};");
    let _ = writeln!(w, "  do");
    for (ni, node) in model.nodes.values().enumerate() {
        let inputs = net.inputs(ni);
        let outputs = net.outputs(ni);
        let code = ni + 1;
        let label = format!("{} {}", node.kind.label(), comment_safe(node.display_name()));
        let produce = |out: &[usize], stmts: &mut Vec<String>| {
            for &o in out {
                stmts.push(format!("assert({} < BOUND)", flow_vars[o]));
                stmts.push(format!("{}++", flow_vars[o]));
            }
        };
        let mut arms: Vec<(String, String, Vec<String>)> = Vec::new();
        match node.kind {
            NodeKind::StartEvent => {}
            NodeKind::AND_JOIN => {
                let guard = inputs.iter().map(|&i| format!("{} > 0", flow_vars[i])).collect::<Vec<_>>().join(" && ");
                let mut s: Vec<String> = inputs.iter().map(|&i| format!("{}--", flow_vars[i])).collect();
                produce(outputs, &mut s);
                arms.push((label.clone(), guard, s));
            }
            NodeKind::XOR_SPLIT if outputs.len() > 1 => {
                let i = inputs[0];
                for &o in outputs {
                    let mut s = vec![format!("{}--", flow_vars[i])];
                    produce(&[o], &mut s);
                    arms.push((format!("{label} (to {})", comment_safe(&model.flows[o].id)), format!("{} > 0", flow_vars[i]), s));
                }
            }
            _ => {
                let choices: Vec<usize> = inputs.to_vec();
                for &i in &choices {
                    let mut s = vec![format!("{}--", flow_vars[i])];
                    if node.kind == NodeKind::EndEvent {
                        s.push(format!("completed = (completed < {COMPLETED_CAP} -> completed + 1 : {COMPLETED_CAP})"));
                    } else if node.kind == NodeKind::XOR_SPLIT {
                        produce(&outputs[..outputs.len().min(1)], &mut s);
                    } else {
                        produce(outputs, &mut s);
                    }
                    let l = if choices.len() > 1 { format!("{label} (from {})", comment_safe(&model.flows[i].id)) } else { label.clone() };
                    arms.push((l, format!("{} > 0", flow_vars[i]), s));
                }
            }
        }
        for (comment, guard, mut stmts) in arms {
            stmts.push(format!("lastFired = {code}"));
            let _ = writeln!(w, "  /* {comment} */");
            let _ = writeln!(w, "  :: atomic {{");
            let _ = writeln!(w, "      {guard} ->");
            write_stmts(w, "      ", &stmts);
            let _ = writeln!(w, "    }}");
        }
    }
    let _ = writeln!(w, "  :: else -> break");
    let _ = writeln!(w, "  od;");
    let _ = writeln!(w, "  /* proper completion: no tokens left and an end event fired */");
    let mut done: Vec<String> = flow_vars.iter().map(|v| format!("{v} == 0")).collect();
    done.push("completed > 0".into());
    let _ = writeln!(w, "  assert({})", done.join(" && "));
    let _ = writeln!(w, "}}");

    Ok(PromelaProgram { source: src, symbols: table, property_names: names, property_blocks: blocks, bound })
}

fn write_stmts(w: &mut String, indent: &str, stmts: &[String]) {
    for (i, s) in stmts.iter().enumerate() {
        let sep = if i + 1 < stmts.len() { ";" } else { "" };
        let _ = writeln!(w, "{indent}{s}{sep}");
    }
}

fn comment_safe(s: &str) -> String {
    s.replace("*/", "* /").replace("/*", "/ *").replace(['\n', '\r'], " ")
}
