//! Token-game execution semantics and bounded state-space construction.
//!
//! A [`Marking`] counts tokens per sequence flow (in canonical flow order)
//! and how many times an end event has fired. Start events never fire:
//! their outgoing flows simply hold one token in the initial marking.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{GatewayDirection, GatewayLogic, NodeKind, Violation, WorkflowModel};

/// Default per-flow token bound.
pub const DEFAULT_BOUND: u8 = 2;

/// `completed` saturates here (the width of a Promela `byte`), which keeps
/// the state space finite for models that complete infinitely often.
pub const COMPLETED_CAP: u8 = u8::MAX;

// Frontiers smaller than this are expanded on the calling thread.
#[cfg(feature = "parallel")]
const PAR_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking {
    tokens: Vec<u8>,
    completed: u8,
}

impl Marking {
    pub fn new(tokens: Vec<u8>, completed: u8) -> Self {
        Marking { tokens, completed }
    }

    pub fn tokens(&self) -> &[u8] {
        &self.tokens
    }

    pub fn count(&self, flow: usize) -> u8 {
        self.tokens[flow]
    }

    pub fn completed(&self) -> u8 {
        self.completed
    }

    pub fn total_tokens(&self) -> u32 {
        self.tokens.iter().map(|&t| t as u32).sum()
    }

    pub fn has_tokens(&self) -> bool {
        self.tokens.iter().any(|&t| t > 0)
    }

    /// No tokens left and at least one end event fired.
    pub fn is_properly_completed(&self) -> bool {
        !self.has_tokens() && self.completed > 0
    }
}

/// One firing rule instance: a node plus, where the node offers a choice,
/// the chosen flow (input flow for exclusive joins and multi-input end
/// events, output flow for exclusive splits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Firing {
    pub node: usize,
    pub selector: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FireError {
    #[error("node '{0}' is not enabled")]
    NotEnabled(String),
    #[error("node '{0}' needs an alternative selector")]
    MissingSelector(String),
    #[error("flow '{flow}' is not a valid alternative for node '{node}'")]
    InvalidSelector { node: String, flow: String },
    #[error("token bound exceeded on flow '{0}'")]
    BoundExceeded(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("unknown flow '{0}'")]
    UnknownFlow(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("model is not well-formed ({} violation(s))", .0.len())]
    NotWellFormed(Vec<Violation>),
    #[error("token bound must be at least 1")]
    InvalidBound,
}

#[derive(Debug, Clone)]
struct NodeInfo {
    kind: NodeKind,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl NodeInfo {
    fn needs_selector(&self) -> bool {
        match self.kind {
            NodeKind::XOR_SPLIT => self.outputs.len() > 1,
            NodeKind::Task | NodeKind::EndEvent | NodeKind::XOR_JOIN => self.inputs.len() > 1,
            _ => false,
        }
    }
}

/// A well-formed model compiled to index form.
#[derive(Debug, Clone)]
pub struct Net {
    model: WorkflowModel,
    nodes: Vec<NodeInfo>,
    flow_index: HashMap<String, usize>,
    initial: Marking,
}

impl Net {
    pub fn new(model: &WorkflowModel) -> Result<Net, NetError> {
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(NetError::NotWellFormed(violations));
        }
        let flow_index: HashMap<String, usize> = model.flows.iter().enumerate().map(|(i, f)| (f.id.clone(), i)).collect();
        let mut nodes: Vec<NodeInfo> =
            model.nodes.values().map(|n| NodeInfo { kind: n.kind, inputs: Vec::new(), outputs: Vec::new() }).collect();
        for (i, f) in model.flows.iter().enumerate() {
            nodes[model.nodes.get_index_of(&f.source).expect("validated")].outputs.push(i);
            nodes[model.nodes.get_index_of(&f.target).expect("validated")].inputs.push(i);
        }
        let mut tokens = vec![0u8; model.flows.len()];
        for n in nodes.iter().filter(|n| n.kind == NodeKind::StartEvent) {
            for &o in &n.outputs {
                tokens[o] = 1;
            }
        }
        Ok(Net { model: model.clone(), nodes, flow_index, initial: Marking::new(tokens, 0) })
    }

    pub fn model(&self) -> &WorkflowModel {
        &self.model
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn flow_count(&self) -> usize {
        self.model.flows.len()
    }

    pub fn node_id(&self, node: usize) -> &str {
        &self.model.nodes[node].id
    }

    pub fn node_kind(&self, node: usize) -> NodeKind {
        self.nodes[node].kind
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.model.nodes.get_index_of(id)
    }

    pub fn flow_id(&self, flow: usize) -> &str {
        &self.model.flows[flow].id
    }

    pub fn flow_index(&self, id: &str) -> Option<usize> {
        self.flow_index.get(id).copied()
    }

    pub fn inputs(&self, node: usize) -> &[usize] {
        &self.nodes[node].inputs
    }

    pub fn outputs(&self, node: usize) -> &[usize] {
        &self.nodes[node].outputs
    }

    /// One token on the outgoing flow of every start event.
    pub fn initial_marking(&self) -> Marking {
        self.initial.clone()
    }

    /// Every enabled (node, alternative) pair in canonical order: nodes in
    /// node order, alternatives in flow order.
    pub fn firings(&self, m: &Marking) -> Vec<Firing> {
        let mut out = Vec::new();
        for node in 0..self.nodes.len() {
            self.push_firings(node, m, &mut out);
        }
        out
    }

    fn push_firings(&self, node: usize, m: &Marking, out: &mut Vec<Firing>) {
        let info = &self.nodes[node];
        let marked = |f: &usize| m.tokens[*f] > 0;
        match info.kind {
            NodeKind::StartEvent => {}
            NodeKind::Gateway { logic: GatewayLogic::Parallel, direction: GatewayDirection::Converging } => {
                if !info.inputs.is_empty() && info.inputs.iter().all(marked) {
                    out.push(Firing { node, selector: None });
                }
            }
            NodeKind::XOR_SPLIT => {
                if info.inputs.iter().any(marked) {
                    if info.needs_selector() {
                        out.extend(info.outputs.iter().map(|&o| Firing { node, selector: Some(o) }));
                    } else {
                        out.push(Firing { node, selector: None });
                    }
                }
            }
            _ => {
                if info.needs_selector() {
                    out.extend(info.inputs.iter().filter(|f| marked(f)).map(|&i| Firing { node, selector: Some(i) }));
                } else if info.inputs.iter().any(marked) {
                    out.push(Firing { node, selector: None });
                }
            }
        }
    }

    /// Enabled nodes in canonical node order.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        let mut buf = Vec::new();
        (0..self.nodes.len())
            .filter(|&n| {
                buf.clear();
                self.push_firings(n, m, &mut buf);
                !buf.is_empty()
            })
            .collect()
    }

    pub fn enabled_ids(&self, m: &Marking) -> Vec<&str> {
        self.enabled(m).into_iter().map(|n| self.node_id(n)).collect()
    }

    pub fn is_terminal(&self, m: &Marking) -> bool {
        self.enabled(m).is_empty()
    }

    /// Fires `node` (with `selector` where the node offers a choice).
    pub fn fire(&self, m: &Marking, node: usize, selector: Option<usize>, bound: u8) -> Result<Marking, FireError> {
        let info = &self.nodes[node];
        let mut alts = Vec::new();
        self.push_firings(node, m, &mut alts);
        let id = || self.node_id(node).to_string();
        if alts.is_empty() {
            return Err(FireError::NotEnabled(id()));
        }
        match selector {
            None if info.needs_selector() => return Err(FireError::MissingSelector(id())),
            None => {}
            Some(sel) => {
                let candidates = if info.kind == NodeKind::XOR_SPLIT { &info.outputs } else { &info.inputs };
                if !info.needs_selector() || !candidates.contains(&sel) {
                    return Err(FireError::InvalidSelector {
                        node: id(),
                        flow: self.model.flows.get(sel).map(|f| f.id.clone()).unwrap_or_else(|| sel.to_string()),
                    });
                }
                if !alts.iter().any(|a| a.selector == Some(sel)) {
                    return Err(FireError::NotEnabled(id()));
                }
            }
        }
        self.apply(m, Firing { node, selector }, bound).map_err(|flow| FireError::BoundExceeded(self.flow_id(flow).to_string()))
    }

    /// Same as [`Net::fire`], addressing node and selector by id.
    pub fn fire_by_id(&self, m: &Marking, node: &str, selector: Option<&str>, bound: u8) -> Result<Marking, FireError> {
        let n = self.node_index(node).ok_or_else(|| FireError::UnknownNode(node.to_string()))?;
        let s = match selector {
            Some(f) => Some(self.flow_index(f).ok_or_else(|| FireError::UnknownFlow(f.to_string()))?),
            None => None,
        };
        self.fire(m, n, s, bound)
    }

    /// Applies an enabled firing; `Err(flow)` when that flow would exceed
    /// the bound.
    fn apply(&self, m: &Marking, firing: Firing, bound: u8) -> Result<Marking, usize> {
        let info = &self.nodes[firing.node];
        let mut next = m.clone();
        let take_one = |next: &mut Marking, sel: Option<usize>| {
            let f = sel
                .filter(|_| info.kind != NodeKind::XOR_SPLIT)
                .or_else(|| info.inputs.iter().copied().find(|&f| next.tokens[f] > 0))
                .expect("enabled firing");
            next.tokens[f] -= 1;
        };
        match info.kind {
            NodeKind::AND_JOIN => {
                for &f in &info.inputs {
                    next.tokens[f] -= 1;
                }
            }
            NodeKind::StartEvent => unreachable!("start events never fire"),
            _ => take_one(&mut next, firing.selector),
        }
        let produce: &[usize] = match info.kind {
            NodeKind::EndEvent => {
                // saturates at COMPLETED_CAP
                next.completed = next.completed.saturating_add(1);
                &[]
            }
            NodeKind::XOR_SPLIT => match firing.selector {
                Some(ref o) => std::slice::from_ref(o),
                None => &info.outputs[..info.outputs.len().min(1)],
            },
            _ => &info.outputs,
        };
        for &f in produce {
            if next.tokens[f] >= bound {
                return Err(f);
            }
            next.tokens[f] += 1;
        }
        Ok(next)
    }

    /// `{f1:1, f2:1} completed=0`, listing only marked flows.
    pub fn format_marking(&self, m: &Marking) -> String {
        let mut s = String::from("{");
        let mut first = true;
        for (i, &t) in m.tokens.iter().enumerate() {
            if t > 0 {
                if !first {
                    s.push_str(", ");
                }
                first = false;
                let _ = write!(s, "{}:{}", self.flow_id(i), t);
            }
        }
        let _ = write!(s, "}} completed={}", m.completed);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub firing: Firing,
    pub to: usize,
}

/// The reachable marking graph, in breadth-first discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateGraph {
    pub states: Vec<Marking>,
    /// Sorted by source state, then by canonical firing order.
    pub edges: Vec<Edge>,
    pub initial: usize,
    /// Some firing was cut off by the bound somewhere.
    pub bound_exceeded: bool,
    pub bound: u8,
    /// Per state: nothing is enabled.
    pub terminal: Vec<bool>,
    /// Per state: at least one enabled firing exceeded the bound.
    pub pruned: Vec<bool>,
    /// Per state: the edge that first discovered it.
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    out_start: Vec<usize>,
}

impl StateGraph {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edges of `state`, in canonical firing order.
    pub fn successors(&self, state: usize) -> &[Edge] {
        &self.edges[self.out_edges(state)]
    }

    /// Index range of the outgoing edges of `state` within `edges`.
    pub fn out_edges(&self, state: usize) -> std::ops::Range<usize> {
        self.out_start[state]..self.out_start[state + 1]
    }

    /// Edge indices of the BFS-tree path from the initial state.
    pub fn path_to(&self, state: usize) -> Vec<usize> {
        let mut path = Vec::new();
        let mut cur = state;
        while let Some(e) = self.parent[cur] {
            path.push(e);
            cur = self.edges[e].from;
        }
        path.reverse();
        path
    }

    pub fn edge_index(&self, edge: &Edge) -> usize {
        let base = self.out_start[edge.from];
        base + self.successors(edge.from).iter().position(|e| e == edge).expect("edge belongs to graph")
    }

    /// Debug dump: `state <idx> <marking>` lines, then `edge <from>
    /// <node-id> <to>` lines, both sorted.
    pub fn export_text(&self, net: &Net) -> String {
        let mut out = String::new();
        for (i, m) in self.states.iter().enumerate() {
            let _ = writeln!(out, "state {i} {}", net.format_marking(m));
        }
        let mut edges: Vec<(usize, &str, usize)> = self.edges.iter().map(|e| (e.from, net.node_id(e.firing.node), e.to)).collect();
        edges.sort();
        for (from, node, to) in edges {
            let _ = writeln!(out, "edge {from} {} {to}", crate::ingest::lex::ident(node));
        }
        out
    }
}

struct Expansion {
    terminal: bool,
    succ: Vec<(Firing, Result<Marking, usize>)>,
}

fn expand(net: &Net, m: &Marking, bound: u8) -> Expansion {
    let firings = net.firings(m);
    Expansion { terminal: firings.is_empty(), succ: firings.into_iter().map(|f| (f, net.apply(m, f, bound))).collect() }
}

/// Breadth-first exploration from the initial marking. Firings that would
/// exceed `bound` are pruned and flagged; exploration continues elsewhere.
/// Uses the parallel frontier expansion when the `parallel` feature is on.
pub fn explore(net: &Net, bound: u8) -> StateGraph {
    #[cfg(feature = "parallel")]
    {
        explore_parallel(net, bound)
    }
    #[cfg(not(feature = "parallel"))]
    {
        explore_sequential(net, bound)
    }
}

pub fn explore_sequential(net: &Net, bound: u8) -> StateGraph {
    explore_with(net, bound, |states, frontier| frontier.iter().map(|&s| expand(net, &states[s], bound)).collect())
}

/// Expands each BFS level with rayon; merging stays sequential so the
/// result is identical to [`explore_sequential`].
#[cfg(feature = "parallel")]
pub fn explore_parallel(net: &Net, bound: u8) -> StateGraph {
    use rayon::prelude::*;
    explore_with(net, bound, |states, frontier| {
        if frontier.len() < PAR_THRESHOLD {
            frontier.iter().map(|&s| expand(net, &states[s], bound)).collect()
        } else {
            frontier.par_iter().map(|&s| expand(net, &states[s], bound)).collect()
        }
    })
}

fn explore_with<F>(net: &Net, bound: u8, expand_level: F) -> StateGraph
where
    F: Fn(&[Marking], &[usize]) -> Vec<Expansion>,
{
    assert!(bound >= 1, "token bound must be at least 1");
    let init = net.initial_marking();
    let mut index: HashMap<Marking, usize> = HashMap::new();
    index.insert(init.clone(), 0);
    let mut g = StateGraph {
        states: vec![init],
        edges: Vec::new(),
        initial: 0,
        bound_exceeded: false,
        bound,
        terminal: vec![false],
        pruned: vec![false],
        parent: vec![None],
        depth: vec![0],
        out_start: Vec::new(),
    };
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let expansions = expand_level(&g.states, &frontier);
        let mut next = Vec::new();
        for (&s, exp) in frontier.iter().zip(expansions) {
            g.terminal[s] = exp.terminal;
            for (firing, result) in exp.succ {
                match result {
                    Ok(m) => {
                        let edge_idx = g.edges.len();
                        let to = match index.get(&m) {
                            Some(&t) => t,
                            None => {
                                let t = g.states.len();
                                index.insert(m.clone(), t);
                                g.states.push(m);
                                g.terminal.push(false);
                                g.pruned.push(false);
                                g.parent.push(Some(edge_idx));
                                g.depth.push(g.depth[s] + 1);
                                next.push(t);
                                t
                            }
                        };
                        g.edges.push(Edge { from: s, firing, to });
                    }
                    Err(_) => {
                        g.pruned[s] = true;
                        g.bound_exceeded = true;
                    }
                }
            }
        }
        frontier = next;
    }
    let mut out_start = vec![0usize; g.states.len() + 1];
    for e in &g.edges {
        out_start[e.from + 1] += 1;
    }
    for i in 0..g.states.len() {
        out_start[i + 1] += out_start[i];
    }
    g.out_start = out_start;
    g
}

/// Convenience: compile and explore in one step.
pub fn explore_model(model: &WorkflowModel, bound: u8) -> Result<(Net, StateGraph), NetError> {
    if bound == 0 {
        return Err(NetError::InvalidBound);
    }
    let net = Net::new(model)?;
    let g = explore(&net, bound);
    Ok((net, g))
}
