//! Random workflow models.
//!
//! `structured` builds block-structured models (sequences, split/join
//! pairs, loops) whose split and join logic are drawn independently, so a
//! good share of them deadlock or lose synchronisation. `raw_graph` draws
//! arbitrary nodes and flows and is mostly ill-formed.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use bpmn_verify::model::{FlowNode, NodeKind, SequenceFlow, WorkflowModel};
use bpmn_verify::reconfig::{Patch, PatchOp};

const WORDS: &[&str] = &["Check", "Approve", "Ship", "Bill", "Review", "Archive", "Notify", "Pack", "do", "2nd try", "Prüfen", ""];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

struct Builder<'r> {
    rng: &'r mut StdRng,
    model: WorkflowModel,
    next: usize,
    budget: usize,
}

impl Builder<'_> {
    fn node(&mut self, kind: NodeKind) -> String {
        let prefix = match kind {
            NodeKind::StartEvent => "s",
            NodeKind::EndEvent => "e",
            NodeKind::Task => "t",
            _ => "g",
        };
        let id = format!("{prefix}{}", self.next);
        self.next += 1;
        let name = if kind == NodeKind::Task && self.rng.gen_bool(0.6) { WORDS.choose(self.rng).unwrap().to_string() } else { id.clone() };
        self.model.add_node(FlowNode::new(id.clone(), name, kind));
        self.budget = self.budget.saturating_sub(1);
        id
    }

    fn flow(&mut self, a: &str, b: &str) {
        let id = format!("f{}", self.model.flows.len());
        self.model.add_flow(SequenceFlow::new(id, a, b));
    }

    fn logic(&mut self, split: bool) -> NodeKind {
        match (self.rng.gen_bool(0.5), split) {
            (true, true) => NodeKind::XOR_SPLIT,
            (false, true) => NodeKind::AND_SPLIT,
            (true, false) => NodeKind::XOR_JOIN,
            (false, false) => NodeKind::AND_JOIN,
        }
    }

    /// Builds a block; returns (entry node, exit node).
    fn block(&mut self, depth: usize) -> (String, String) {
        let choice = if depth == 0 || self.budget < 4 { 0 } else { self.rng.gen_range(0..5) };
        match choice {
            1 => {
                let (a_in, a_out) = self.block(depth - 1);
                let (b_in, b_out) = self.block(depth - 1);
                self.flow(&a_out, &b_in);
                (a_in, b_out)
            }
            2 | 3 => {
                let split_kind = self.logic(true);
                // mostly matched pairs, sometimes mismatched
                let join_kind = if self.rng.gen_bool(0.7) {
                    if split_kind == NodeKind::XOR_SPLIT {
                        NodeKind::XOR_JOIN
                    } else {
                        NodeKind::AND_JOIN
                    }
                } else {
                    self.logic(false)
                };
                let split = self.node(split_kind);
                let join = self.node(join_kind);
                let branches = self.rng.gen_range(2..=3);
                let mut empty_used = false;
                for _ in 0..branches {
                    if !empty_used && self.rng.gen_bool(0.15) {
                        empty_used = true;
                        self.flow(&split, &join);
                    } else {
                        let (i, o) = self.block(depth - 1);
                        self.flow(&split, &i);
                        self.flow(&o, &join);
                    }
                }
                (split, join)
            }
            4 => {
                let join = self.node(NodeKind::XOR_JOIN);
                let (i, o) = self.block(depth - 1);
                let split = self.node(NodeKind::XOR_SPLIT);
                self.flow(&join, &i);
                self.flow(&o, &split);
                self.flow(&split, &join);
                (join, split)
            }
            _ => {
                let t = self.node(NodeKind::Task);
                (t.clone(), t)
            }
        }
    }
}

/// A well-formed, block-structured model.
pub fn structured(rng: &mut StdRng, depth: usize, budget: usize) -> WorkflowModel {
    let mut b = Builder { rng, model: WorkflowModel::new("random", ""), next: 0, budget };
    let (entry, exit) = b.block(depth);
    // one or two starts
    if b.rng.gen_bool(0.2) {
        let join_kind = b.logic(false);
        let join = b.node(join_kind);
        let s1 = b.node(NodeKind::StartEvent);
        let s2 = b.node(NodeKind::StartEvent);
        let t = b.node(NodeKind::Task);
        b.flow(&s1, &join);
        b.flow(&s2, &t);
        b.flow(&t, &join);
        b.flow(&join, &entry);
    } else {
        let s = b.node(NodeKind::StartEvent);
        b.flow(&s, &entry);
    }
    // one end, or a split into two ends
    if b.rng.gen_bool(0.2) {
        let split_kind = b.logic(true);
        let split = b.node(split_kind);
        let e1 = b.node(NodeKind::EndEvent);
        let e2 = b.node(NodeKind::EndEvent);
        b.flow(&exit, &split);
        b.flow(&split, &e1);
        b.flow(&split, &e2);
    } else {
        let e = b.node(NodeKind::EndEvent);
        b.flow(&exit, &e);
    }
    b.model
}

const KINDS: [NodeKind; 7] = [
    NodeKind::StartEvent,
    NodeKind::EndEvent,
    NodeKind::Task,
    NodeKind::XOR_SPLIT,
    NodeKind::XOR_JOIN,
    NodeKind::AND_SPLIT,
    NodeKind::AND_JOIN,
];

/// Arbitrary nodes and flows; flows may dangle, repeat or self-loop.
pub fn raw_graph(rng: &mut StdRng) -> WorkflowModel {
    let mut m = WorkflowModel::new("raw", "");
    let n = rng.gen_range(0..8);
    for i in 0..n {
        let kind = *KINDS.choose(rng).unwrap();
        m.add_node(FlowNode::new(format!("n{i}"), "", kind));
    }
    let flows = rng.gen_range(0..12);
    for i in 0..flows {
        let pick = |rng: &mut StdRng| format!("n{}", rng.gen_range(0..n.max(1) + 1));
        let (a, b) = (pick(rng), pick(rng));
        let id = if rng.gen_bool(0.1) { "dup".to_string() } else { format!("f{i}") };
        m.add_flow(SequenceFlow::new(id, a, b));
    }
    m
}

/// A short random patch over ids that mostly exist in `model`.
pub fn patch(rng: &mut StdRng, model: &WorkflowModel) -> Patch {
    let node_ids: Vec<String> = model.nodes.keys().cloned().chain(["ghost".to_string()]).collect();
    let flow_ids: Vec<String> = model.flows.iter().map(|f| f.id.clone()).chain(["nowhere".to_string()]).collect();
    let mut ops = Vec::new();
    for i in 0..rng.gen_range(0..5) {
        let node = node_ids.choose(rng).unwrap().clone();
        let other = node_ids.choose(rng).unwrap().clone();
        let flow = flow_ids.choose(rng).unwrap().clone();
        ops.push(match rng.gen_range(0..5) {
            0 => PatchOp::AddNode(FlowNode::new(format!("new{i}"), "", *KINDS.choose(rng).unwrap())),
            1 => PatchOp::RemoveNode(node),
            2 => PatchOp::AddFlow(SequenceFlow::new(format!("nf{i}"), node, other)),
            3 => PatchOp::RemoveFlow(flow),
            _ => PatchOp::RerouteFlow { id: flow, source: node, target: other },
        });
    }
    Patch { description: String::new(), ops }
}

/// Random byte-level damage to a text.
pub fn mutate_text(rng: &mut StdRng, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.gen_range(1..4) {
        if chars.is_empty() {
            break;
        }
        let i = rng.gen_range(0..chars.len());
        match rng.gen_range(0..3) {
            0 => {
                chars.remove(i);
            }
            1 => {
                let c = *['"', ';', '-', '>', ':', '<', '/', '\\', 'x', '\n'].choose(rng).unwrap();
                chars.insert(i, c);
            }
            _ => {
                let j = rng.gen_range(0..chars.len());
                chars.swap(i, j);
            }
        }
    }
    chars.into_iter().collect()
}
