//! Formal intermediate representation of a BPMN workflow and its
//! well-formedness rules.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GatewayLogic {
    Exclusive,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GatewayDirection {
    Diverging,
    Converging,
}

/// The element vocabulary: events, tasks and the four gateway flavours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    StartEvent,
    EndEvent,
    Task,
    Gateway { logic: GatewayLogic, direction: GatewayDirection },
}

impl NodeKind {
    pub const XOR_SPLIT: NodeKind = NodeKind::Gateway { logic: GatewayLogic::Exclusive, direction: GatewayDirection::Diverging };
    pub const XOR_JOIN: NodeKind = NodeKind::Gateway { logic: GatewayLogic::Exclusive, direction: GatewayDirection::Converging };
    pub const AND_SPLIT: NodeKind = NodeKind::Gateway { logic: GatewayLogic::Parallel, direction: GatewayDirection::Diverging };
    pub const AND_JOIN: NodeKind = NodeKind::Gateway { logic: GatewayLogic::Parallel, direction: GatewayDirection::Converging };

    /// Keyword used by the DSL and the patch format.
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::StartEvent => "start",
            NodeKind::EndEvent => "end",
            NodeKind::Task => "task",
            NodeKind::XOR_SPLIT => "xor-split",
            NodeKind::XOR_JOIN => "xor-join",
            NodeKind::AND_SPLIT => "and-split",
            NodeKind::AND_JOIN => "and-join",
        }
    }

    pub fn from_keyword(word: &str) -> Option<NodeKind> {
        Some(match word {
            "start" => NodeKind::StartEvent,
            "end" => NodeKind::EndEvent,
            "task" => NodeKind::Task,
            "xor-split" => NodeKind::XOR_SPLIT,
            "xor-join" => NodeKind::XOR_JOIN,
            "and-split" => NodeKind::AND_SPLIT,
            "and-join" => NodeKind::AND_JOIN,
            _ => return None,
        })
    }

    /// Human label used in reports and generated comments.
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::StartEvent => "StartEvent",
            NodeKind::EndEvent => "EndEvent",
            NodeKind::Task => "Task",
            NodeKind::XOR_SPLIT => "ExclusiveSplit",
            NodeKind::XOR_JOIN => "ExclusiveJoin",
            NodeKind::AND_SPLIT => "ParallelSplit",
            NodeKind::AND_JOIN => "ParallelJoin",
        }
    }

    pub fn is_gateway(self) -> bool {
        matches!(self, NodeKind::Gateway { .. })
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
}

impl FlowNode {
    pub fn new(id: impl Into<String>, name: impl Into<String>, kind: NodeKind) -> Self {
        FlowNode { id: id.into(), name: name.into(), kind }
    }

    /// The name if present, otherwise the id.
    pub fn display_name(&self) -> &str {
        if self.name.is_empty() {
            &self.id
        } else {
            &self.name
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequenceFlow {
    pub id: String,
    pub source: String,
    pub target: String,
}

impl SequenceFlow {
    pub fn new(id: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        SequenceFlow { id: id.into(), source: source.into(), target: target.into() }
    }

    /// Flow id used when none is given explicitly: `<src>__<tgt>`.
    pub fn default_id(source: &str, target: &str) -> String {
        format!("{source}__{target}")
    }
}

/// A workflow graph. Node order and flow order are both canonical: they
/// follow the source document and drive every deterministic output.
#[derive(Debug, Clone, Default)]
pub struct WorkflowModel {
    pub id: String,
    pub name: String,
    pub nodes: IndexMap<String, FlowNode>,
    pub flows: Vec<SequenceFlow>,
}

// IndexMap equality ignores order; models compare order-sensitively.
impl PartialEq for WorkflowModel {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.name == other.name
            && self.nodes.len() == other.nodes.len()
            && self.nodes.values().eq(other.nodes.values())
            && self.flows == other.flows
    }
}

impl Eq for WorkflowModel {}

impl WorkflowModel {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        WorkflowModel { id: id.into(), name: name.into(), ..Default::default() }
    }

    /// Inserts a node, replacing any node with the same id in place.
    pub fn add_node(&mut self, node: FlowNode) {
        self.nodes.insert(node.id.clone(), node);
    }

    pub fn add_flow(&mut self, flow: SequenceFlow) {
        self.flows.push(flow);
    }

    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.get(id)
    }

    pub fn flow(&self, id: &str) -> Option<&SequenceFlow> {
        self.flows.iter().find(|f| f.id == id)
    }

    pub fn incoming<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.flows.iter().filter(move |f| f.target == node)
    }

    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a SequenceFlow> + 'a {
        self.flows.iter().filter(move |f| f.source == node)
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &FlowNode> + '_ {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    /// Structural well-formedness check; violations are data, not errors.
    pub fn validate(&self) -> Vec<Violation> {
        validate_wellformed(self)
    }

    pub fn is_wellformed(&self) -> bool {
        validate_wellformed(self).is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    MissingStart,
    MissingEnd,
    BadDegree,
    Unreachable,
    DuplicateId,
    DanglingFlow,
    MixedGateway,
}

impl ViolationCode {
    /// Whether `subject` names a flow (otherwise a node, or the model for
    /// MissingStart/MissingEnd).
    pub fn subject_is_flow(self) -> bool {
        matches!(self, ViolationCode::DuplicateId | ViolationCode::DanglingFlow)
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}): {}", self.code, self.subject, self.message)
    }
}

/// Checks every structural invariant of [`WorkflowModel`].
///
/// The result is ordered by the subject's canonical position (model-level
/// violations first, then nodes in node order, then flows in flow order)
/// and then by code.
pub fn validate_wellformed(model: &WorkflowModel) -> Vec<Violation> {
    // (rank, code) -> violation; rank encodes the subject's canonical position
    let mut found: Vec<((usize, ViolationCode), Violation)> = Vec::new();
    let flow_rank = |i: usize| 1 + model.nodes.len() + i;
    let mut push = |rank: usize, code: ViolationCode, subject: &str, message: String| {
        found.push(((rank, code), Violation { code, subject: subject.to_string(), message }));
    };

    if model.nodes_of_kind(NodeKind::StartEvent).next().is_none() {
        push(0, ViolationCode::MissingStart, &model.id, "model has no start event".into());
    }
    if model.nodes_of_kind(NodeKind::EndEvent).next().is_none() {
        push(0, ViolationCode::MissingEnd, &model.id, "model has no end event".into());
    }

    // flow-level checks
    let mut seen_ids: HashSet<&str> = HashSet::new();
    let mut seen_pairs: HashSet<(&str, &str)> = HashSet::new();
    for (i, flow) in model.flows.iter().enumerate() {
        let rank = flow_rank(i);
        if flow.id.is_empty() {
            push(rank, ViolationCode::DuplicateId, &flow.id, "flow id is empty".into());
        } else if !seen_ids.insert(flow.id.as_str()) {
            push(rank, ViolationCode::DuplicateId, &flow.id, format!("flow id '{}' is used more than once", flow.id));
        } else if model.nodes.contains_key(&flow.id) {
            push(rank, ViolationCode::DuplicateId, &flow.id, format!("flow id '{}' is also a node id", flow.id));
        } else if !seen_pairs.insert((flow.source.as_str(), flow.target.as_str())) {
            push(
                rank,
                ViolationCode::DuplicateId,
                &flow.id,
                format!("another flow already connects '{}' -> '{}'", flow.source, flow.target),
            );
        }
        for end in [&flow.source, &flow.target] {
            if !model.nodes.contains_key(end.as_str()) {
                push(rank, ViolationCode::DanglingFlow, &flow.id, format!("flow references unknown node '{end}'"));
            }
        }
    }

    // node-level checks
    let mut ins: HashMap<&str, usize> = HashMap::new();
    let mut outs: HashMap<&str, usize> = HashMap::new();
    for flow in &model.flows {
        *outs.entry(flow.source.as_str()).or_default() += 1;
        *ins.entry(flow.target.as_str()).or_default() += 1;
    }
    for (i, node) in model.nodes.values().enumerate() {
        let rank = 1 + i;
        let din = ins.get(node.id.as_str()).copied().unwrap_or(0);
        let dout = outs.get(node.id.as_str()).copied().unwrap_or(0);
        let ok = match node.kind {
            NodeKind::StartEvent => din == 0 && dout == 1,
            NodeKind::EndEvent => din >= 1 && dout == 0,
            NodeKind::Task => din == 1 && dout == 1,
            NodeKind::Gateway { .. } if din >= 2 && dout >= 2 => {
                push(rank, ViolationCode::MixedGateway, &node.id, format!("gateway has {din} incoming and {dout} outgoing flows"));
                continue;
            }
            NodeKind::Gateway { direction: GatewayDirection::Diverging, .. } => din == 1 && dout >= 2,
            NodeKind::Gateway { direction: GatewayDirection::Converging, .. } => din >= 2 && dout == 1,
        };
        if !ok {
            push(
                rank,
                ViolationCode::BadDegree,
                &node.id,
                format!("{} has in-degree {din} and out-degree {dout} ({})", node.kind, degree_rule(node.kind)),
            );
        }
    }

    // path coverage: reachable from a start, and (for non-starts) co-reachable to an end
    let forward = reach(model, model.nodes_of_kind(NodeKind::StartEvent).map(|n| n.id.as_str()), false);
    let backward = reach(model, model.nodes_of_kind(NodeKind::EndEvent).map(|n| n.id.as_str()), true);
    for (i, node) in model.nodes.values().enumerate() {
        if node.kind == NodeKind::StartEvent {
            continue;
        }
        let message = if !forward.contains(node.id.as_str()) {
            "not reachable from any start event"
        } else if !backward.contains(node.id.as_str()) {
            "cannot reach any end event"
        } else {
            continue;
        };
        push(1 + i, ViolationCode::Unreachable, &node.id, message.into());
    }

    found.sort_by_key(|a| a.0);
    found.dedup_by(|a, b| a.0 == b.0 && a.1.subject == b.1.subject);
    found.into_iter().map(|(_, v)| v).collect()
}

fn degree_rule(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::StartEvent => "expected in=0, out=1",
        NodeKind::EndEvent => "expected in>=1, out=0",
        NodeKind::Task => "expected in=1, out=1",
        NodeKind::Gateway { direction: GatewayDirection::Diverging, .. } => "expected in=1, out>=2",
        NodeKind::Gateway { direction: GatewayDirection::Converging, .. } => "expected in>=2, out=1",
    }
}

fn reach<'a>(model: &'a WorkflowModel, roots: impl Iterator<Item = &'a str>, reverse: bool) -> BTreeSet<&'a str> {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    for r in roots {
        if seen.insert(r) {
            queue.push_back(r);
        }
    }
    while let Some(n) = queue.pop_front() {
        for f in &model.flows {
            let (from, to) = if reverse { (f.target.as_str(), f.source.as_str()) } else { (f.source.as_str(), f.target.as_str()) };
            if from == n && model.nodes.contains_key(to) && seen.insert(to) {
                queue.push_back(to);
            }
        }
    }
    seen
}
