//! Brute-force reference checker, written against the model directly (no
//! `Net`, no `StateGraph`). Markings are string-keyed maps; exploration is a
//! plain worklist; properties are decided by naive whole-graph searches.
//! It shares only the rules with the production checker, not the code.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use bpmn_verify::checker::{Property, VerdictStatus};
use bpmn_verify::model::{GatewayDirection, GatewayLogic, NodeKind, WorkflowModel};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OMarking {
    pub tokens: BTreeMap<String, u32>,
    pub completed: u32,
}

impl OMarking {
    pub fn has_tokens(&self) -> bool {
        self.tokens.values().any(|&t| t > 0)
    }

    /// Token count per flow in model flow order (for comparisons).
    pub fn vector(&self, model: &WorkflowModel) -> Vec<u32> {
        model.flows.iter().map(|f| self.tokens.get(&f.id).copied().unwrap_or(0)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct OTrans {
    pub node: String,
    pub alt: Option<String>,
    pub to: usize,
}

pub struct OracleGraph {
    pub states: Vec<OMarking>,
    pub succ: Vec<Vec<OTrans>>,
    pub terminal: Vec<bool>,
    pub pruned: bool,
}

const CAP: u32 = 255;

fn add(m: &mut OMarking, flow: &str, k: u32) -> bool {
    let e = m.tokens.entry(flow.to_string()).or_insert(0);
    if *e >= k {
        return false;
    }
    *e += 1;
    true
}

fn take(m: &mut OMarking, flow: &str) {
    let e = m.tokens.get_mut(flow).expect("marked");
    *e -= 1;
    if *e == 0 {
        m.tokens.remove(flow);
    }
}

/// Enabled transitions of `m`: `(node, alternative, Some(next) | None if
/// the bound cuts it)`.
pub fn transitions(model: &WorkflowModel, m: &OMarking, k: u32) -> Vec<(String, Option<String>, Option<OMarking>)> {
    let mut out = Vec::new();
    let marked = |f: &str| m.tokens.get(f).copied().unwrap_or(0) > 0;
    for node in model.nodes.values() {
        let ins: Vec<&str> = model.flows.iter().filter(|f| f.target == node.id).map(|f| f.id.as_str()).collect();
        let outs: Vec<&str> = model.flows.iter().filter(|f| f.source == node.id).map(|f| f.id.as_str()).collect();
        let produce = |mut next: OMarking, targets: &[&str]| -> Option<OMarking> {
            for t in targets {
                if !add(&mut next, t, k) {
                    return None;
                }
            }
            Some(next)
        };
        match node.kind {
            NodeKind::StartEvent => {}
            NodeKind::Gateway { logic: GatewayLogic::Parallel, direction: GatewayDirection::Converging } => {
                if ins.iter().all(|f| marked(f)) {
                    let mut next = m.clone();
                    for f in &ins {
                        take(&mut next, f);
                    }
                    out.push((node.id.clone(), None, produce(next, &outs)));
                }
            }
            NodeKind::Gateway { logic: GatewayLogic::Exclusive, direction: GatewayDirection::Diverging } => {
                if let Some(i) = ins.iter().find(|f| marked(f)) {
                    for o in &outs {
                        let mut next = m.clone();
                        take(&mut next, i);
                        let alt = (outs.len() > 1).then(|| o.to_string());
                        out.push((node.id.clone(), alt, produce(next, &[o])));
                    }
                }
            }
            _ => {
                for i in ins.iter().filter(|f| marked(f)) {
                    let mut next = m.clone();
                    take(&mut next, i);
                    let alt = (ins.len() > 1).then(|| i.to_string());
                    let next = if node.kind == NodeKind::EndEvent {
                        next.completed = (next.completed + 1).min(CAP);
                        Some(next)
                    } else {
                        produce(next, &outs)
                    };
                    out.push((node.id.clone(), alt, next));
                }
            }
        }
    }
    out
}

pub fn initial(model: &WorkflowModel) -> OMarking {
    let mut m = OMarking { tokens: BTreeMap::new(), completed: 0 };
    for s in model.nodes_of_kind(NodeKind::StartEvent) {
        for f in model.outgoing(&s.id) {
            *m.tokens.entry(f.id.clone()).or_insert(0) += 1;
        }
    }
    m
}

pub fn explore(model: &WorkflowModel, k: u32) -> OracleGraph {
    explore_limited(model, k, usize::MAX).expect("unlimited")
}

/// `None` once more than `limit` states have been discovered.
pub fn explore_limited(model: &WorkflowModel, k: u32, limit: usize) -> Option<OracleGraph> {
    let init = initial(model);
    let mut index: HashMap<OMarking, usize> = HashMap::new();
    let mut g = OracleGraph { states: vec![init.clone()], succ: vec![Vec::new()], terminal: vec![false], pruned: false };
    index.insert(init, 0);
    let mut work = vec![0usize];
    while let Some(s) = work.pop() {
        if g.states.len() > limit {
            return None;
        }
        let ts = transitions(model, &g.states[s].clone(), k);
        g.terminal[s] = ts.is_empty();
        for (node, alt, next) in ts {
            let Some(next) = next else {
                g.pruned = true;
                continue;
            };
            let to = *index.entry(next.clone()).or_insert_with(|| {
                g.states.push(next);
                g.succ.push(Vec::new());
                g.terminal.push(false);
                work.push(g.states.len() - 1);
                g.states.len() - 1
            });
            g.succ[s].push(OTrans { node, alt, to });
        }
    }
    Some(g)
}

impl OracleGraph {
    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// BFS distances from the initial state.
    pub fn distances(&self) -> Vec<Option<usize>> {
        let mut d = vec![None; self.states.len()];
        d[0] = Some(0);
        let mut q = VecDeque::from([0usize]);
        while let Some(s) = q.pop_front() {
            for t in &self.succ[s] {
                if d[t.to].is_none() {
                    d[t.to] = Some(d[s].unwrap() + 1);
                    q.push_back(t.to);
                }
            }
        }
        d
    }

    /// Some reachable cycle exists (three-colour DFS, back edge test).
    pub fn has_cycle(&self) -> bool {
        has_cycle_from(&[0], self.states.len(), |s| self.succ[s].iter().map(|t| t.to).collect())
    }
}

fn has_cycle_from(roots: &[usize], n: usize, succ: impl Fn(usize) -> Vec<usize>) -> bool {
    // 0 white, 1 grey, 2 black
    let mut colour = vec![0u8; n];
    for &r in roots {
        if colour[r] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(r, succ(r), 0)];
        colour[r] = 1;
        while let Some(top) = stack.len().checked_sub(1) {
            let (v, i) = (stack[top].0, stack[top].2);
            if i < stack[top].1.len() {
                let w = stack[top].1[i];
                stack[top].2 += 1;
                match colour[w] {
                    1 => return true,
                    0 => {
                        colour[w] = 1;
                        stack.push((w, succ(w), 0));
                    }
                    _ => {}
                }
            } else {
                colour[v] = 2;
                stack.pop();
            }
        }
    }
    false
}

/// Verdict status plus, for safety properties with a witness, the length
/// of the shortest counterexample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OVerdict {
    pub status: VerdictStatus,
    pub shortest: Option<usize>,
    pub dead_tasks: Vec<String>,
}

fn decide(witness: bool, pruned: bool) -> VerdictStatus {
    match (witness, pruned) {
        (true, _) => VerdictStatus::Invalid,
        (false, true) => VerdictStatus::BoundExceeded,
        (false, false) => VerdictStatus::Valid,
    }
}

pub fn verdict(model: &WorkflowModel, g: &OracleGraph, p: &Property) -> OVerdict {
    let dist = g.distances();
    let plain = |status| OVerdict { status, shortest: None, dead_tasks: vec![] };
    match p {
        Property::DeadlockFree => {
            let best = (0..g.states.len()).filter(|&s| g.terminal[s] && g.states[s].has_tokens()).filter_map(|s| dist[s]).min();
            OVerdict { status: decide(best.is_some(), g.pruned), shortest: best, dead_tasks: vec![] }
        }
        Property::ProperCompletion => {
            let bad = (0..g.states.len()).any(|s| g.terminal[s] && (g.states[s].has_tokens() || g.states[s].completed == 0));
            plain(decide(bad || g.has_cycle(), g.pruned))
        }
        Property::Reachable(n) => {
            let hit = g.succ.iter().flatten().any(|t| &t.node == n);
            plain(if g.pruned {
                VerdictStatus::BoundExceeded
            } else if hit {
                VerdictStatus::Valid
            } else {
                VerdictStatus::Invalid
            })
        }
        Property::NoDeadActivity => {
            let fired: HashSet<&str> = g.succ.iter().flatten().map(|t| t.node.as_str()).collect();
            let dead: Vec<String> =
                model.nodes_of_kind(NodeKind::Task).filter(|n| !fired.contains(n.id.as_str())).map(|n| n.id.clone()).collect();
            let status = if g.pruned {
                VerdictStatus::BoundExceeded
            } else if dead.is_empty() {
                VerdictStatus::Valid
            } else {
                VerdictStatus::Invalid
            };
            OVerdict { status, shortest: None, dead_tasks: dead }
        }
        Property::NeverFires(n) => {
            let best = (0..g.states.len()).filter(|&s| g.succ[s].iter().any(|t| &t.node == n)).filter_map(|s| dist[s].map(|d| d + 1)).min();
            OVerdict { status: decide(best.is_some(), g.pruned), shortest: best, dead_tasks: vec![] }
        }
        Property::Precedence { first, then } => {
            // BFS over (state, a-seen); a violation is a b-firing while unseen
            let mut seen = HashSet::from([(0usize, false)]);
            let mut q = VecDeque::from([(0usize, false, 0usize)]);
            let mut best = None;
            while let Some((s, a, d)) = q.pop_front() {
                for t in &g.succ[s] {
                    if !a && &t.node == then && first != then {
                        best = Some(best.map_or(d + 1, |b: usize| b.min(d + 1)));
                    }
                    let na = a || &t.node == first;
                    if seen.insert((t.to, na)) {
                        q.push_back((t.to, na, d + 1));
                    }
                }
            }
            OVerdict { status: decide(best.is_some(), g.pruned), shortest: best, dead_tasks: vec![] }
        }
        Property::Response { trigger, response } => {
            // product states (s, waiting); waiting follows only non-response
            // firings; terminal states loop on themselves
            let n = g.states.len();
            let mut reach = vec![[false, false]; n];
            reach[0][0] = true;
            let mut q = VecDeque::from([(0usize, 0usize)]);
            while let Some((s, w)) = q.pop_front() {
                for t in &g.succ[s] {
                    let mut nexts = Vec::new();
                    if w == 0 {
                        nexts.push(0);
                        if &t.node == trigger && &t.node != response {
                            nexts.push(1);
                        }
                    } else if &t.node != response {
                        nexts.push(1);
                    }
                    for nw in nexts {
                        if !reach[t.to][nw] {
                            reach[t.to][nw] = true;
                            q.push_back((t.to, nw));
                        }
                    }
                }
            }
            let roots: Vec<usize> = (0..n).filter(|&s| reach[s][1]).collect();
            let cyc = has_cycle_from(&roots, n, |s| {
                if g.terminal[s] {
                    vec![s]
                } else {
                    g.succ[s].iter().filter(|t| &t.node != response).map(|t| t.to).collect()
                }
            });
            plain(decide(cyc, g.pruned))
        }
        Property::RawLtl { .. } => panic!("oracle does not handle raw LTL"),
    }
}

/// The four properties of the frozen verdict table.
pub fn table_properties(model: &WorkflowModel) -> Vec<Property> {
    vec![Property::DeadlockFree, Property::ProperCompletion, Property::NoDeadActivity, Property::Reachable(super::first_end(model))]
}
