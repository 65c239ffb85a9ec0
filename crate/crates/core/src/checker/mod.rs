//! Embedded explicit-state checking of the requirement templates.
//!
//! All templates are evaluated on the bounded [`StateGraph`]. On a pruned
//! graph (some firing hit the token bound) a genuine witness found in the
//! explored part is still reported as `Invalid`; anything that would need
//! the whole space to conclude becomes `BoundExceeded`. Nothing is `Valid`
//! on a pruned graph.
//!
//! There are no fairness assumptions: a loop with an exit that is always
//! available still violates `ProperCompletion` and `Response`, because the
//! run that never takes the exit exists.

mod property;
pub(crate) mod search;

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use property::{Property, PropertyParseError};

use crate::model::{NodeKind, Violation, WorkflowModel};
use crate::semantics::{explore, FireError, Marking, Net, NetError, StateGraph};
use search::EdgePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Valid,
    Invalid,
    BoundExceeded,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictStatus::Valid => "valid",
            VerdictStatus::Invalid => "invalid",
            VerdictStatus::BoundExceeded => "bound-exceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub node: String,
    /// The chosen flow where the node offers a choice.
    pub alternative: Option<String>,
    pub marking: Marking,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// Index into the state sequence (0 = initial marking, `i` = marking
    /// after step `i`) where the cycle re-enters. When it equals
    /// `steps.len()` the run stops and stutters in its last state.
    pub lasso_start: Option<usize>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn fired(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.node.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    pub states: usize,
    pub edges: usize,
    pub terminal_states: usize,
    pub max_depth: usize,
    pub elapsed: Duration,
}

impl Stats {
    fn of(g: &StateGraph, elapsed: Duration) -> Stats {
        Stats {
            states: g.state_count(),
            edges: g.edge_count(),
            terminal_states: g.terminal.iter().filter(|&&t| t).count(),
            max_depth: g.depth.iter().copied().max().unwrap_or(0),
            elapsed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// Present iff `status` is `Invalid`. Reachability and dead-activity
    /// violations are global, so their trace is empty.
    pub counterexample: Option<Trace>,
    /// Tasks that never fire (filled for `NoDeadActivity`).
    pub dead_tasks: Vec<String>,
    pub stats: Stats,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.status == VerdictStatus::Valid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("raw LTL properties can only be checked with SPIN")]
    UnsupportedOnEmbeddedPath,
    #[error("property refers to unknown node '{0}'")]
    UnknownNode(String),
    #[error("model is not well-formed ({} violation(s))", .0.len())]
    NotWellFormed(Vec<Violation>),
    #[error("token bound must be at least 1")]
    InvalidBound,
}

impl From<NetError> for CheckError {
    fn from(e: NetError) -> Self {
        match e {
            NetError::NotWellFormed(v) => CheckError::NotWellFormed(v),
            NetError::InvalidBound => CheckError::InvalidBound,
        }
    }
}

/// Checks one property at token bound `bound`.
pub fn check(model: &WorkflowModel, property: &Property, bound: u8) -> Result<Verdict, CheckError> {
    if bound == 0 {
        return Err(CheckError::InvalidBound);
    }
    let net = Net::new(model)?;
    precheck(&net, property)?;
    let t0 = Instant::now();
    let g = explore(&net, bound);
    check_graph(&net, &g, property, t0.elapsed())
}

/// Checks every property over one shared exploration. Per-property errors
/// are kept in place; model-level problems fail the whole call.
/// One verdict (or per-property error) per requested property, in order.
pub type PropertyResults<E> = Vec<(Property, Result<Verdict, E>)>;

pub fn check_all(model: &WorkflowModel, properties: &[Property], bound: u8) -> Result<PropertyResults<CheckError>, CheckError> {
    if bound == 0 {
        return Err(CheckError::InvalidBound);
    }
    let net = Net::new(model)?;
    if properties.is_empty() {
        return Ok(Vec::new());
    }
    let t0 = Instant::now();
    let g = explore(&net, bound);
    let explore_time = t0.elapsed();
    let one = |p: &Property| (p.clone(), precheck(&net, p).and_then(|()| check_graph(&net, &g, p, explore_time)));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(properties.par_iter().map(one).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(properties.iter().map(one).collect())
    }
}

fn precheck(net: &Net, property: &Property) -> Result<(), CheckError> {
    if let Property::RawLtl { .. } = property {
        return Err(CheckError::UnsupportedOnEmbeddedPath);
    }
    for t in property.targets() {
        if net.node_index(t).is_none() {
            return Err(CheckError::UnknownNode(t.to_string()));
        }
    }
    Ok(())
}

/// Evaluates `property` on an already explored graph. `explore_time` is
/// added to the reported elapsed time.
pub fn check_graph(net: &Net, g: &StateGraph, property: &Property, explore_time: Duration) -> Result<Verdict, CheckError> {
    precheck(net, property)?;
    let t0 = Instant::now();
    let node = |id: &str| net.node_index(id).expect("prechecked");
    let fires = |n: usize| move |e: usize| g.edges[e].firing.node == n;
    let mut dead_tasks = Vec::new();

    // Some(path): a witness was found. None + `definite`: no violation.
    let (witness, definite): (Option<EdgePath>, bool) = match property {
        Property::DeadlockFree => (search::first_state(g, |s| g.terminal[s] && g.states[s].has_tokens()), true),
        Property::ProperCompletion => {
            let w = search::first_state(g, |s| g.terminal[s] && !g.states[s].is_properly_completed()).or_else(|| search::first_cycle(g));
            (w, true)
        }
        Property::NeverFires(n) => (search::first_edge(g, fires(node(n))), true),
        Property::Precedence { first, then } => {
            let (a, b) = (node(first), node(then));
            if a == b {
                (None, true)
            } else {
                (search::hit_before_block(g, fires(b), fires(a)), true)
            }
        }
        Property::Response { trigger, response } => {
            let (a, b) = (node(trigger), node(response));
            (search::accepting_lasso(g, fires(a), fires(b)), true)
        }
        Property::Reachable(n) => {
            let n = node(n);
            let hit = g.edges.iter().any(|e| e.firing.node == n);
            let empty = EdgePath { edges: Vec::new(), lasso_start: None };
            (if hit { None } else { Some(empty) }, false)
        }
        Property::NoDeadActivity => {
            let mut fired = vec![false; net.node_count()];
            for e in &g.edges {
                fired[e.firing.node] = true;
            }
            dead_tasks = (0..net.node_count())
                .filter(|&n| net.node_kind(n) == NodeKind::Task && !fired[n])
                .map(|n| net.node_id(n).to_string())
                .collect();
            let empty = EdgePath { edges: Vec::new(), lasso_start: None };
            (if dead_tasks.is_empty() { None } else { Some(empty) }, false)
        }
        Property::RawLtl { .. } => unreachable!("prechecked"),
    };

    // Existential witnesses survive pruning; "nothing found" does not, and
    // neither do the global (reachable / dead activity) verdicts.
    let status = match (&witness, g.bound_exceeded) {
        (_, true) if !definite => VerdictStatus::BoundExceeded,
        (Some(_), _) => VerdictStatus::Invalid,
        (None, true) => VerdictStatus::BoundExceeded,
        (None, false) => VerdictStatus::Valid,
    };
    let counterexample = match status {
        VerdictStatus::Invalid => witness.map(|w| to_trace(net, g, &w)),
        _ => None,
    };
    Ok(Verdict { status, counterexample, dead_tasks, stats: Stats::of(g, explore_time + t0.elapsed()) })
}

fn to_trace(net: &Net, g: &StateGraph, path: &EdgePath) -> Trace {
    let steps = path
        .edges
        .iter()
        .map(|&e| {
            let edge = &g.edges[e];
            TraceStep {
                node: net.node_id(edge.firing.node).to_string(),
                alternative: edge.firing.selector.map(|f| net.flow_id(f).to_string()),
                marking: g.states[edge.to].clone(),
            }
        })
        .collect();
    Trace { steps, lasso_start: path.lasso_start }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("step {step}: {source}")]
    Fire { step: usize, source: FireError },
    #[error("step {step}: recorded marking differs from the replayed one")]
    MarkingMismatch { step: usize },
    #[error("lasso start {0} is out of range")]
    LassoOutOfRange(usize),
    #[error("lasso does not close: final marking differs from marking {0}")]
    LassoNotClosed(usize),
}

/// Replays `trace` through [`Net::fire`] from the initial marking and
/// returns the visited markings (initial first).
pub fn replay(net: &Net, trace: &Trace, bound: u8) -> Result<Vec<Marking>, ReplayError> {
    let mut states = vec![net.initial_marking()];
    for (i, step) in trace.steps.iter().enumerate() {
        let cur = states.last().expect("nonempty");
        let next = net
            .fire_by_id(cur, &step.node, step.alternative.as_deref(), bound)
            .map_err(|source| ReplayError::Fire { step: i + 1, source })?;
        if next != step.marking {
            return Err(ReplayError::MarkingMismatch { step: i + 1 });
        }
        states.push(next);
    }
    if let Some(k) = trace.lasso_start {
        if k >= states.len() {
            return Err(ReplayError::LassoOutOfRange(k));
        }
        if states[k] != *states.last().expect("nonempty") {
            return Err(ReplayError::LassoNotClosed(k));
        }
        if k == trace.steps.len() && !net.is_terminal(&states[k]) {
            // an empty loop is only a stutter at a terminal state
            return Err(ReplayError::LassoNotClosed(k));
        }
    }
    Ok(states)
}
