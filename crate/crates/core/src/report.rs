//! The verification report shared by the human and JSON renderings.
//!
//! Both renderings are produced from one [`VerificationReport`] value; the
//! human text shows every field that carries verdict content. The JSON
//! field names are fixed (see README) and unknown fields are rejected when
//! reading a report back.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::checker::{Trace, Verdict, VerdictStatus};
use crate::model::Violation;
use crate::semantics::Net;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub command: String,
    pub models: Vec<String>,
    pub engine: String,
    /// Set when both engines ran.
    pub engines_agree: Option<bool>,
    pub bound: u8,
    pub violations: Vec<ViolationEntry>,
    pub properties: Vec<PropertyReport>,
    pub warnings: Vec<String>,
    pub elapsed_ms: u64,
    pub exit_code: i32,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationEntry {
    pub model: String,
    pub code: String,
    pub subject: String,
    pub message: String,
}

impl ViolationEntry {
    pub fn new(model: &str, v: &Violation) -> Self {
        ViolationEntry { model: model.to_string(), code: v.code.to_string(), subject: v.subject.clone(), message: v.message.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyReport {
    pub property: String,
    pub status: VerdictStatus,
    /// verify-reconfig only: the verdict on the old model.
    pub old_status: Option<VerdictStatus>,
    /// verify-reconfig only: preserved, newly-broken, newly-fixed, still-broken.
    pub classification: Option<String>,
    /// `--engine both` only: SPIN's verdict.
    pub spin_status: Option<VerdictStatus>,
    pub counterexample: Option<TraceReport>,
    pub dead_tasks: Vec<String>,
    pub states: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceReport {
    pub steps: Vec<StepReport>,
    pub lasso_start: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepReport {
    pub node: String,
    pub name: String,
    pub kind: String,
    pub alternative: Option<String>,
    pub tokens: String,
}

impl TraceReport {
    pub fn new(net: &Net, trace: &Trace) -> Self {
        let steps = trace
            .steps
            .iter()
            .map(|s| {
                let node = net.model().node(&s.node);
                StepReport {
                    node: s.node.clone(),
                    name: node.map(|n| n.display_name().to_string()).unwrap_or_default(),
                    kind: node.map(|n| n.kind.label().to_string()).unwrap_or_default(),
                    alternative: s.alternative.clone(),
                    tokens: net.format_marking(&s.marking),
                }
            })
            .collect();
        TraceReport { steps, lasso_start: trace.lasso_start }
    }
}

impl PropertyReport {
    pub fn new(net: &Net, property: String, v: &Verdict) -> Self {
        PropertyReport {
            property,
            status: v.status,
            old_status: None,
            classification: None,
            spin_status: None,
            counterexample: v.counterexample.as_ref().map(|t| TraceReport::new(net, t)),
            dead_tasks: v.dead_tasks.clone(),
            states: v.stats.states,
            edges: v.stats.edges,
        }
    }
}

/// Old/new comparison label for verify-reconfig.
pub fn classify(old: VerdictStatus, new: VerdictStatus) -> &'static str {
    match (old == VerdictStatus::Valid, new == VerdictStatus::Valid) {
        (true, true) => "preserved",
        (true, false) => "newly-broken",
        (false, true) => "newly-fixed",
        (false, false) => "still-broken",
    }
}

impl VerificationReport {
    pub fn new(command: &str, models: Vec<String>, engine: &str, bound: u8) -> Self {
        VerificationReport {
            command: command.to_string(),
            models,
            engine: engine.to_string(),
            engines_agree: None,
            bound,
            violations: Vec::new(),
            properties: Vec::new(),
            warnings: Vec::new(),
            elapsed_ms: 0,
            exit_code: EXIT_OK,
            summary: String::new(),
        }
    }

    /// Exit code from the content: disagreement beats failure beats success.
    pub fn compute_exit_code(&self) -> i32 {
        if self.engines_agree == Some(false) {
            EXIT_DISAGREE
        } else if !self.violations.is_empty() || self.properties.iter().any(|p| p.status != VerdictStatus::Valid) {
            EXIT_FAILED
        } else {
            EXIT_OK
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_human(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "{} {} (engine {}, bound {})", self.command, self.models.join(" -> "), self.engine, self.bound);
        for w in &self.warnings {
            let _ = writeln!(o, "warning: {w}");
        }
        if !self.violations.is_empty() || self.command == "validate" {
            let _ = writeln!(o, "{} violation(s)", self.violations.len());
            for v in &self.violations {
                let _ = writeln!(o, "  [{}] {}({}): {}", v.model, v.code, v.subject, v.message);
            }
        }
        for p in &self.properties {
            let mut line = format!("{}: {}", p.property, status_word(p.status));
            if let Some(old) = p.old_status {
                line = format!("{}: old {}, new {}", p.property, status_word(old), status_word(p.status));
            }
            if let Some(c) = &p.classification {
                let _ = write!(line, " ({c})");
            }
            if let Some(s) = p.spin_status {
                let _ = write!(line, " [spin: {}]", status_word(s));
            }
            let _ = writeln!(o, "{line}  ({} states, {} edges)", p.states, p.edges);
            if !p.dead_tasks.is_empty() {
                let _ = writeln!(o, "  dead tasks: {}", p.dead_tasks.join(", "));
            }
            if let Some(t) = &p.counterexample {
                render_trace(&mut o, t);
            }
        }
        if let Some(agree) = self.engines_agree {
            let _ = writeln!(o, "{}", if agree { "engines agree" } else { "ENGINES DISAGREE" });
        }
        let _ = writeln!(o, "summary: {} (exit {}, {} ms)", self.summary, self.exit_code, self.elapsed_ms);
        o
    }
}

fn status_word(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Valid => "VALID",
        VerdictStatus::Invalid => "INVALID",
        VerdictStatus::BoundExceeded => "BOUND EXCEEDED",
    }
}

fn render_trace(o: &mut String, t: &TraceReport) {
    if t.steps.is_empty() && t.lasso_start.is_none() {
        let _ = writeln!(o, "  (no finite witness: the violation concerns the whole state space)");
        return;
    }
    let _ = writeln!(o, "  counterexample:");
    for (i, s) in t.steps.iter().enumerate() {
        if t.lasso_start == Some(i) {
            let _ = writeln!(o, "  -- cycle starts here --");
        }
        let via = s.alternative.as_ref().map(|a| format!(" via {a}")).unwrap_or_default();
        let _ = writeln!(o, "  step {}: fire {} '{}'{via} → tokens: {}", i + 1, s.kind, s.name, s.tokens);
    }
    if t.lasso_start == Some(t.steps.len()) {
        let _ = writeln!(o, "  -- the run stops here and stays in this state forever --");
    } else if t.lasso_start.is_some() {
        let _ = writeln!(o, "  -- back to the cycle start --");
    }
}
