//! Shared helpers for the integration tests: fixture loading, an
//! independent reference checker, a random model generator and a small
//! interpreter for the generated Promela.
#![allow(dead_code)]

pub mod gen;
pub mod oracle;
pub mod promela_sim;

use std::path::{Path, PathBuf};

use bpmn_verify::checker::{Property, VerdictStatus};
use bpmn_verify::ingest::load_model;
use bpmn_verify::model::{NodeKind, WorkflowModel};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn load_fixture(name: &str) -> WorkflowModel {
    load_model(&fixture_path(name), None).unwrap_or_else(|e| panic!("{name}: {e}")).0
}

/// The well-formed `.wf` corpus (everything except `broken.wf`), sorted by
/// file name.
pub fn corpus() -> Vec<(String, WorkflowModel)> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures_dir())
        .expect("fixtures dir")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".wf") && n != "broken.wf")
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let m = load_fixture(&n);
            (n, m)
        })
        .collect()
}

/// Id of the first end event in node order.
pub fn first_end(model: &WorkflowModel) -> String {
    model.nodes_of_kind(NodeKind::EndEvent).next().expect("model has an end event").id.clone()
}

pub fn status_name(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Valid => "valid",
        VerdictStatus::Invalid => "invalid",
        VerdictStatus::BoundExceeded => "bound-exceeded",
    }
}

/// Every template instantiated over the model's nodes (all ordered pairs
/// for the binary ones).
pub fn all_templates(m: &WorkflowModel) -> Vec<Property> {
    let ids: Vec<String> = m.nodes.keys().cloned().collect();
    let mut ps = vec![Property::DeadlockFree, Property::ProperCompletion, Property::NoDeadActivity];
    for a in &ids {
        ps.push(Property::Reachable(a.clone()));
        ps.push(Property::NeverFires(a.clone()));
        for b in &ids {
            ps.push(Property::Precedence { first: a.clone(), then: b.clone() });
            ps.push(Property::Response { trigger: a.clone(), response: b.clone() });
        }
    }
    ps
}
