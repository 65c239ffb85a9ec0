//! Reading workflow models from BPMN XML and from the workflow DSL.

mod dsl;
pub(crate) mod lex;
mod xml;

use std::path::Path;

use thiserror::Error;

pub use dsl::{emit_dsl, parse_dsl, DEFAULT_MODEL_ID};
pub use xml::{emit_bpmn_xml, parse_bpmn_xml, parse_bpmn_xml_with_warnings, XmlParse};

use crate::model::WorkflowModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML at {line}:{column}: {message}")]
    Xml { line: u32, column: u32, message: String },
    #[error("unknown node '{reference}' referenced by flow '{flow}' at {line}:{column}")]
    UnknownReference { flow: String, reference: String, line: u32, column: u32 },
    #[error("gateway '{id}' at {line}:{column} both converges and diverges (MixedGateway)")]
    MixedGateway { id: String, line: u32, column: u32 },
    #[error("<{element}> at {line}:{column} is missing attribute '{attribute}'")]
    MissingAttribute { element: String, attribute: String, line: u32, column: u32 },
    #[error("no <process> element found")]
    NoProcess,
    #[error("line {line}: duplicate declaration of '{id}'")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: {message}")]
    Dsl { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    BpmnXml,
    WorkflowDsl,
}

impl SourceFormat {
    /// `.bpmn`/`.xml` are XML, `.wf` is the DSL.
    pub fn from_path(path: &Path) -> Option<SourceFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "bpmn" | "xml" => Some(SourceFormat::BpmnXml),
            "wf" => Some(SourceFormat::WorkflowDsl),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot tell the format of {0} (expected .bpmn, .xml or .wf)")]
    UnknownFormat(String),
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
}

/// Reads a model from disk; the format comes from the extension unless
/// `forced` is given. Warnings are returned alongside the model.
pub fn load_model(path: &Path, forced: Option<SourceFormat>) -> Result<(WorkflowModel, Vec<String>), LoadError> {
    let shown = path.display().to_string();
    let format = forced.or_else(|| SourceFormat::from_path(path)).ok_or_else(|| LoadError::UnknownFormat(shown.clone()))?;
    let bytes = std::fs::read(path).map_err(|source| LoadError::Io { path: shown.clone(), source })?;
    let parsed = match format {
        SourceFormat::BpmnXml => parse_bpmn_xml_with_warnings(&bytes).map(|p| (p.model, p.warnings)),
        SourceFormat::WorkflowDsl => match String::from_utf8(bytes) {
            Ok(text) => parse_dsl(&text).map(|m| (m, Vec::new())),
            Err(_) => Err(ParseError::Dsl { line: 0, message: "input is not valid UTF-8".into() }),
        },
    };
    parsed.map_err(|source| LoadError::Parse { path: shown, source })
}
