use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A requirement template, or raw LTL for the SPIN path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Property {
    DeadlockFree,
    ProperCompletion,
    Reachable(String),
    NoDeadActivity,
    NeverFires(String),
    Precedence { first: String, then: String },
    Response { trigger: String, response: String },
    RawLtl { name: String, formula: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized property '{0}' (expected deadlock-free, proper-completion, no-dead-activity, reach:<id>, never:<id>, prec:<a>,<b>, resp:<a>,<b> or ltl:<file>)")]
pub struct PropertyParseError(pub String);

impl Property {
    /// Node ids the property refers to.
    pub fn targets(&self) -> Vec<&str> {
        match self {
            Property::Reachable(n) | Property::NeverFires(n) => vec![n],
            Property::Precedence { first, then } => vec![first, then],
            Property::Response { trigger, response } => vec![trigger, response],
            _ => vec![],
        }
    }

    /// Parses the command-line flag form. `ltl:<file>` is not handled here
    /// because it needs file access; see [`Property::raw_ltl`].
    pub fn parse_flag(s: &str) -> Result<Property, PropertyParseError> {
        let err = || PropertyParseError(s.to_string());
        let pair = |rest: &str| -> Result<(String, String), PropertyParseError> {
            let (a, b) = rest.split_once(',').ok_or_else(err)?;
            if a.is_empty() || b.is_empty() {
                return Err(err());
            }
            Ok((a.to_string(), b.to_string()))
        };
        match s.split_once(':') {
            None => match s {
                "deadlock-free" => Ok(Property::DeadlockFree),
                "proper-completion" => Ok(Property::ProperCompletion),
                "no-dead-activity" => Ok(Property::NoDeadActivity),
                _ => Err(err()),
            },
            Some((_, "")) => Err(err()),
            Some(("reach", id)) => Ok(Property::Reachable(id.to_string())),
            Some(("never", id)) => Ok(Property::NeverFires(id.to_string())),
            Some(("prec", rest)) => pair(rest).map(|(first, then)| Property::Precedence { first, then }),
            Some(("resp", rest)) => pair(rest).map(|(trigger, response)| Property::Response { trigger, response }),
            _ => Err(err()),
        }
    }

    pub fn raw_ltl(name: impl Into<String>, formula: impl Into<String>) -> Property {
        Property::RawLtl { name: name.into(), formula: formula.into() }
    }

    /// The flag spelling, used as the stable property key in reports.
    pub fn flag(&self) -> String {
        match self {
            Property::DeadlockFree => "deadlock-free".into(),
            Property::ProperCompletion => "proper-completion".into(),
            Property::NoDeadActivity => "no-dead-activity".into(),
            Property::Reachable(n) => format!("reach:{n}"),
            Property::NeverFires(n) => format!("never:{n}"),
            Property::Precedence { first, then } => format!("prec:{first},{then}"),
            Property::Response { trigger, response } => format!("resp:{trigger},{response}"),
            Property::RawLtl { name, .. } => format!("ltl:{name}"),
        }
    }

    /// Safety templates have finite counterexamples that are BFS-shortest.
    pub fn is_safety(&self) -> bool {
        matches!(self, Property::DeadlockFree | Property::NeverFires(_) | Property::Precedence { .. })
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.flag())
    }
}
