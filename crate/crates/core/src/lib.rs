//! Verification toolchain for reconfigurable BPMN workflows.
//!
//! Models are read from BPMN XML or a compact DSL ([`ingest`]), checked for
//! structural well-formedness ([`model`]), given a token-game meaning
//! ([`semantics`]), edited by patches ([`reconfig`]), translated to Promela
//! ([`codegen`]) and verified either by the embedded explicit-state checker
//! ([`checker`]) or by an installed SPIN ([`spin`]). Results are collected
//! in a [`report`] that the [`cli`] prints as text or JSON.

pub mod checker;
pub mod cli;
pub mod codegen;
pub mod ingest;
pub mod model;
pub mod reconfig;
pub mod report;
pub mod semantics;
pub mod spin;
