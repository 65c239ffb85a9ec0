//! Command-line front end. [`run`] takes the argument list and output
//! streams so it can be driven in-process by tests.
//!
//! Exit codes: 0 all valid, 1 a property failed or the model has
//! violations, 2 input or environment error, 3 the engines disagree.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::checker::{check_all, CheckError, Property, Verdict, VerdictStatus};
use crate::codegen::{translate_with_bound, CodegenError};
use crate::ingest::{emit_bpmn_xml, emit_dsl, load_model, LoadError, SourceFormat};
use crate::model::WorkflowModel;
use crate::reconfig::{apply_patch, diff, emit_patch_json, emit_patch_text, graph_eq, parse_patch, PatchError, PatchParseError};
use crate::report::{classify, PropertyReport, VerificationReport, ViolationEntry, EXIT_FAILED, EXIT_INPUT, EXIT_OK};
use crate::semantics::{Net, DEFAULT_BOUND};
use crate::spin::{check_with_spin, SpinConfig, SpinError};

#[derive(Debug, Parser)]
#[command(name = "bpmn-verify", version, about = "Verify BPMN workflows and their reconfigurations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a model and report well-formedness violations.
    Validate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Translate a model to Promela (plus a `.sym` symbol table next to `-o`).
    Translate {
        path: PathBuf,
        #[arg(long = "prop")]
        props: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: u8,
    },
    /// Check properties of one model.
    Check {
        path: PathBuf,
        #[command(flatten)]
        opts: VerifyOpts,
    },
    /// Print the patch that turns OLD into NEW.
    Diff {
        old: PathBuf,
        new: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PatchFormat::Text)]
        patch_format: PatchFormat,
        /// Apply the emitted patch to OLD and confirm it reproduces NEW.
        #[arg(long)]
        self_check: bool,
    },
    /// Apply a patch and print the resulting model.
    Apply {
        model: PathBuf,
        patch: PathBuf,
        /// `.bpmn`/`.xml` writes XML, anything else the DSL.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check OLD, reconfigure it, check the result and compare.
    VerifyReconfig {
        old: PathBuf,
        #[arg(long, conflicts_with = "new", required_unless_present = "new")]
        patch: Option<PathBuf>,
        #[arg(long)]
        new: Option<PathBuf>,
        #[command(flatten)]
        opts: VerifyOpts,
    },
}

#[derive(Debug, Clone, Args)]
pub struct VerifyOpts {
    #[arg(
        long = "prop",
        help = "deadlock-free, proper-completion, no-dead-activity, reach:<id>, never:<id>, prec:<a>,<b>, resp:<a>,<b>, ltl:<file>"
    )]
    pub props: Vec<String>,
    #[arg(long, value_enum, default_value_t = Engine::Embedded)]
    pub engine: Engine,
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    pub bound: u8,
    /// Timeout per SPIN invocation, in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Keep SPIN run directories (default location: ./bpmn-verify-artifacts).
    #[arg(long, num_args = 0..=1, default_missing_value = "bpmn-verify-artifacts")]
    pub keep_artifacts: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Embedded,
    Spin,
    Both,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Embedded => "embedded",
            Engine::Spin => "spin",
            Engine::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatchFormat {
    Text,
    Json,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read patch {path}: {source}")]
    PatchRead { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    PatchParse { path: String, source: PatchParseError },
    #[error("cannot apply patch: {0}")]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

/// Default property set for `check` and `verify-reconfig`.
pub fn default_properties() -> Vec<Property> {
    vec![Property::DeadlockFree, Property::ProperCompletion, Property::NoDeadActivity]
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Validate { path, format } => cmd_validate(&path, format, out),
        Command::Translate { path, props, output, bound } => cmd_translate(&path, &props, output.as_deref(), bound, out, err),
        Command::Check { path, opts } => cmd_check(&path, &opts, out),
        Command::Diff { old, new, output, patch_format, self_check } => {
            cmd_diff(&old, &new, output.as_deref(), patch_format, self_check, out, err)
        }
        Command::Apply { model, patch, output } => cmd_apply(&model, &patch, output.as_deref(), out, err),
        Command::VerifyReconfig { old, patch, new, opts } => cmd_verify_reconfig(&old, patch.as_deref(), new.as_deref(), &opts, out),
    }
}

fn load(path: &Path, report: Option<&mut VerificationReport>) -> Result<WorkflowModel, CliError> {
    let (model, warnings) = load_model(path, None)?;
    if let Some(r) = report {
        r.warnings.extend(warnings.into_iter().map(|w| format!("{}: {w}", path.display())));
    }
    Ok(model)
}

fn emit(report: &mut VerificationReport, format: Format, started: Instant, out: &mut dyn Write) -> i32 {
    report.elapsed_ms = started.elapsed().as_millis() as u64;
    let text = match format {
        Format::Human => report.to_human(),
        Format::Json => report.to_json(),
    };
    let _ = out.write_all(text.as_bytes());
    report.exit_code
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}

fn cmd_validate(path: &Path, format: Format, out: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let mut report = VerificationReport::new("validate", vec![], "none", DEFAULT_BOUND);
    let model = load(path, Some(&mut report))?;
    report.models.push(model.id.clone());
    report.violations = model.validate().iter().map(|v| ViolationEntry::new(&model.id, v)).collect();
    report.exit_code = report.compute_exit_code();
    report.summary = format!("{} violations", report.violations.len());
    Ok(emit(&mut report, format, started, out))
}

/// Parses property flags; `ltl:<file>` reads the formula from the file and
/// names the block after the file stem.
pub fn parse_properties(flags: &[String]) -> Result<Vec<Property>, String> {
    flags
        .iter()
        .map(|f| match f.strip_prefix("ltl:") {
            Some(file) if !file.is_empty() => {
                let formula = std::fs::read_to_string(file).map_err(|e| format!("cannot read LTL file {file}: {e}"))?;
                let name = Path::new(file).file_stem().and_then(|s| s.to_str()).unwrap_or("ltl").to_string();
                Ok(Property::raw_ltl(name, formula.trim()))
            }
            _ => Property::parse_flag(f).map_err(|e| e.to_string()),
        })
        .collect()
}

fn check_targets(model: &WorkflowModel, props: &[Property]) -> Result<(), CliError> {
    for p in props {
        for t in p.targets() {
            if model.node(t).is_none() {
                return Err(CliError::Usage(format!("property {p} refers to unknown node '{t}'")));
            }
        }
    }
    Ok(())
}

fn cmd_translate(
    path: &Path,
    flags: &[String],
    output: Option<&Path>,
    bound: u8,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let props = parse_properties(flags).map_err(CliError::Usage)?;
    let model = load(path, None)?;
    let program = match translate_with_bound(&model, &props, bound) {
        Ok(p) => p,
        Err(CodegenError::ValidationRequired(vs)) => {
            let _ = writeln!(err, "{}: model is not well-formed, nothing translated", path.display());
            for v in vs {
                let _ = writeln!(err, "  {v}");
            }
            return Ok(EXIT_FAILED);
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let names = if program.property_names.is_empty() { "none".to_string() } else { program.property_names.join(", ") };
    match output {
        Some(o) => {
            write_file(o, &program.source)?;
            let sym = o.with_extension("sym");
            write_file(&sym, &program.symbols.to_text())?;
            let _ = writeln!(out, "wrote {} and {} (ltl blocks: {names})", o.display(), sym.display());
        }
        None => {
            let _ = out.write_all(program.source.as_bytes());
            let _ = writeln!(err, "ltl blocks: {names}");
        }
    }
    Ok(EXIT_OK)
}

/// Verdicts for one model with the selected engine(s). Returns `None` in
/// place of the reports when the model is not well-formed (its violations
/// are then recorded in `report`).
fn evaluate(
    model: &WorkflowModel,
    label: &str,
    props: &[Property],
    opts: &VerifyOpts,
    report: &mut VerificationReport,
) -> Result<Option<Vec<PropertyReport>>, CliError> {
    let net = match Net::new(model) {
        Ok(n) => n,
        Err(_) => {
            report.violations.extend(model.validate().iter().map(|v| ViolationEntry::new(label, v)));
            return Ok(None);
        }
    };
    check_targets(model, props)?;
    if opts.bound == 0 {
        return Err(CliError::Usage("--bound must be at least 1".into()));
    }
    let embedded = if opts.engine != Engine::Spin {
        if props.iter().any(|p| matches!(p, Property::RawLtl { .. })) {
            return Err(CliError::Usage("ltl:<file> properties need --engine spin".into()));
        }
        let results = check_all(model, props, opts.bound).map_err(|e| CliError::Usage(e.to_string()))?;
        Some(unwrap_results(results.into_iter().map(|(p, r)| (p, r.map_err(CheckFailure::Check))).collect())?)
    } else {
        None
    };
    let spin = if opts.engine != Engine::Embedded {
        let cfg = SpinConfig {
            executable: None,
            timeout: Duration::from_secs(opts.timeout),
            keep_artifacts: opts.keep_artifacts.clone(),
            ..SpinConfig::default()
        };
        if let Some(dir) = &cfg.keep_artifacts {
            std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.display().to_string(), source })?;
        }
        let results = check_with_spin(model, props, opts.bound, &cfg)?;
        Some(unwrap_results(results.into_iter().map(|(p, r)| (p, r.map_err(CheckFailure::Spin))).collect())?)
    } else {
        None
    };

    let reports = match (embedded, spin) {
        (Some(e), None) | (None, Some(e)) => e.iter().map(|(p, v)| PropertyReport::new(&net, p.flag(), v)).collect(),
        (Some(e), Some(s)) => {
            let mut agree = report.engines_agree.unwrap_or(true);
            let rs = e
                .iter()
                .zip(&s)
                .map(|((p, ev), (_, sv))| {
                    agree &= ev.status == sv.status;
                    let mut r = PropertyReport::new(&net, p.flag(), ev);
                    r.spin_status = Some(sv.status);
                    r
                })
                .collect();
            report.engines_agree = Some(agree);
            rs
        }
        (None, None) => unreachable!("some engine runs"),
    };
    Ok(Some(reports))
}

enum CheckFailure {
    Check(CheckError),
    Spin(SpinError),
}

fn unwrap_results(results: Vec<(Property, Result<Verdict, CheckFailure>)>) -> Result<Vec<(Property, Verdict)>, CliError> {
    results
        .into_iter()
        .map(|(p, r)| match r {
            Ok(v) => Ok((p, v)),
            Err(CheckFailure::Check(e)) => Err(CliError::Usage(format!("{p}: {e}"))),
            Err(CheckFailure::Spin(e)) => Err(CliError::Spin(e)),
        })
        .collect()
}

fn selected_properties(opts: &VerifyOpts) -> Result<Vec<Property>, CliError> {
    if opts.props.is_empty() {
        Ok(default_properties())
    } else {
        parse_properties(&opts.props).map_err(CliError::Usage)
    }
}

fn cmd_check(path: &Path, opts: &VerifyOpts, out: &mut dyn Write) -> Result<i32, CliError> {
    let started = Instant::now();
    let props = selected_properties(opts)?;
    let mut report = VerificationReport::new("check", vec![], opts.engine.name(), opts.bound);
    let model = load(path, Some(&mut report))?;
    report.models.push(model.id.clone());
    if let Some(rs) = evaluate(&model, &model.id, &props, opts, &mut report)? {
        report.properties = rs;
    }
    report.exit_code = report.compute_exit_code();
    let failing = report.properties.iter().filter(|p| p.status != VerdictStatus::Valid).count();
    report.summary = if report.violations.is_empty() {
        format!("{failing} of {} properties not valid", report.properties.len())
    } else {
        format!("model has {} violations; nothing checked", report.violations.len())
    };
    Ok(emit(&mut report, opts.format, started, out))
}

fn read_patch(path: &Path) -> Result<crate::reconfig::Patch, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::PatchRead { path: path.display().to_string(), source })?;
    parse_patch(&text).map_err(|source| CliError::PatchParse { path: path.display().to_string(), source })
}

fn cmd_diff(
    old: &Path,
    new: &Path,
    output: Option<&Path>,
    format: PatchFormat,
    self_check: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let a = load(old, None)?;
    let b = load(new, None)?;
    let patch = diff(&a, &b);
    let text = match format {
        PatchFormat::Text => emit_patch_text(&patch),
        PatchFormat::Json => emit_patch_json(&patch),
    };
    match output {
        Some(o) => write_file(o, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    if self_check {
        let reparsed = parse_patch(&text).map_err(|source| CliError::PatchParse { path: "<emitted patch>".into(), source })?;
        let ok = apply_patch(&a, &reparsed).map(|m| graph_eq(&m, &b)).unwrap_or(false);
        let _ = writeln!(err, "self-check: {}", if ok { "ok" } else { "FAILED" });
        if !ok {
            return Ok(EXIT_FAILED);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_apply(model: &Path, patch: &Path, output: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let m = load(model, None)?;
    let p = read_patch(patch)?;
    let result = apply_patch(&m, &p)?;
    let xml = output.and_then(SourceFormat::from_path) == Some(SourceFormat::BpmnXml);
    let text = if xml { emit_bpmn_xml(&result) } else { emit_dsl(&result) };
    match output {
        Some(o) => write_file(o, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    let violations = result.validate();
    for v in &violations {
        let _ = writeln!(err, "warning: result is not well-formed: {v}");
    }
    Ok(if violations.is_empty() { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_verify_reconfig(
    old_path: &Path,
    patch: Option<&Path>,
    new_path: Option<&Path>,
    opts: &VerifyOpts,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let started = Instant::now();
    let props = selected_properties(opts)?;
    let mut report = VerificationReport::new("verify-reconfig", vec![], opts.engine.name(), opts.bound);
    let old = load(old_path, Some(&mut report))?;
    let (new, ops) = match (patch, new_path) {
        (Some(p), _) => {
            let patch = read_patch(p)?;
            let new = apply_patch(&old, &patch)?;
            (new, patch.ops.len())
        }
        (None, Some(n)) => {
            let new = load(n, Some(&mut report))?;
            let ops = diff(&old, &new).ops.len();
            (new, ops)
        }
        (None, None) => return Err(CliError::Usage("give --patch or --new".into())),
    };
    report.models = vec![old.id.clone(), new.id.clone()];

    // the old model's problems are context, not a failure of the new one
    let mut scratch = VerificationReport::new("", vec![], "", opts.bound);
    let old_reports = evaluate(&old, "old", &props, opts, &mut scratch)?;
    for v in &scratch.violations {
        report.warnings.push(format!("old model: {}({}): {}", v.code, v.subject, v.message));
    }
    report.engines_agree = scratch.engines_agree;
    let new_reports = evaluate(&new, "new", &props, opts, &mut report)?;

    if let Some(mut rs) = new_reports {
        for (i, r) in rs.iter_mut().enumerate() {
            let old_status = old_reports.as_ref().map(|o| o[i].status).unwrap_or(VerdictStatus::Invalid);
            r.old_status = Some(old_status);
            r.classification = Some(classify(old_status, r.status).to_string());
        }
        report.properties = rs;
    }
    report.exit_code = report.compute_exit_code();
    let count = |c: &str| report.properties.iter().filter(|p| p.classification.as_deref() == Some(c)).count();
    report.summary = if report.violations.is_empty() {
        format!(
            "{ops} reconfiguration op(s); {} preserved, {} newly-broken, {} newly-fixed, {} still-broken",
            count("preserved"),
            count("newly-broken"),
            count("newly-fixed"),
            count("still-broken")
        )
    } else {
        format!("{ops} reconfiguration op(s); the new model has {} violations", report.violations.len())
    };
    Ok(emit(&mut report, opts.format, started, out))
}
