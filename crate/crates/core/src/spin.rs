//! Bridge to an installed SPIN.
//!
//! A run writes `model.pml` into a private temp directory, generates and
//! compiles the verifier (`spin -a`, `cc -o pan pan.c`), runs `./pan`, and
//! on a violation replays the trail with `spin -t -p -g`. Only these output
//! patterns are interpreted:
//!
//! - `errors: N` in the verifier summary
//! - `pan:1: assertion violated <expr>` (bound asserts contain `tok_` and `<`)
//! - trail step lines carrying `[lastFired = N]`
//! - global value lines `name = value`
//! - `<<<<<START OF CYCLE>>>>>`
//!
//! Anything else is kept as raw text and never turned into a verdict.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::checker::{Property, PropertyResults, Stats, Trace, TraceStep, Verdict, VerdictStatus};
use crate::codegen::{translate_with_bound, CodegenError, PromelaProgram, SymbolKind, SymbolTable};
use crate::model::{NodeKind, WorkflowModel};
use crate::semantics::{Marking, Net, NetError};

/// Environment variable naming the SPIN executable.
pub const SPIN_ENV: &str = "BPMNVERIFY_SPIN";
/// `ltl` blocks need SPIN 6.
pub const MIN_SPIN_MAJOR: u32 = 6;
const CYCLE_MARKER: &str = "<<<<<START OF CYCLE>>>>>";

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("SPIN executable not found (set {SPIN_ENV} or put `spin` on PATH)")]
    SpinNotFound,
    #[error("SPIN version '{0}' is too old; version {MIN_SPIN_MAJOR}.0 or newer is required")]
    SpinVersionUnsupported(String),
    #[error("building the verifier failed:\n{0}")]
    CompileFailed(String),
    #[error("SPIN run exceeded the {0:?} timeout")]
    Timeout(Duration),
    #[error("could not interpret SPIN output:\n{0}")]
    UnrecognizedOutput(String),
    #[error("trail line {line} cannot be mapped to the model: {text}")]
    UnmappableStep { line: usize, text: String },
    #[error("run has no trail to map")]
    NoTrail,
    #[error("property '{0}' has no ltl block in the program")]
    UnknownProperty(String),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error("model is not well-formed")]
    NotWellFormed,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct SpinConfig {
    /// Overrides the environment variable and PATH lookup.
    pub executable: Option<PathBuf>,
    pub cc: String,
    pub timeout: Duration,
    /// Copy run directories here instead of discarding them.
    pub keep_artifacts: Option<PathBuf>,
}

impl Default for SpinConfig {
    fn default() -> Self {
        SpinConfig { executable: None, cc: "cc".into(), timeout: Duration::from_secs(60), keep_artifacts: None }
    }
}

/// Finds the SPIN executable: explicit path, then `BPMNVERIFY_SPIN`, then PATH.
pub fn locate_spin(cfg: &SpinConfig) -> Result<PathBuf, SpinError> {
    if let Some(p) = &cfg.executable {
        return if p.is_file() { Ok(p.clone()) } else { Err(SpinError::SpinNotFound) };
    }
    if let Some(p) = std::env::var_os(SPIN_ENV) {
        let p = PathBuf::from(p);
        return if p.is_file() { Ok(p) } else { Err(SpinError::SpinNotFound) };
    }
    let path = std::env::var_os("PATH").ok_or(SpinError::SpinNotFound)?;
    std::env::split_paths(&path).map(|d| d.join("spin")).find(|p| p.is_file()).ok_or(SpinError::SpinNotFound)
}

/// Parses `Spin Version 6.5.2 -- ...` into its version string and major.
pub fn parse_version(text: &str) -> Option<(String, u32)> {
    let rest = text.split("Spin Version").nth(1)?.trim_start();
    let v: String = rest.chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    let major = v.split('.').next()?.parse().ok()?;
    Some((v, major))
}

/// Locates SPIN and checks its version.
pub fn detect(cfg: &SpinConfig) -> Result<(PathBuf, String), SpinError> {
    let exe = locate_spin(cfg)?;
    let out = run_with_timeout(Command::new(&exe).arg("-V"), cfg.timeout)?;
    let text = format!("{}{}", out.stdout, out.stderr);
    match parse_version(&text) {
        Some((v, major)) if major >= MIN_SPIN_MAJOR => Ok((exe, v)),
        Some((v, _)) => Err(SpinError::SpinVersionUnsupported(v)),
        None => Err(SpinError::UnrecognizedOutput(text)),
    }
}

/// One event of a replayed trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrailEvent {
    /// A process step; `fired` is set when it assigns `lastFired`.
    Step {
        line: usize,
        fired: Option<u32>,
    },
    Global {
        line: usize,
        name: String,
        value: i64,
    },
    CycleStart,
}

#[derive(Debug, Clone)]
pub struct SpinRun {
    /// Claim name, or `None` for the assertion-only (deadlock) run.
    pub property: Option<String>,
    pub exit_status: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub errors: u64,
    /// `assertion violated ...` text, if any.
    pub assertion: Option<String>,
    pub trail: Option<Vec<TrailEvent>>,
    pub trail_text: Option<String>,
    pub elapsed: Duration,
    pub spin_version: String,
    /// Where the run directory was kept (with `keep_artifacts`).
    pub artifacts: Option<PathBuf>,
}

impl SpinRun {
    /// The violated assertion is one of the token-bound guards.
    pub fn hit_bound(&self) -> bool {
        self.assertion.as_deref().is_some_and(is_bound_assertion)
    }
}

fn is_bound_assertion(a: &str) -> bool {
    a.contains("tok_") && a.contains('<') && !a.contains("==")
}

/// Extracts `errors: N` and the first assertion message from verifier output.
pub fn parse_pan_output(text: &str) -> Option<(u64, Option<String>)> {
    let errors = text.lines().find_map(|l| {
        let i = l.find("errors:")?;
        l[i + "errors:".len()..].split_whitespace().next()?.parse().ok()
    })?;
    let assertion = text.lines().find_map(|l| {
        let i = l.find("assertion violated")?;
        Some(l[i..].trim().to_string())
    });
    Some((errors, assertion))
}

/// Parses `spin -t -p -g` output into events.
pub fn parse_trail(text: &str) -> Vec<TrailEvent> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.contains(CYCLE_MARKER) {
            out.push(TrailEvent::CycleStart);
        } else if is_step_line(l) {
            let fired = l.find("[lastFired = ").and_then(|p| {
                let rest = &l[p + "[lastFired = ".len()..];
                rest[..rest.find(']')?].trim().parse().ok()
            });
            out.push(TrailEvent::Step { line, fired });
        } else if let Some((name, value)) = l.split_once(" = ") {
            let name = name.trim();
            if is_identifier(name) {
                if let Ok(value) = value.trim().parse() {
                    out.push(TrailEvent::Global { line, name: name.to_string(), value });
                }
            }
        }
    }
    out
}

// `  12:\tproc  0 (Workflow:1) model.pml:30 (state 4)\t[tok_f1 = (tok_f1-1)]`
fn is_step_line(l: &str) -> bool {
    match l.split_once(':') {
        Some((n, rest)) => !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) && rest.trim_start().starts_with("proc"),
        None => false,
    }
}

fn is_identifier(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Reconstructs a BPMN-level trace from a run's trail. Node ids come from
/// `lastFired` codes, markings from token-variable updates; the chosen
/// alternative is recovered by firing each candidate under `net`.
pub fn map_trail(run: &SpinRun, symbols: &SymbolTable, net: &Net) -> Result<Trace, SpinError> {
    let events = run.trail.as_ref().ok_or(SpinError::NoTrail)?;
    let bound = u8::MAX;
    let mut tokens = vec![0u8; net.flow_count()];
    let mut completed = 0u8;
    let mut prev = net.initial_marking();
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut lasso_start = None;
    // node index of a fired step whose resulting marking is still being read
    let mut pending: Option<(usize, usize)> = None;

    let finish = |pending: &mut Option<(usize, usize)>,
                  tokens: &[u8],
                  completed: u8,
                  prev: &mut Marking,
                  steps: &mut Vec<TraceStep>|
     -> Result<(), SpinError> {
        let Some((node, line)) = pending.take() else { return Ok(()) };
        let marking = Marking::new(tokens.to_vec(), completed);
        let alternative = alternatives(net, node)
            .into_iter()
            .find(|&sel| net.fire(prev, node, sel, bound).ok().as_ref() == Some(&marking))
            .ok_or_else(|| SpinError::UnmappableStep {
                line,
                text: format!("firing '{}' does not produce the recorded marking", net.node_id(node)),
            })?;
        steps.push(TraceStep {
            node: net.node_id(node).to_string(),
            alternative: alternative.map(|f| net.flow_id(f).to_string()),
            marking: marking.clone(),
        });
        *prev = marking;
        Ok(())
    };

    for ev in events {
        match ev {
            TrailEvent::CycleStart => {
                finish(&mut pending, &tokens, completed, &mut prev, &mut steps)?;
                lasso_start = Some(steps.len());
            }
            TrailEvent::Step { line, fired } => {
                finish(&mut pending, &tokens, completed, &mut prev, &mut steps)?;
                if let Some(code) = fired {
                    let sym = symbols
                        .by_code(*code)
                        .filter(|s| s.kind == SymbolKind::Node)
                        .ok_or_else(|| SpinError::UnmappableStep { line: *line, text: format!("lastFired = {code}") })?;
                    let node = net.node_index(&sym.bpmn_id).ok_or_else(|| SpinError::UnmappableStep {
                        line: *line,
                        text: format!("node '{}' is not in the model", sym.bpmn_id),
                    })?;
                    pending = Some((node, *line));
                }
            }
            TrailEvent::Global { line, name, value } => {
                let unmappable = || SpinError::UnmappableStep { line: *line, text: format!("{name} = {value}") };
                let v = u8::try_from(*value).map_err(|_| unmappable())?;
                match name.as_str() {
                    "completed" => completed = v,
                    "lastFired" => {}
                    _ => {
                        let sym = symbols.by_ident(name).filter(|s| s.kind == SymbolKind::Flow).ok_or_else(unmappable)?;
                        let f = net.flow_index(&sym.bpmn_id).ok_or_else(unmappable)?;
                        tokens[f] = v;
                    }
                }
            }
        }
    }
    finish(&mut pending, &tokens, completed, &mut prev, &mut steps)?;
    Ok(Trace { steps, lasso_start })
}

fn alternatives(net: &Net, node: usize) -> Vec<Option<usize>> {
    let ins = net.inputs(node);
    let outs = net.outputs(node);
    match net.node_kind(node) {
        NodeKind::XOR_SPLIT if outs.len() > 1 => outs.iter().map(|&o| Some(o)).collect(),
        NodeKind::Task | NodeKind::EndEvent | NodeKind::XOR_JOIN if ins.len() > 1 => ins.iter().map(|&i| Some(i)).collect(),
        _ => vec![None],
    }
}

/// Runs the generate-compile-verify sequence for one claim (`None` = the
/// assertion-only run that checks deadlock freedom and the token bound).
pub fn run_spin(program: &PromelaProgram, property: Option<&str>, cfg: &SpinConfig) -> Result<SpinRun, SpinError> {
    run_source(&program.source, property, cfg)
}

fn run_source(source: &str, property: Option<&str>, cfg: &SpinConfig) -> Result<SpinRun, SpinError> {
    if let Some(p) = property {
        if !source.contains(&format!("ltl {p} {{")) {
            return Err(SpinError::UnknownProperty(p.to_string()));
        }
    }
    let (exe, version) = detect(cfg)?;
    let start = Instant::now();
    let dir = tempfile::Builder::new().prefix("bpmn-verify-").tempdir()?;
    let d = dir.path();
    std::fs::write(d.join("model.pml"), source)?;

    let gen = run_with_timeout(Command::new(&exe).arg("-a").arg("model.pml").current_dir(d), cfg.timeout)?;
    if !gen.status.success() || !d.join("pan.c").exists() {
        return Err(SpinError::CompileFailed(format!("{}{}", gen.stdout, gen.stderr)));
    }
    let cc = run_with_timeout(Command::new(&cfg.cc).args(["-O2", "-w", "-o", "pan", "pan.c"]).current_dir(d), cfg.timeout)?;
    if !cc.status.success() {
        return Err(SpinError::CompileFailed(format!("{}{}", cc.stdout, cc.stderr)));
    }

    let mut pan = Command::new(d.join("pan"));
    pan.current_dir(d).arg("-m1000000");
    match property {
        None => {
            pan.arg("-noclaim");
        }
        Some(name) => {
            pan.args(["-a", "-N", name]);
            // the completion claim keeps the final assert (its strong form)
            if name != "complete" {
                pan.arg("-A");
            }
        }
    }
    let out = run_with_timeout(&mut pan, cfg.timeout)?;
    let (errors, assertion) = parse_pan_output(&out.stdout).ok_or_else(|| SpinError::UnrecognizedOutput(out.stdout.clone()))?;

    let (mut trail, mut trail_text) = (None, None);
    if errors > 0 && d.join("model.pml.trail").exists() {
        let mut cmd = Command::new(&exe);
        cmd.args(["-t", "-p", "-g"]);
        if let Some(name) = property {
            cmd.args(["-N", name]);
        }
        let t = run_with_timeout(cmd.arg("model.pml").current_dir(d), cfg.timeout)?;
        trail = Some(parse_trail(&t.stdout));
        trail_text = Some(t.stdout);
    }

    let artifacts = match &cfg.keep_artifacts {
        Some(keep) => {
            let target = keep.join(format!("run-{}", property.unwrap_or("assert")));
            copy_dir(d, &target)?;
            Some(target)
        }
        None => None,
    };
    Ok(SpinRun {
        property: property.map(str::to_string),
        exit_status: out.status.code(),
        stdout: out.stdout,
        stderr: out.stderr,
        errors,
        assertion,
        trail,
        trail_text,
        elapsed: start.elapsed(),
        spin_version: version,
        artifacts,
    })
}

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for entry in std::fs::read_dir(from)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            std::fs::copy(entry.path(), to.join(entry.file_name()))?;
        }
    }
    Ok(())
}

struct Output {
    status: ExitStatus,
    stdout: String,
    stderr: String,
}

fn run_with_timeout(cmd: &mut Command, timeout: Duration) -> Result<Output, SpinError> {
    cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::piped());
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        cmd.process_group(0);
    }
    let mut child = cmd.spawn().map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SpinError::SpinNotFound,
        _ => SpinError::Io(e),
    })?;
    let out_reader = drain(child.stdout.take());
    let err_reader = drain(child.stderr.take());
    let deadline = Instant::now() + timeout;
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break s;
        }
        if Instant::now() >= deadline {
            kill_tree(&mut child);
            return Err(SpinError::Timeout(timeout));
        }
        thread::sleep(Duration::from_millis(10));
    };
    Ok(Output { status, stdout: out_reader.join().unwrap_or_default(), stderr: err_reader.join().unwrap_or_default() })
}

fn drain<R: Read + Send + 'static>(r: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut s = String::new();
        if let Some(mut r) = r {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            s = String::from_utf8_lossy(&buf).into_owned();
        }
        s
    })
}

fn kill_tree(child: &mut Child) {
    #[cfg(unix)]
    {
        // the child leads its own process group
        let _ = Command::new("kill").args(["-s", "KILL", "--"]).arg(format!("-{}", child.id())).status();
    }
    let _ = child.kill();
    let _ = child.wait();
}

/// Checks each property with SPIN and maps results to verdicts in the
/// embedded checker's vocabulary.
pub fn check_with_spin(
    model: &WorkflowModel,
    properties: &[Property],
    bound: u8,
    cfg: &SpinConfig,
) -> Result<PropertyResults<SpinError>, SpinError> {
    let net = Net::new(model).map_err(|e| match e {
        NetError::NotWellFormed(_) => SpinError::NotWellFormed,
        NetError::InvalidBound => SpinError::Codegen(CodegenError::InvalidBound),
    })?;
    let program = translate_with_bound(model, properties, bound)?;
    detect(cfg)?;
    // the assertion-only run doubles as the token-bound probe
    let probe = run_spin(&program, None, cfg)?;
    let bounded_out = probe.hit_bound();
    Ok(properties.iter().map(|p| (p.clone(), spin_verdict(&net, &program, p, &probe, bounded_out, cfg))).collect())
}

fn spin_verdict(
    net: &Net,
    program: &PromelaProgram,
    property: &Property,
    probe: &SpinRun,
    bounded_out: bool,
    cfg: &SpinConfig,
) -> Result<Verdict, SpinError> {
    let t0 = Instant::now();
    let stats = |elapsed| Stats { elapsed, ..Stats::default() };
    let with_trace = |run: &SpinRun| -> Result<Verdict, SpinError> {
        if run.hit_bound() {
            return Ok(Verdict {
                status: VerdictStatus::BoundExceeded,
                counterexample: None,
                dead_tasks: vec![],
                stats: stats(run.elapsed),
            });
        }
        let trace = map_trail(run, &program.symbols, net)?;
        Ok(Verdict { status: VerdictStatus::Invalid, counterexample: Some(trace), dead_tasks: vec![], stats: stats(run.elapsed) })
    };
    let clean = |elapsed| {
        let status = if bounded_out { VerdictStatus::BoundExceeded } else { VerdictStatus::Valid };
        Verdict { status, counterexample: None, dead_tasks: vec![], stats: stats(elapsed) }
    };
    // Reachable(n) holds iff SPIN refutes `[] !fired_n`
    let reach = |node: &str| -> Result<bool, SpinError> {
        let ident = &program.symbols.node(node).expect("translated").ident;
        let name = format!("unreach_{}", ident.trim_start_matches("fired_"));
        let src = format!("{}\nltl {name} {{ [] !{ident} }}\n", program.source);
        Ok(run_source(&src, Some(&name), cfg)?.errors > 0)
    };
    match property {
        Property::DeadlockFree => {
            if probe.errors > 0 {
                with_trace(probe)
            } else {
                Ok(clean(probe.elapsed))
            }
        }
        Property::Reachable(n) => {
            let status = match (reach(n)?, bounded_out) {
                (_, true) => VerdictStatus::BoundExceeded,
                (true, false) => VerdictStatus::Valid,
                (false, false) => VerdictStatus::Invalid,
            };
            let counterexample = (status == VerdictStatus::Invalid).then(Trace::default);
            Ok(Verdict { status, counterexample, dead_tasks: vec![], stats: stats(t0.elapsed()) })
        }
        Property::NoDeadActivity => {
            let mut dead = Vec::new();
            for n in 0..net.node_count() {
                if net.node_kind(n) == NodeKind::Task && !reach(net.node_id(n))? {
                    dead.push(net.node_id(n).to_string());
                }
            }
            let status = match (dead.is_empty(), bounded_out) {
                (_, true) => VerdictStatus::BoundExceeded,
                (true, false) => VerdictStatus::Valid,
                (false, false) => VerdictStatus::Invalid,
            };
            let counterexample = (status == VerdictStatus::Invalid).then(Trace::default);
            Ok(Verdict { status, counterexample, dead_tasks: dead, stats: stats(t0.elapsed()) })
        }
        _ => {
            let name = program.block_for(property).ok_or_else(|| SpinError::UnknownProperty(property.flag()))?;
            let run = run_spin(program, Some(name), cfg)?;
            if run.errors > 0 {
                with_trace(&run)
            } else {
                Ok(clean(run.elapsed))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::translate;
    use crate::ingest::parse_dsl;

    const M3: &str = "start Start; xor-split g1; task A; task B; and-join g2; end End;
        flow f0: Start->g1; flow f1: g1->A; flow f2: g1->B; flow f3: A->g2; flow f4: B->g2; flow f5: g2->End;";

    const M3_TRAIL: &str = "  1:\tproc  0 (Workflow:1) model.pml:20 (state 1)\t[tok_f0 = 1]
\t\ttok_f0 = 1
  2:\tproc  0 (Workflow:1) model.pml:25 (state 2)\t[tok_f0 = (tok_f0-1)]
\t\ttok_f0 = 0
  3:\tproc  0 (Workflow:1) model.pml:26 (state 3)\t[assert((tok_f1<2))]
  4:\tproc  0 (Workflow:1) model.pml:27 (state 4)\t[tok_f1 = (tok_f1+1)]
\t\ttok_f1 = 1
  5:\tproc  0 (Workflow:1) model.pml:28 (state 5)\t[lastFired = 2]
\t\tlastFired = 2
  6:\tproc  0 (Workflow:1) model.pml:40 (state 6)\t[tok_f1 = (tok_f1-1)]
\t\ttok_f1 = 0
  7:\tproc  0 (Workflow:1) model.pml:41 (state 7)\t[assert((tok_f3<2))]
  8:\tproc  0 (Workflow:1) model.pml:42 (state 8)\t[tok_f3 = (tok_f3+1)]
\t\ttok_f3 = 1
  9:\tproc  0 (Workflow:1) model.pml:43 (state 9)\t[lastFired = 3]
\t\tlastFired = 3
 10:\tproc  0 (Workflow:1) model.pml:70 (state 20)\t[else]
 11:\tproc  0 (Workflow:1) model.pml:73 (state 22)\t[assert(...)]
spin: model.pml:73, Error: assertion violated
spin: trail ends after 11 steps
";

    fn fixture() -> (Net, PromelaProgram) {
        let m = parse_dsl(M3).unwrap();
        (Net::new(&m).unwrap(), translate(&m, &[]).unwrap())
    }

    fn run_with_trail(text: &str) -> SpinRun {
        SpinRun {
            property: None,
            exit_status: Some(0),
            stdout: String::new(),
            stderr: String::new(),
            errors: 1,
            assertion: None,
            trail: Some(parse_trail(text)),
            trail_text: Some(text.to_string()),
            elapsed: Duration::ZERO,
            spin_version: "6.5.2".into(),
            artifacts: None,
        }
    }

    #[test]
    fn version_and_pan_output() {
        assert_eq!(parse_version("Spin Version 6.5.2 -- 6 December 2019\n"), Some(("6.5.2".into(), 6)));
        assert_eq!(parse_version("Spin Version 5.2.5 -- 17 April 2010").unwrap().1, 5);
        assert_eq!(parse_version("bash: spin"), None);
        let pan = "pan:1: assertion violated (tok_f3<2) (at depth 9)\npan: wrote model.pml.trail\n\tState-vector 28 byte, depth reached 9, errors: 1\n";
        let (errors, assertion) = parse_pan_output(pan).unwrap();
        assert_eq!(errors, 1);
        assert!(is_bound_assertion(&assertion.unwrap()));
        assert_eq!(parse_pan_output("State-vector 28 byte, depth reached 9, errors: 0").unwrap(), (0, None));
        assert!(parse_pan_output("garbage").is_none());
    }

    #[test]
    fn maps_m3_trail_to_bpmn_steps() {
        let (net, program) = fixture();
        let trace = map_trail(&run_with_trail(M3_TRAIL), &program.symbols, &net).unwrap();
        assert_eq!(trace.fired(), ["g1", "A"]);
        assert_eq!(trace.steps[0].alternative.as_deref(), Some("f1"));
        crate::checker::replay(&net, &trace, 2).unwrap();
    }

    #[test]
    fn unknown_symbol_is_unmappable() {
        let (net, program) = fixture();
        let text = "  1:\tproc  0 (Workflow:1) model.pml:20 (state 1)\t[tok_zz = 1]\n\t\ttok_zz = 1\n";
        match map_trail(&run_with_trail(text), &program.symbols, &net) {
            Err(SpinError::UnmappableStep { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mut no_trail = run_with_trail("");
        no_trail.trail = None;
        assert!(matches!(map_trail(&no_trail, &program.symbols, &net), Err(SpinError::NoTrail)));
    }

    #[test]
    fn cycle_marker_sets_lasso() {
        let ev = parse_trail("  1:\tproc  0 (Workflow:1) m.pml:1 (state 1)\t[lastFired = 1]\n<<<<<START OF CYCLE>>>>>\n");
        assert_eq!(ev.last(), Some(&TrailEvent::CycleStart));
        assert_eq!(ev[0], TrailEvent::Step { line: 1, fired: Some(1) });
    }

    #[test]
    fn missing_executable() {
        let cfg = SpinConfig { executable: Some("/nonexistent/spin".into()), ..SpinConfig::default() };
        assert!(matches!(locate_spin(&cfg), Err(SpinError::SpinNotFound)));
        let (_, program) = fixture();
        assert!(matches!(run_spin(&program, None, &cfg), Err(SpinError::SpinNotFound)));
        assert!(matches!(run_spin(&program, Some("nope"), &cfg), Err(SpinError::UnknownProperty(_))));
    }
}
