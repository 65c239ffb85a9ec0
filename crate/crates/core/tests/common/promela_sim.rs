//! Interpreter for the Promela subset the translator emits: byte globals,
//! the start `atomic` block, guarded `atomic` arms, `++`/`--`, bound
//! asserts, the saturating `completed` update and `lastFired` assignments.
//! Any other construct makes parsing fail, so the test notices when the
//! translator's output drifts outside what was checked.

use std::collections::{BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone)]
enum Stmt {
    Inc(usize),
    Dec(usize),
    AssertBelowBound(usize),
    Complete,
    LastFired(u32),
}

#[derive(Debug, Clone)]
struct Arm {
    guard: Vec<usize>,
    body: Vec<Stmt>,
}

#[derive(Debug)]
pub struct Program {
    pub vars: Vec<String>,
    bound: u32,
    init: Vec<(usize, u32)>,
    arms: Vec<Arm>,
    /// `lastFired` codes, per arm.
    pub arm_codes: Vec<u32>,
}

/// `(tokens in declaration order, completed)`.
pub type SimState = (Vec<u32>, u32);

pub fn parse(src: &str) -> Result<Program, String> {
    let mut vars = Vec::new();
    let mut bound = None;
    for l in src.lines() {
        if let Some(v) = l.strip_prefix("#define BOUND ") {
            bound = Some(v.trim().parse().map_err(|_| format!("bad BOUND: {l}"))?);
        }
        if let Some(v) = l.strip_prefix("byte tok_") {
            vars.push(format!("tok_{}", v.trim_end_matches(';')));
        }
    }
    let bound = bound.ok_or("no BOUND")?;
    let var = |name: &str| vars.iter().position(|v| v == name).ok_or_else(|| format!("unknown variable {name}"));

    let body_start = src.find("active proctype Workflow()").ok_or("no proctype")?;
    let lines: Vec<&str> = src[body_start..].lines().collect();
    let mut i = lines.iter().position(|l| l.trim() == "atomic {").ok_or("no init block")? + 1;
    let mut init = Vec::new();
    while lines[i].trim() != "};" {
        let s = lines[i].trim().trim_end_matches(';');
        let (v, n) = s.split_once(" = ").ok_or_else(|| format!("bad init: {s}"))?;
        init.push((var(v)?, n.parse().map_err(|_| format!("bad init: {s}"))?));
        i += 1;
    }
    if lines.get(i + 1).map(|l| l.trim()) != Some("do") {
        return Err("expected do after init".into());
    }
    i += 2;
    let mut arms = Vec::new();
    let mut arm_codes = Vec::new();
    loop {
        let l = lines.get(i).ok_or("unterminated do")?.trim();
        if l.starts_with("/*") {
            i += 1;
            continue;
        }
        if l == ":: else -> break" {
            break;
        }
        if l != ":: atomic {" {
            return Err(format!("unexpected line in do: {l}"));
        }
        let guard_line = lines[i + 1].trim().strip_suffix(" ->").ok_or("guard without ->")?;
        let guard = guard_line
            .split(" && ")
            .map(|g| var(g.strip_suffix(" > 0").ok_or_else(|| format!("bad guard {g}"))?))
            .collect::<Result<Vec<_>, _>>()?;
        i += 2;
        let mut body = Vec::new();
        let mut code = None;
        while lines[i].trim() != "}" {
            let s = lines[i].trim().trim_end_matches(';');
            let stmt = if let Some(v) = s.strip_suffix("++") {
                Stmt::Inc(var(v)?)
            } else if let Some(v) = s.strip_suffix("--") {
                Stmt::Dec(var(v)?)
            } else if let Some(inner) = s.strip_prefix("assert(").and_then(|r| r.strip_suffix(" < BOUND)")) {
                Stmt::AssertBelowBound(var(inner)?)
            } else if s == "completed = (completed < 255 -> completed + 1 : 255)" {
                Stmt::Complete
            } else if let Some(c) = s.strip_prefix("lastFired = ") {
                let c = c.parse().map_err(|_| format!("bad code {c}"))?;
                code = Some(c);
                Stmt::LastFired(c)
            } else {
                return Err(format!("unsupported statement: {s}"));
            };
            body.push(stmt);
            i += 1;
        }
        arms.push(Arm { guard, body });
        arm_codes.push(code.ok_or("arm without lastFired")?);
        i += 1;
    }
    if lines.get(i + 1).map(|l| l.trim()) != Some("od;") {
        return Err("expected od;".into());
    }
    Ok(Program { vars, bound, init, arms, arm_codes })
}

impl Program {
    pub fn initial(&self) -> SimState {
        let mut t = vec![0; self.vars.len()];
        for &(v, n) in &self.init {
            t[v] = n;
        }
        (t, 0)
    }

    /// Successors of `s`: `Ok(next)` per enabled arm, `Err(())` where a
    /// bound assert fails (SPIN would report an assertion violation).
    pub fn step(&self, s: &SimState) -> Vec<(usize, Result<SimState, ()>)> {
        let mut out = Vec::new();
        for (k, arm) in self.arms.iter().enumerate() {
            if !arm.guard.iter().all(|&v| s.0[v] > 0) {
                continue;
            }
            let (mut t, mut c) = s.clone();
            let mut ok = true;
            for st in &arm.body {
                match *st {
                    Stmt::Inc(v) => t[v] += 1,
                    Stmt::Dec(v) => t[v] -= 1,
                    Stmt::AssertBelowBound(v) => {
                        if t[v] >= self.bound {
                            ok = false;
                            break;
                        }
                    }
                    Stmt::Complete => c = (c + 1).min(255),
                    Stmt::LastFired(_) => {}
                }
            }
            out.push((k, if ok { Ok((t, c)) } else { Err(()) }));
        }
        out
    }

    /// All reachable states, whether some bound assert can fail, and the
    /// states where the loop breaks.
    pub fn explore(&self) -> (BTreeSet<SimState>, bool, BTreeSet<SimState>) {
        let init = self.initial();
        let mut seen: HashMap<SimState, ()> = HashMap::from([(init.clone(), ())]);
        let mut q = VecDeque::from([init]);
        let mut assert_fails = false;
        let mut breaks = BTreeSet::new();
        while let Some(s) = q.pop_front() {
            let succ = self.step(&s);
            if succ.is_empty() {
                breaks.insert(s.clone());
            }
            for (_, r) in succ {
                match r {
                    Ok(n) => {
                        if seen.insert(n.clone(), ()).is_none() {
                            q.push_back(n);
                        }
                    }
                    Err(()) => assert_fails = true,
                }
            }
        }
        (seen.into_keys().collect(), assert_fails, breaks)
    }
}
