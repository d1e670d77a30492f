//! Running an external MaxSAT solver on a DIMACS WCNF file.

use std::io::Write;
use std::process::Command;

use crate::formula::{Lit, Wcnf};

use super::{Model, SolveError};

/// A solver command line. The WCNF file path is appended as the last
/// argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalSolver {
    /// Split a command line on whitespace: `"cqa solve"`.
    pub fn parse(command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(ExternalSolver {
            program,
            args: parts.collect(),
        })
    }
}

fn bad(message: impl Into<String>, raw: &str) -> SolveError {
    SolveError::External {
        message: message.into(),
        output: raw.to_string(),
    }
}

/// Parse `s`, `o` and `v` lines. `v` lines may list literals (`v 1 -2 3 0`)
/// or give one binary string (`v 101`). Unlisted variables are false.
pub fn parse_solver_output(raw: &str, num_vars: u32) -> Result<(Option<u64>, Vec<bool>), SolveError> {
    let mut status: Option<String> = None;
    let mut cost: Option<u64> = None;
    let mut assignment = vec![false; num_vars as usize];
    let mut saw_v = false;
    for line in raw.lines() {
        let line = line.trim();
        let Some((tag, rest)) = line.split_once(char::is_whitespace).or(Some((line, ""))) else {
            continue;
        };
        let rest = rest.trim();
        match tag {
            "s" => status = Some(rest.to_string()),
            "o" => {
                cost = Some(
                    rest.parse()
                        .map_err(|_| bad(format!("bad cost line `{line}`"), raw))?,
                )
            }
            "v" => {
                saw_v = true;
                let toks: Vec<&str> = rest.split_whitespace().collect();
                let binary = toks.len() == 1
                    && toks[0].len() == num_vars as usize
                    && toks[0].len() > 1
                    && toks[0].bytes().all(|b| b == b'0' || b == b'1');
                if binary {
                    for (i, b) in toks[0].bytes().enumerate() {
                        assignment[i] = b == b'1';
                    }
                    continue;
                }
                for t in toks {
                    let d: i64 = t.parse().map_err(|_| bad(format!("bad literal `{t}`"), raw))?;
                    if d == 0 {
                        continue;
                    }
                    let l = Lit::from_dimacs(d);
                    let i = l.var().index();
                    if i >= assignment.len() {
                        return Err(bad(format!("literal {d} out of range"), raw));
                    }
                    assignment[i] = !l.is_neg();
                }
            }
            "c" | "" => {}
            other => return Err(bad(format!("unexpected line tag `{other}`"), raw)),
        }
    }
    match status.as_deref() {
        Some("OPTIMUM FOUND") | Some("SATISFIABLE") => {}
        Some("UNSATISFIABLE") => return Err(SolveError::HardUnsat),
        Some("UNKNOWN") => return Err(SolveError::Unknown),
        Some(s) => return Err(bad(format!("unexpected status `{s}`"), raw)),
        None => return Err(bad("no `s` line", raw)),
    }
    if !saw_v && num_vars > 0 {
        return Err(bad("no `v` line", raw));
    }
    Ok((cost, assignment))
}

/// Solve `w` with an external program and check the model locally.
pub fn external_solve(solver: &ExternalSolver, w: &Wcnf) -> Result<Model, SolveError> {
    let mut file = tempfile::Builder::new()
        .prefix("cqa-")
        .suffix(".wcnf")
        .tempfile()
        .map_err(|e| SolveError::Io(e.to_string()))?;
    file.write_all(w.to_dimacs().as_bytes())
        .map_err(|e| SolveError::Io(e.to_string()))?;
    file.flush().map_err(|e| SolveError::Io(e.to_string()))?;
    let out = Command::new(&solver.program)
        .args(&solver.args)
        .arg(file.path())
        .output()
        .map_err(|e| SolveError::Io(format!("{}: {e}", solver.program)))?;
    let raw = String::from_utf8_lossy(&out.stdout).into_owned();
    // SAT competition exit codes: 10 satisfiable, 20 unsatisfiable, 30 optimum.
    let code = out.status.code();
    if !matches!(code, Some(0) | Some(10) | Some(20) | Some(30)) {
        let mut all = raw.clone();
        all.push_str(&String::from_utf8_lossy(&out.stderr));
        return Err(bad(format!("solver exited with {:?}", code), &all));
    }
    let (reported, assignment) = parse_solver_output(&raw, w.num_vars)?;
    if !w.hard_satisfied_by(&assignment) {
        return Err(bad("model violates a hard clause", &raw));
    }
    let cost = w.cost(&assignment);
    if let Some(r) = reported {
        if r != cost {
            return Err(bad(format!("reported cost {r} but model costs {cost}"), &raw));
        }
    }
    Ok(Model { assignment, cost })
}
