//! Satisfiability checks for quantifier-free queries through an external
//! SMT solver speaking SMT-LIB 2 on stdin.

mod model;
mod sexpr;
mod smtlib;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use crate::logic::Formula;

pub use model::{ArrayValue, Decl, EvalError, Model, Value};
pub use sexpr::{parse_all, SExpr};
pub use smtlib::{declarations, script, SmtError};

pub const SOLVER_ENV: &str = "NPI_SOLVER";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub timeout: Duration,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            path: std::env::var_os(SOLVER_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("z3")),
            timeout: Duration::from_secs(10),
        }
    }
}

impl SolverConfig {
    fn args(&self) -> Vec<&'static str> {
        let name = self
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if name.starts_with("cvc") {
            vec!["--lang=smt2", "--produce-models"]
        } else {
            vec!["-in", "-smt2"]
        }
    }
}

#[derive(Clone, Debug)]
pub enum DecisionOutcome {
    /// The query is unsatisfiable.
    Proved,
    /// The query is satisfiable; the model makes it true.
    Refuted(Model),
    /// Anything else, with the script and solver output for diagnosis.
    EngineFailure(String),
}

impl DecisionOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, DecisionOutcome::Proved)
    }
}

fn run(cfg: &SolverConfig, input: String) -> Result<String, String> {
    let mut child = Command::new(&cfg.path)
        .args(cfg.args())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot start solver '{}': {e}", cfg.path.display()))?;
    let mut stdin = child.stdin.take().unwrap();
    let mut stdout = child.stdout.take().unwrap();
    let mut stderr = child.stderr.take().unwrap();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut out = String::new();
        let mut err = String::new();
        let _ = stdout.read_to_string(&mut out);
        let _ = stderr.read_to_string(&mut err);
        let _ = tx.send((out, err));
    });
    let res = match rx.recv_timeout(cfg.timeout) {
        Ok((out, err)) => {
            let _ = child.wait();
            if out.trim().is_empty() && !err.trim().is_empty() {
                Err(format!("solver stderr: {}", err.trim()))
            } else {
                Ok(out)
            }
        }
        Err(_) => {
            let _ = child.kill();
            let _ = child.wait();
            Err(format!("solver timed out after {:?}", cfg.timeout))
        }
    };
    let _ = writer.join();
    res
}

/// Decides satisfiability of a quantifier-free formula. A returned model is
/// completed with defaults and checked to satisfy `qf` before it is trusted.
pub fn check(qf: &Formula, cfg: &SolverConfig) -> DecisionOutcome {
    let (text, decls) = match script(qf) {
        Ok(s) => s,
        Err(e) => return DecisionOutcome::EngineFailure(e.to_string()),
    };
    let fail = |why: String, out: &str| {
        DecisionOutcome::EngineFailure(format!("{why}\n--- query\n{text}--- output\n{out}"))
    };
    let out = match run(cfg, text.clone()) {
        Ok(o) => o,
        Err(e) => return fail(e, ""),
    };
    let items = match parse_all(&out) {
        Ok(v) => v,
        Err(e) => return fail(format!("unreadable solver output: {e}"), &out),
    };
    match items.first().and_then(SExpr::atom) {
        Some("unsat") => DecisionOutcome::Proved,
        Some("sat") => {
            let Some(m) = items.get(1) else {
                return fail("missing model".into(), &out);
            };
            let mut model = match Model::from_sexpr(m) {
                Ok(m) => m,
                Err(e) => return fail(format!("unreadable model: {e}"), &out),
            };
            model.complete(&decls);
            match model.eval_formula(qf) {
                Ok(true) => DecisionOutcome::Refuted(model),
                Ok(false) => fail("model does not satisfy the query".into(), &out),
                Err(e) => fail(format!("model evaluation failed: {e}"), &out),
            }
        }
        Some(other) => fail(format!("solver answered '{other}'"), &out),
        None => fail("solver gave no answer".into(), &out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{CmpOp, Sort, Term};

    pub(crate) fn solver_available() -> bool {
        Command::new(SolverConfig::default().path)
            .arg("-version")
            .output()
            .is_ok()
    }

    #[test]
    fn unsat_and_sat() {
        if !solver_available() {
            eprintln!("skipping: no solver");
            return;
        }
        let cfg = SolverConfig::default();
        let x = Term::int_var("x'1");
        let f = Formula::And(vec![
            Formula::cmp(CmpOp::Gt, x.clone(), Term::Int(3)),
            Formula::cmp(CmpOp::Lt, x.clone(), Term::Int(2)),
        ]);
        assert!(check(&f, &cfg).is_proved());
        let a = Term::var("a", Sort::Array);
        let g = Formula::And(vec![
            Formula::cmp(CmpOp::Eq, Term::select(a.clone(), x.clone()), Term::Int(-4)),
            Formula::cmp(CmpOp::Gt, x.clone(), Term::Int(10)),
            Formula::Pred("p".into(), vec![Term::App("f".into(), vec![x.clone()], Sort::Int)]),
        ]);
        let DecisionOutcome::Refuted(m) = check(&g, &cfg) else {
            panic!("expected sat")
        };
        let Value::Int(v) = m.eval_term(&x).unwrap() else { panic!() };
        assert!(v > 10);
        assert_eq!(m.eval_term(&Term::select(a, x)).unwrap(), Value::Int(-4));
    }

    #[test]
    fn missing_binary_is_engine_failure() {
        let cfg = SolverConfig {
            path: PathBuf::from("/nonexistent/solver"),
            timeout: Duration::from_secs(1),
        };
        assert!(matches!(
            check(&Formula::True, &cfg),
            DecisionOutcome::EngineFailure(_)
        ));
    }
}
