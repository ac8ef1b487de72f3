//! SMT-LIB 2 rendering of quantifier-free queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::model::Decl;
use crate::logic::{CmpOp, Formula, Sort, Term};

const RESERVED: &[&str] = &[
    "true", "false", "and", "or", "not", "=>", "=", "distinct", "ite", "let", "forall", "exists",
    "select", "store", "div", "mod", "abs", "par", "as", "_", "!", "lambda", "match", "Int",
    "Bool", "Array",
];

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SmtError {
    #[error("symbol '{0}' collides with a solver builtin")]
    Builtin(String),
    #[error("symbol '{name}' used with two signatures")]
    Clash { name: String },
    #[error("query is not quantifier-free")]
    Quantified,
    #[error("query contains hole ?{0}")]
    Hole(String),
}

/// Declarations needed by `f`: uninterpreted sorts and symbols.
pub fn declarations(f: &Formula) -> Result<(BTreeSet<String>, Vec<Decl>), SmtError> {
    let mut c = Collector::default();
    c.formula(f)?;
    Ok((c.sorts, c.decls.into_values().collect()))
}

#[derive(Default)]
struct Collector {
    sorts: BTreeSet<String>,
    decls: BTreeMap<String, Decl>,
}

impl Collector {
    fn sort(&mut self, s: &Sort) {
        if let Sort::Uninterpreted(u) = s {
            self.sorts.insert(u.clone());
        }
    }

    fn declare(&mut self, name: &str, args: Vec<Sort>, ret: Sort) -> Result<(), SmtError> {
        if RESERVED.contains(&name) {
            return Err(SmtError::Builtin(name.to_string()));
        }
        for s in args.iter().chain([&ret]) {
            self.sort(s);
        }
        let d = Decl {
            name: name.to_string(),
            args,
            ret,
        };
        match self.decls.get(name) {
            Some(old) if *old != d => Err(SmtError::Clash {
                name: name.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                self.decls.insert(name.to_string(), d);
                Ok(())
            }
        }
    }

    fn term(&mut self, t: &Term) -> Result<(), SmtError> {
        match t {
            Term::Var(n, s) => self.declare(n, vec![], s.clone()),
            Term::Int(_) => Ok(()),
            Term::Add(a, b) | Term::Sub(a, b) | Term::Select(a, b) => {
                self.term(a)?;
                self.term(b)
            }
            Term::Mul(_, a) => self.term(a),
            Term::App(f, args, s) => {
                for a in args {
                    self.term(a)?;
                }
                self.declare(f, args.iter().map(Term::sort).collect(), s.clone())
            }
            Term::Store(a, i, v) => {
                self.term(a)?;
                self.term(i)?;
                self.term(v)
            }
            Term::Ite(c, a, b) => {
                self.formula(c)?;
                self.term(a)?;
                self.term(b)
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> Result<(), SmtError> {
        match f {
            Formula::True | Formula::False => Ok(()),
            Formula::Cmp(_, a, b) => {
                self.term(a)?;
                self.term(b)
            }
            Formula::Pred(p, args) => {
                for a in args {
                    self.term(a)?;
                }
                self.declare(p, args.iter().map(Term::sort).collect(), Sort::Bool)
            }
            Formula::Not(a) => self.formula(a),
            Formula::And(v) | Formula::Or(v) => v.iter().try_for_each(|g| self.formula(g)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                self.formula(a)?;
                self.formula(b)
            }
            Formula::Forall(_) | Formula::Exists(_) => Err(SmtError::Quantified),
            Formula::Hole(h) => Err(SmtError::Hole(h.to_string())),
        }
    }
}

pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| {
            c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
        });
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn sort(s: &Sort) -> String {
    match s {
        Sort::Int => "Int".into(),
        Sort::Bool => "Bool".into(),
        Sort::Array => "(Array Int Int)".into(),
        Sort::Uninterpreted(u) => symbol(u),
    }
}

fn int(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

pub fn term(t: &Term) -> String {
    match t {
        Term::Var(n, _) => symbol(n),
        Term::Int(n) => int(*n),
        Term::Add(a, b) => format!("(+ {} {})", term(a), term(b)),
        Term::Sub(a, b) => format!("(- {} {})", term(a), term(b)),
        Term::Mul(c, a) => format!("(* {} {})", int(*c), term(a)),
        Term::App(f, args, _) if args.is_empty() => symbol(f),
        Term::App(f, args, _) => {
            let args: Vec<String> = args.iter().map(term).collect();
            format!("({} {})", symbol(f), args.join(" "))
        }
        Term::Select(a, i) => format!("(select {} {})", term(a), term(i)),
        Term::Store(a, i, v) => format!("(store {} {} {})", term(a), term(i), term(v)),
        Term::Ite(c, a, b) => format!("(ite {} {} {})", formula(c), term(a), term(b)),
    }
}

pub fn formula(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Cmp(op, a, b) => {
            let (a, b) = (term(a), term(b));
            match op {
                CmpOp::Eq => format!("(= {a} {b})"),
                CmpOp::Ne => format!("(not (= {a} {b}))"),
                CmpOp::Lt => format!("(< {a} {b})"),
                CmpOp::Le => format!("(<= {a} {b})"),
                CmpOp::Gt => format!("(> {a} {b})"),
                CmpOp::Ge => format!("(>= {a} {b})"),
            }
        }
        Formula::Pred(p, args) if args.is_empty() => symbol(p),
        Formula::Pred(p, args) => {
            let args: Vec<String> = args.iter().map(term).collect();
            format!("({} {})", symbol(p), args.join(" "))
        }
        Formula::Not(a) => format!("(not {})", formula(a)),
        Formula::And(v) if v.is_empty() => "true".into(),
        Formula::Or(v) if v.is_empty() => "false".into(),
        Formula::And(v) | Formula::Or(v) => {
            let op = if matches!(f, Formula::And(_)) { "and" } else { "or" };
            let parts: Vec<String> = v.iter().map(formula).collect();
            format!("({op} {})", parts.join(" "))
        }
        Formula::Implies(a, b) => format!("(=> {} {})", formula(a), formula(b)),
        Formula::Iff(a, b) => format!("(= {} {})", formula(a), formula(b)),
        // Rejected by `declarations` before rendering.
        Formula::Forall(_) | Formula::Exists(_) | Formula::Hole(_) => f.to_string(),
    }
}

/// Full satisfiability script for `f`, asking for a model when satisfiable.
pub fn script(f: &Formula) -> Result<(String, Vec<Decl>), SmtError> {
    let (sorts, decls) = declarations(f)?;
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    out.push_str("(set-logic QF_AUFLIA)\n");
    for s in &sorts {
        let _ = writeln!(out, "(declare-sort {} 0)", symbol(s));
    }
    for d in &decls {
        let args: Vec<String> = d.args.iter().map(sort).collect();
        let _ = writeln!(
            out,
            "(declare-fun {} ({}) {})",
            symbol(&d.name),
            args.join(" "),
            sort(&d.ret)
        );
    }
    let _ = writeln!(out, "(assert {})", formula(f));
    out.push_str("(check-sat)\n(get-model)\n(exit)\n");
    Ok((out, decls))
}
