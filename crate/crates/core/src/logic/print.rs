//! Surface-syntax printer. Output re-parses to the same AST.

use std::fmt::{self, Display, Formatter, Write};

use super::{CmpOp, Formula, Program, Quantified, Sort, Stmt, Term, Trigger};

impl Display for Sort {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("int"),
            Sort::Bool => f.write_str("bool"),
            Sort::Array => f.write_str("[int]int"),
            Sort::Uninterpreted(n) => f.write_str(n),
        }
    }
}

impl Display for CmpOp {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

// Term precedence levels.
const T_ADD: u8 = 1;
const T_MUL: u8 = 2;
const T_UNARY: u8 = 3;
const T_POSTFIX: u8 = 4;

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Add(..) | Term::Sub(..) => T_ADD,
        Term::Mul(..) => T_MUL,
        Term::Int(n) if *n < 0 => T_UNARY,
        _ => T_POSTFIX,
    }
}

fn write_term(out: &mut Formatter<'_>, t: &Term, min: u8) -> fmt::Result {
    if term_prec(t) < min {
        out.write_char('(')?;
        write_term(out, t, 0)?;
        return out.write_char(')');
    }
    match t {
        Term::Var(n, _) => out.write_str(n),
        Term::Int(n) => write!(out, "{n}"),
        Term::Add(a, b) => {
            write_term(out, a, T_ADD)?;
            out.write_str(" + ")?;
            write_term(out, b, T_MUL)
        }
        Term::Sub(a, b) => {
            write_term(out, a, T_ADD)?;
            out.write_str(" - ")?;
            write_term(out, b, T_MUL)
        }
        Term::Mul(c, a) => {
            write!(out, "{c} * ")?;
            write_term(out, a, T_UNARY)
        }
        Term::App(f, args, _) => {
            write!(out, "{f}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_term(out, a, 0)?;
            }
            out.write_char(')')
        }
        Term::Select(a, i) => {
            write_term(out, a, T_POSTFIX)?;
            out.write_char('[')?;
            write_term(out, i, 0)?;
            out.write_char(']')
        }
        Term::Store(a, i, v) => {
            write_term(out, a, T_POSTFIX)?;
            out.write_char('[')?;
            write_term(out, i, 0)?;
            out.write_str(" := ")?;
            write_term(out, v, 0)?;
            out.write_char(']')
        }
        Term::Ite(c, a, b) => {
            out.write_str("(if ")?;
            write_formula(out, c, 0)?;
            out.write_str(" then ")?;
            write_term(out, a, 0)?;
            out.write_str(" else ")?;
            write_term(out, b, 0)?;
            out.write_char(')')
        }
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_term(f, self, 0)
    }
}

// Formula precedence levels.
const F_IFF: u8 = 0;
const F_IMP: u8 = 1;
const F_OR: u8 = 2;
const F_AND: u8 = 3;
const F_CMP: u8 = 4;
const F_UNARY: u8 = 5;
const F_ATOM: u8 = 6;

fn formula_prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => F_IFF,
        Formula::Implies(..) => F_IMP,
        Formula::Or(v) if v.len() >= 2 => F_OR,
        Formula::And(v) if v.len() >= 2 => F_AND,
        Formula::Cmp(..) => F_CMP,
        Formula::Not(..) => F_UNARY,
        _ => F_ATOM,
    }
}

fn write_formula(out: &mut Formatter<'_>, f: &Formula, min: u8) -> fmt::Result {
    if formula_prec(f) < min {
        out.write_char('(')?;
        write_formula(out, f, 0)?;
        return out.write_char(')');
    }
    match f {
        Formula::True => out.write_str("true"),
        Formula::False => out.write_str("false"),
        Formula::Hole(h) => write!(out, "?{h}"),
        Formula::Cmp(op, a, b) => {
            write_term(out, a, T_ADD)?;
            write!(out, " {op} ")?;
            write_term(out, b, T_ADD)
        }
        Formula::Pred(p, args) => {
            write!(out, "{p}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_term(out, a, 0)?;
            }
            out.write_char(')')
        }
        Formula::Not(a) => {
            out.write_char('!')?;
            write_formula(out, a, F_UNARY)
        }
        // Degenerate connectives have no surface syntax of their own.
        Formula::And(v) if v.is_empty() => out.write_str("true"),
        Formula::Or(v) if v.is_empty() => out.write_str("false"),
        Formula::And(v) | Formula::Or(v) if v.len() == 1 => write_formula(out, &v[0], min),
        Formula::And(v) => write_chain(out, v, " && ", F_AND + 1),
        Formula::Or(v) => write_chain(out, v, " || ", F_OR + 1),
        Formula::Implies(a, b) => {
            write_formula(out, a, F_IMP + 1)?;
            out.write_str(" ==> ")?;
            write_formula(out, b, F_IMP)
        }
        Formula::Iff(a, b) => {
            write_formula(out, a, F_IMP)?;
            out.write_str(" <==> ")?;
            write_formula(out, b, F_IMP)
        }
        Formula::Forall(q) => write_quant(out, "forall", q),
        Formula::Exists(q) => write_quant(out, "exists", q),
    }
}

fn write_chain(out: &mut Formatter<'_>, v: &[Formula], sep: &str, min: u8) -> fmt::Result {
    for (i, g) in v.iter().enumerate() {
        if i > 0 {
            out.write_str(sep)?;
        }
        write_formula(out, g, min)?;
    }
    Ok(())
}

fn write_quant(out: &mut Formatter<'_>, kw: &str, q: &Quantified) -> fmt::Result {
    write!(out, "({kw} ")?;
    for (i, (n, s)) in q.vars.iter().enumerate() {
        if i > 0 {
            out.write_str(", ")?;
        }
        write!(out, "{n}: {s}")?;
    }
    out.write_str(" :: ")?;
    for t in &q.triggers {
        out.write_str("{ ")?;
        match t {
            Trigger::Term(t) => write_term(out, t, 0)?,
            Trigger::Pred(p, args) => {
                write_formula(out, &Formula::Pred(p.clone(), args.clone()), 0)?
            }
        }
        out.write_str(" } ")?;
    }
    write_formula(out, &q.body, 0)?;
    out.write_char(')')
}

impl Display for Formula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 0)
    }
}

fn write_stmts(out: &mut String, stmts: &[Stmt], indent: usize) {
    let pad = "  ".repeat(indent);
    for s in stmts {
        match s {
            Stmt::Assign(x, e) => {
                let _ = writeln!(out, "{pad}{x} := {e};");
            }
            Stmt::ArrayAssign(x, i, v) => {
                let _ = writeln!(out, "{pad}{x}[{i}] := {v};");
            }
            Stmt::Havoc(x) => {
                let _ = writeln!(out, "{pad}havoc {x};");
            }
            Stmt::Assume(f) => {
                let _ = writeln!(out, "{pad}assume {f};");
            }
            Stmt::Assert(f) => {
                let _ = writeln!(out, "{pad}assert {f};");
            }
            Stmt::If(c, a, b) => {
                let _ = writeln!(out, "{pad}if ({c}) {{");
                write_stmts(out, a, indent + 1);
                if b.is_empty() {
                    let _ = writeln!(out, "{pad}}}");
                } else {
                    let _ = writeln!(out, "{pad}}} else {{");
                    write_stmts(out, b, indent + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
            Stmt::While { cond, hole, body } => {
                let _ = writeln!(out, "{pad}while ({cond}) invariant ?{hole}; {{");
                write_stmts(out, body, indent + 1);
                let _ = writeln!(out, "{pad}}}");
            }
            Stmt::Cut(h) => {
                let _ = writeln!(out, "{pad}invariant ?{h};");
            }
        }
    }
}

/// Renders statements in surface syntax, one per line.
pub fn stmts_to_string(stmts: &[Stmt]) -> String {
    let mut s = String::new();
    write_stmts(&mut s, stmts, 0);
    s
}

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for t in &self.types {
            writeln!(f, "type {t};")?;
        }
        for (n, s) in &self.vars {
            writeln!(f, "var {n}: {s};")?;
        }
        for d in &self.functions {
            let args: Vec<String> = d.args.iter().map(|s| s.to_string()).collect();
            writeln!(f, "function {}({}): {};", d.name, args.join(", "), d.ret)?;
        }
        for a in &self.axioms {
            writeln!(f, "axiom {a};")?;
        }
        let p = &self.procedure;
        writeln!(f, "procedure {}()", p.name)?;
        for r in &p.requires {
            writeln!(f, "  requires {r};")?;
        }
        for e in &p.ensures {
            writeln!(f, "  ensures {e};")?;
        }
        writeln!(f, "{{")?;
        let mut body = String::new();
        write_stmts(&mut body, &p.body, 1);
        f.write_str(&body)?;
        writeln!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;

    #[test]
    fn precedence_survives_printing() {
        let src = "var x: int; var y: int; var a: [int]int;
            procedure t() {
              assert x - (y - 1) == 2 * (x + y) && !(x < y) ==> (x > 0 || y > 0) ==> a[x := 3][x] == 3;
            }";
        let p = parse_program(src).unwrap();
        let q = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, q);
    }
}
