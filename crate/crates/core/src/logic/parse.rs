//! Lexer, parser and sort-checking elaborator for `.npl` programs.
//!
//! Parsing produces an untyped, positioned expression tree first; elaboration
//! then resolves identifiers, checks sorts and splits terms from formulas.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    CmpOp, Formula, FunDecl, HoleId, Procedure, Program, Quantified, Sort, Stmt, Term, Trigger,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line: pos.line,
        col: pos.col,
        msg: msg.into(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i128),
    Hole(String),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: &[&str] = &[
    "<==>", "==>", ":=", "::", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "!", "+", "-", "*",
    "(", ")", "[", "]", "{", "}", ",", ";", ":",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '.' | '@' | '\'' | '#')
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, 2);
            loop {
                if i + 1 >= chars.len() {
                    return err(pos, "unterminated block comment");
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, 2);
                    break;
                }
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(&mut i, &mut line, &mut col, 1);
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<i128>() {
                Ok(n) if n <= i64::MAX as i128 + 1 => out.push((Tok::Int(n), pos)),
                _ => return err(pos, format!("integer literal {text} out of range")),
            }
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                advance(&mut i, &mut line, &mut col, 1);
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if c == '?' {
            advance(&mut i, &mut line, &mut col, 1);
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                advance(&mut i, &mut line, &mut col, 1);
            }
            if start == i {
                return err(pos, "expected hole name after '?'");
            }
            out.push((Tok::Hole(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 4)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                out.push((Tok::Sym(s), pos));
                advance(&mut i, &mut line, &mut col, s.len());
            }
            None => return err(pos, format!("unexpected character '{c}'")),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Untyped expressions

#[derive(Clone, Debug)]
enum SortSyn {
    Int,
    Bool,
    Array,
    Named(String),
}

#[derive(Clone, Debug)]
struct Expr {
    kind: ExprKind,
    pos: Pos,
}

#[derive(Clone, Debug)]
enum ExprKind {
    Int(i128),
    Bool(bool),
    Ident(String),
    Call(String, Vec<Expr>),
    Hole(String),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(&'static str, Box<Expr>, Box<Expr>),
    /// Flattened `&&` / `||` chains.
    Chain(&'static str, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Update(Box<Expr>, Box<Expr>, Box<Expr>),
    Quant {
        forall: bool,
        vars: Vec<(String, SortSyn, Pos)>,
        triggers: Vec<Expr>,
        body: Box<Expr>,
    },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug)]
enum StmtSyn {
    Assign(String, Expr, Pos),
    ArrayAssign(String, Expr, Expr, Pos),
    Havoc(String, Pos),
    Assume(Expr),
    Assert(Expr),
    If(Expr, Vec<StmtSyn>, Vec<StmtSyn>),
    While(Expr, String, Vec<StmtSyn>, Pos),
    Cut(String, Pos),
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            err(self.pos(), format!("expected '{s}', found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            err(self.pos(), format!("expected '{s}', found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            t => err(self.pos(), format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn hole(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Hole(s) => {
                self.bump();
                Ok(s)
            }
            t => err(self.pos(), format!("expected hole '?name', found {}", describe(&t))),
        }
    }

    fn sort(&mut self) -> Result<SortSyn, ParseError> {
        if self.eat_sym("[") {
            self.expect_sort_kw("int")?;
            self.expect_sym("]")?;
            self.expect_sort_kw("int")?;
            return Ok(SortSyn::Array);
        }
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(s) if s == "int" || s == "Int" => Ok(SortSyn::Int),
            Tok::Ident(s) if s == "bool" || s == "Bool" => Ok(SortSyn::Bool),
            Tok::Ident(s) if !is_keyword(&s) => Ok(SortSyn::Named(s)),
            t => err(pos, format!("expected sort, found {}", describe(&t))),
        }
    }

    fn expect_sort_kw(&mut self, s: &str) -> Result<(), ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(x) if x.eq_ignore_ascii_case(s) => Ok(()),
            t => err(pos, format!("expected '{s}', found {}", describe(&t))),
        }
    }

    // Expressions, lowest precedence first.

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.implies()?;
        if self.is_sym("<==>") {
            let pos = self.pos();
            self.bump();
            let rhs = self.implies()?;
            if self.is_sym("<==>") {
                return err(self.pos(), "'<==>' is non-associative; add parentheses");
            }
            return Ok(Expr {
                kind: ExprKind::Bin("<==>", Box::new(lhs), Box::new(rhs)),
                pos,
            });
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.chain("||")?;
        if self.is_sym("==>") {
            let pos = self.pos();
            self.bump();
            let rhs = self.implies()?;
            return Ok(Expr {
                kind: ExprKind::Bin("==>", Box::new(lhs), Box::new(rhs)),
                pos,
            });
        }
        Ok(lhs)
    }

    fn chain(&mut self, op: &'static str) -> Result<Expr, ParseError> {
        let next = |p: &mut Parser| {
            if op == "||" {
                p.chain("&&")
            } else {
                p.comparison()
            }
        };
        let first = next(self)?;
        if !self.is_sym(op) {
            return Ok(first);
        }
        let pos = first.pos;
        let mut parts = vec![first];
        while self.eat_sym(op) {
            parts.push(next(self)?);
        }
        Ok(Expr {
            kind: ExprKind::Chain(op, parts),
            pos,
        })
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        for op in ["==", "!=", "<=", ">=", "<", ">"] {
            if self.is_sym(op) {
                let pos = self.pos();
                self.bump();
                let rhs = self.additive()?;
                if ["==", "!=", "<=", ">=", "<", ">"].iter().any(|o| self.is_sym(o)) {
                    return err(self.pos(), "comparisons do not chain; use '&&'");
                }
                let op = SYMBOLS.iter().find(|s| **s == op).unwrap();
                return Ok(Expr {
                    kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                    pos,
                });
            }
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.is_sym("+") {
                "+"
            } else if self.is_sym("-") {
                "-"
            } else {
                return Ok(lhs);
            };
            let pos = self.pos();
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Expr {
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.is_sym("*") {
            let pos = self.pos();
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr {
                kind: ExprKind::Bin("*", Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        if self.eat_sym("-") {
            let e = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(e)),
                pos,
            });
        }
        if self.eat_sym("!") {
            let e = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Not(Box::new(e)),
                pos,
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while self.is_sym("[") {
            let pos = self.pos();
            self.bump();
            let idx = self.expr()?;
            if self.eat_sym(":=") {
                let val = self.expr()?;
                self.expect_sym("]")?;
                e = Expr {
                    kind: ExprKind::Update(Box::new(e), Box::new(idx), Box::new(val)),
                    pos,
                };
            } else {
                self.expect_sym("]")?;
                e = Expr {
                    kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                    pos,
                };
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Int(n),
                    pos,
                })
            }
            Tok::Hole(h) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Hole(h),
                    pos,
                })
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Bool(s == "true"),
                    pos,
                })
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                if self.eat_sym("(") {
                    let mut args = Vec::new();
                    if !self.eat_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.eat_sym(")") {
                                break;
                            }
                            self.expect_sym(",")?;
                        }
                    }
                    Ok(Expr {
                        kind: ExprKind::Call(s, args),
                        pos,
                    })
                } else {
                    Ok(Expr {
                        kind: ExprKind::Ident(s),
                        pos,
                    })
                }
            }
            Tok::Sym("(") => {
                self.bump();
                if self.is_kw("forall") || self.is_kw("exists") {
                    let e = self.quantifier()?;
                    self.expect_sym(")")?;
                    return Ok(e);
                }
                if self.is_kw("if") {
                    self.bump();
                    let c = self.expr()?;
                    self.expect_kw("then")?;
                    let a = self.expr()?;
                    self.expect_kw("else")?;
                    let b = self.expr()?;
                    self.expect_sym(")")?;
                    return Ok(Expr {
                        kind: ExprKind::If(Box::new(c), Box::new(a), Box::new(b)),
                        pos,
                    });
                }
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            t => err(pos, format!("expected expression, found {}", describe(&t))),
        }
    }

    fn quantifier(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let forall = self.is_kw("forall");
        self.bump();
        let mut vars = Vec::new();
        loop {
            let vpos = self.pos();
            let name = self.ident()?;
            self.expect_sym(":")?;
            let sort = self.sort()?;
            vars.push((name, sort, vpos));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym("::")?;
        let mut triggers = Vec::new();
        while self.eat_sym("{") {
            triggers.push(self.expr()?);
            self.expect_sym("}")?;
        }
        let body = self.expr()?;
        Ok(Expr {
            kind: ExprKind::Quant {
                forall,
                vars,
                triggers,
                body: Box::new(body),
            },
            pos,
        })
    }

    fn block(&mut self) -> Result<Vec<StmtSyn>, ParseError> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        while !self.eat_sym("}") {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<StmtSyn, ParseError> {
        let pos = self.pos();
        if self.is_kw("havoc") {
            self.bump();
            let x = self.ident()?;
            self.expect_sym(";")?;
            return Ok(StmtSyn::Havoc(x, pos));
        }
        if self.is_kw("assume") || self.is_kw("assert") {
            let assume = self.is_kw("assume");
            self.bump();
            let f = self.expr()?;
            self.expect_sym(";")?;
            return Ok(if assume {
                StmtSyn::Assume(f)
            } else {
                StmtSyn::Assert(f)
            });
        }
        if self.is_kw("if") {
            self.bump();
            self.expect_sym("(")?;
            let c = self.expr()?;
            self.expect_sym(")")?;
            let then = self.block()?;
            let els = if self.is_kw("else") {
                self.bump();
                if self.is_kw("if") {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                Vec::new()
            };
            return Ok(StmtSyn::If(c, then, els));
        }
        if self.is_kw("while") {
            self.bump();
            self.expect_sym("(")?;
            let c = self.expr()?;
            self.expect_sym(")")?;
            self.expect_kw("invariant")?;
            let h = self.hole()?;
            self.expect_sym(";")?;
            let body = self.block()?;
            return Ok(StmtSyn::While(c, h, body, pos));
        }
        if self.is_kw("invariant") {
            self.bump();
            let h = self.hole()?;
            self.expect_sym(";")?;
            return Ok(StmtSyn::Cut(h, pos));
        }
        let x = self.ident()?;
        if self.eat_sym("[") {
            let i = self.expr()?;
            self.expect_sym("]")?;
            self.expect_sym(":=")?;
            let v = self.expr()?;
            self.expect_sym(";")?;
            return Ok(StmtSyn::ArrayAssign(x, i, v, pos));
        }
        self.expect_sym(":=")?;
        let e = self.expr()?;
        self.expect_sym(";")?;
        Ok(StmtSyn::Assign(x, e, pos))
    }
}

const KEYWORDS: &[&str] = &[
    "var", "type", "function", "axiom", "procedure", "requires", "ensures", "while", "invariant",
    "if", "then", "else", "havoc", "assume", "assert", "forall", "exists", "true", "false",
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(n) => format!("'{n}'"),
        Tok::Hole(h) => format!("'?{h}'"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Eof => "end of input".into(),
    }
}

// ---------------------------------------------------------------------------
// Elaboration

enum Elab {
    Term(Term),
    Formula(Formula),
}

struct Env<'a> {
    types: &'a BTreeSet<String>,
    vars: &'a BTreeMap<String, Sort>,
    funs: &'a BTreeMap<String, FunDecl>,
    bound: Vec<(String, Sort)>,
    allow_holes: bool,
}

fn sort_name(s: &Sort) -> String {
    match s {
        Sort::Int => "int".into(),
        Sort::Bool => "bool".into(),
        Sort::Array => "[int]int".into(),
        Sort::Uninterpreted(n) => n.clone(),
    }
}

impl Env<'_> {
    fn resolve_sort(&self, s: &SortSyn, pos: Pos) -> Result<Sort, ParseError> {
        match s {
            SortSyn::Int => Ok(Sort::Int),
            SortSyn::Bool => Ok(Sort::Bool),
            SortSyn::Array => Ok(Sort::Array),
            SortSyn::Named(n) if self.types.contains(n) => Ok(Sort::Uninterpreted(n.clone())),
            SortSyn::Named(n) => err(pos, format!("unknown type '{n}'")),
        }
    }

    fn term(&mut self, e: &Expr) -> Result<Term, ParseError> {
        match self.elab(e)? {
            Elab::Term(t) => Ok(t),
            Elab::Formula(_) => err(e.pos, "sort mismatch: expected a term, found a formula"),
        }
    }

    fn int_term(&mut self, e: &Expr) -> Result<Term, ParseError> {
        let t = self.term(e)?;
        if t.sort() != Sort::Int {
            return err(
                e.pos,
                format!("sort mismatch: expected int, found {}", sort_name(&t.sort())),
            );
        }
        Ok(t)
    }

    fn formula(&mut self, e: &Expr) -> Result<Formula, ParseError> {
        match self.elab(e)? {
            Elab::Formula(f) => Ok(f),
            Elab::Term(t) => err(
                e.pos,
                format!("sort mismatch: expected bool, found {}", sort_name(&t.sort())),
            ),
        }
    }

    fn elab(&mut self, e: &Expr) -> Result<Elab, ParseError> {
        let pos = e.pos;
        Ok(match &e.kind {
            ExprKind::Int(n) => match i64::try_from(*n) {
                Ok(n) => Elab::Term(Term::Int(n)),
                Err(_) => return err(pos, "integer literal out of range"),
            },
            ExprKind::Bool(b) => Elab::Formula(if *b { Formula::True } else { Formula::False }),
            ExprKind::Hole(h) => {
                if !self.allow_holes {
                    return err(pos, "hole references are only allowed in annotations");
                }
                Elab::Formula(Formula::Hole(HoleId::new(h.clone())))
            }
            ExprKind::Ident(x) => {
                if let Some((_, s)) = self.bound.iter().rev().find(|(n, _)| n == x) {
                    Elab::Term(Term::Var(x.clone(), s.clone()))
                } else if let Some(s) = self.vars.get(x) {
                    Elab::Term(Term::Var(x.clone(), s.clone()))
                } else if self.funs.contains_key(x) {
                    return err(pos, format!("function '{x}' must be applied, e.g. '{x}()'"));
                } else {
                    return err(pos, format!("unknown identifier '{x}'"));
                }
            }
            ExprKind::Call(f, args) => {
                let decl = match self.funs.get(f) {
                    Some(d) => d.clone(),
                    None => return err(pos, format!("unknown function '{f}'")),
                };
                if decl.args.len() != args.len() {
                    return err(
                        pos,
                        format!(
                            "'{f}' expects {} argument(s), got {}",
                            decl.args.len(),
                            args.len()
                        ),
                    );
                }
                let mut ts = Vec::new();
                for (a, s) in args.iter().zip(&decl.args) {
                    let t = self.term(a)?;
                    if &t.sort() != s {
                        return err(
                            a.pos,
                            format!(
                                "sort mismatch: argument of '{f}' expects {}, found {}",
                                sort_name(s),
                                sort_name(&t.sort())
                            ),
                        );
                    }
                    ts.push(t);
                }
                if decl.ret == Sort::Bool {
                    Elab::Formula(Formula::Pred(f.clone(), ts))
                } else {
                    Elab::Term(Term::App(f.clone(), ts, decl.ret.clone()))
                }
            }
            ExprKind::Neg(inner) => match &inner.kind {
                ExprKind::Int(n) => match i64::try_from(-*n) {
                    Ok(n) => Elab::Term(Term::Int(n)),
                    Err(_) => return err(pos, "integer literal out of range"),
                },
                _ => Elab::Term(Term::Mul(-1, Box::new(self.int_term(inner)?))),
            },
            ExprKind::Not(inner) => Elab::Formula(Formula::not(self.formula(inner)?)),
            ExprKind::Chain(op, parts) => {
                let fs = parts
                    .iter()
                    .map(|p| self.formula(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Elab::Formula(if *op == "&&" {
                    Formula::And(fs)
                } else {
                    Formula::Or(fs)
                })
            }
            ExprKind::Bin(op, a, b) => self.binary(op, a, b, pos)?,
            ExprKind::Index(a, i) => {
                let at = self.term(a)?;
                if at.sort() != Sort::Array {
                    return err(a.pos, "sort mismatch: indexing a non-array");
                }
                Elab::Term(Term::select(at, self.int_term(i)?))
            }
            ExprKind::Update(a, i, v) => {
                let at = self.term(a)?;
                if at.sort() != Sort::Array {
                    return err(a.pos, "sort mismatch: updating a non-array");
                }
                let it = self.int_term(i)?;
                Elab::Term(Term::store(at, it, self.int_term(v)?))
            }
            ExprKind::If(c, a, b) => {
                let cf = self.formula(c)?;
                let at = self.term(a)?;
                let bt = self.term(b)?;
                if at.sort() != bt.sort() {
                    return err(pos, "sort mismatch: branches of 'if' differ");
                }
                Elab::Term(Term::Ite(Box::new(cf), Box::new(at), Box::new(bt)))
            }
            ExprKind::Quant {
                forall,
                vars,
                triggers,
                body,
            } => {
                let mut qvars = Vec::new();
                for (n, s, vpos) in vars {
                    let s = self.resolve_sort(s, *vpos)?;
                    if s == Sort::Bool {
                        return err(*vpos, "quantified variables cannot be bool");
                    }
                    if qvars.iter().any(|(m, _)| m == n) {
                        return err(*vpos, format!("duplicate bound variable '{n}'"));
                    }
                    qvars.push((n.clone(), s));
                }
                let depth = self.bound.len();
                self.bound.extend(qvars.iter().cloned());
                let trig = triggers
                    .iter()
                    .map(|t| {
                        Ok(match self.elab(t)? {
                            Elab::Term(t) => Trigger::Term(t),
                            Elab::Formula(Formula::Pred(f, args)) => Trigger::Pred(f, args),
                            Elab::Formula(_) => {
                                return err(t.pos, "trigger must be a term or predicate application")
                            }
                        })
                    })
                    .collect::<Result<Vec<_>, ParseError>>();
                let body = self.formula(body);
                self.bound.truncate(depth);
                let q = Quantified {
                    vars: qvars,
                    triggers: trig?,
                    body: Box::new(body?),
                };
                Elab::Formula(if *forall {
                    Formula::Forall(q)
                } else {
                    Formula::Exists(q)
                })
            }
        })
    }

    fn binary(&mut self, op: &str, a: &Expr, b: &Expr, pos: Pos) -> Result<Elab, ParseError> {
        Ok(match op {
            "<==>" => Elab::Formula(Formula::Iff(
                Box::new(self.formula(a)?),
                Box::new(self.formula(b)?),
            )),
            "==>" => Elab::Formula(Formula::implies(self.formula(a)?, self.formula(b)?)),
            "+" | "-" => {
                let x = self.int_term(a)?;
                let y = self.int_term(b)?;
                Elab::Term(if op == "+" {
                    Term::add(x, y)
                } else {
                    Term::sub(x, y)
                })
            }
            "*" => {
                let x = self.int_term(a)?;
                let y = self.int_term(b)?;
                match (x, y) {
                    (Term::Int(c), t) | (t, Term::Int(c)) => Elab::Term(Term::Mul(c, Box::new(t))),
                    _ => return err(pos, "nonlinear multiplication: one factor must be a literal"),
                }
            }
            "==" | "!=" => {
                let x = self.elab(a)?;
                let y = self.elab(b)?;
                let f = match (x, y) {
                    (Elab::Formula(p), Elab::Formula(q)) => {
                        let iff = Formula::Iff(Box::new(p), Box::new(q));
                        if op == "==" {
                            iff
                        } else {
                            Formula::not(iff)
                        }
                    }
                    (Elab::Term(s), Elab::Term(t)) => {
                        if s.sort() != t.sort() {
                            return err(
                                pos,
                                format!(
                                    "sort mismatch: cannot compare {} with {}",
                                    sort_name(&s.sort()),
                                    sort_name(&t.sort())
                                ),
                            );
                        }
                        Formula::Cmp(if op == "==" { CmpOp::Eq } else { CmpOp::Ne }, s, t)
                    }
                    _ => return err(pos, "sort mismatch: comparing a formula with a term"),
                };
                Elab::Formula(f)
            }
            _ => {
                let c = match op {
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    ">" => CmpOp::Gt,
                    ">=" => CmpOp::Ge,
                    _ => unreachable!("operator {op}"),
                };
                Elab::Formula(Formula::Cmp(c, self.int_term(a)?, self.int_term(b)?))
            }
        })
    }
}

// ---------------------------------------------------------------------------
// Top level

struct Decls {
    types: BTreeSet<String>,
    vars: BTreeMap<String, Sort>,
    funs: BTreeMap<String, FunDecl>,
}

impl Decls {
    fn of(p: &Program) -> Decls {
        Decls {
            types: p.types.iter().cloned().collect(),
            vars: p.vars.iter().cloned().collect(),
            funs: p
                .functions
                .iter()
                .map(|f| (f.name.clone(), f.clone()))
                .collect(),
        }
    }

    fn env(&self, allow_holes: bool) -> Env<'_> {
        Env {
            types: &self.types,
            vars: &self.vars,
            funs: &self.funs,
            bound: Vec::new(),
            allow_holes,
        }
    }
}

/// Parses a formula against the declarations of `program`. Hole references are allowed.
pub fn parse_formula(text: &str, program: &Program) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return err(p.pos(), format!("unexpected {}", describe(p.peek())));
    }
    let decls = Decls::of(program);
    decls.env(true).formula(&e)
}

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let mut decls = Decls {
        types: BTreeSet::new(),
        vars: BTreeMap::new(),
        funs: BTreeMap::new(),
    };
    let mut var_order = Vec::new();
    let mut fun_order = Vec::new();
    let mut type_order = Vec::new();
    let mut axioms = Vec::new();
    let mut procedure = None;

    while *p.peek() != Tok::Eof {
        let pos = p.pos();
        if p.is_kw("type") {
            p.bump();
            let n = p.ident()?;
            p.expect_sym(";")?;
            if !decls.types.insert(n.clone()) {
                return err(pos, format!("duplicate type '{n}'"));
            }
            type_order.push(n);
        } else if p.is_kw("var") {
            p.bump();
            loop {
                let vpos = p.pos();
                let n = p.ident()?;
                p.expect_sym(":")?;
                let spos = p.pos();
                let s = decls.env(false).resolve_sort(&p.sort()?, spos)?;
                if s == Sort::Bool {
                    return err(spos, "bool variables are not supported; use a bool function");
                }
                if decls.vars.contains_key(&n) || decls.funs.contains_key(&n) {
                    return err(vpos, format!("duplicate declaration '{n}'"));
                }
                decls.vars.insert(n.clone(), s.clone());
                var_order.push((n, s));
                if !p.eat_sym(",") {
                    break;
                }
            }
            p.expect_sym(";")?;
        } else if p.is_kw("function") {
            p.bump();
            let n = p.ident()?;
            p.expect_sym("(")?;
            let mut args = Vec::new();
            if !p.eat_sym(")") {
                loop {
                    let spos = p.pos();
                    let s = decls.env(false).resolve_sort(&p.sort()?, spos)?;
                    if s == Sort::Bool {
                        return err(spos, "function arguments cannot be bool");
                    }
                    args.push(s);
                    if p.eat_sym(")") {
                        break;
                    }
                    p.expect_sym(",")?;
                }
            }
            p.expect_sym(":")?;
            let spos = p.pos();
            let ret = decls.env(false).resolve_sort(&p.sort()?, spos)?;
            p.expect_sym(";")?;
            if decls.vars.contains_key(&n) || decls.funs.contains_key(&n) {
                return err(pos, format!("duplicate declaration '{n}'"));
            }
            let d = FunDecl {
                name: n.clone(),
                args,
                ret,
            };
            decls.funs.insert(n, d.clone());
            fun_order.push(d);
        } else if p.is_kw("axiom") {
            p.bump();
            let e = p.expr()?;
            p.expect_sym(";")?;
            axioms.push(decls.env(false).formula(&e)?);
        } else if p.is_kw("procedure") {
            if procedure.is_some() {
                return err(pos, "only one procedure per program is supported");
            }
            p.bump();
            let name = p.ident()?;
            p.expect_sym("(")?;
            p.expect_sym(")")?;
            let mut requires = Vec::new();
            let mut ensures = Vec::new();
            loop {
                if p.is_kw("requires") {
                    p.bump();
                    let e = p.expr()?;
                    p.expect_sym(";")?;
                    requires.push(decls.env(false).formula(&e)?);
                } else if p.is_kw("ensures") {
                    p.bump();
                    let e = p.expr()?;
                    p.expect_sym(";")?;
                    ensures.push(decls.env(false).formula(&e)?);
                } else {
                    break;
                }
            }
            let body = p.block()?;
            let mut holes = BTreeSet::new();
            let body = elab_stmts(&decls, &body, &mut holes, false)?;
            procedure = Some(Procedure {
                name,
                requires,
                ensures,
                body,
            });
        } else {
            return err(pos, format!("expected declaration, found {}", describe(p.peek())));
        }
    }
    let procedure = match procedure {
        Some(pr) => pr,
        None => return err(p.pos(), "missing procedure"),
    };
    Ok(Program {
        types: type_order,
        vars: var_order,
        functions: fun_order,
        axioms,
        procedure,
    })
}

fn elab_stmts(
    decls: &Decls,
    stmts: &[StmtSyn],
    holes: &mut BTreeSet<String>,
    in_branch: bool,
) -> Result<Vec<Stmt>, ParseError> {
    let mut out = Vec::new();
    let new_hole = |h: &str, pos: Pos, holes: &mut BTreeSet<String>| {
        if in_branch {
            return err(pos, "loops and cut points inside 'if' branches are not supported");
        }
        if !holes.insert(h.to_string()) {
            return err(pos, format!("duplicate hole '?{h}'"));
        }
        Ok(HoleId::new(h))
    };
    for s in stmts {
        out.push(match s {
            StmtSyn::Assign(x, e, pos) => {
                let s = match decls.vars.get(x) {
                    Some(s) => s.clone(),
                    None => return err(*pos, format!("assignment to undeclared variable '{x}'")),
                };
                let t = decls.env(false).term(e)?;
                if t.sort() != s {
                    return err(e.pos, format!("sort mismatch in assignment to '{x}'"));
                }
                Stmt::Assign(x.clone(), t)
            }
            StmtSyn::ArrayAssign(x, i, v, pos) => {
                if decls.vars.get(x) != Some(&Sort::Array) {
                    return err(*pos, format!("'{x}' is not an array variable"));
                }
                let mut env = decls.env(false);
                Stmt::ArrayAssign(x.clone(), env.int_term(i)?, env.int_term(v)?)
            }
            StmtSyn::Havoc(x, pos) => {
                if !decls.vars.contains_key(x) {
                    return err(*pos, format!("havoc of undeclared variable '{x}'"));
                }
                Stmt::Havoc(x.clone())
            }
            StmtSyn::Assume(e) => Stmt::Assume(decls.env(false).formula(e)?),
            StmtSyn::Assert(e) => Stmt::Assert(decls.env(false).formula(e)?),
            StmtSyn::If(c, a, b) => Stmt::If(
                decls.env(false).formula(c)?,
                elab_stmts(decls, a, holes, true)?,
                elab_stmts(decls, b, holes, true)?,
            ),
            StmtSyn::While(c, h, body, pos) => {
                let hole = new_hole(h, *pos, holes)?;
                Stmt::While {
                    cond: decls.env(false).formula(c)?,
                    hole,
                    body: elab_stmts(decls, body, holes, false)?,
                }
            }
            StmtSyn::Cut(h, pos) => Stmt::Cut(new_hole(h, *pos, holes)?),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTER: &str = "
        var i: int;
        var N: int;
        procedure count()
          requires i == 0 && N > 0;
          ensures i == N;
        {
          while (i < N) invariant ?H; {
            i := i + 1;
          }
        }";

    #[test]
    fn parses_counter() {
        let p = parse_program(COUNTER).unwrap();
        assert_eq!(p.vars.len(), 2);
        assert_eq!(p.holes(), vec![HoleId::new("H")]);
        assert_eq!(p.procedure.requires.len(), 1);
    }

    #[test]
    fn trivial_assert_program() {
        let p = parse_program("procedure t() { assert true; }").unwrap();
        assert_eq!(p.procedure.body, vec![Stmt::Assert(Formula::True)]);
    }

    #[test]
    fn array_plus_int_is_sort_error() {
        let e = parse_program("var x: int; var a: [int]int; procedure t() { x := x + a; }")
            .unwrap_err();
        assert!(e.msg.contains("sort mismatch"), "{e}");
        assert_eq!((e.line, e.col), (1, 55));
    }

    #[test]
    fn duplicate_hole_rejected() {
        let src = "var i: int; procedure t() { while (i < 1) invariant ?H; { i := i + 1; } invariant ?H; }";
        let e = parse_program(src).unwrap_err();
        assert!(e.msg.contains("duplicate hole"), "{e}");
    }

    #[test]
    fn syntax_error_has_position() {
        let e = parse_program("var i: int;\nprocedure t() {\n  i := ;\n}").unwrap_err();
        assert_eq!((e.line, e.col), (3, 8));
    }

    #[test]
    fn nonlinear_product_rejected() {
        let e = parse_program("var x: int; procedure t() { x := x * x; }").unwrap_err();
        assert!(e.msg.contains("nonlinear"));
    }

    #[test]
    fn bool_equality_is_iff() {
        let p = parse_program("function p(): bool; function q(): bool; procedure t() { assert p() == q(); }")
            .unwrap();
        assert!(matches!(
            &p.procedure.body[0],
            Stmt::Assert(Formula::Iff(..))
        ));
    }

    #[test]
    fn quantifier_with_trigger() {
        let p = parse_program(
            "function g(int): bool; var N: int; axiom (forall x: int :: { g(x) } g(x) ==> x < N); procedure t() { }",
        )
        .unwrap();
        match &p.axioms[0] {
            Formula::Forall(q) => {
                assert_eq!(q.triggers.len(), 1);
                assert!(matches!(q.triggers[0], Trigger::Pred(..)));
            }
            f => panic!("{f:?}"),
        }
    }

    #[test]
    fn hole_in_branch_rejected() {
        let src = "var i: int; procedure t() { if (i < 0) { invariant ?A; } }";
        assert!(parse_program(src).is_err());
    }
}
