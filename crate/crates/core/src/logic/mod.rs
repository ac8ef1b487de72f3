//! First-order terms and formulas, the annotated program language, and the
//! transformations the rest of the pipeline shares (substitution, NNF).
//!
//! Terms carry their sort at the leaves (`Var`, `App`), so `Term::sort` is a
//! local computation and SMT declarations can be derived from a formula alone.

mod nnf;
mod parse;
mod print;
mod subst;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ice::{Candidate, Conjunction};

pub use nnf::{is_nnf, nnf};
pub use parse::{parse_formula, parse_program, ParseError};
pub use print::stmts_to_string;
pub use subst::{fill_holes, fresh_name, substitute_formula, substitute_term, Substitution};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Bool,
    /// Arrays map `Int` to `Int`.
    Array,
    Uninterpreted(String),
}

/// Identifier of an annotation hole (`?L` in surface syntax).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct HoleId(pub String);

impl HoleId {
    pub fn new(name: impl Into<String>) -> Self {
        HoleId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String, Sort),
    Int(i64),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// Multiplication by a literal constant; the only product allowed.
    Mul(i64, Box<Term>),
    /// Uninterpreted function application with its result sort.
    App(String, Vec<Term>, Sort),
    Select(Box<Term>, Box<Term>),
    Store(Box<Term>, Box<Term>, Box<Term>),
    Ite(Box<Formula>, Box<Term>, Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, Term, Term),
    /// Application of a Bool-valued function (or a Bool constant when `args` is empty).
    Pred(String, Vec<Term>),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Quantified),
    Exists(Quantified),
    Hole(HoleId),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quantified {
    pub vars: Vec<(String, Sort)>,
    /// Alternative instantiation patterns; empty means "instantiate over the whole pool".
    pub triggers: Vec<Trigger>,
    pub body: Box<Formula>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trigger {
    Term(Term),
    Pred(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term::Var(name.into(), sort)
    }

    pub fn int_var(name: impl Into<String>) -> Term {
        Term::Var(name.into(), Sort::Int)
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(_, s) | Term::App(_, _, s) => s.clone(),
            Term::Int(_) | Term::Add(..) | Term::Sub(..) | Term::Mul(..) | Term::Select(..) => {
                Sort::Int
            }
            Term::Store(..) => Sort::Array,
            Term::Ite(_, t, _) => t.sort(),
        }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn select(a: Term, i: Term) -> Term {
        Term::Select(Box::new(a), Box::new(i))
    }

    pub fn store(a: Term, i: Term, v: Term) -> Term {
        Term::Store(Box::new(a), Box::new(i), Box::new(v))
    }

    /// True if the term mentions no variable from `bound`.
    pub fn is_ground_wrt(&self, bound: &BTreeSet<String>) -> bool {
        let mut ok = true;
        self.visit_vars(&mut |name, _| {
            if bound.contains(name) {
                ok = false;
            }
        });
        ok
    }

    /// Calls `f` on every variable occurrence, including those inside `Ite` conditions.
    pub fn visit_vars(&self, f: &mut dyn FnMut(&str, &Sort)) {
        match self {
            Term::Var(n, s) => f(n, s),
            Term::Int(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Select(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Term::Mul(_, a) => a.visit_vars(f),
            Term::App(_, args, _) => args.iter().for_each(|a| a.visit_vars(f)),
            Term::Store(a, i, v) => {
                a.visit_vars(f);
                i.visit_vars(f);
                v.visit_vars(f);
            }
            Term::Ite(c, a, b) => {
                c.free_vars_into(&mut BTreeSet::new(), &mut |n, s| f(n, s));
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Integer literals occurring in the term.
    pub fn literals_into(&self, out: &mut BTreeSet<i64>) {
        match self {
            Term::Int(n) => {
                out.insert(*n);
            }
            Term::Var(..) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Select(a, b) => {
                a.literals_into(out);
                b.literals_into(out);
            }
            Term::Mul(c, a) => {
                out.insert(*c);
                a.literals_into(out);
            }
            Term::App(_, args, _) => args.iter().for_each(|a| a.literals_into(out)),
            Term::Store(a, i, v) => {
                a.literals_into(out);
                i.literals_into(out);
                v.literals_into(out);
            }
            Term::Ite(c, a, b) => {
                c.literals_into(out);
                a.literals_into(out);
                b.literals_into(out);
            }
        }
    }
}

impl Formula {
    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction with the usual unit cases: empty is `true`, singleton is itself.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        match parts.len() {
            0 => Formula::True,
            1 => parts.pop().unwrap(),
            _ => Formula::And(parts),
        }
    }

    /// Disjunction; empty is `false`.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        match parts.len() {
            0 => Formula::False,
            1 => parts.pop().unwrap(),
            _ => Formula::Or(parts),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Forall(_) | Formula::Exists(_) => false,
            Formula::True | Formula::False | Formula::Hole(_) => true,
            Formula::Cmp(_, a, b) => term_qf(a) && term_qf(b),
            Formula::Pred(_, args) => args.iter().all(term_qf),
            Formula::Not(a) => a.is_quantifier_free(),
            Formula::And(v) | Formula::Or(v) => v.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
        }
    }

    pub fn holes(&self) -> BTreeSet<HoleId> {
        let mut out = BTreeSet::new();
        self.holes_into(&mut out);
        out
    }

    fn holes_into(&self, out: &mut BTreeSet<HoleId>) {
        match self {
            Formula::Hole(h) => {
                out.insert(h.clone());
            }
            Formula::Not(a) => a.holes_into(out),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|f| f.holes_into(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.holes_into(out);
                b.holes_into(out);
            }
            Formula::Forall(q) | Formula::Exists(q) => q.body.holes_into(out),
            _ => {}
        }
    }

    /// Free variables with their sorts.
    pub fn free_vars(&self) -> Vec<(String, Sort)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.free_vars_into(&mut BTreeSet::new(), &mut |n, s| {
            if seen.insert(n.to_string()) {
                out.push((n.to_string(), s.clone()));
            }
        });
        out
    }

    fn free_vars_into(&self, bound: &mut BTreeSet<String>, f: &mut dyn FnMut(&str, &Sort)) {
        let term = |t: &Term, bound: &BTreeSet<String>, f: &mut dyn FnMut(&str, &Sort)| {
            t.visit_vars(&mut |n, s| {
                if !bound.contains(n) {
                    f(n, s)
                }
            })
        };
        match self {
            Formula::True | Formula::False | Formula::Hole(_) => {}
            Formula::Cmp(_, a, b) => {
                term(a, bound, f);
                term(b, bound, f);
            }
            Formula::Pred(_, args) => args.iter().for_each(|a| term(a, bound, f)),
            Formula::Not(a) => a.free_vars_into(bound, f),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| g.free_vars_into(bound, f)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.free_vars_into(bound, f);
                b.free_vars_into(bound, f);
            }
            Formula::Forall(q) | Formula::Exists(q) => {
                let newly: Vec<String> = q
                    .vars
                    .iter()
                    .filter(|(n, _)| bound.insert(n.clone()))
                    .map(|(n, _)| n.clone())
                    .collect();
                q.body.free_vars_into(bound, f);
                for n in newly {
                    bound.remove(&n);
                }
            }
        }
    }

    pub fn literals_into(&self, out: &mut BTreeSet<i64>) {
        match self {
            Formula::True | Formula::False | Formula::Hole(_) => {}
            Formula::Cmp(_, a, b) => {
                a.literals_into(out);
                b.literals_into(out);
            }
            Formula::Pred(_, args) => args.iter().for_each(|a| a.literals_into(out)),
            Formula::Not(a) => a.literals_into(out),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| g.literals_into(out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.literals_into(out);
                b.literals_into(out);
            }
            Formula::Forall(q) | Formula::Exists(q) => q.body.literals_into(out),
        }
    }

    /// Splits nested top-level conjunctions into their parts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(v) => v.iter().flat_map(Formula::conjuncts).collect(),
            Formula::True => Vec::new(),
            f => vec![f],
        }
    }
}

fn term_qf(t: &Term) -> bool {
    match t {
        Term::Ite(c, a, b) => c.is_quantifier_free() && term_qf(a) && term_qf(b),
        Term::Var(..) | Term::Int(_) => true,
        Term::Add(a, b) | Term::Sub(a, b) | Term::Select(a, b) => term_qf(a) && term_qf(b),
        Term::Mul(_, a) => term_qf(a),
        Term::App(_, args, _) => args.iter().all(term_qf),
        Term::Store(a, i, v) => term_qf(a) && term_qf(i) && term_qf(v),
    }
}

/// Uninterpreted function (or Bool predicate) declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub args: Vec<Sort>,
    pub ret: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, Term),
    ArrayAssign(String, Term, Term),
    Havoc(String),
    Assume(Formula),
    Assert(Formula),
    If(Formula, Vec<Stmt>, Vec<Stmt>),
    While {
        cond: Formula,
        hole: HoleId,
        body: Vec<Stmt>,
    },
    /// A cut point with an invariant hole outside any loop (e.g. before a return).
    Cut(HoleId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Procedure {
    pub name: String,
    pub requires: Vec<Formula>,
    pub ensures: Vec<Formula>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub types: Vec<String>,
    pub vars: Vec<(String, Sort)>,
    pub functions: Vec<FunDecl>,
    pub axioms: Vec<Formula>,
    pub procedure: Procedure,
}

impl Program {
    pub fn var_sort(&self, name: &str) -> Option<&Sort> {
        self.vars.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn function(&self, name: &str) -> Option<&FunDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Holes in program order.
    pub fn holes(&self) -> Vec<HoleId> {
        fn walk(stmts: &[Stmt], out: &mut Vec<HoleId>) {
            for s in stmts {
                match s {
                    Stmt::While { hole, body, .. } => {
                        out.push(hole.clone());
                        walk(body, out);
                    }
                    Stmt::Cut(h) => out.push(h.clone()),
                    Stmt::If(_, a, b) => {
                        walk(a, out);
                        walk(b, out);
                    }
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.procedure.body, &mut out);
        out
    }

    /// Variables written anywhere in the procedure body.
    pub fn modified_vars(&self) -> BTreeSet<String> {
        fn walk(stmts: &[Stmt], out: &mut BTreeSet<String>) {
            for s in stmts {
                match s {
                    Stmt::Assign(x, _) | Stmt::ArrayAssign(x, _, _) | Stmt::Havoc(x) => {
                        out.insert(x.clone());
                    }
                    Stmt::If(_, a, b) => {
                        walk(a, out);
                        walk(b, out);
                    }
                    Stmt::While { body, .. } => walk(body, out),
                    _ => {}
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.procedure.body, &mut out);
        out
    }

    /// Every integer literal in declarations, specifications and statements.
    pub fn literals(&self) -> BTreeSet<i64> {
        fn walk(stmts: &[Stmt], out: &mut BTreeSet<i64>) {
            for s in stmts {
                match s {
                    Stmt::Assign(_, t) => t.literals_into(out),
                    Stmt::ArrayAssign(_, i, v) => {
                        i.literals_into(out);
                        v.literals_into(out);
                    }
                    Stmt::Assume(f) | Stmt::Assert(f) => f.literals_into(out),
                    Stmt::If(c, a, b) => {
                        c.literals_into(out);
                        walk(a, out);
                        walk(b, out);
                    }
                    Stmt::While { cond, body, .. } => {
                        cond.literals_into(out);
                        walk(body, out);
                    }
                    Stmt::Havoc(_) | Stmt::Cut(_) => {}
                }
            }
        }
        let mut out = BTreeSet::new();
        for f in self
            .axioms
            .iter()
            .chain(&self.procedure.requires)
            .chain(&self.procedure.ensures)
        {
            f.literals_into(&mut out);
        }
        walk(&self.procedure.body, &mut out);
        out
    }
}

/// A candidate building block for invariants at one hole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Predicate {
    pub hole: HoleId,
    pub index: usize,
    pub body: Formula,
}

/// Per-hole predicate universes, in index order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Predicates {
    pub by_hole: BTreeMap<HoleId, Vec<Formula>>,
}

impl Predicates {
    pub fn get(&self, hole: &HoleId, index: usize) -> Option<&Formula> {
        self.by_hole.get(hole).and_then(|v| v.get(index))
    }

    pub fn universe(&self, hole: &HoleId) -> &[Formula] {
        self.by_hole.get(hole).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn universes(&self) -> crate::ice::Universes {
        self.by_hole
            .iter()
            .map(|(h, v)| (h.clone(), v.len()))
            .collect()
    }

    pub fn total(&self) -> usize {
        self.by_hole.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = Predicate> + '_ {
        self.by_hole.iter().flat_map(|(h, v)| {
            v.iter().enumerate().map(move |(i, f)| Predicate {
                hole: h.clone(),
                index: i,
                body: f.clone(),
            })
        })
    }

    /// Index of a predicate syntactically equal to `f` at `hole`.
    pub fn position(&self, hole: &HoleId, f: &Formula) -> Option<usize> {
        self.universe(hole).iter().position(|g| g == f)
    }

    /// The formula a conjunction denotes.
    pub fn conjunction_formula(&self, c: &Conjunction) -> Formula {
        Formula::conj(c.atoms.iter().filter_map(|&i| self.get(&c.hole, i).cloned()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("hole ?{0} has no binding")]
pub struct UnboundHole(pub HoleId);

/// Replaces each hole by the conjunction of its candidate predicates.
pub fn substitute_holes(
    f: &Formula,
    candidate: &Candidate,
    predicates: &Predicates,
) -> Result<Formula, UnboundHole> {
    fill_holes(f, &mut |h| match candidate.get(h) {
        Some(c) => Ok(predicates.conjunction_formula(c)),
        None => Err(UnboundHole(h.clone())),
    })
}
