//! Candidate predicate generation.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{
    substitute_formula, CmpOp, Formula, HoleId, Predicates, Program, Sort, Stmt, Substitution,
    Term,
};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PredicateOptions {
    /// Extra harvested shapes, re-instantiated like specification atoms.
    pub templates: Vec<Formula>,
    /// Holes whose universe is given explicitly instead of generated.
    pub pinned: BTreeMap<HoleId, Vec<Formula>>,
    pub array_octagons: bool,
    pub neg_close: bool,
}

/// Per-hole predicate universes: harvested atoms, octagons, optional
/// array-access octagons and optional negations, deduplicated in that order.
pub fn gen_predicates(p: &Program, opts: &PredicateOptions) -> Predicates {
    let mut generated = Vec::new();
    let mut seen = BTreeSet::new();
    let mut push = |f: Formula, out: &mut Vec<Formula>| {
        if seen.insert(f.clone()) {
            out.push(f);
        }
    };

    for shape in harvest_sources(p).into_iter().chain(opts.templates.iter().cloned()) {
        for f in reinstantiate(&shape, &p.vars) {
            push(f, &mut generated);
        }
    }

    let mut constants: BTreeSet<i64> = p.literals();
    constants.insert(0);
    let ints: Vec<Term> = p
        .vars
        .iter()
        .filter(|(_, s)| *s == Sort::Int)
        .map(|(n, s)| Term::var(n.clone(), s.clone()))
        .collect();
    for f in octagons(&ints, &constants) {
        push(f, &mut generated);
    }
    if opts.array_octagons {
        let mut accesses = BTreeSet::new();
        collect_accesses(&p.procedure.body, &mut accesses);
        let accesses: Vec<Term> = accesses.into_iter().collect();
        let mut terms = ints.clone();
        terms.extend(accesses.iter().cloned());
        for f in octagons(&terms, &constants) {
            let mentions_access = accesses.iter().any(|a| mentions(&f, a));
            if mentions_access {
                push(f, &mut generated);
            }
        }
    }
    if opts.neg_close {
        for f in generated.clone() {
            push(negate(&f), &mut generated);
        }
    }

    let mut by_hole = BTreeMap::new();
    for h in p.holes() {
        let universe = match opts.pinned.get(&h) {
            Some(v) => v.clone(),
            None => generated.clone(),
        };
        by_hole.insert(h, universe);
    }
    Predicates { by_hole }
}

fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Not(g) => (**g).clone(),
        g => Formula::not(g.clone()),
    }
}

fn harvest_sources(p: &Program) -> Vec<Formula> {
    fn asserts(stmts: &[Stmt], out: &mut Vec<Formula>) {
        for s in stmts {
            match s {
                Stmt::Assert(f) => out.push(f.clone()),
                Stmt::If(_, a, b) => {
                    asserts(a, out);
                    asserts(b, out);
                }
                Stmt::While { body, .. } => asserts(body, out),
                _ => {}
            }
        }
    }
    let mut whole = Vec::new();
    whole.extend(p.procedure.requires.iter().cloned());
    whole.extend(p.procedure.ensures.iter().cloned());
    asserts(&p.procedure.body, &mut whole);
    let mut out = Vec::new();
    for f in &whole {
        for c in f.conjuncts() {
            if !matches!(c, Formula::True | Formula::False) && !out.contains(c) {
                out.push(c.clone());
            }
        }
    }
    out
}

/// Every injective, sort-preserving renaming of the free program variables
/// of `shape` onto program variables.
fn reinstantiate(shape: &Formula, vars: &[(String, Sort)]) -> Vec<Formula> {
    let free: Vec<(String, Sort)> = shape
        .free_vars()
        .into_iter()
        .filter(|v| vars.contains(v))
        .collect();
    let mut out = Vec::new();
    let mut chosen: Vec<&String> = Vec::new();
    fn go<'a>(
        i: usize,
        free: &[(String, Sort)],
        vars: &'a [(String, Sort)],
        chosen: &mut Vec<&'a String>,
        shape: &Formula,
        out: &mut Vec<Formula>,
    ) {
        if i == free.len() {
            let s: Substitution = free
                .iter()
                .zip(chosen.iter())
                .map(|((n, sort), m)| (n.clone(), Term::var((*m).clone(), sort.clone())))
                .collect();
            out.push(substitute_formula(shape, &s));
            return;
        }
        for (n, s) in vars {
            if *s == free[i].1 && !chosen.contains(&n) {
                chosen.push(n);
                go(i + 1, free, vars, chosen, shape, out);
                chosen.pop();
            }
        }
    }
    go(0, &free, vars, &mut chosen, shape, &mut out);
    out
}

/// `±x ≤ c` for every term and `±x ± y ≤ c` for every pair.
pub fn octagons(terms: &[Term], constants: &BTreeSet<i64>) -> Vec<Formula> {
    let neg = |t: &Term| Term::Mul(-1, Box::new(t.clone()));
    let mut out = Vec::new();
    for x in terms {
        for c in constants {
            out.push(Formula::cmp(CmpOp::Le, x.clone(), Term::Int(*c)));
            out.push(Formula::cmp(CmpOp::Le, neg(x), Term::Int(*c)));
        }
    }
    for (i, x) in terms.iter().enumerate() {
        for y in &terms[i + 1..] {
            let sums = [
                Term::add(x.clone(), y.clone()),
                Term::sub(x.clone(), y.clone()),
                Term::sub(y.clone(), x.clone()),
                Term::sub(neg(x), y.clone()),
            ];
            for s in sums {
                for c in constants {
                    out.push(Formula::cmp(CmpOp::Le, s.clone(), Term::Int(*c)));
                }
            }
        }
    }
    out
}

fn collect_accesses(stmts: &[Stmt], out: &mut BTreeSet<Term>) {
    fn term(t: &Term, out: &mut BTreeSet<Term>) {
        match t {
            Term::Select(a, i) => {
                if matches!(**a, Term::Var(..)) && i.is_ground_wrt(&BTreeSet::new()) {
                    out.insert(t.clone());
                }
                term(a, out);
                term(i, out);
            }
            Term::Add(a, b) | Term::Sub(a, b) => {
                term(a, out);
                term(b, out);
            }
            Term::Mul(_, a) => term(a, out),
            Term::App(_, args, _) => args.iter().for_each(|a| term(a, out)),
            Term::Store(a, i, v) => {
                term(a, out);
                term(i, out);
                term(v, out);
            }
            Term::Ite(c, a, b) => {
                formula(c, out);
                term(a, out);
                term(b, out);
            }
            Term::Var(..) | Term::Int(_) => {}
        }
    }
    fn formula(f: &Formula, out: &mut BTreeSet<Term>) {
        match f {
            Formula::Cmp(_, a, b) => {
                term(a, out);
                term(b, out);
            }
            Formula::Pred(_, args) => args.iter().for_each(|a| term(a, out)),
            Formula::Not(a) => formula(a, out),
            Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| formula(g, out)),
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                formula(a, out);
                formula(b, out);
            }
            // Accesses under binders mention bound variables.
            Formula::Forall(_) | Formula::Exists(_) => {}
            Formula::True | Formula::False | Formula::Hole(_) => {}
        }
    }
    for s in stmts {
        match s {
            Stmt::Assign(_, t) => term(t, out),
            Stmt::ArrayAssign(_, i, v) => {
                term(i, out);
                term(v, out);
            }
            Stmt::Assume(f) | Stmt::Assert(f) => formula(f, out),
            Stmt::If(c, a, b) => {
                formula(c, out);
                collect_accesses(a, out);
                collect_accesses(b, out);
            }
            Stmt::While { cond, body, .. } => {
                formula(cond, out);
                collect_accesses(body, out);
            }
            Stmt::Havoc(_) | Stmt::Cut(_) => {}
        }
    }
}

fn mentions(f: &Formula, t: &Term) -> bool {
    let mut found = false;
    fn term(x: &Term, t: &Term, found: &mut bool) {
        if x == t {
            *found = true;
            return;
        }
        match x {
            Term::Add(a, b) | Term::Sub(a, b) | Term::Select(a, b) => {
                term(a, t, found);
                term(b, t, found);
            }
            Term::Mul(_, a) => term(a, t, found),
            _ => {}
        }
    }
    if let Formula::Cmp(_, a, b) = f {
        term(a, t, &mut found);
        term(b, t, &mut found);
    }
    found
}
