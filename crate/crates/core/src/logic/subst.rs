//! Capture-avoiding substitution of variables by terms, and hole filling.

use std::collections::{BTreeMap, BTreeSet};

use super::{Formula, HoleId, Quantified, Term, Trigger};

pub type Substitution = BTreeMap<String, Term>;

/// Returns `base'k` for the smallest `k >= 1` not in `avoid`.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = base.split('\'').next().unwrap_or(base);
    (1..)
        .map(|k| format!("{stem}'{k}"))
        .find(|n| !avoid.contains(n))
        .unwrap()
}

pub fn substitute_term(t: &Term, s: &Substitution) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(n, _) => s.get(n).cloned().unwrap_or_else(|| t.clone()),
        Term::Int(_) => t.clone(),
        Term::Add(a, b) => Term::add(substitute_term(a, s), substitute_term(b, s)),
        Term::Sub(a, b) => Term::sub(substitute_term(a, s), substitute_term(b, s)),
        Term::Mul(c, a) => Term::Mul(*c, Box::new(substitute_term(a, s))),
        Term::App(f, args, sort) => Term::App(
            f.clone(),
            args.iter().map(|a| substitute_term(a, s)).collect(),
            sort.clone(),
        ),
        Term::Select(a, i) => Term::select(substitute_term(a, s), substitute_term(i, s)),
        Term::Store(a, i, v) => Term::store(
            substitute_term(a, s),
            substitute_term(i, s),
            substitute_term(v, s),
        ),
        Term::Ite(c, a, b) => Term::Ite(
            Box::new(substitute_formula(c, s)),
            Box::new(substitute_term(a, s)),
            Box::new(substitute_term(b, s)),
        ),
    }
}

pub fn substitute_formula(f: &Formula, s: &Substitution) -> Formula {
    if s.is_empty() {
        return f.clone();
    }
    match f {
        Formula::True | Formula::False | Formula::Hole(_) => f.clone(),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, substitute_term(a, s), substitute_term(b, s)),
        Formula::Pred(p, args) => {
            Formula::Pred(p.clone(), args.iter().map(|a| substitute_term(a, s)).collect())
        }
        Formula::Not(a) => Formula::not(substitute_formula(a, s)),
        Formula::And(v) => Formula::And(v.iter().map(|g| substitute_formula(g, s)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| substitute_formula(g, s)).collect()),
        Formula::Implies(a, b) => {
            Formula::implies(substitute_formula(a, s), substitute_formula(b, s))
        }
        Formula::Iff(a, b) => Formula::Iff(
            Box::new(substitute_formula(a, s)),
            Box::new(substitute_formula(b, s)),
        ),
        Formula::Forall(q) => Formula::Forall(substitute_quantified(q, s)),
        Formula::Exists(q) => Formula::Exists(substitute_quantified(q, s)),
    }
}

fn substitute_quantified(q: &Quantified, s: &Substitution) -> Quantified {
    // Bound variables shadow the substitution.
    let mut inner: Substitution = s
        .iter()
        .filter(|(k, _)| !q.vars.iter().any(|(n, _)| n == *k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if inner.is_empty() {
        return q.clone();
    }
    let mut incoming = BTreeSet::new();
    for t in inner.values() {
        t.visit_vars(&mut |n, _| {
            incoming.insert(n.to_string());
        });
    }
    let mut avoid = incoming.clone();
    avoid.extend(q.body.free_vars().into_iter().map(|(n, _)| n));
    avoid.extend(q.vars.iter().map(|(n, _)| n.clone()));
    let mut vars = Vec::with_capacity(q.vars.len());
    for (n, sort) in &q.vars {
        if incoming.contains(n) {
            let fresh = fresh_name(n, &avoid);
            avoid.insert(fresh.clone());
            inner.insert(n.clone(), Term::Var(fresh.clone(), sort.clone()));
            vars.push((fresh, sort.clone()));
        } else {
            vars.push((n.clone(), sort.clone()));
        }
    }
    Quantified {
        vars,
        triggers: q
            .triggers
            .iter()
            .map(|t| match t {
                Trigger::Term(t) => Trigger::Term(substitute_term(t, &inner)),
                Trigger::Pred(p, args) => Trigger::Pred(
                    p.clone(),
                    args.iter().map(|a| substitute_term(a, &inner)).collect(),
                ),
            })
            .collect(),
        body: Box::new(substitute_formula(&q.body, &inner)),
    }
}

/// Replaces every hole by the formula `fill` returns for it.
pub fn fill_holes<E>(
    f: &Formula,
    fill: &mut dyn FnMut(&HoleId) -> Result<Formula, E>,
) -> Result<Formula, E> {
    Ok(match f {
        Formula::Hole(h) => fill(h)?,
        Formula::Not(a) => Formula::not(fill_holes(a, fill)?),
        Formula::And(v) => Formula::And(
            v.iter()
                .map(|g| fill_holes(g, fill))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Or(v) => Formula::Or(
            v.iter()
                .map(|g| fill_holes(g, fill))
                .collect::<Result<_, _>>()?,
        ),
        Formula::Implies(a, b) => Formula::implies(fill_holes(a, fill)?, fill_holes(b, fill)?),
        Formula::Iff(a, b) => Formula::Iff(
            Box::new(fill_holes(a, fill)?),
            Box::new(fill_holes(b, fill)?),
        ),
        Formula::Forall(q) => Formula::Forall(Quantified {
            body: Box::new(fill_holes(&q.body, fill)?),
            ..q.clone()
        }),
        Formula::Exists(q) => Formula::Exists(Quantified {
            body: Box::new(fill_holes(&q.body, fill)?),
            ..q.clone()
        }),
        other => other.clone(),
    })
}
