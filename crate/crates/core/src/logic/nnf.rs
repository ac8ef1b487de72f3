use super::{Formula, Quantified};

/// Negation normal form: `==>` and `<==>` are eliminated and negation only
/// sits directly on comparisons or predicate applications.
///
/// Negated comparisons are kept as `Not(Cmp)` rather than flipped, so the
/// atom set of the output matches the input's.
pub fn nnf(f: &Formula) -> Formula {
    pos(f)
}

fn pos(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Cmp(..) | Formula::Pred(..) | Formula::Hole(_) => {
            f.clone()
        }
        Formula::Not(a) => neg(a),
        Formula::And(v) => Formula::And(v.iter().map(pos).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(pos).collect()),
        Formula::Implies(a, b) => Formula::Or(vec![neg(a), pos(b)]),
        Formula::Iff(a, b) => Formula::Or(vec![
            Formula::And(vec![pos(a), pos(b)]),
            Formula::And(vec![neg(a), neg(b)]),
        ]),
        Formula::Forall(q) => Formula::Forall(map_body(q, pos)),
        Formula::Exists(q) => Formula::Exists(map_body(q, pos)),
    }
}

fn neg(f: &Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        Formula::Cmp(..) | Formula::Pred(..) | Formula::Hole(_) => Formula::not(f.clone()),
        Formula::Not(a) => pos(a),
        Formula::And(v) => Formula::Or(v.iter().map(neg).collect()),
        Formula::Or(v) => Formula::And(v.iter().map(neg).collect()),
        Formula::Implies(a, b) => Formula::And(vec![pos(a), neg(b)]),
        Formula::Iff(a, b) => Formula::Or(vec![
            Formula::And(vec![pos(a), neg(b)]),
            Formula::And(vec![neg(a), pos(b)]),
        ]),
        // Triggers do not carry over to the dual quantifier.
        Formula::Forall(q) => Formula::Exists(Quantified {
            triggers: Vec::new(),
            ..map_body(q, neg)
        }),
        Formula::Exists(q) => Formula::Forall(Quantified {
            triggers: Vec::new(),
            ..map_body(q, neg)
        }),
    }
}

fn map_body(q: &Quantified, g: fn(&Formula) -> Formula) -> Quantified {
    Quantified {
        vars: q.vars.clone(),
        triggers: q.triggers.clone(),
        body: Box::new(g(&q.body)),
    }
}

/// True if `f` is in negation normal form.
pub fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::Not(a) => matches!(**a, Formula::Cmp(..) | Formula::Pred(..) | Formula::Hole(_)),
        Formula::Implies(..) | Formula::Iff(..) => false,
        Formula::And(v) | Formula::Or(v) => v.iter().all(is_nnf),
        Formula::Forall(q) | Formula::Exists(q) => is_nnf(&q.body),
        _ => true,
    }
}
