//! Hoare-triple decomposition at cut points and verification-condition
//! generation.
//!
//! VCs are built in passive form: every assignment or havoc introduces a
//! fresh version constant `x@k`, so both the pre-state (plain names) and the
//! post-state (the final version map) stay addressable in a countermodel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ice::Candidate;
use crate::logic::{
    fresh_name, stmts_to_string, substitute_formula, substitute_holes, substitute_term, CmpOp,
    Formula, HoleId, Predicates, Program, Quantified, Sort, Stmt, Substitution, Term, UnboundHole,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TripleKind {
    PreToInv,
    InvToPost,
    InvToInv,
    Plain,
}

impl TripleKind {
    /// Checking order used by the teacher.
    pub fn rank(self) -> u8 {
        match self {
            TripleKind::PreToInv => 0,
            TripleKind::InvToInv => 1,
            TripleKind::InvToPost => 2,
            TripleKind::Plain => 3,
        }
    }
}

impl fmt::Display for TripleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TripleKind::PreToInv => "pre-to-inv",
            TripleKind::InvToPost => "inv-to-post",
            TripleKind::InvToInv => "inv-to-inv",
            TripleKind::Plain => "plain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoareTriple {
    /// Position in program order.
    pub id: usize,
    pub pre: Formula,
    pub body: Vec<Stmt>,
    pub post: Formula,
    pub kind: TripleKind,
    pub pre_hole: Option<HoleId>,
    pub post_hole: Option<HoleId>,
}

impl HoareTriple {
    fn new(id: usize, pre: Formula, body: Vec<Stmt>, post: Formula) -> HoareTriple {
        let pre_hole = pre.holes().into_iter().next();
        let post_hole = post.holes().into_iter().next();
        let kind = match (&pre_hole, &post_hole) {
            (None, Some(_)) => TripleKind::PreToInv,
            (Some(_), None) => TripleKind::InvToPost,
            (Some(_), Some(_)) => TripleKind::InvToInv,
            (None, None) => TripleKind::Plain,
        };
        HoareTriple {
            id,
            pre,
            body,
            post,
            kind,
            pre_hole,
            post_hole,
        }
    }

    pub fn label(&self) -> String {
        let end = |h: &Option<HoleId>, s: &str| match h {
            Some(h) => format!("?{h}"),
            None => s.to_string(),
        };
        format!(
            "#{} {} {}->{}",
            self.id,
            self.kind,
            end(&self.pre_hole, "entry"),
            end(&self.post_hole, "exit")
        )
    }
}

impl fmt::Display for HoareTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{{ {} }}", self.pre)?;
        for line in stmts_to_string(&self.body).lines() {
            writeln!(f, "  {line}")?;
        }
        write!(f, "{{ {} }}", self.post)
    }
}

/// Splits the procedure at loop heads and `invariant ?H;` cut points.
pub fn cut_loops(p: &Program) -> Vec<HoareTriple> {
    let mut out = Vec::new();
    let entry = Formula::conj(p.procedure.requires.iter().cloned());
    let exit = Formula::conj(p.procedure.ensures.iter().cloned());
    cut(&p.procedure.body, entry, exit, &mut out);
    out
}

fn cut(stmts: &[Stmt], entry: Formula, exit: Formula, out: &mut Vec<HoareTriple>) {
    let mut pre = entry;
    let mut seg = Vec::new();
    for s in stmts {
        match s {
            Stmt::While { cond, hole, body } => {
                let h = Formula::Hole(hole.clone());
                let id = out.len();
                out.push(HoareTriple::new(id, pre, std::mem::take(&mut seg), h.clone()));
                cut(
                    body,
                    Formula::And(vec![h.clone(), cond.clone()]),
                    h.clone(),
                    out,
                );
                pre = Formula::And(vec![h, Formula::not(cond.clone())]);
            }
            Stmt::Cut(hole) => {
                let h = Formula::Hole(hole.clone());
                let id = out.len();
                out.push(HoareTriple::new(id, pre, std::mem::take(&mut seg), h.clone()));
                pre = h;
            }
            other => seg.push(other.clone()),
        }
    }
    let id = out.len();
    out.push(HoareTriple::new(id, pre, seg, exit));
}

/// Classic substitution-based weakest precondition of a loop-free sequence.
pub fn wp(stmts: &[Stmt], post: &Formula, sorts: &BTreeMap<String, Sort>) -> Formula {
    stmts
        .iter()
        .rev()
        .fold(post.clone(), |acc, s| wp_stmt(s, &acc, sorts))
}

fn wp_stmt(s: &Stmt, post: &Formula, sorts: &BTreeMap<String, Sort>) -> Formula {
    let one = |x: &str, t: Term| -> Substitution { [(x.to_string(), t)].into() };
    match s {
        Stmt::Assign(x, e) => substitute_formula(post, &one(x, e.clone())),
        Stmt::ArrayAssign(a, i, v) => {
            let arr = Term::Var(a.clone(), Sort::Array);
            substitute_formula(post, &one(a, Term::store(arr, i.clone(), v.clone())))
        }
        Stmt::Havoc(x) => {
            let avoid: BTreeSet<String> = post.free_vars().into_iter().map(|(n, _)| n).collect();
            let fresh = fresh_name(x, &avoid);
            let sort = sorts.get(x).cloned().unwrap_or(Sort::Int);
            Formula::Forall(Quantified {
                vars: vec![(fresh.clone(), sort.clone())],
                triggers: vec![],
                body: Box::new(substitute_formula(post, &one(x, Term::Var(fresh, sort)))),
            })
        }
        Stmt::Assume(c) => Formula::implies(c.clone(), post.clone()),
        Stmt::Assert(c) => Formula::And(vec![c.clone(), post.clone()]),
        Stmt::If(c, a, b) => Formula::And(vec![
            Formula::implies(c.clone(), wp(a, post, sorts)),
            Formula::implies(Formula::not(c.clone()), wp(b, post, sorts)),
        ]),
        Stmt::While { .. } | Stmt::Cut(_) => {
            panic!("wp called on a statement sequence containing a cut point")
        }
    }
}

/// Passive form of a loop-free body.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Passive {
    /// Constraints accumulated along the whole body (equations and assumptions).
    pub path: Vec<Formula>,
    /// `(reach, goal)` per assert, where `reach` is the path prefix before it.
    pub asserts: Vec<(Formula, Formula)>,
    /// Final version of every modified variable.
    pub end: Substitution,
}

struct Exec<'a> {
    sorts: &'a BTreeMap<String, Sort>,
    counters: BTreeMap<String, usize>,
}

impl Exec<'_> {
    fn version(&mut self, x: &str) -> Term {
        let k = self.counters.entry(x.to_string()).or_insert(0);
        *k += 1;
        let sort = self.sorts.get(x).cloned().unwrap_or(Sort::Int);
        Term::Var(format!("{x}@{k}"), sort)
    }

    fn current(sigma: &Substitution, x: &str, sort: &Sort) -> Term {
        sigma
            .get(x)
            .cloned()
            .unwrap_or_else(|| Term::Var(x.to_string(), sort.clone()))
    }

    fn run(
        &mut self,
        stmts: &[Stmt],
        sigma: &mut Substitution,
        prefix: &[Formula],
        asserts: &mut Vec<(Formula, Formula)>,
    ) -> Vec<Formula> {
        let mut local: Vec<Formula> = Vec::new();
        for s in stmts {
            match s {
                Stmt::Assign(x, e) => {
                    let rhs = substitute_term(e, sigma);
                    let v = self.version(x);
                    local.push(Formula::Cmp(CmpOp::Eq, v.clone(), rhs));
                    sigma.insert(x.clone(), v);
                }
                Stmt::ArrayAssign(a, i, e) => {
                    let cur = Self::current(sigma, a, &Sort::Array);
                    let rhs = Term::store(cur, substitute_term(i, sigma), substitute_term(e, sigma));
                    let v = self.version(a);
                    local.push(Formula::Cmp(CmpOp::Eq, v.clone(), rhs));
                    sigma.insert(a.clone(), v);
                }
                Stmt::Havoc(x) => {
                    let v = self.version(x);
                    sigma.insert(x.clone(), v);
                }
                Stmt::Assume(c) => local.push(substitute_formula(c, sigma)),
                Stmt::Assert(c) => {
                    let goal = substitute_formula(c, sigma);
                    let reach = Formula::conj(prefix.iter().chain(&local).cloned());
                    asserts.push((reach, goal.clone()));
                    local.push(goal);
                }
                Stmt::If(c, a, b) => {
                    let cond = substitute_formula(c, sigma);
                    let here: Vec<Formula> = prefix.iter().chain(&local).cloned().collect();
                    let mut s1 = sigma.clone();
                    let mut s2 = sigma.clone();
                    let mut p1 = [here.clone(), vec![cond.clone()]].concat();
                    let l1 = self.run(a, &mut s1, &p1, asserts);
                    p1 = [here, vec![Formula::not(cond.clone())]].concat();
                    let l2 = self.run(b, &mut s2, &p1, asserts);
                    let mut then_part = vec![cond.clone()];
                    then_part.extend(l1);
                    let mut else_part = vec![Formula::not(cond)];
                    else_part.extend(l2);
                    let touched: BTreeSet<&String> = s1.keys().chain(s2.keys()).collect();
                    for x in touched {
                        let sort = self.sorts.get(x).cloned().unwrap_or(Sort::Int);
                        let t1 = Self::current(&s1, x, &sort);
                        let t2 = Self::current(&s2, x, &sort);
                        if t1 == t2 {
                            sigma.insert(x.clone(), t1);
                            continue;
                        }
                        let v = self.version(x);
                        then_part.push(Formula::Cmp(CmpOp::Eq, v.clone(), t1));
                        else_part.push(Formula::Cmp(CmpOp::Eq, v.clone(), t2));
                        sigma.insert(x.clone(), v);
                    }
                    local.push(Formula::Or(vec![
                        Formula::conj(then_part),
                        Formula::conj(else_part),
                    ]));
                }
                Stmt::While { .. } | Stmt::Cut(_) => {
                    panic!("passive form requested for a body containing a cut point")
                }
            }
        }
        local
    }
}

pub fn passive(stmts: &[Stmt], sorts: &BTreeMap<String, Sort>) -> Passive {
    let mut exec = Exec {
        sorts,
        counters: BTreeMap::new(),
    };
    let mut sigma = Substitution::new();
    let mut asserts = Vec::new();
    let path = exec.run(stmts, &mut sigma, &[], &mut asserts);
    Passive {
        path,
        asserts,
        end: sigma,
    }
}

/// A verification condition `⋀hyps ⇒ ⋀(reach_i ⇒ goal_i)`.
///
/// The last obligation is always the triple's postcondition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vc {
    pub triple: HoareTriple,
    /// Axioms, framed preconditions and the triple's precondition.
    pub hyps: Vec<Formula>,
    pub obligations: Vec<(Formula, Formula)>,
    /// Pre-state snapshot; the identity, since the pre-state uses plain names.
    pub pre_state: Substitution,
    /// Post-state snapshot: program variable to final version.
    pub post_state: Substitution,
}

impl Vc {
    pub fn formula(&self) -> Formula {
        Formula::implies(
            Formula::conj(self.hyps.iter().cloned()),
            Formula::conj(
                self.obligations
                    .iter()
                    .map(|(r, g)| match r {
                        Formula::True => g.clone(),
                        r => Formula::implies(r.clone(), g.clone()),
                    }),
            ),
        )
    }

    /// `¬VC` split into conjunctive hypotheses and one failure disjunct per obligation.
    pub fn negation_pieces(&self) -> (Vec<Formula>, Vec<Formula>) {
        let fails = self
            .obligations
            .iter()
            .map(|(r, g)| Formula::conj(r.conjuncts().into_iter().cloned().chain([Formula::not(g.clone())])))
            .collect();
        (self.hyps.clone(), fails)
    }

    pub fn negation(&self) -> Formula {
        let (hyps, fails) = self.negation_pieces();
        Formula::conj(hyps.into_iter().chain([Formula::disj(fails)]))
    }
}

/// Hypotheses shared by every triple: axioms, then preconditions over
/// variables the procedure never writes.
pub fn background(p: &Program) -> Vec<Formula> {
    let modified = p.modified_vars();
    let mut out: Vec<Formula> = p.axioms.clone();
    for r in &p.procedure.requires {
        for c in r.conjuncts() {
            if c.free_vars().iter().all(|(n, _)| !modified.contains(n)) && !out.contains(c) {
                out.push(c.clone());
            }
        }
    }
    out
}

pub fn sorts_of(p: &Program) -> BTreeMap<String, Sort> {
    p.vars.iter().cloned().collect()
}

/// VC of a triple with explicit, hole-free pre and post formulas.
pub fn vc_with(p: &Program, t: &HoareTriple, pre: Formula, post: Formula) -> Vc {
    let sorts = sorts_of(p);
    let body = passive(&t.body, &sorts);
    let mut hyps = background(p);
    for c in pre.conjuncts() {
        if !hyps.contains(c) {
            hyps.push(c.clone());
        }
    }
    let mut obligations = body.asserts;
    obligations.push((
        Formula::conj(body.path),
        substitute_formula(&post, &body.end),
    ));
    Vc {
        triple: t.clone(),
        hyps,
        obligations,
        pre_state: Substitution::new(),
        post_state: body.end,
    }
}

/// VC of a triple with its holes filled from `candidate`.
pub fn vc_of(
    p: &Program,
    t: &HoareTriple,
    candidate: &Candidate,
    predicates: &Predicates,
) -> Result<Vc, UnboundHole> {
    let pre = substitute_holes(&t.pre, candidate, predicates)?;
    let post = substitute_holes(&t.post, candidate, predicates)?;
    Ok(vc_with(p, t, pre, post))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ice::Conjunction;
    use crate::logic::{parse_formula, parse_program};

    const COUNTER: &str = "
        var i: int; var N: int;
        procedure c() requires i == 0 && N > 0; ensures i == N; {
          while (i < N) invariant ?H; { i := i + 1; }
        }";

    #[test]
    fn single_loop_has_three_triples() {
        let p = parse_program(COUNTER).unwrap();
        let ts = cut_loops(&p);
        let kinds: Vec<TripleKind> = ts.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            [TripleKind::PreToInv, TripleKind::InvToInv, TripleKind::InvToPost]
        );
    }

    #[test]
    fn loop_free_program_is_one_plain_triple() {
        let p = parse_program("var x: int; procedure t() requires x > 0; ensures x > 1; { x := x + 1; }").unwrap();
        let ts = cut_loops(&p);
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].kind, TripleKind::Plain);
    }

    #[test]
    fn cut_point_gives_cross_hole_triple() {
        let src = "var i: int; var N: int;
            procedure t() requires N > 0; ensures i == N; {
              i := 0;
              while (i < N) invariant ?L; { i := i + 1; }
              invariant ?R;
            }";
        let ts = cut_loops(&parse_program(src).unwrap());
        assert_eq!(ts.len(), 4);
        assert_eq!(ts[2].kind, TripleKind::InvToInv);
        assert_eq!(ts[2].pre_hole, Some(HoleId::new("L")));
        assert_eq!(ts[2].post_hole, Some(HoleId::new("R")));
        assert!(ts[2].body.is_empty());
    }

    #[test]
    fn wp_examples() {
        let p = parse_program("var x: int; procedure t() { }").unwrap();
        let sorts = sorts_of(&p);
        let f = |s: &str| parse_formula(s, &p).unwrap();
        let inc = Stmt::Assign("x".into(), Term::add(Term::int_var("x"), Term::Int(1)));
        assert_eq!(wp(&[inc], &f("x > 0"), &sorts), f("x + 1 > 0"));
        let c = f("x < 3");
        assert_eq!(
            wp(&[Stmt::Assume(c.clone())], &f("x > 0"), &sorts),
            Formula::implies(c, f("x > 0"))
        );
        assert_eq!(
            wp(&[Stmt::Havoc("x".into())], &f("x >= 0"), &sorts).to_string(),
            "(forall x'1: int :: x'1 >= 0)"
        );
    }

    #[test]
    fn wp_sequences_compose() {
        let p = parse_program("var x: int; var y: int; procedure t() { x := x + y; y := 2 * x; assert y > x; }").unwrap();
        let sorts = sorts_of(&p);
        let body = &p.procedure.body;
        let post = parse_formula("x < y", &p).unwrap();
        assert_eq!(
            wp(body, &post, &sorts),
            wp(&body[..1], &wp(&body[1..], &post, &sorts), &sorts)
        );
    }

    #[test]
    fn counter_inductive_vc_shape() {
        let p = parse_program(COUNTER).unwrap();
        let ts = cut_loops(&p);
        let preds = Predicates {
            by_hole: [(HoleId::new("H"), vec![parse_formula("i >= 0", &p).unwrap()])].into(),
        };
        let cand: Candidate = [(HoleId::new("H"), Conjunction::new(HoleId::new("H"), [0]))].into();
        let vc = vc_of(&p, &ts[1], &cand, &preds).unwrap();
        assert_eq!(vc.formula().to_string(), "N > 0 && i >= 0 && i < N ==> i@1 == i + 1 ==> i@1 >= 0");
        assert_eq!(vc.post_state["i"], Term::int_var("i@1"));
        // The classic wp of the body yields the same obligation.
        let sorts = sorts_of(&p);
        assert_eq!(
            wp(&ts[1].body, &parse_formula("i >= 0", &p).unwrap(), &sorts).to_string(),
            "i + 1 >= 0"
        );
    }

    #[test]
    fn unbound_hole_is_an_error() {
        let p = parse_program(COUNTER).unwrap();
        let ts = cut_loops(&p);
        assert!(vc_of(&p, &ts[0], &Candidate::new(), &Predicates::default()).is_err());
    }

    #[test]
    fn branches_merge_versions() {
        let p = parse_program("var x: int; procedure t() ensures x >= 0; { if (x < 0) { x := 0 - x; } else { } }").unwrap();
        let ts = cut_loops(&p);
        let vc = vc_with(&p, &ts[0], Formula::True, ts[0].post.clone());
        assert_eq!(vc.post_state["x"], Term::int_var("x@2"));
        assert_eq!(
            vc.obligations[0].0.to_string(),
            "x < 0 && x@1 == 0 - x && x@2 == x@1 || !(x < 0) && x@2 == x"
        );
    }

    #[test]
    fn statements_are_covered_once() {
        let src = "var i: int; var j: int; var N: int;
            procedure t() requires N > 0; {
              i := 0; j := 0;
              while (i < N) invariant ?A; { j := 0; while (j < i) invariant ?B; { j := j + 1; } i := i + 1; }
              assert j >= 0;
            }";
        let p = parse_program(src).unwrap();
        let n: usize = cut_loops(&p).iter().map(|t| t.body.len()).sum();
        fn count(s: &[Stmt]) -> usize {
            s.iter()
                .map(|s| match s {
                    Stmt::While { body, .. } => count(body),
                    Stmt::Cut(_) => 0,
                    _ => 1,
                })
                .sum()
        }
        assert_eq!(n, count(&p.procedure.body));
        assert_eq!(cut_loops(&p).len(), 5);
    }
}
