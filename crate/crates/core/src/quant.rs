//! Reduction of quantified formulas to quantifier-free ones: negation normal
//! form, skolemization, and instantiation of the remaining universals over a
//! bounded pool of ground terms.
//!
//! The result is weaker than the input (only finitely many instances are
//! kept), so unsatisfiability of the reduced negated VC proves the VC, but a
//! model of it need not refute the VC.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::logic::{
    nnf, substitute_formula, Formula, Quantified, Sort, Substitution, Term, Trigger,
};

/// Declaration of a skolem constant (no arguments) or function.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SkolemDecl {
    pub name: String,
    pub args: Vec<Sort>,
    pub ret: Sort,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTermPool {
    pub depth: usize,
    pub terms: BTreeMap<Sort, BTreeSet<Term>>,
}

impl GroundTermPool {
    pub fn of_sort(&self, s: &Sort) -> Vec<&Term> {
        self.terms.get(s).map(|v| v.iter().collect()).unwrap_or_default()
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.terms.get(&t.sort()).is_some_and(|v| v.contains(t))
    }

    pub fn len(&self) -> usize {
        self.terms.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn insert(&mut self, t: Term) -> bool {
        self.terms.entry(t.sort()).or_default().insert(t)
    }

    pub fn is_subset(&self, other: &GroundTermPool) -> bool {
        self.terms
            .iter()
            .all(|(s, ts)| ts.iter().all(|t| other.terms.get(s).is_some_and(|o| o.contains(t))))
    }
}

/// The instances produced for one universally quantified subformula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceRecord {
    pub source: Quantified,
    pub tuples: Vec<Vec<Term>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxResult {
    pub qf: Formula,
    pub skolems: Vec<SkolemDecl>,
    pub instance_log: Vec<InstanceRecord>,
    pub pool: GroundTermPool,
}

fn fnv64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Replaces existentials of an NNF formula by skolem terms over the
/// enclosing universals they depend on.
///
/// Names are derived from the existential's text and arguments, so the same
/// existential always receives the same skolem symbol.
pub fn skolemize(f: &Formula) -> (Formula, Vec<SkolemDecl>) {
    let mut decls = BTreeSet::new();
    let g = sk(f, &mut Vec::new(), &mut decls);
    (g, decls.into_iter().collect())
}

fn sk(f: &Formula, univ: &mut Vec<(String, Sort)>, decls: &mut BTreeSet<SkolemDecl>) -> Formula {
    match f {
        Formula::And(v) => Formula::And(v.iter().map(|g| sk(g, univ, decls)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| sk(g, univ, decls)).collect()),
        Formula::Forall(q) => {
            let n = univ.len();
            univ.extend(q.vars.iter().cloned());
            let body = sk(&q.body, univ, decls);
            univ.truncate(n);
            Formula::Forall(Quantified {
                vars: q.vars.clone(),
                triggers: q.triggers.clone(),
                body: Box::new(body),
            })
        }
        Formula::Exists(q) => {
            let free: BTreeSet<String> = f.free_vars().into_iter().map(|(n, _)| n).collect();
            // Innermost binding wins when names are shadowed.
            let mut args: Vec<(String, Sort)> = Vec::new();
            for (n, s) in univ.iter().rev() {
                if free.contains(n) && !args.iter().any(|(m, _)| m == n) {
                    args.push((n.clone(), s.clone()));
                }
            }
            args.reverse();
            let mut key = f.to_string();
            for (n, s) in &args {
                let _ = write!(key, "|{n}:{s}");
            }
            let tag = format!("{:012x}", fnv64(&key) & 0xffff_ffff_ffff);
            let mut subst = Substitution::new();
            for (v, s) in &q.vars {
                let name = format!("sk!{}!{tag}", v.split('\'').next().unwrap_or(v));
                decls.insert(SkolemDecl {
                    name: name.clone(),
                    args: args.iter().map(|(_, s)| s.clone()).collect(),
                    ret: s.clone(),
                });
                let t = if args.is_empty() {
                    Term::Var(name, s.clone())
                } else {
                    Term::App(
                        name,
                        args.iter().map(|(n, s)| Term::Var(n.clone(), s.clone())).collect(),
                        s.clone(),
                    )
                };
                subst.insert(v.clone(), t);
            }
            sk(&substitute_formula(&q.body, &subst), univ, decls)
        }
        other => other.clone(),
    }
}

/// Ground terms and atoms of a formula: subterms and predicate applications
/// mentioning no bound variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundAtoms {
    pub terms: BTreeSet<Term>,
    pub preds: BTreeSet<(String, Vec<Term>)>,
}

impl GroundAtoms {
    pub fn of(f: &Formula) -> GroundAtoms {
        let mut g = GroundAtoms::default();
        g.add(f);
        g
    }

    pub fn add(&mut self, f: &Formula) {
        ground_formula(f, &mut BTreeSet::new(), self);
    }

    fn matches(&self, t: &Trigger, s: &Substitution) -> bool {
        use crate::logic::substitute_term;
        match t {
            Trigger::Term(t) => self.terms.contains(&substitute_term(t, s)),
            Trigger::Pred(p, args) => self.preds.contains(&(
                p.clone(),
                args.iter().map(|a| substitute_term(a, s)).collect(),
            )),
        }
    }
}

fn ground_term(t: &Term, bound: &BTreeSet<String>, out: &mut GroundAtoms) -> bool {
    let ground = match t {
        Term::Var(n, _) => !bound.contains(n),
        Term::Int(_) => true,
        Term::Add(a, b) | Term::Sub(a, b) | Term::Select(a, b) => {
            let x = ground_term(a, bound, out);
            ground_term(b, bound, out) && x
        }
        Term::Mul(_, a) => ground_term(a, bound, out),
        Term::App(_, args, _) => args
            .iter()
            .fold(true, |acc, a| ground_term(a, bound, out) && acc),
        Term::Store(a, i, v) => {
            let x = ground_term(a, bound, out);
            let y = ground_term(i, bound, out);
            ground_term(v, bound, out) && x && y
        }
        Term::Ite(c, a, b) => {
            let x = ground_formula(c, &mut bound.clone(), out);
            let y = ground_term(a, bound, out);
            ground_term(b, bound, out) && x && y
        }
    };
    if ground {
        out.terms.insert(t.clone());
    }
    ground
}

fn ground_formula(f: &Formula, bound: &mut BTreeSet<String>, out: &mut GroundAtoms) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Hole(_) => true,
        Formula::Cmp(_, a, b) => {
            let x = ground_term(a, bound, out);
            ground_term(b, bound, out) && x
        }
        Formula::Pred(p, args) => {
            let g = args.iter().fold(true, |acc, a| ground_term(a, bound, out) && acc);
            if g {
                out.preds.insert((p.clone(), args.clone()));
            }
            g
        }
        Formula::Not(a) => ground_formula(a, bound, out),
        Formula::And(v) | Formula::Or(v) => v
            .iter()
            .fold(true, |acc, g| ground_formula(g, bound, out) && acc),
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let x = ground_formula(a, bound, out);
            ground_formula(b, bound, out) && x
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            let mut inner = bound.clone();
            inner.extend(q.vars.iter().map(|(n, _)| n.clone()));
            ground_formula(&q.body, &mut inner, out);
            false
        }
    }
}

/// Syntactic ingredients of pool construction.
#[derive(Default)]
struct Signature {
    constants: BTreeSet<Term>,
    literals: BTreeSet<i64>,
    functions: BTreeSet<(String, Vec<Sort>, Sort)>,
    offsets: BTreeSet<i64>,
}

fn sig_term(t: &Term, bound: &BTreeSet<String>, sig: &mut Signature) {
    match t {
        Term::Var(n, _) => {
            if !bound.contains(n) {
                sig.constants.insert(t.clone());
            }
        }
        Term::Int(n) => {
            sig.literals.insert(*n);
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            if let (Term::Var(n, Sort::Int), Term::Int(c)) = (&**a, &**b) {
                if bound.contains(n) {
                    sig.offsets.insert(if matches!(t, Term::Add(..)) { *c } else { -*c });
                }
            }
            sig_term(a, bound, sig);
            sig_term(b, bound, sig);
        }
        Term::Select(a, b) => {
            sig_term(a, bound, sig);
            sig_term(b, bound, sig);
        }
        Term::Mul(c, a) => {
            sig.literals.insert(*c);
            sig_term(a, bound, sig);
        }
        Term::App(f, args, s) => {
            if args.is_empty() {
                sig.constants.insert(t.clone());
            }
            sig.functions
                .insert((f.clone(), args.iter().map(Term::sort).collect(), s.clone()));
            args.iter().for_each(|a| sig_term(a, bound, sig));
        }
        Term::Store(a, i, v) => {
            sig_term(a, bound, sig);
            sig_term(i, bound, sig);
            sig_term(v, bound, sig);
        }
        Term::Ite(c, a, b) => {
            sig_formula(c, &mut bound.clone(), sig);
            sig_term(a, bound, sig);
            sig_term(b, bound, sig);
        }
    }
}

fn sig_formula(f: &Formula, bound: &mut BTreeSet<String>, sig: &mut Signature) {
    match f {
        Formula::True | Formula::False | Formula::Hole(_) => {}
        Formula::Cmp(_, a, b) => {
            sig_term(a, bound, sig);
            sig_term(b, bound, sig);
        }
        Formula::Pred(_, args) => args.iter().for_each(|a| sig_term(a, bound, sig)),
        Formula::Not(a) => sig_formula(a, bound, sig),
        Formula::And(v) | Formula::Or(v) => v.iter().for_each(|g| sig_formula(g, bound, sig)),
        Formula::Implies(a, b) | Formula::Iff(a, b) => {
            sig_formula(a, bound, sig);
            sig_formula(b, bound, sig);
        }
        Formula::Forall(q) | Formula::Exists(q) => {
            let mut inner = bound.clone();
            inner.extend(q.vars.iter().map(|(n, _)| n.clone()));
            sig_formula(&q.body, &mut inner, sig);
        }
    }
}

/// Ground-term pool of `f` at depth `k`.
///
/// Depth 0 holds the free constants of every sort, the integer literals of
/// `f`, and 0. Each further level applies every function symbol of `f` to
/// arguments of the previous level, selects from pool arrays at pool
/// integers, and adds `t ± c` for every offset `x ± c` applied to a bound
/// variable in `f`.
pub fn collect_terms(f: &Formula, k: usize) -> GroundTermPool {
    collect_terms_all(std::slice::from_ref(f), k)
}

pub fn collect_terms_all(fs: &[Formula], k: usize) -> GroundTermPool {
    let mut sig = Signature::default();
    for f in fs {
        sig_formula(f, &mut BTreeSet::new(), &mut sig);
    }
    let mut pool = GroundTermPool {
        depth: k,
        terms: BTreeMap::new(),
    };
    pool.insert(Term::Int(0));
    for n in &sig.literals {
        pool.insert(Term::Int(*n));
    }
    for c in &sig.constants {
        pool.insert(c.clone());
    }
    for _ in 0..k {
        let prev = pool.clone();
        let ints = prev.of_sort(&Sort::Int);
        for (name, args, ret) in &sig.functions {
            if args.is_empty() {
                continue;
            }
            let choices: Vec<Vec<&Term>> = args.iter().map(|s| prev.of_sort(s)).collect();
            for tuple in product(&choices) {
                pool.insert(Term::App(
                    name.clone(),
                    tuple.into_iter().cloned().collect(),
                    ret.clone(),
                ));
            }
        }
        for a in prev.of_sort(&Sort::Array) {
            for i in &ints {
                pool.insert(Term::select(a.clone(), (*i).clone()));
            }
        }
        for c in &sig.offsets {
            for t in &ints {
                pool.insert(if *c >= 0 {
                    Term::add((*t).clone(), Term::Int(*c))
                } else {
                    Term::sub((*t).clone(), Term::Int(-*c))
                });
            }
        }
    }
    pool
}

fn product<'a, T>(choices: &[Vec<&'a T>]) -> Vec<Vec<&'a T>> {
    let mut out: Vec<Vec<&T>> = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for prefix in &out {
            for x in c {
                let mut p = prefix.clone();
                p.push(*x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Replaces every universal by the conjunction of its instances over `pool`.
///
/// A quantifier with triggers only receives the instances whose trigger
/// instance occurs in `ground`; without `ground`, triggers are ignored.
pub fn instantiate(
    f: &Formula,
    pool: &GroundTermPool,
    ground: Option<&GroundAtoms>,
    log: &mut Vec<InstanceRecord>,
) -> Formula {
    match f {
        Formula::And(v) => Formula::And(v.iter().map(|g| instantiate(g, pool, ground, log)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| instantiate(g, pool, ground, log)).collect()),
        Formula::Not(a) => Formula::not(instantiate(a, pool, ground, log)),
        Formula::Implies(a, b) => Formula::implies(
            instantiate(a, pool, ground, log),
            instantiate(b, pool, ground, log),
        ),
        Formula::Iff(a, b) => Formula::Iff(
            Box::new(instantiate(a, pool, ground, log)),
            Box::new(instantiate(b, pool, ground, log)),
        ),
        Formula::Forall(q) => {
            let choices: Vec<Vec<&Term>> = q.vars.iter().map(|(_, s)| pool.of_sort(s)).collect();
            let mut tuples = Vec::new();
            let mut parts = Vec::new();
            for tuple in product(&choices) {
                let s: Substitution = q
                    .vars
                    .iter()
                    .zip(&tuple)
                    .map(|((n, _), t)| (n.clone(), (*t).clone()))
                    .collect();
                if let Some(g) = ground {
                    if !q.triggers.is_empty() && !q.triggers.iter().any(|t| g.matches(t, &s)) {
                        continue;
                    }
                }
                parts.push(substitute_formula(&q.body, &s));
                tuples.push(tuple.into_iter().cloned().collect());
            }
            log.push(InstanceRecord {
                source: q.clone(),
                tuples,
            });
            let parts: Vec<Formula> = parts
                .iter()
                .map(|p| instantiate(p, pool, ground, log))
                .collect();
            Formula::conj(parts)
        }
        Formula::Exists(_) => panic!("instantiate expects a skolemized formula"),
        other => other.clone(),
    }
}

/// Pool and trigger context shared by several formulas that are reduced
/// together (for example, the pieces of one negated VC).
#[derive(Clone, Debug)]
pub struct Approximator {
    pub pool: GroundTermPool,
    pub ground: GroundAtoms,
}

impl Approximator {
    /// Builds the context from already skolemized formulas.
    pub fn from_skolemized(fs: &[Formula], k: usize) -> Approximator {
        let mut ground = GroundAtoms::default();
        for f in fs {
            ground.add(f);
        }
        Approximator {
            pool: collect_terms_all(fs, k),
            ground,
        }
    }

    /// `instantiate(skolemize(nnf(f)))` in this context.
    pub fn reduce(&self, f: &Formula) -> (Formula, Vec<SkolemDecl>, Vec<InstanceRecord>) {
        let (s, decls) = skolemize(&nnf(f));
        let mut log = Vec::new();
        let qf = instantiate(&s, &self.pool, Some(&self.ground), &mut log);
        (simplify(&qf), decls, log)
    }
}

/// `approx(φ)`: the quantifier-free reduction of `¬φ`.
pub fn approx(vc: &Formula, k: usize) -> ApproxResult {
    approx_negated(&Formula::not(vc.clone()), k)
}

/// Reduces an already negated formula.
pub fn approx_negated(neg: &Formula, k: usize) -> ApproxResult {
    let (s, skolems) = skolemize(&nnf(neg));
    let ctx = Approximator::from_skolemized(std::slice::from_ref(&s), k);
    let mut log = Vec::new();
    let qf = instantiate(&s, &ctx.pool, Some(&ctx.ground), &mut log);
    ApproxResult {
        qf: simplify(&qf),
        skolems,
        instance_log: log,
        pool: ctx.pool,
    }
}

/// Constant folding of `true`/`false` through connectives; flattens nested
/// conjunctions and disjunctions.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::And(v) => {
            let mut out = Vec::new();
            for g in v {
                match simplify(g) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    Formula::And(w) => out.extend(w),
                    h => out.push(h),
                }
            }
            Formula::conj(out)
        }
        Formula::Or(v) => {
            let mut out = Vec::new();
            for g in v {
                match simplify(g) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    Formula::Or(w) => out.extend(w),
                    h => out.push(h),
                }
            }
            Formula::disj(out)
        }
        Formula::Not(a) => match simplify(a) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            g => Formula::not(g),
        },
        Formula::Implies(a, b) => simplify(&Formula::Or(vec![Formula::not((**a).clone()), (**b).clone()])),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_program, CmpOp, Program};

    fn prog() -> Program {
        parse_program(
            "var i: int; var N: int; var a: [int]int;
             function pow2(int): int; function g(int): int;
             procedure t() { }",
        )
        .unwrap()
    }

    fn f(s: &str) -> Formula {
        parse_formula(s, &prog()).unwrap()
    }

    fn ints(pool: &GroundTermPool) -> Vec<String> {
        pool.of_sort(&Sort::Int).iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn depth_zero_pool() {
        let p = collect_terms(&f("i < N"), 0);
        assert_eq!(ints(&p), ["N", "i", "0"]);
        let p = collect_terms(&f("7 > 3 - 3"), 0);
        assert_eq!(ints(&p), ["0", "3", "7"]);
    }

    #[test]
    fn depth_one_applies_functions_and_offsets() {
        let phi = f("(forall n: int :: n > 0 ==> pow2(n) == 2 * pow2(n - 1)) && i < N");
        let p0 = collect_terms(&phi, 0);
        let p1 = collect_terms(&phi, 1);
        assert!(p0.is_subset(&p1));
        for t in ["pow2(i)", "i - 1", "pow2(N)", "N - 1"] {
            assert!(ints(&p1).contains(&t.to_string()), "{t} missing from {:?}", ints(&p1));
        }
        assert!(!ints(&p1).contains(&"pow2(i - 1)".to_string()));
    }

    #[test]
    fn skolemize_examples() {
        let (g, d) = skolemize(&f("(exists x: int :: x > 0)"));
        assert_eq!(d.len(), 1);
        assert!(d[0].args.is_empty());
        assert!(matches!(g, Formula::Cmp(CmpOp::Gt, Term::Var(..), Term::Int(0))));

        let (g, d) = skolemize(&f("(forall y: int :: (exists x: int :: x > y))"));
        assert_eq!(d[0].args, vec![Sort::Int]);
        match g {
            Formula::Forall(q) => assert!(matches!(
                *q.body,
                Formula::Cmp(CmpOp::Gt, Term::App(_, ref args, _), _) if args == &[Term::int_var("y")]
            )),
            g => panic!("{g}"),
        }

        let qf = f("i < N && a[i] == 0");
        assert_eq!(skolemize(&qf).0, qf);
    }

    #[test]
    fn skolem_names_are_stable() {
        let e = f("(exists x: int :: x > i)");
        let (a, _) = skolemize(&e);
        let (b, _) = skolemize(&Formula::And(vec![Formula::True, e]));
        assert_eq!(Formula::And(vec![Formula::True, a]), b);
    }

    #[test]
    fn instantiate_examples() {
        let phi = f("(forall n: int :: n > 0 ==> pow2(n) == 2 * pow2(n - 1))");
        let mut pool = GroundTermPool::default();
        pool.insert(Term::int_var("n0"));
        let mut log = Vec::new();
        let g = instantiate(&phi, &pool, None, &mut log);
        assert_eq!(g.to_string(), "n0 > 0 ==> pow2(n0) == 2 * pow2(n0 - 1)");
        pool.insert(Term::Int(0));
        let g = instantiate(&phi, &pool, None, &mut log);
        assert!(matches!(g, Formula::And(ref v) if v.len() == 2));
        let g = instantiate(&phi, &GroundTermPool::default(), None, &mut log);
        assert_eq!(g, Formula::True);
    }

    #[test]
    fn triggers_restrict_instances() {
        let p = parse_program(
            "var N: int; function img(int): bool; function h(int): int;
             procedure t() requires (forall x: int :: { img(x) } img(x) ==> h(x) > 0); { }",
        )
        .unwrap();
        let phi = Formula::And(vec![
            p.procedure.requires[0].clone(),
            parse_formula("img(N) && !(h(N) > 0) && 5 > 0", &p).unwrap(),
        ]);
        let r = approx_negated(&phi, 0);
        let rec = &r.instance_log[0];
        assert_eq!(rec.tuples, vec![vec![Term::int_var("N")]]);
    }

    #[test]
    fn approx_examples() {
        let r = approx(&f("i > 0 ==> i >= 0"), 1);
        assert!(r.qf.is_quantifier_free());
        assert_eq!(r.qf.to_string(), "i > 0 && !(i >= 0)");

        let r = approx(&f("true ==> (forall x: int :: x == x)"), 0);
        assert_eq!(r.skolems.len(), 1);
        let sk = Term::Var(r.skolems[0].name.clone(), Sort::Int);
        assert_eq!(r.qf, Formula::not(Formula::Cmp(CmpOp::Eq, sk.clone(), sk)));

        let r = approx(&f("(forall n: int :: g(n) > n) ==> g(i) > i"), 0);
        assert!(r.qf.to_string().contains("g(i) > i"));
    }
}
