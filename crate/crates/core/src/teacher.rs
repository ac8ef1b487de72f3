//! The verification engine: checks a conjectured annotation against every
//! Hoare triple of a program and, when a check fails, turns the countermodel
//! into a single non-provability constraint.
//!
//! Each triple is reduced once per depth into a quantifier-free template in
//! which every predicate of a hole sits behind a Boolean selector. Checking a
//! candidate only fixes the selectors, so all candidates share one pool of
//! ground terms and predicate values can be read back from any model by
//! evaluating the same reduced predicate formulas.

use std::fmt;

use crate::cdnpi::{
    ConjunctionConstraint, Constraint, DisjunctionConstraint, InductivityConstraint,
};
use crate::ice::{Candidate, Conjunction, Valuation};
use crate::logic::{fill_holes, substitute_formula, Formula, HoleId, Predicates, Program};
use crate::quant::{approx_negated, skolemize, Approximator};
use crate::solver::{check, DecisionOutcome, Model, SolverConfig};
use crate::vcgen::{cut_loops, vc_with, HoareTriple, TripleKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GhostReadout {
    pub pre: Option<Valuation>,
    pub post: Option<Valuation>,
}

#[derive(Clone, Debug)]
pub enum TeacherVerdict {
    Verified,
    Rejected {
        constraint: Constraint,
        witness: Model,
        triple: HoareTriple,
        /// The quantifier-free query the witness satisfies.
        query: Formula,
    },
    PlainFailure {
        triple: HoareTriple,
        witness: Model,
        query: Formula,
    },
    EngineFailure(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TeacherError {
    #[error("candidate has no conjunction for hole ?{0}")]
    MissingHole(HoleId),
    #[error("engine mismatch on triple {triple}: {detail}")]
    EngineMismatch { triple: String, detail: String },
}

/// Which part of a negated VC a countermodel falsifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    Post,
    Assert,
}

/// One line of the `--trace` stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub triple: String,
    pub outcome: String,
    pub constraint: Option<Constraint>,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.triple, self.outcome)?;
        if let Some(c) = &self.constraint {
            write!(f, " [{c}]")?;
        }
        Ok(())
    }
}

fn selector(hole: &HoleId, i: usize) -> Formula {
    Formula::Pred(format!("sel!{hole}!{i}"), Vec::new())
}

fn guarded(hole: &HoleId, preds: &Predicates) -> Formula {
    Formula::And(
        preds
            .universe(hole)
            .iter()
            .enumerate()
            .map(|(i, p)| Formula::implies(selector(hole, i), p.clone()))
            .collect(),
    )
}

struct Template {
    triple: HoareTriple,
    ctx: Approximator,
    qf: Formula,
    post_fail: Formula,
    post_state: crate::logic::Substitution,
}

/// Verification engine for one program, predicate universe and depth.
pub struct Teacher {
    program: Program,
    predicates: Predicates,
    depth: usize,
    solver: SolverConfig,
    templates: Vec<Template>,
}

impl Teacher {
    pub fn new(
        program: &Program,
        predicates: &Predicates,
        depth: usize,
        solver: SolverConfig,
    ) -> Teacher {
        let mut triples = cut_loops(program);
        triples.sort_by_key(|t| (t.kind.rank(), t.id));
        let templates = triples
            .into_iter()
            .map(|t| build_template(program, predicates, depth, t))
            .collect();
        Teacher {
            program: program.clone(),
            predicates: predicates.clone(),
            depth,
            solver,
            templates,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn predicates(&self) -> &Predicates {
        &self.predicates
    }

    /// Triples in checking order.
    pub fn triples(&self) -> impl Iterator<Item = &HoareTriple> {
        self.templates.iter().map(|t| &t.triple)
    }

    /// The reduced negated VC of a triple with every selector still free.
    pub fn template_query(&self, triple_id: usize) -> Option<&Formula> {
        self.templates
            .iter()
            .find(|t| t.triple.id == triple_id)
            .map(|t| &t.qf)
    }

    fn query(&self, t: &Template, candidate: &Candidate) -> Result<Formula, TeacherError> {
        let mut parts = vec![t.qf.clone()];
        for h in [&t.triple.pre_hole, &t.triple.post_hole].into_iter().flatten() {
            let c = candidate
                .get(h)
                .ok_or_else(|| TeacherError::MissingHole(h.clone()))?;
            for i in 0..self.predicates.universe(h).len() {
                let s = selector(h, i);
                if c.atoms.contains(&i) {
                    if !parts.contains(&s) {
                        parts.push(s);
                    }
                } else {
                    let n = Formula::not(s);
                    if !parts.contains(&n) {
                        parts.push(n);
                    }
                }
            }
        }
        Ok(Formula::And(parts))
    }

    /// Predicate values at the pre-state of the triple's pre hole and the
    /// post-state of its post hole, over the hole's whole universe.
    pub fn ghost_readout(&self, triple_id: usize, m: &Model) -> Result<GhostReadout, TeacherError> {
        let t = self
            .templates
            .iter()
            .find(|t| t.triple.id == triple_id)
            .expect("unknown triple id");
        self.readout(t, m)
    }

    fn readout(&self, t: &Template, m: &Model) -> Result<GhostReadout, TeacherError> {
        let mismatch = |detail: String| TeacherError::EngineMismatch {
            triple: t.triple.label(),
            detail,
        };
        let pre = match &t.triple.pre_hole {
            Some(h) => {
                let mut bits = Vec::new();
                for p in self.predicates.universe(h) {
                    let (r, _, _) = t.ctx.reduce(p);
                    bits.push(m.eval_formula(&r).map_err(|e| mismatch(e.to_string()))?);
                }
                Some(Valuation::new(h.clone(), bits))
            }
            None => None,
        };
        let post = match &t.triple.post_hole {
            Some(h) => {
                let mut bits = Vec::new();
                for p in self.predicates.universe(h) {
                    let neg = Formula::not(substitute_formula(p, &t.post_state));
                    let (r, _, _) = t.ctx.reduce(&neg);
                    bits.push(!m.eval_formula(&r).map_err(|e| mismatch(e.to_string()))?);
                }
                Some(Valuation::new(h.clone(), bits))
            }
            None => None,
        };
        Ok(GhostReadout { pre, post })
    }

    fn classify(&self, t: &Template, m: &Model) -> Result<Failure, TeacherError> {
        match m.eval_formula(&t.post_fail) {
            Ok(true) => Ok(Failure::Post),
            Ok(false) => Ok(Failure::Assert),
            Err(e) => Err(TeacherError::EngineMismatch {
                triple: t.triple.label(),
                detail: e.to_string(),
            }),
        }
    }

    /// Checks every triple in order and reports the first failure.
    pub fn check_conjecture(&self, candidate: &Candidate) -> Result<TeacherVerdict, TeacherError> {
        self.check_conjecture_traced(candidate, &mut |_| {})
    }

    pub fn check_conjecture_traced(
        &self,
        candidate: &Candidate,
        trace: &mut dyn FnMut(&TraceLine),
    ) -> Result<TeacherVerdict, TeacherError> {
        for t in &self.templates {
            let query = self.query(t, candidate)?;
            let line = |outcome: &str, constraint: Option<Constraint>| TraceLine {
                triple: t.triple.label(),
                outcome: outcome.to_string(),
                constraint,
            };
            let m = match check(&query, &self.solver) {
                DecisionOutcome::Proved => {
                    trace(&line("proved", None));
                    continue;
                }
                DecisionOutcome::EngineFailure(why) => {
                    trace(&line("engine-failure", None));
                    return Ok(TeacherVerdict::EngineFailure(format!(
                        "{}: {why}",
                        t.triple.label()
                    )));
                }
                DecisionOutcome::Refuted(m) => m,
            };
            let failure = self.classify(t, &m)?;
            let r = self.readout(t, &m)?;
            let constraint = match (t.triple.kind, failure) {
                (TripleKind::Plain, _) | (TripleKind::PreToInv, Failure::Assert) => None,
                (TripleKind::PreToInv, Failure::Post) => {
                    Some(Constraint::Weakening(extract_weakening(&r).map_err(|d| {
                        TeacherError::EngineMismatch {
                            triple: t.triple.label(),
                            detail: d,
                        }
                    })?))
                }
                (TripleKind::InvToPost, _) | (TripleKind::InvToInv, Failure::Assert) => {
                    Some(Constraint::Strengthening(extract_strengthening(&r)))
                }
                (TripleKind::InvToInv, Failure::Post) => {
                    Some(Constraint::Inductivity(extract_inductivity(&r).map_err(|d| {
                        TeacherError::EngineMismatch {
                            triple: t.triple.label(),
                            detail: d,
                        }
                    })?))
                }
            };
            return Ok(match constraint {
                Some(c) => {
                    trace(&line("refuted", Some(c.clone())));
                    TeacherVerdict::Rejected {
                        constraint: c,
                        witness: m,
                        triple: t.triple.clone(),
                        query,
                    }
                }
                None => {
                    trace(&line("plain-failure", None));
                    TeacherVerdict::PlainFailure {
                        triple: t.triple.clone(),
                        witness: m,
                        query,
                    }
                }
            });
        }
        Ok(TeacherVerdict::Verified)
    }

    /// Re-checks a weakening or strengthening constraint as an annotation of
    /// the triple it came from: the weakening disjunction as the
    /// postcondition, or the strengthening conjunction as the precondition.
    /// Any other hole keeps its conjunction from `candidate`. A normal engine
    /// answers `Refuted`.
    pub fn normality_check(
        &self,
        triple: &HoareTriple,
        constraint: &Constraint,
        candidate: &Candidate,
    ) -> Result<DecisionOutcome, TeacherError> {
        let formula_of = |h: &HoleId, atoms: &std::collections::BTreeSet<usize>, disj: bool| {
            let parts = atoms
                .iter()
                .filter_map(|&i| self.predicates.get(h, i).cloned());
            if disj {
                Formula::disj(parts)
            } else {
                Formula::conj(parts)
            }
        };
        let fill = |side: &Formula, hole: &Option<HoleId>| -> Result<Formula, TeacherError> {
            fill_holes(side, &mut |h| {
                let pinned = match constraint {
                    Constraint::Weakening(c) if hole == &triple.post_hole && c.hole == *h => {
                        Some(formula_of(h, &c.atoms, true))
                    }
                    Constraint::Strengthening(c) if hole == &triple.pre_hole && c.hole == *h => {
                        Some(formula_of(h, &c.atoms, false))
                    }
                    _ => None,
                };
                match pinned {
                    Some(f) => Ok(f),
                    None => candidate
                        .get(h)
                        .map(|c| self.predicates.conjunction_formula(c))
                        .ok_or_else(|| TeacherError::MissingHole(h.clone())),
                }
            })
        };
        let pre = fill(&triple.pre, &triple.pre_hole)?;
        let post = fill(&triple.post, &triple.post_hole)?;
        let vc = vc_with(&self.program, triple, pre, post);
        let a = approx_negated(&vc.negation(), self.depth);
        Ok(check(&a.qf, &self.solver))
    }
}

fn build_template(p: &Program, preds: &Predicates, depth: usize, t: HoareTriple) -> Template {
    let fill = |f: &Formula| {
        fill_holes::<()>(f, &mut |h| Ok(guarded(h, preds))).expect("infallible")
    };
    let pre = fill(&t.pre);
    let post = fill(&t.post);
    let vc = vc_with(p, &t, pre, post);
    let (hyps, fails) = vc.negation_pieces();
    let sk = |f: &Formula| skolemize(&crate::logic::nnf(f)).0;
    let mut pieces: Vec<Formula> = hyps.iter().map(sk).collect();
    let fails_sk: Vec<Formula> = fails.iter().map(sk).collect();
    pieces.extend(fails_sk.iter().cloned());
    let ctx = Approximator::from_skolemized(&pieces, depth);
    let reduce = |f: &Formula| ctx.reduce(f).0;
    let mut qf: Vec<Formula> = hyps.iter().map(reduce).collect();
    let fails_qf: Vec<Formula> = fails.iter().map(reduce).collect();
    let post_fail = fails_qf.last().cloned().unwrap_or(Formula::False);
    qf.push(Formula::disj(fails_qf));
    Template {
        post_state: vc.post_state.clone(),
        triple: t,
        ctx,
        qf: Formula::And(qf),
        post_fail,
    }
}

/// χ = ⋁ of the predicates false at the post-state.
pub fn extract_weakening(r: &GhostReadout) -> Result<DisjunctionConstraint, String> {
    let post = r.post.as_ref().ok_or("no post-state valuation")?;
    let atoms: Vec<usize> = (0..post.bits.len()).filter(|&i| !post.bits[i]).collect();
    if atoms.is_empty() && !post.bits.is_empty() {
        return Err(format!("all post-state predicates hold: {post}"));
    }
    Ok(DisjunctionConstraint::new(post.hole.clone(), atoms))
}

/// η = ⋀ of the predicates true at the pre-state.
pub fn extract_strengthening(r: &GhostReadout) -> ConjunctionConstraint {
    let pre = r.pre.as_ref().expect("strengthening needs a pre-state valuation");
    ConjunctionConstraint::new(pre.hole.clone(), pre.true_atoms())
}

pub fn extract_inductivity(r: &GhostReadout) -> Result<InductivityConstraint, String> {
    let lhs = ConjunctionConstraint::new(
        r.pre.as_ref().ok_or("no pre-state valuation")?.hole.clone(),
        r.pre.as_ref().unwrap().true_atoms(),
    );
    let rhs = extract_weakening(r)?;
    Ok(InductivityConstraint { lhs, rhs })
}

/// Whether `c` rules out `candidate`; every emitted constraint should.
pub fn refutes(c: &Constraint, candidate: &Candidate) -> bool {
    matches!(c.allows(candidate), Ok(false))
}

/// Candidate taking every predicate at every hole.
pub fn full_candidate(predicates: &Predicates) -> Candidate {
    predicates
        .by_hole
        .iter()
        .map(|(h, v)| (h.clone(), Conjunction::full(h.clone(), v.len())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_formula, parse_program};

    fn val(h: &str, bits: &[bool]) -> Valuation {
        Valuation::new(HoleId::new(h), bits.to_vec())
    }

    #[test]
    fn weakening_rule() {
        let r = GhostReadout {
            pre: None,
            post: Some(val("H", &[true, false, false])),
        };
        assert_eq!(
            extract_weakening(&r).unwrap(),
            DisjunctionConstraint::new(HoleId::new("H"), [1, 2])
        );
        let all_false = GhostReadout {
            pre: None,
            post: Some(val("H", &[false, false])),
        };
        assert_eq!(extract_weakening(&all_false).unwrap().atoms.len(), 2);
        let all_true = GhostReadout {
            pre: None,
            post: Some(val("H", &[true, true])),
        };
        assert!(extract_weakening(&all_true).is_err());
    }

    #[test]
    fn strengthening_rule() {
        let r = |bits: &[bool]| GhostReadout {
            pre: Some(val("H", bits)),
            post: None,
        };
        assert_eq!(extract_strengthening(&r(&[true, true])).atoms.len(), 2);
        assert!(extract_strengthening(&r(&[false, false])).atoms.is_empty());
        assert_eq!(
            extract_strengthening(&r(&[true, false, false])).atoms,
            [0].into()
        );
    }

    #[test]
    fn inductivity_rule() {
        let r = GhostReadout {
            pre: Some(val("L", &[true, false, false])),
            post: Some(val("R", &[true, false, true])),
        };
        let c = extract_inductivity(&r).unwrap();
        assert_eq!(c.lhs, ConjunctionConstraint::new(HoleId::new("L"), [0]));
        assert_eq!(c.rhs, DisjunctionConstraint::new(HoleId::new("R"), [1]));
        let selfloop = GhostReadout {
            pre: Some(val("H", &[true])),
            post: Some(val("H", &[false])),
        };
        let c = extract_inductivity(&selfloop).unwrap();
        assert_eq!((c.lhs.atoms.len(), c.rhs.atoms.len()), (1, 1));
        let none = GhostReadout {
            pre: Some(val("H", &[false, false])),
            post: Some(val("H", &[false, false])),
        };
        let c = extract_inductivity(&none).unwrap();
        assert!(c.lhs.atoms.is_empty());
        assert_eq!(c.rhs.atoms.len(), 2);
    }

    fn solver_ok() -> bool {
        std::process::Command::new(SolverConfig::default().path)
            .arg("-version")
            .output()
            .is_ok()
    }

    const COUNTER: &str = "
        var i: int; var N: int;
        procedure c() requires i == 0 && N > 0; ensures i == N; {
          while (i < N) invariant ?H; { i := i + 1; }
        }";

    fn counter_preds(p: &Program, texts: &[&str]) -> Predicates {
        let mut preds = Predicates::default();
        preds.by_hole.insert(
            HoleId::new("H"),
            texts.iter().map(|t| parse_formula(t, p).unwrap()).collect(),
        );
        preds
    }

    #[test]
    fn counter_round_trip() {
        if !solver_ok() {
            return;
        }
        let p = parse_program(COUNTER).unwrap();
        let preds = counter_preds(&p, &["i >= 0", "i <= N", "i == 0", "N > 0"]);
        let teacher = Teacher::new(&p, &preds, 1, SolverConfig::default());
        let h = HoleId::new("H");
        let good: Candidate = [(h.clone(), Conjunction::new(h.clone(), [0, 1, 3]))].into();
        assert!(matches!(
            teacher.check_conjecture(&good).unwrap(),
            TeacherVerdict::Verified
        ));
        // i == 0 is not inductive.
        let full = full_candidate(&preds);
        let TeacherVerdict::Rejected { constraint, .. } = teacher.check_conjecture(&full).unwrap()
        else {
            panic!("expected a constraint")
        };
        let Constraint::Inductivity(c) = &constraint else {
            panic!("expected inductivity, got {constraint}")
        };
        assert!(c.rhs.atoms.contains(&2));
        assert!(refutes(&constraint, &full));
        // Without i <= N the exit check fails.
        let weak: Candidate = [(h.clone(), Conjunction::new(h.clone(), [0, 3]))].into();
        let v = teacher.check_conjecture(&weak).unwrap();
        let TeacherVerdict::Rejected { constraint, triple, .. } = v else {
            panic!()
        };
        assert!(matches!(constraint, Constraint::Strengthening(_)));
        assert!(refutes(&constraint, &weak));
        assert!(matches!(
            teacher.normality_check(&triple, &constraint, &weak).unwrap(),
            DecisionOutcome::Refuted(_)
        ));
    }

    #[test]
    fn entry_failure_is_weakening() {
        if !solver_ok() {
            return;
        }
        let p = parse_program(COUNTER).unwrap();
        let preds = counter_preds(&p, &["i >= 1", "i >= 0"]);
        let teacher = Teacher::new(&p, &preds, 1, SolverConfig::default());
        let full = full_candidate(&preds);
        let TeacherVerdict::Rejected { constraint, triple, .. } =
            teacher.check_conjecture(&full).unwrap()
        else {
            panic!()
        };
        assert_eq!(
            constraint,
            Constraint::Weakening(DisjunctionConstraint::new(HoleId::new("H"), [0]))
        );
        assert_eq!(triple.kind, TripleKind::PreToInv);
        assert!(matches!(
            teacher.normality_check(&triple, &constraint, &full).unwrap(),
            DecisionOutcome::Refuted(_)
        ));
    }

    #[test]
    fn false_requires_verifies_anything() {
        if !solver_ok() {
            return;
        }
        let p = parse_program(
            "var i: int; var N: int;
             procedure c() requires false; ensures i == N; {
               while (i < N) invariant ?H; { i := i + 1; }
             }",
        )
        .unwrap();
        let preds = counter_preds(&p, &["i == 7"]);
        let teacher = Teacher::new(&p, &preds, 1, SolverConfig::default());
        let h = HoleId::new("H");
        for atoms in [vec![], vec![0]] {
            let c: Candidate = [(h.clone(), Conjunction::new(h.clone(), atoms))].into();
            assert!(matches!(
                teacher.check_conjecture(&c).unwrap(),
                TeacherVerdict::Verified
            ));
        }
    }

    #[test]
    fn plain_failure_for_hole_free_program() {
        if !solver_ok() {
            return;
        }
        let p = parse_program(
            "var x: int; procedure f() requires x > 0; ensures x > 1; { x := x + 0; }",
        )
        .unwrap();
        let teacher = Teacher::new(&p, &Predicates::default(), 1, SolverConfig::default());
        assert!(matches!(
            teacher.check_conjecture(&Candidate::new()).unwrap(),
            TeacherVerdict::PlainFailure { .. }
        ));
    }
}
