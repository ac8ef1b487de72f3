//! The learner/teacher round loop.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::cdnpi::{is_consistent, to_ice, CdnpiSample, Constraint};
use crate::ice::{houdini_passive, Candidate, IceError};
use crate::logic::{Formula, HoleId, Predicates, Program};
use crate::solver::{DecisionOutcome, SolverConfig};
use crate::teacher::{refutes, Teacher, TeacherVerdict, TraceLine};

pub const DEFAULT_DEPTH: usize = 1;

#[derive(Clone, Debug)]
pub struct SynthesisConfig {
    pub depth: usize,
    /// `None` means one more than the total number of predicates.
    pub max_rounds: Option<usize>,
    pub solver: SolverConfig,
    /// Known-good annotation checked against the sample after every round.
    pub oracle: Option<Candidate>,
    /// Re-check every weakening and strengthening constraint as an annotation.
    pub check_normality: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            depth: DEFAULT_DEPTH,
            max_rounds: None,
            solver: SolverConfig::default(),
            oracle: None,
            check_normality: false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Invariant(Candidate),
    NoConsistentInvariant,
    Unprovable(String),
    RoundLimit,
    EngineFailure(String),
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Invariant(_) => "Invariant",
            Outcome::NoConsistentInvariant => "NoConsistentInvariant",
            Outcome::Unprovable(_) => "Unprovable",
            Outcome::RoundLimit => "RoundLimit",
            Outcome::EngineFailure(_) => "EngineFailure",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Invariant(_) => 0,
            Outcome::NoConsistentInvariant => 1,
            Outcome::Unprovable(_) => 2,
            Outcome::RoundLimit => 3,
            Outcome::EngineFailure(_) => 4,
        }
    }
}

/// Violations of the properties the loop is expected to keep.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Audit {
    /// Rounds after which the oracle was inconsistent with the sample.
    pub honesty_violations: Vec<usize>,
    /// Rounds whose conjecture repeated an earlier one.
    pub progress_violations: Vec<usize>,
    /// Rounds whose constraint did not rule out the conjecture.
    pub constraint_violations: Vec<usize>,
    pub normality_checks: usize,
    /// Rounds whose normality re-check was not refuted.
    pub normality_violations: Vec<usize>,
    pub refuted_checks: usize,
    pub fidelity_violations: Vec<usize>,
}

impl Audit {
    pub fn clean(&self) -> bool {
        self.honesty_violations.is_empty()
            && self.progress_violations.is_empty()
            && self.constraint_violations.is_empty()
            && self.normality_violations.is_empty()
            && self.fidelity_violations.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct SynthesisReport {
    pub outcome: Outcome,
    pub rounds: usize,
    pub max_rounds: usize,
    pub predicate_counts: BTreeMap<HoleId, usize>,
    pub invariant_sizes: BTreeMap<HoleId, usize>,
    pub wall_time: Duration,
    pub sample: CdnpiSample,
    pub conjectures: Vec<Candidate>,
    pub constraints: Vec<Constraint>,
    /// Result of the independent re-check of an `Invariant` outcome.
    pub final_check: Option<bool>,
    pub audit: Audit,
}

impl SynthesisReport {
    pub fn total_predicates(&self) -> usize {
        self.predicate_counts.values().sum()
    }

    pub fn invariant_size(&self) -> usize {
        self.invariant_sizes.values().sum()
    }
}

/// Events streamed while a run progresses.
#[derive(Clone, Debug)]
pub enum Event<'a> {
    Conjecture { round: usize, candidate: &'a Candidate },
    Check(&'a TraceLine),
    Constraint { round: usize, constraint: &'a Constraint },
}

/// Runs the loop with a fixed predicate universe.
pub fn synthesize_with(
    p: &Program,
    predicates: &Predicates,
    cfg: &SynthesisConfig,
    observe: &mut dyn FnMut(Event<'_>),
) -> SynthesisReport {
    let start = Instant::now();
    let universes = predicates.universes();
    let max_rounds = cfg.max_rounds.unwrap_or(predicates.total() + 1).max(1);
    let teacher = Teacher::new(p, predicates, cfg.depth, cfg.solver.clone());
    let mut sample = CdnpiSample::default();
    let mut seen = BTreeSet::new();
    let mut conjectures = Vec::new();
    let mut constraints = Vec::new();
    let mut audit = Audit::default();
    let mut rounds = 0;
    let mut final_check = None;

    let outcome = loop {
        if rounds == max_rounds {
            break Outcome::RoundLimit;
        }
        rounds += 1;
        let candidate = match houdini_passive(&to_ice(&sample, &universes), &universes) {
            Ok(c) => c,
            Err(IceError::NoConsistentConjunction) => break Outcome::NoConsistentInvariant,
            Err(e) => break Outcome::EngineFailure(e.to_string()),
        };
        observe(Event::Conjecture {
            round: rounds,
            candidate: &candidate,
        });
        if !seen.insert(candidate.clone()) {
            audit.progress_violations.push(rounds);
        }
        conjectures.push(candidate.clone());
        let verdict = match teacher.check_conjecture_traced(&candidate, &mut |l| observe(Event::Check(l))) {
            Ok(v) => v,
            Err(e) => break Outcome::EngineFailure(e.to_string()),
        };
        match verdict {
            TeacherVerdict::Verified => {
                let fresh = Teacher::new(p, predicates, cfg.depth, cfg.solver.clone());
                let ok = matches!(fresh.check_conjecture(&candidate), Ok(TeacherVerdict::Verified));
                final_check = Some(ok);
                break if ok {
                    Outcome::Invariant(candidate)
                } else {
                    Outcome::EngineFailure("final re-check of the invariant failed".into())
                };
            }
            TeacherVerdict::Rejected {
                constraint,
                witness,
                triple,
                query,
            } => {
                audit.refuted_checks += 1;
                if witness.eval_formula(&query) != Ok(true) {
                    audit.fidelity_violations.push(rounds);
                }
                if !refutes(&constraint, &candidate) {
                    audit.constraint_violations.push(rounds);
                }
                if cfg.check_normality
                    && matches!(
                        constraint,
                        Constraint::Weakening(_) | Constraint::Strengthening(_)
                    )
                {
                    audit.normality_checks += 1;
                    match teacher.normality_check(&triple, &constraint, &candidate) {
                        Ok(DecisionOutcome::Refuted(_)) => audit.refuted_checks += 1,
                        _ => audit.normality_violations.push(rounds),
                    }
                }
                observe(Event::Constraint {
                    round: rounds,
                    constraint: &constraint,
                });
                sample.add(constraint.clone());
                constraints.push(constraint);
                if let Some(oracle) = &cfg.oracle {
                    if !matches!(is_consistent(oracle, &sample), Ok(true)) {
                        audit.honesty_violations.push(rounds);
                    }
                }
            }
            TeacherVerdict::PlainFailure { triple, witness, .. } => {
                break Outcome::Unprovable(format!(
                    "{} fails for every annotation\n{triple}\ncountermodel:\n{witness}",
                    triple.label()
                ));
            }
            TeacherVerdict::EngineFailure(why) => break Outcome::EngineFailure(why),
        }
    };

    let invariant_sizes = match &outcome {
        Outcome::Invariant(c) => c.iter().map(|(h, c)| (h.clone(), c.atoms.len())).collect(),
        _ => BTreeMap::new(),
    };
    SynthesisReport {
        outcome,
        rounds,
        max_rounds,
        predicate_counts: universes.into_iter().collect(),
        invariant_sizes,
        wall_time: start.elapsed(),
        sample,
        conjectures,
        constraints,
        final_check,
        audit,
    }
}

/// Per-hole formulas of an annotation.
pub fn annotation_formulas(c: &Candidate, predicates: &Predicates) -> BTreeMap<HoleId, Formula> {
    c.iter()
        .map(|(h, conj)| (h.clone(), predicates.conjunction_formula(conj)))
        .collect()
}
