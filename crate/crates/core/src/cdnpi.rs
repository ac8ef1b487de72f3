//! Conjunctive/disjunctive non-provability samples, their consistency check
//! over the Boolean abstraction, and the translation to ICE samples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ice::{Candidate, Conjunction, IceSample, Universes, Valuation};
use crate::logic::HoleId;

/// χ = ⋁ atoms; the empty disjunction is `false`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DisjunctionConstraint {
    pub hole: HoleId,
    pub atoms: BTreeSet<usize>,
}

/// η = ⋀ atoms; the empty conjunction is `true`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConjunctionConstraint {
    pub hole: HoleId,
    pub atoms: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InductivityConstraint {
    pub lhs: ConjunctionConstraint,
    pub rhs: DisjunctionConstraint,
}

impl DisjunctionConstraint {
    pub fn new(hole: HoleId, atoms: impl IntoIterator<Item = usize>) -> Self {
        DisjunctionConstraint {
            hole,
            atoms: atoms.into_iter().collect(),
        }
    }
}

impl ConjunctionConstraint {
    pub fn new(hole: HoleId, atoms: impl IntoIterator<Item = usize>) -> Self {
        ConjunctionConstraint {
            hole,
            atoms: atoms.into_iter().collect(),
        }
    }
}

/// One round's output of the verification engine.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Weakening(DisjunctionConstraint),
    Strengthening(ConjunctionConstraint),
    Inductivity(InductivityConstraint),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CdnpiError {
    #[error("constraint on hole {0} checked against conjunction for hole {1}")]
    HoleMismatch(HoleId, HoleId),
    #[error("candidate has no conjunction for hole {0}")]
    MissingHole(HoleId),
    #[error("enumeration needs 2^{0} candidates; the limit is 2^20")]
    TooLarge(usize),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// ⊢ γ ⇒ χ over independent atoms: true iff they share an atom.
pub fn entails_conj_disj(
    gamma: &Conjunction,
    chi: &DisjunctionConstraint,
) -> Result<bool, CdnpiError> {
    if gamma.hole != chi.hole {
        return Err(CdnpiError::HoleMismatch(chi.hole.clone(), gamma.hole.clone()));
    }
    Ok(!gamma.atoms.is_disjoint(&chi.atoms))
}

/// ⊢ η ⇒ γ over independent atoms: true iff atoms(γ) ⊆ atoms(η).
pub fn entails_conj_conj(
    eta: &ConjunctionConstraint,
    gamma: &Conjunction,
) -> Result<bool, CdnpiError> {
    if gamma.hole != eta.hole {
        return Err(CdnpiError::HoleMismatch(eta.hole.clone(), gamma.hole.clone()));
    }
    Ok(gamma.atoms.is_subset(&eta.atoms))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CdnpiSample {
    pub weakening: Vec<DisjunctionConstraint>,
    pub strengthening: Vec<ConjunctionConstraint>,
    pub inductivity: Vec<InductivityConstraint>,
}

impl CdnpiSample {
    pub fn len(&self) -> usize {
        self.weakening.len() + self.strengthening.len() + self.inductivity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds a constraint; returns false if it was already present.
    pub fn add(&mut self, c: Constraint) -> bool {
        fn push<T: PartialEq>(v: &mut Vec<T>, x: T) -> bool {
            if v.contains(&x) {
                false
            } else {
                v.push(x);
                true
            }
        }
        match c {
            Constraint::Weakening(x) => push(&mut self.weakening, x),
            Constraint::Strengthening(x) => push(&mut self.strengthening, x),
            Constraint::Inductivity(x) => push(&mut self.inductivity, x),
        }
    }

    pub fn constraints(&self) -> Vec<Constraint> {
        self.weakening
            .iter()
            .cloned()
            .map(Constraint::Weakening)
            .chain(self.strengthening.iter().cloned().map(Constraint::Strengthening))
            .chain(self.inductivity.iter().cloned().map(Constraint::Inductivity))
            .collect()
    }

    /// Serializes one constraint per line.
    pub fn to_text(&self) -> String {
        self.constraints()
            .iter()
            .map(|c| format!("{c}\n"))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<CdnpiSample, CdnpiError> {
        let mut s = CdnpiSample::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let c = Constraint::parse(line).map_err(|msg| CdnpiError::Syntax { line: i + 1, msg })?;
            s.add(c);
        }
        Ok(s)
    }
}

fn atoms_text(atoms: &BTreeSet<usize>, sep: &str, empty: &str) -> String {
    if atoms.is_empty() {
        return empty.to_string();
    }
    atoms
        .iter()
        .map(|a| format!("p{a}"))
        .collect::<Vec<_>>()
        .join(sep)
}

fn parse_atoms(text: &str, sep: char, empty: &str) -> Result<BTreeSet<usize>, String> {
    if text == empty {
        return Ok(BTreeSet::new());
    }
    text.split(sep)
        .map(|a| {
            a.strip_prefix('p')
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| format!("bad atom '{a}'"))
        })
        .collect()
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Weakening(c) => {
                write!(f, "W {} {}", c.hole, atoms_text(&c.atoms, "|", "false"))
            }
            Constraint::Strengthening(c) => {
                write!(f, "S {} {}", c.hole, atoms_text(&c.atoms, "&", "true"))
            }
            Constraint::Inductivity(c) => write!(
                f,
                "I {} {} -> {} {}",
                c.lhs.hole,
                atoms_text(&c.lhs.atoms, "&", "true"),
                c.rhs.hole,
                atoms_text(&c.rhs.atoms, "|", "false")
            ),
        }
    }
}

impl Constraint {
    pub fn parse(line: &str) -> Result<Constraint, String> {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["W", h, a] => Ok(Constraint::Weakening(DisjunctionConstraint {
                hole: HoleId::new(*h),
                atoms: parse_atoms(a, '|', "false")?,
            })),
            ["S", h, a] => Ok(Constraint::Strengthening(ConjunctionConstraint {
                hole: HoleId::new(*h),
                atoms: parse_atoms(a, '&', "true")?,
            })),
            ["I", h1, a1, "->", h2, a2] => Ok(Constraint::Inductivity(InductivityConstraint {
                lhs: ConjunctionConstraint {
                    hole: HoleId::new(*h1),
                    atoms: parse_atoms(a1, '&', "true")?,
                },
                rhs: DisjunctionConstraint {
                    hole: HoleId::new(*h2),
                    atoms: parse_atoms(a2, '|', "false")?,
                },
            })),
            _ => Err(format!("unrecognized constraint '{line}'")),
        }
    }

    /// Holes the constraint mentions.
    pub fn holes(&self) -> Vec<&HoleId> {
        match self {
            Constraint::Weakening(c) => vec![&c.hole],
            Constraint::Strengthening(c) => vec![&c.hole],
            Constraint::Inductivity(c) => vec![&c.lhs.hole, &c.rhs.hole],
        }
    }

    /// Consistency of a candidate with this single constraint.
    pub fn allows(&self, candidate: &Candidate) -> Result<bool, CdnpiError> {
        let get = |h: &HoleId| {
            candidate
                .get(h)
                .ok_or_else(|| CdnpiError::MissingHole(h.clone()))
        };
        Ok(match self {
            Constraint::Weakening(chi) => !entails_conj_disj(get(&chi.hole)?, chi)?,
            Constraint::Strengthening(eta) => !entails_conj_conj(eta, get(&eta.hole)?)?,
            Constraint::Inductivity(c) => {
                !entails_conj_conj(&c.lhs, get(&c.lhs.hole)?)?
                    || !entails_conj_disj(get(&c.rhs.hole)?, &c.rhs)?
            }
        })
    }
}

pub fn is_consistent(candidate: &Candidate, sample: &CdnpiSample) -> Result<bool, CdnpiError> {
    for c in sample.constraints() {
        if !c.allows(candidate)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn universe_of(universes: &Universes, hole: &HoleId) -> usize {
    universes.get(hole).copied().unwrap_or(0)
}

/// c(⋀J): true exactly on J.
pub fn c_of(eta: &ConjunctionConstraint, n: usize) -> Valuation {
    Valuation::new(eta.hole.clone(), (0..n).map(|p| eta.atoms.contains(&p)).collect())
}

/// d(⋁J): false exactly on J.
pub fn d_of(chi: &DisjunctionConstraint, n: usize) -> Valuation {
    Valuation::new(chi.hole.clone(), (0..n).map(|p| !chi.atoms.contains(&p)).collect())
}

pub fn to_ice(sample: &CdnpiSample, universes: &Universes) -> IceSample {
    let c = |eta: &ConjunctionConstraint| c_of(eta, universe_of(universes, &eta.hole));
    let d = |chi: &DisjunctionConstraint| d_of(chi, universe_of(universes, &chi.hole));
    IceSample {
        positives: sample.weakening.iter().map(d).collect(),
        negatives: sample.strengthening.iter().map(c).collect(),
        implications: sample
            .inductivity
            .iter()
            .map(|i| (c(&i.lhs), d(&i.rhs)))
            .collect(),
    }
}

/// Exhaustive reference implementations used as test oracles.
pub mod oracle {
    use super::*;

    /// Every candidate over `universes` consistent with the sample.
    pub fn brute_force_consistent(
        sample: &CdnpiSample,
        universes: &Universes,
    ) -> Result<Vec<Candidate>, CdnpiError> {
        let total: usize = universes.values().sum();
        if total > 20 {
            return Err(CdnpiError::TooLarge(total));
        }
        let holes: Vec<(&HoleId, usize)> = universes.iter().map(|(h, n)| (h, *n)).collect();
        let mut out = Vec::new();
        for code in 0u64..(1u64 << total) {
            let mut cand = BTreeMap::new();
            let mut shift = 0;
            for (h, n) in &holes {
                let atoms = (0..*n).filter(|p| code >> (shift + p) & 1 == 1);
                cand.insert((*h).clone(), Conjunction::new((*h).clone(), atoms));
                shift += n;
            }
            if is_consistent(&cand, sample)? {
                out.push(cand);
            }
        }
        Ok(out)
    }

    /// A positive Boolean formula over one hole's atoms.
    #[derive(Clone, Debug)]
    pub enum Positive {
        Atom(usize),
        And(Vec<Positive>),
        Or(Vec<Positive>),
    }

    impl Positive {
        pub fn eval(&self, bits: &[bool]) -> bool {
            match self {
                Positive::Atom(p) => bits[*p],
                Positive::And(v) => v.iter().all(|f| f.eval(bits)),
                Positive::Or(v) => v.iter().any(|f| f.eval(bits)),
            }
        }

        pub fn conj(atoms: &BTreeSet<usize>) -> Positive {
            Positive::And(atoms.iter().map(|a| Positive::Atom(*a)).collect())
        }

        pub fn disj(atoms: &BTreeSet<usize>) -> Positive {
            Positive::Or(atoms.iter().map(|a| Positive::Atom(*a)).collect())
        }
    }

    /// Propositional validity of `a ⇒ b` by enumerating all 2^n valuations.
    pub fn entails(a: &Positive, b: &Positive, n: usize) -> bool {
        (0u32..(1 << n)).all(|code| {
            let bits: Vec<bool> = (0..n).map(|i| code >> i & 1 == 1).collect();
            !a.eval(&bits) || b.eval(&bits)
        })
    }

    /// Consistency by truth-table entailment rather than set reasoning.
    pub fn is_consistent_semantic(
        candidate: &Candidate,
        sample: &CdnpiSample,
        universes: &Universes,
    ) -> bool {
        let n = |h: &HoleId| universe_of(universes, h);
        let g = |h: &HoleId| Positive::conj(&candidate[h].atoms);
        sample
            .weakening
            .iter()
            .all(|chi| !entails(&g(&chi.hole), &Positive::disj(&chi.atoms), n(&chi.hole)))
            && sample
                .strengthening
                .iter()
                .all(|eta| !entails(&Positive::conj(&eta.atoms), &g(&eta.hole), n(&eta.hole)))
            && sample.inductivity.iter().all(|i| {
                !entails(&Positive::conj(&i.lhs.atoms), &g(&i.lhs.hole), n(&i.lhs.hole))
                    || !entails(&g(&i.rhs.hole), &Positive::disj(&i.rhs.atoms), n(&i.rhs.hole))
            })
    }

    /// All candidates consistent with an ICE sample, by direct evaluation.
    pub fn brute_force_ice(sample: &IceSample, universes: &Universes) -> Vec<Candidate> {
        let total: usize = universes.values().sum();
        assert!(total <= 20, "enumeration guard");
        let holes: Vec<(&HoleId, usize)> = universes.iter().map(|(h, n)| (h, *n)).collect();
        let mut out = Vec::new();
        for code in 0u64..(1u64 << total) {
            let mut cand = BTreeMap::new();
            let mut shift = 0;
            for (h, n) in &holes {
                let atoms = (0..*n).filter(|p| code >> (shift + p) & 1 == 1);
                cand.insert((*h).clone(), Conjunction::new((*h).clone(), atoms));
                shift += n;
            }
            if sample.is_consistent(&cand) {
                out.push(cand);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::*;
    use super::*;

    fn hole(s: &str) -> HoleId {
        HoleId::new(s)
    }

    fn conj(h: &str, a: &[usize]) -> Conjunction {
        Conjunction::new(hole(h), a.iter().copied())
    }

    fn bits(v: &Valuation) -> String {
        v.bits.iter().map(|b| if *b { 't' } else { 'f' }).collect()
    }

    #[test]
    fn entailment_examples() {
        let chi = |a: &[usize]| DisjunctionConstraint::new(hole("L"), a.iter().copied());
        let eta = |a: &[usize]| ConjunctionConstraint::new(hole("L"), a.iter().copied());
        assert!(!entails_conj_disj(&conj("L", &[0]), &chi(&[1])).unwrap());
        assert!(entails_conj_disj(&conj("L", &[0, 1]), &chi(&[1, 2])).unwrap());
        assert!(!entails_conj_disj(&conj("L", &[0]), &chi(&[])).unwrap());
        assert!(entails_conj_conj(&eta(&[0, 1]), &conj("L", &[0])).unwrap());
        assert!(!entails_conj_conj(&eta(&[0]), &conj("L", &[0, 1])).unwrap());
        assert!(entails_conj_conj(&eta(&[]), &conj("L", &[])).unwrap());
        assert!(entails_conj_conj(&eta(&[]), &conj("R", &[])).is_err());
    }

    fn inverse_sample() -> CdnpiSample {
        CdnpiSample {
            inductivity: vec![InductivityConstraint {
                lhs: ConjunctionConstraint::new(hole("L"), [0]),
                rhs: DisjunctionConstraint::new(hole("R"), [1]),
            }],
            ..Default::default()
        }
    }

    #[test]
    fn consistency_examples() {
        let s = inverse_sample();
        let cand = |r: &[usize]| -> Candidate {
            [(hole("L"), conj("L", &[0])), (hole("R"), conj("R", r))].into()
        };
        assert!(is_consistent(&cand(&[0]), &CdnpiSample::default()).unwrap());
        assert!(!is_consistent(&cand(&[1]), &s).unwrap());
        assert!(is_consistent(&cand(&[2]), &s).unwrap());
        let missing: Candidate = [(hole("L"), conj("L", &[0]))].into();
        assert!(matches!(
            is_consistent(&missing, &s),
            Err(CdnpiError::MissingHole(_))
        ));
    }

    #[test]
    fn translation_examples() {
        let eta = ConjunctionConstraint::new(hole("L"), [0]);
        assert_eq!(bits(&c_of(&eta, 3)), "tff");
        assert_eq!(bits(&c_of(&ConjunctionConstraint::new(hole("L"), []), 3)), "fff");
        assert_eq!(bits(&c_of(&ConjunctionConstraint::new(hole("L"), 0..3), 3)), "ttt");
        let chi = DisjunctionConstraint::new(hole("R"), [1]);
        assert_eq!(bits(&d_of(&chi, 3)), "tft");
        assert_eq!(bits(&d_of(&DisjunctionConstraint::new(hole("R"), []), 3)), "ttt");
        assert_eq!(bits(&d_of(&DisjunctionConstraint::new(hole("R"), [0, 2]), 3)), "ftf");

        let universes: Universes = [(hole("L"), 3), (hole("R"), 3)].into();
        assert!(to_ice(&CdnpiSample::default(), &universes).is_empty());
        let ice = to_ice(&inverse_sample(), &universes);
        let (a, b) = ice.implications.iter().next().unwrap();
        assert_eq!((bits(a).as_str(), bits(b).as_str()), ("tff", "tft"));
        let w = CdnpiSample {
            weakening: vec![DisjunctionConstraint::new(hole("L"), [0, 2])],
            ..Default::default()
        };
        let ice = to_ice(&w, &universes);
        assert_eq!(bits(ice.positives.iter().next().unwrap()), "ftf");
    }

    #[test]
    fn brute_force_examples() {
        let universes: Universes = [(hole("H"), 2)].into();
        assert_eq!(
            brute_force_consistent(&CdnpiSample::default(), &universes)
                .unwrap()
                .len(),
            4
        );
        // Every conjunction over {p0,p1} is implied by p0 ∧ p1.
        let s = CdnpiSample {
            strengthening: vec![ConjunctionConstraint::new(hole("H"), [0, 1])],
            ..Default::default()
        };
        assert!(brute_force_consistent(&s, &universes).unwrap().is_empty());
        let w = CdnpiSample {
            weakening: vec![DisjunctionConstraint::new(hole("H"), [0])],
            ..Default::default()
        };
        let got: Vec<BTreeSet<usize>> = brute_force_consistent(&w, &universes)
            .unwrap()
            .into_iter()
            .map(|c| c[&hole("H")].atoms.clone())
            .collect();
        assert_eq!(got, vec![BTreeSet::new(), [1].into()]);
        let big: Universes = [(hole("H"), 21)].into();
        assert!(brute_force_consistent(&w, &big).is_err());
    }

    #[test]
    fn sample_text_round_trip() {
        let mut s = inverse_sample();
        s.add(Constraint::Weakening(DisjunctionConstraint::new(hole("L"), [3, 7])));
        s.add(Constraint::Strengthening(ConjunctionConstraint::new(hole("L"), [1, 2])));
        s.add(Constraint::Weakening(DisjunctionConstraint::new(hole("L"), [])));
        s.add(Constraint::Strengthening(ConjunctionConstraint::new(hole("R"), [])));
        let text = s.to_text();
        assert!(text.contains("W L p3|p7\n"));
        assert!(text.contains("S L p1&p2\n"));
        assert!(text.contains("I L p0 -> R p1\n"));
        assert!(text.contains("W L false\n"));
        assert!(text.contains("S R true\n"));
        assert_eq!(CdnpiSample::from_text(&text).unwrap(), s);
        assert!(CdnpiSample::from_text("X y").is_err());
    }

    #[test]
    fn duplicate_constraints_are_ignored() {
        let mut s = CdnpiSample::default();
        let c = Constraint::Strengthening(ConjunctionConstraint::new(hole("L"), [1]));
        assert!(s.add(c.clone()));
        assert!(!s.add(c));
        assert_eq!(s.len(), 1);
    }
}
