//! ICE samples over per-hole predicate valuations and the Houdini learner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::logic::HoleId;

/// Predicate count per hole.
pub type Universes = BTreeMap<HoleId, usize>;

/// One conjunction per hole.
pub type Candidate = BTreeMap<HoleId, Conjunction>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateId {
    pub hole: HoleId,
    pub index: usize,
}

/// A total truth assignment over one hole's predicates.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation {
    pub hole: HoleId,
    pub bits: Vec<bool>,
}

impl Valuation {
    pub fn new(hole: HoleId, bits: Vec<bool>) -> Self {
        Valuation { hole, bits }
    }

    pub fn true_atoms(&self) -> BTreeSet<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.hole)?;
        for (i, b) in self.bits.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if *b { "t" } else { "f" })?;
        }
        f.write_str(")")
    }
}

/// Conjunction of a hole's predicates, by index; empty means `true`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conjunction {
    pub hole: HoleId,
    pub atoms: BTreeSet<usize>,
}

impl Conjunction {
    pub fn new(hole: HoleId, atoms: impl IntoIterator<Item = usize>) -> Self {
        Conjunction {
            hole,
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn full(hole: HoleId, n: usize) -> Self {
        Conjunction::new(hole, 0..n)
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| format!("p{a}")).collect();
        f.write_str(&parts.join("&"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IceError {
    #[error("valuation for hole {0} checked against conjunction for hole {1}")]
    HoleMismatch(HoleId, HoleId),
    #[error("no conjunction over the predicate universe is consistent with the sample")]
    NoConsistentConjunction,
    #[error("valuation {0} does not match the declared universe")]
    BadValuation(String),
}

pub fn satisfies(v: &Valuation, c: &Conjunction) -> Result<bool, IceError> {
    if v.hole != c.hole {
        return Err(IceError::HoleMismatch(v.hole.clone(), c.hole.clone()));
    }
    Ok(c.atoms.iter().all(|&a| v.bits.get(a).copied().unwrap_or(false)))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IceSample {
    pub positives: BTreeSet<Valuation>,
    pub negatives: BTreeSet<Valuation>,
    pub implications: BTreeSet<(Valuation, Valuation)>,
}

impl IceSample {
    pub fn is_empty(&self) -> bool {
        self.positives.is_empty() && self.negatives.is_empty() && self.implications.is_empty()
    }

    /// Direct-semantics consistency of a candidate with this sample. Holes
    /// missing from the candidate are read as `true`.
    pub fn is_consistent(&self, candidate: &Candidate) -> bool {
        let holds = |v: &Valuation| match candidate.get(&v.hole) {
            Some(c) => c.atoms.iter().all(|&a| v.bits[a]),
            None => true,
        };
        self.positives.iter().all(holds)
            && !self.negatives.iter().any(holds)
            && self
                .implications
                .iter()
                .all(|(a, b)| !holds(a) || holds(b))
    }

    fn valuations(&self) -> impl Iterator<Item = &Valuation> {
        self.positives
            .iter()
            .chain(&self.negatives)
            .chain(self.implications.iter().flat_map(|(a, b)| [a, b]))
    }
}

/// Houdini: the strongest per-hole conjunction consistent with the sample.
///
/// Holes in `universes` that the sample never mentions get the full conjunction.
pub fn houdini_passive(sample: &IceSample, universes: &Universes) -> Result<Candidate, IceError> {
    for v in sample.valuations() {
        if universes.get(&v.hole) != Some(&v.bits.len()) {
            return Err(IceError::BadValuation(v.to_string()));
        }
    }
    let mut cand: Candidate = universes
        .iter()
        .map(|(h, &n)| (h.clone(), Conjunction::full(h.clone(), n)))
        .collect();
    let weaken = |cand: &mut Candidate, v: &Valuation| {
        let c = cand.get_mut(&v.hole).expect("hole checked above");
        c.atoms.retain(|&a| v.bits[a]);
    };
    for v in &sample.positives {
        weaken(&mut cand, v);
    }
    let holds = |cand: &Candidate, v: &Valuation| cand[&v.hole].atoms.iter().all(|&a| v.bits[a]);
    let mut pending: Vec<&(Valuation, Valuation)> = sample.implications.iter().collect();
    loop {
        let mut changed = false;
        pending.retain(|(a, b)| {
            if holds(&cand, a) {
                if !holds(&cand, b) {
                    weaken(&mut cand, b);
                    changed = true;
                }
                false
            } else {
                true
            }
        });
        if !changed {
            break;
        }
    }
    if sample.negatives.iter().any(|v| holds(&cand, v)) {
        return Err(IceError::NoConsistentConjunction);
    }
    Ok(cand)
}
