//! Benchmark files: a program plus `//` pragmas that tune its run.
//!
//! ```text
//! // depth: 1
//! // predicate ?H: i >= 0          (repeatable; pins the hole's universe)
//! // template: (forall k: int :: 0 <= k && k < i ==> a[k] == 0)
//! // oracle ?H: i >= 0; i <= N     (a known-good annotation)
//! // array-octagons
//! // neg-close
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::predicates::PredicateOptions;
use crate::ice::{Candidate, Conjunction};
use crate::logic::{parse_formula, parse_program, Formula, HoleId, ParseError, Predicates, Program};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("{file}:{line}:{col}: {msg}")]
    Parse {
        file: String,
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{file}:{line}: bad pragma: {msg}")]
    Pragma {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("{file}: oracle predicate '{pred}' is not in the universe of ?{hole}")]
    OracleOutside {
        file: String,
        hole: HoleId,
        pred: String,
    },
    #[error("{file}: {msg}")]
    Io { file: String, msg: String },
}

#[derive(Clone, Debug)]
pub struct Bench {
    pub name: String,
    pub program: Program,
    pub depth: Option<usize>,
    pub options: PredicateOptions,
    pub oracle: Option<BTreeMap<HoleId, Vec<Formula>>>,
}

impl Bench {
    pub fn load(path: &Path) -> Result<Bench, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io {
            file: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Bench::parse(&name, &text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Bench, BenchError> {
        let program = parse_program(text).map_err(|e: ParseError| BenchError::Parse {
            file: name.to_string(),
            line: e.line,
            col: e.col,
            msg: e.msg,
        })?;
        let mut bench = Bench {
            name: name.to_string(),
            program,
            depth: None,
            options: PredicateOptions::default(),
            oracle: None,
        };
        for (ln, line) in text.lines().enumerate() {
            let Some(body) = line.trim().strip_prefix("//") else {
                continue;
            };
            let body = body.trim();
            let bad = |msg: String| BenchError::Pragma {
                file: name.to_string(),
                line: ln + 1,
                msg,
            };
            let formula = |s: &str| {
                parse_formula(s.trim(), &bench.program).map_err(|e| bad(format!("{s}: {}", e.msg)))
            };
            if let Some(rest) = body.strip_prefix("depth:") {
                bench.depth = Some(rest.trim().parse().map_err(|_| bad(rest.trim().into()))?);
            } else if let Some(rest) = body.strip_prefix("predicate ") {
                let (hole, f) = hole_and_rest(rest).ok_or_else(|| bad(rest.into()))?;
                let f = formula(f)?;
                bench.options.pinned.entry(hole).or_default().push(f);
            } else if let Some(rest) = body.strip_prefix("template:") {
                let f = formula(rest)?;
                bench.options.templates.push(f);
            } else if let Some(rest) = body.strip_prefix("oracle ") {
                let (hole, fs) = hole_and_rest(rest).ok_or_else(|| bad(rest.into()))?;
                let mut parts = Vec::new();
                for f in fs.split(';').filter(|s| !s.trim().is_empty()) {
                    parts.push(formula(f)?);
                }
                bench.oracle.get_or_insert_with(BTreeMap::new).insert(hole, parts);
            } else if body == "array-octagons" {
                bench.options.array_octagons = true;
            } else if body == "neg-close" {
                bench.options.neg_close = true;
            }
        }
        Ok(bench)
    }

    /// The oracle annotation as a candidate over `predicates`.
    pub fn oracle_candidate(&self, predicates: &Predicates) -> Result<Option<Candidate>, BenchError> {
        let Some(oracle) = &self.oracle else {
            return Ok(None);
        };
        let mut c = Candidate::new();
        for (h, fs) in oracle {
            let mut atoms = Vec::new();
            for f in fs {
                let i = predicates
                    .position(h, f)
                    .ok_or_else(|| BenchError::OracleOutside {
                        file: self.name.clone(),
                        hole: h.clone(),
                        pred: f.to_string(),
                    })?;
                atoms.push(i);
            }
            c.insert(h.clone(), Conjunction::new(h.clone(), atoms));
        }
        for h in predicates.by_hole.keys() {
            c.entry(h.clone())
                .or_insert_with(|| Conjunction::new(h.clone(), []));
        }
        Ok(Some(c))
    }
}

fn hole_and_rest(s: &str) -> Option<(HoleId, &str)> {
    let s = s.trim().strip_prefix('?')?;
    let (h, rest) = s.split_once(':')?;
    Some((HoleId::new(h.trim()), rest))
}
