//! Synthesis runs: predicate generation, the round loop, benchmark files and
//! suite statistics.

mod bench;
mod predicates;
mod suite;
mod synth;

pub use bench::{Bench, BenchError};
pub use predicates::{gen_predicates, octagons, PredicateOptions};
pub use suite::{
    bench_files, render_json, render_text, run_bench, run_suite, SuiteConfig, SuiteEntry, SuiteRow,
};
pub use synth::{
    annotation_formulas, synthesize_with, Audit, Event, Outcome, SynthesisConfig, SynthesisReport,
    DEFAULT_DEPTH,
};

use crate::logic::Program;

/// Generates predicates with `options` and runs the loop.
pub fn synthesize(p: &Program, options: &PredicateOptions, cfg: &SynthesisConfig) -> SynthesisReport {
    let predicates = gen_predicates(p, options);
    synthesize_with(p, &predicates, cfg, &mut |_| {})
}
