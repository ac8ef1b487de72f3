//! Synthesizes both annotations of the array inverse benchmark and prints
//! every check the engine performs.

use std::path::Path;

use npi_synth::driver::{annotation_formulas, gen_predicates, synthesize_with, Bench, Event, Outcome, SynthesisConfig};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks/inverse.npl");
    let bench = Bench::load(&path).expect("benchmark loads");
    let predicates = gen_predicates(&bench.program, &bench.options);
    let cfg = SynthesisConfig {
        depth: bench.depth.unwrap_or(1),
        oracle: bench.oracle_candidate(&predicates).expect("oracle"),
        check_normality: true,
        ..Default::default()
    };
    let report = synthesize_with(&bench.program, &predicates, &cfg, &mut |e| match e {
        Event::Conjecture { round, candidate } => {
            let parts: Vec<String> = candidate.values().map(|c| format!("{}={c}", c.hole)).collect();
            println!("round {round}: {}", parts.join(" "));
        }
        Event::Check(line) => println!("  {line}"),
        Event::Constraint { .. } => {}
    });
    match &report.outcome {
        Outcome::Invariant(c) => {
            for (h, f) in annotation_formulas(c, &predicates) {
                println!("?{h}: {f}");
            }
        }
        other => println!("{other:?}"),
    }
    println!("rounds {} audit clean {}", report.rounds, report.audit.clean());
}
