//! Sends two quantifier-free queries to the SMT solver and evaluates the model.

use npi_synth::logic::{parse_formula, parse_program, Term};
use npi_synth::solver::{check, DecisionOutcome, SolverConfig};

fn main() {
    let p = parse_program(
        "var x: int; var a: [int]int; procedure q() ensures true; { }",
    )
    .unwrap();
    let cfg = SolverConfig::default();
    for text in ["x > 0 && a[x] == x + 1", "x > 0 && x < 1"] {
        let f = parse_formula(text, &p).unwrap();
        print!("{text}: ");
        match check(&f, &cfg) {
            DecisionOutcome::Proved => println!("unsat"),
            DecisionOutcome::Refuted(m) => {
                let x = m.eval_term(&Term::int_var("x")).unwrap();
                println!("sat with x = {x}, still true under the model: {}", m.eval_formula(&f).unwrap());
            }
            DecisionOutcome::EngineFailure(why) => println!("solver failure\n{why}"),
        }
    }
}
