//! One conjecture, one check: shows the constraint mined from a failed proof.

use npi_synth::ice::{Candidate, Conjunction};
use npi_synth::logic::{parse_formula, parse_program, HoleId, Predicates};
use npi_synth::solver::SolverConfig;
use npi_synth::teacher::{Teacher, TeacherVerdict};

fn main() {
    let p = parse_program(
        "var i: int; var N: int;
         procedure c() requires i == 0 && N > 0; ensures i == N; {
           while (i < N) invariant ?H; { i := i + 1; }
         }",
    )
    .unwrap();
    let h = HoleId::new("H");
    let texts = ["i >= 0", "i <= N", "i == 0", "N > 0"];
    let mut predicates = Predicates::default();
    predicates.by_hole.insert(
        h.clone(),
        texts.iter().map(|t| parse_formula(t, &p).unwrap()).collect(),
    );
    let teacher = Teacher::new(&p, &predicates, 1, SolverConfig::default());
    for atoms in [vec![0, 1, 2, 3], vec![0, 3], vec![0, 1, 3]] {
        let candidate: Candidate = [(h.clone(), Conjunction::new(h.clone(), atoms))].into();
        let formula = predicates.conjunction_formula(&candidate[&h]);
        print!("?H = {formula}\n  ");
        match teacher.check_conjecture(&candidate).unwrap() {
            TeacherVerdict::Verified => println!("verified"),
            TeacherVerdict::Rejected { constraint, triple, witness, .. } => {
                println!("{} fails, constraint {constraint}\n  countermodel:\n{witness}", triple.label())
            }
            TeacherVerdict::PlainFailure { triple, .. } => println!("{} cannot be fixed", triple.label()),
            TeacherVerdict::EngineFailure(why) => println!("{why}"),
        }
    }
}
