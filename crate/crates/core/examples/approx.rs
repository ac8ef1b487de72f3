//! Skolemizes and instantiates a negated quantified VC at depths 0 and 1.

use npi_synth::logic::{parse_formula, parse_program};
use npi_synth::quant::approx;

fn main() {
    let p = parse_program(
        "var a: [int]int; var n: int; function f(int): int;
         procedure q() ensures true; { }",
    )
    .unwrap();
    let vc = parse_formula(
        "(forall k: int :: 0 <= k && k < n ==> a[k] == f(k)) ==> (forall j: int :: 0 <= j && j < n ==> a[j] == f(j))",
        &p,
    )
    .unwrap();
    println!("vc: {vc}");
    for depth in 0..2 {
        let r = approx(&vc, depth);
        println!("\ndepth {depth}: pool of {} terms", r.pool.len());
        for s in &r.skolems {
            println!("  skolem {}", s.name);
        }
        println!("  {}", r.qf);
    }
}
