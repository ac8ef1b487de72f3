//! Parses a program, cuts it at its loop and prints each triple's VC.

use npi_synth::logic::parse_program;
use npi_synth::vcgen::{cut_loops, vc_with};

const PROGRAM: &str = "
var a: [int]int;
var i: int;
var n: int;

procedure zero()
  requires n >= 0;
  ensures (forall k: int :: 0 <= k && k < n ==> a[k] == 0);
{
  i := 0;
  while (i < n) invariant ?H; {
    a[i] := 0;
    i := i + 1;
  }
}";

fn main() {
    let p = parse_program(PROGRAM).expect("parses");
    print!("{p}");
    for t in cut_loops(&p) {
        let vc = vc_with(&p, &t, t.pre.clone(), t.post.clone());
        println!("\n== {}\n{t}\nvc: {}", t.label(), vc.formula());
    }
}
