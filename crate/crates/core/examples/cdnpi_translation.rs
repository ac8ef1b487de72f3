//! Builds a constraint sample, translates it to ICE and learns from it.

use npi_synth::cdnpi::{is_consistent, to_ice, CdnpiSample, Constraint};
use npi_synth::ice::{houdini_passive, Universes};
use npi_synth::logic::HoleId;

fn main() {
    let text = "\
W L p1|p2
I L p0 -> R p1
S R p0&p1
";
    let sample = CdnpiSample::from_text(text).expect("well-formed sample");
    let universes: Universes = [(HoleId::new("L"), 3), (HoleId::new("R"), 3)].into();
    let ice = to_ice(&sample, &universes);
    for c in sample.constraints() {
        println!("{c}");
    }
    println!("as ICE:");
    for p in &ice.positives {
        println!("  + {p}");
    }
    for n in &ice.negatives {
        println!("  - {n}");
    }
    for (a, b) in &ice.implications {
        println!("  {a} -> {b}");
    }
    let candidate = houdini_passive(&ice, &universes).expect("consistent");
    for c in candidate.values() {
        println!("{}: {c}", c.hole);
    }
    assert!(is_consistent(&candidate, &sample).unwrap());
    let extra = Constraint::parse("W R p0|p2").unwrap();
    println!("after adding '{extra}': still allowed = {}", extra.allows(&candidate).unwrap());
}
