//! Learns the strongest conjunction consistent with a small ICE sample.

use npi_synth::ice::{houdini_passive, IceSample, Universes, Valuation};
use npi_synth::logic::HoleId;

fn main() {
    let h = HoleId::new("H");
    let v = |bits: &[bool]| Valuation::new(h.clone(), bits.to_vec());
    let mut sample = IceSample::default();
    sample.positives.insert(v(&[true, true, false, true]));
    sample.positives.insert(v(&[true, false, false, true]));
    sample.implications.insert((v(&[true, false, false, true]), v(&[true, true, true, false])));
    sample.negatives.insert(v(&[false, true, true, true]));
    let universes: Universes = [(h.clone(), 4)].into();

    println!("sample:");
    for p in &sample.positives {
        println!("  + {p}");
    }
    for n in &sample.negatives {
        println!("  - {n}");
    }
    for (a, b) in &sample.implications {
        println!("  {a} -> {b}");
    }
    match houdini_passive(&sample, &universes) {
        Ok(c) => println!("strongest consistent conjunction: {}", c[&h]),
        Err(e) => println!("{e}"),
    }
}
