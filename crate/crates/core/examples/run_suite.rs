//! Runs every benchmark in a directory (the shipped suite by default) and
//! prints the statistics table.

use std::path::PathBuf;

use npi_synth::driver::{render_text, run_suite, SuiteConfig};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("benchmarks"));
    let entries = run_suite(&dir, &SuiteConfig::default()).expect("readable directory");
    let rows: Vec<_> = entries.iter().map(|e| e.row.clone()).collect();
    print!("{}", render_text(&rows));
    for e in &entries {
        if let Some(err) = &e.error {
            eprintln!("{}: {err}", e.row.name);
        }
        if let Some(r) = &e.report {
            if !r.audit.clean() {
                eprintln!("{}: audit {:?}", e.row.name, r.audit);
            }
        }
    }
}
