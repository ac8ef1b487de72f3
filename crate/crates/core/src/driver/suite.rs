//! Running a directory of benchmarks and tabulating the results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::bench::{Bench, BenchError};
use super::predicates::gen_predicates;
use super::synth::{synthesize_with, SynthesisConfig, SynthesisReport, DEFAULT_DEPTH};

const WORKER_STACK: usize = 64 << 20;

/// One table row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteRow {
    pub name: String,
    pub predicates: usize,
    pub rounds: usize,
    pub invariant_size: usize,
    pub time_ms: u128,
    pub outcome: String,
}

#[derive(Clone, Debug)]
pub struct SuiteEntry {
    pub row: SuiteRow,
    pub report: Option<SynthesisReport>,
    pub error: Option<String>,
}

/// Settings shared by every benchmark of a suite run. A `depth` here
/// overrides the files' `// depth:` pragmas.
#[derive(Clone, Debug, Default)]
pub struct SuiteConfig {
    pub synthesis: SynthesisConfig,
    pub depth: Option<usize>,
    pub neg_close: bool,
}

pub fn run_bench(bench: &Bench, cfg: &SuiteConfig) -> Result<SynthesisReport, BenchError> {
    let mut options = bench.options.clone();
    options.neg_close |= cfg.neg_close;
    let predicates = gen_predicates(&bench.program, &options);
    let mut synthesis = cfg.synthesis.clone();
    synthesis.depth = cfg.depth.or(bench.depth).unwrap_or(DEFAULT_DEPTH);
    synthesis.oracle = bench.oracle_candidate(&predicates)?;
    Ok(synthesize_with(&bench.program, &predicates, &synthesis, &mut |_| {}))
}

pub fn bench_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "npl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every `.npl` file of `dir` concurrently; rows come back in file-name order.
pub fn run_suite(dir: &Path, cfg: &SuiteConfig) -> std::io::Result<Vec<SuiteEntry>> {
    let files = bench_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .stack_size(WORKER_STACK)
        .build()
        .map_err(std::io::Error::other)?;
    Ok(pool.install(|| run_files(&files, cfg)))
}

fn run_files(files: &[PathBuf], cfg: &SuiteConfig) -> Vec<SuiteEntry> {
    files
        .par_iter()
        .map(|f| {
            let name = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            match Bench::load(f).and_then(|b| run_bench(&b, cfg)) {
                Ok(r) => SuiteEntry {
                    row: SuiteRow {
                        name,
                        predicates: r.total_predicates(),
                        rounds: r.rounds,
                        invariant_size: r.invariant_size(),
                        time_ms: r.wall_time.as_millis(),
                        outcome: r.outcome.name().to_string(),
                    },
                    report: Some(r),
                    error: None,
                },
                Err(e) => SuiteEntry {
                    row: SuiteRow {
                        name,
                        predicates: 0,
                        rounds: 0,
                        invariant_size: 0,
                        time_ms: 0,
                        outcome: "Error".into(),
                    },
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn render_json(rows: &[SuiteRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

pub fn render_text(rows: &[SuiteRow]) -> String {
    let header = ["name", "|P|", "rounds", "|Inv|", "time_ms", "outcome"];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                r.predicates.to_string(),
                r.rounds.to_string(),
                r.invariant_size.to_string(),
                r.time_ms.to_string(),
                r.outcome.clone(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        for (i, (c, w)) in row.iter().zip(widths).enumerate() {
            let sep = if i + 1 == row.len() { "\n" } else { "  " };
            if i == 0 || i == row.len() - 1 {
                let _ = write!(out, "{c:<w$}{sep}");
            } else {
                let _ = write!(out, "{c:>w$}{sep}");
            }
        }
    };
    line(&mut out, &header);
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&mut out, &refs);
    }
    // trailing spaces from left-aligned last column
    out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_gives_empty_table() {
        let dir = tempfile::tempdir().unwrap();
        let rows = run_suite(dir.path(), &SuiteConfig::default()).unwrap();
        assert!(rows.is_empty());
        assert_eq!(render_json(&[]), "[]");
    }

    #[test]
    fn text_table_is_aligned() {
        let rows = vec![
            SuiteRow {
                name: "a".into(),
                predicates: 12,
                rounds: 3,
                invariant_size: 2,
                time_ms: 40,
                outcome: "Invariant".into(),
            },
            SuiteRow {
                name: "longer".into(),
                predicates: 7,
                rounds: 10,
                invariant_size: 1,
                time_ms: 5,
                outcome: "RoundLimit".into(),
            },
        ];
        let t = render_text(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        let col = lines[0].find("|P|").unwrap() + 3;
        assert!(lines.iter().all(|l| l[..col].ends_with(|c: char| c.is_ascii_digit() || c == '|')));
        let json: serde_json::Value = serde_json::from_str(&render_json(&rows)).unwrap();
        let keys: Vec<&String> = json[0].as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn unreadable_file_is_recorded_and_suite_continues() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.npl"), "var x: ;").unwrap();
        std::fs::write(
            dir.path().join("ok.npl"),
            "var x: int; procedure f() requires x > 0; ensures x > 0; { x := x; }",
        )
        .unwrap();
        let rows = run_suite(dir.path(), &SuiteConfig::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].row.outcome, "Error");
        assert!(rows[0].error.is_some());
        assert_eq!(rows[1].row.name, "ok");
    }
}
