use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use npi_synth::driver::{
    annotation_formulas, gen_predicates, render_json, render_text, run_suite, synthesize_with,
    Bench, Event, Outcome, SuiteConfig, SuiteRow, SynthesisConfig, DEFAULT_DEPTH,
};
use npi_synth::quant::approx_negated;
use npi_synth::solver::SolverConfig;
use npi_synth::teacher::Teacher;
use npi_synth::vcgen::{cut_loops, vc_with};

const USAGE_EXIT: u8 = 5;

#[derive(Parser)]
#[command(name = "npi-synth", version, about = "Invariant synthesis from non-provability information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize annotations for one program.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        opts: Common,
        /// Write the final constraint sample to this file.
        #[arg(long)]
        dump_sample: Option<PathBuf>,
        /// Print every Hoare triple and its verification condition.
        #[arg(long)]
        dump_vcs: bool,
        /// Print the quantifier-free reduction of every negated VC.
        #[arg(long)]
        dump_approx: bool,
        /// Print one line per triple check.
        #[arg(long)]
        trace: bool,
    },
    /// Run every `.npl` file of a directory.
    Suite {
        dir: PathBuf,
        #[command(flatten)]
        opts: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Instantiation depth; defaults to the file's `// depth:` pragma, then 1.
    #[arg(long)]
    depth: Option<usize>,
    /// SMT solver binary (falls back to $NPI_SOLVER, then `z3`).
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    solver_timeout: f64,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Add the negation of every generated predicate.
    #[arg(long)]
    neg_close: bool,
    #[arg(long, value_enum)]
    stats: Option<StatsFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsFormat {
    Json,
    Text,
}

impl Common {
    fn solver(&self) -> SolverConfig {
        let mut s = SolverConfig::default();
        if let Some(p) = &self.solver {
            s.path = p.clone();
        }
        s.timeout = Duration::from_secs_f64(self.solver_timeout.max(0.001));
        s
    }

    fn synthesis(&self) -> SynthesisConfig {
        SynthesisConfig {
            depth: self.depth.unwrap_or(DEFAULT_DEPTH),
            max_rounds: self.max_rounds,
            solver: self.solver(),
            oracle: None,
            check_normality: false,
        }
    }
}

fn print_stats(format: Option<StatsFormat>, rows: &[SuiteRow]) {
    match format {
        Some(StatsFormat::Json) => println!("{}", render_json(rows)),
        Some(StatsFormat::Text) => print!("{}", render_text(rows)),
        None => {}
    }
}

#[allow(clippy::too_many_arguments)]
fn verify(
    file: &Path,
    opts: &Common,
    dump_sample: Option<&Path>,
    dump_vcs: bool,
    dump_approx: bool,
    trace: bool,
) -> Result<u8, String> {
    let bench = Bench::load(file).map_err(|e| e.to_string())?;
    let mut options = bench.options.clone();
    options.neg_close |= opts.neg_close;
    let predicates = gen_predicates(&bench.program, &options);
    let mut cfg = opts.synthesis();
    cfg.depth = opts.depth.or(bench.depth).unwrap_or(DEFAULT_DEPTH);

    if dump_vcs {
        for t in cut_loops(&bench.program) {
            let vc = vc_with(&bench.program, &t, t.pre.clone(), t.post.clone());
            println!("== {}\n{t}\nvc: {}\n", t.label(), vc.formula());
        }
    }
    if dump_approx {
        let teacher = Teacher::new(&bench.program, &predicates, cfg.depth, cfg.solver.clone());
        for t in teacher.triples() {
            let q = teacher.template_query(t.id).expect("triple has a template");
            println!("== {} (selectors free)\n{q}\n", t.label());
        }
        if bench.program.holes().is_empty() {
            for t in cut_loops(&bench.program) {
                let vc = vc_with(&bench.program, &t, t.pre.clone(), t.post.clone());
                println!("{}", approx_negated(&vc.negation(), cfg.depth).qf);
            }
        }
    }

    let report = synthesize_with(&bench.program, &predicates, &cfg, &mut |e| {
        if !trace {
            return;
        }
        match e {
            Event::Conjecture { round, candidate } => {
                let parts: Vec<String> = candidate.values().map(|c| format!("{}={c}", c.hole)).collect();
                eprintln!("round {round}: {}", parts.join(" "));
            }
            Event::Check(line) => eprintln!("  {line}"),
            Event::Constraint { .. } => {}
        }
    });

    if let Some(path) = dump_sample {
        std::fs::write(path, report.sample.to_text())
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    match &report.outcome {
        Outcome::Invariant(c) => {
            for (h, f) in annotation_formulas(c, &predicates) {
                println!("?{h}: {f}");
            }
        }
        Outcome::NoConsistentInvariant => println!("no conjunction of the predicates is consistent"),
        Outcome::Unprovable(detail) => println!("unprovable: {detail}"),
        Outcome::RoundLimit => println!("round limit {} reached", report.max_rounds),
        Outcome::EngineFailure(why) => println!("engine failure: {why}"),
    }
    let row = SuiteRow {
        name: bench.name.clone(),
        predicates: report.total_predicates(),
        rounds: report.rounds,
        invariant_size: report.invariant_size(),
        time_ms: report.wall_time.as_millis(),
        outcome: report.outcome.name().to_string(),
    };
    print_stats(opts.stats, std::slice::from_ref(&row));
    Ok(report.outcome.exit_code() as u8)
}

fn suite(dir: &Path, opts: &Common) -> Result<u8, String> {
    let cfg = SuiteConfig {
        synthesis: opts.synthesis(),
        depth: opts.depth,
        neg_close: opts.neg_close,
    };
    let entries = run_suite(dir, &cfg).map_err(|e| format!("{}: {e}", dir.display()))?;
    for e in &entries {
        if let Some(err) = &e.error {
            eprintln!("{err}");
        }
    }
    let rows: Vec<SuiteRow> = entries.into_iter().map(|e| e.row).collect();
    print_stats(opts.stats.or(Some(StatsFormat::Text)), &rows);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_EXIT } else { 0 });
        }
    };
    let res = match &cli.command {
        Command::Verify {
            file,
            opts,
            dump_sample,
            dump_vcs,
            dump_approx,
            trace,
        } => verify(file, opts, dump_sample.as_deref(), *dump_vcs, *dump_approx, *trace),
        Command::Suite { dir, opts } => suite(dir, opts),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE_EXIT)
        }
    }
}
