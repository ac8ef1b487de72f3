//! One PASS/FAIL line per acceptance criterion. Exits non-zero on any FAIL.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use npi_synth::cdnpi::oracle::{brute_force_ice, is_consistent_semantic};
use npi_synth::cdnpi::{
    c_of, d_of, is_consistent, to_ice, CdnpiSample, ConjunctionConstraint, Constraint,
    DisjunctionConstraint, InductivityConstraint,
};
use npi_synth::driver::{gen_predicates, run_bench, run_suite, Bench, Outcome, SuiteConfig, SynthesisConfig};
use npi_synth::ice::{houdini_passive, Candidate, Conjunction, IceSample, Universes, Valuation};
use npi_synth::logic::HoleId;
use npi_synth::solver::SolverConfig;

const TRIALS: usize = 1000;

struct Line {
    name: &'static str,
    pass: Option<bool>,
    detail: String,
}

fn report(lines: &[Line]) -> ExitCode {
    let mut failed = false;
    for l in lines {
        let tag = match l.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed = true;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("{tag} {}: {}", l.name, l.detail);
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn random_universes(rng: &mut ChaCha8Rng, max_total: usize) -> Universes {
    let holes = rng.gen_range(1..=3usize);
    let mut out = Universes::new();
    let mut left = max_total;
    for k in 0..holes {
        if left == 0 {
            break;
        }
        let n = rng.gen_range(1..=left.min(5));
        left -= n;
        out.insert(HoleId::new(format!("H{k}")), n);
    }
    out
}

fn random_atoms(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.4)).collect()
}

fn random_hole(rng: &mut ChaCha8Rng, u: &Universes) -> (HoleId, usize) {
    let i = rng.gen_range(0..u.len());
    let (h, n) = u.iter().nth(i).unwrap();
    (h.clone(), *n)
}

fn random_candidate(rng: &mut ChaCha8Rng, u: &Universes) -> Candidate {
    u.iter()
        .map(|(h, n)| (h.clone(), Conjunction::new(h.clone(), random_atoms(rng, *n))))
        .collect()
}

fn random_cdnpi(rng: &mut ChaCha8Rng, u: &Universes) -> CdnpiSample {
    let mut s = CdnpiSample::default();
    for _ in 0..rng.gen_range(0..6) {
        let (h, n) = random_hole(rng, u);
        let c = match rng.gen_range(0..3) {
            0 => Constraint::Weakening(DisjunctionConstraint::new(h, random_atoms(rng, n))),
            1 => Constraint::Strengthening(ConjunctionConstraint::new(h, random_atoms(rng, n))),
            _ => {
                let (g, m) = random_hole(rng, u);
                Constraint::Inductivity(InductivityConstraint {
                    lhs: ConjunctionConstraint::new(h, random_atoms(rng, n)),
                    rhs: DisjunctionConstraint::new(g, random_atoms(rng, m)),
                })
            }
        };
        s.add(c);
    }
    s
}

fn random_valuation(rng: &mut ChaCha8Rng, u: &Universes) -> Valuation {
    let (h, n) = random_hole(rng, u);
    Valuation::new(h, (0..n).map(|_| rng.gen_bool(0.6)).collect())
}

fn random_ice(rng: &mut ChaCha8Rng, u: &Universes) -> IceSample {
    let mut s = IceSample::default();
    for _ in 0..rng.gen_range(0..4) {
        s.positives.insert(random_valuation(rng, u));
    }
    for _ in 0..rng.gen_range(0..3) {
        s.negatives.insert(random_valuation(rng, u));
    }
    for _ in 0..rng.gen_range(0..4) {
        s.implications.insert((random_valuation(rng, u), random_valuation(rng, u)));
    }
    s
}

fn translation_equivalence() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for _ in 0..TRIALS {
        let u = random_universes(&mut rng, 8);
        let sample = random_cdnpi(&mut rng, &u);
        let ice = to_ice(&sample, &u);
        for _ in 0..8 {
            let cand = random_candidate(&mut rng, &u);
            let direct = is_consistent(&cand, &sample).unwrap();
            let semantic = is_consistent_semantic(&cand, &sample, &u);
            if direct != ice.is_consistent(&cand) || direct != semantic {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Line {
        name: "constraint/ICE consistency equivalence",
        pass: Some(mismatches == 0 && elapsed < Duration::from_secs(10)),
        detail: format!("{TRIALS} samples x 8 candidates, {mismatches} mismatches, {elapsed:.2?}"),
    }
}

fn contains(big: &Candidate, small: &Candidate) -> bool {
    small.iter().all(|(h, c)| c.atoms.is_subset(&big[h].atoms))
}

fn houdini_maximality() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    let mut inconsistent = 0;
    for _ in 0..TRIALS {
        let u = random_universes(&mut rng, 10);
        let sample = random_ice(&mut rng, &u);
        let all = brute_force_ice(&sample, &u);
        let maximal: Vec<&Candidate> = all
            .iter()
            .filter(|c| !all.iter().any(|d| d != *c && contains(d, c)))
            .collect();
        match houdini_passive(&sample, &u) {
            Ok(c) => {
                if maximal.len() != 1 || *maximal[0] != c {
                    bad += 1;
                }
            }
            Err(_) => {
                inconsistent += 1;
                if !all.is_empty() {
                    bad += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Line {
        name: "Houdini maximality",
        pass: Some(bad == 0 && elapsed < Duration::from_secs(30)),
        detail: format!(
            "{TRIALS} samples ({inconsistent} inconsistent), {bad} disagreements, {elapsed:.2?}"
        ),
    }
}

fn bits(v: &Valuation) -> String {
    v.bits.iter().map(|b| if *b { 't' } else { 'f' }).collect()
}

fn inverse_regression(benchmarks: &Path) -> Line {
    let name = "inverse regression";
    let start = Instant::now();
    let bench = match Bench::load(&benchmarks.join("inverse.npl")) {
        Ok(b) => b,
        Err(e) => return Line { name, pass: Some(false), detail: e.to_string() },
    };
    let cfg = SuiteConfig {
        synthesis: SynthesisConfig {
            check_normality: true,
            ..Default::default()
        },
        ..Default::default()
    };
    let report = match run_bench(&bench, &cfg) {
        Ok(r) => r,
        Err(e) => return Line { name, pass: Some(false), detail: e.to_string() },
    };
    let (l, r) = (HoleId::new("L"), HoleId::new("R"));
    let first_exit = report.constraints.iter().find_map(|c| match c {
        Constraint::Inductivity(i) if i.lhs.hole == l && i.rhs.hole == r => Some(i.clone()),
        _ => None,
    });
    let mut problems = Vec::new();
    match &first_exit {
        Some(i) => {
            let pair = (bits(&c_of(&i.lhs, 3)), bits(&d_of(&i.rhs, 3)));
            let atoms: (Vec<usize>, Vec<usize>) = (
                i.lhs.atoms.iter().copied().collect(),
                i.rhs.atoms.iter().copied().collect(),
            );
            if atoms != (vec![0], vec![1]) {
                problems.push(format!("constraint {atoms:?}"));
            }
            if pair != ("tff".into(), "tft".into()) {
                problems.push(format!("ICE pair {pair:?}"));
            }
        }
        None => problems.push("no L->R inductivity constraint".into()),
    }
    match &report.outcome {
        Outcome::Invariant(c) => {
            if !c[&l].atoms.contains(&0) {
                problems.push(format!("L = {}", c[&l]));
            }
            if !c[&r].atoms.contains(&2) {
                problems.push(format!("R = {}", c[&r]));
            }
        }
        o => problems.push(format!("outcome {}", o.name())),
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(60) {
        problems.push("over 60 s".into());
    }
    Line {
        name,
        pass: Some(problems.is_empty()),
        detail: format!(
            "{} rounds, {elapsed:.2?}{}",
            report.rounds,
            if problems.is_empty() { String::new() } else { format!(": {}", problems.join(", ")) }
        ),
    }
}

fn suite_lines(benchmarks: &Path) -> Vec<Line> {
    let start = Instant::now();
    let cfg = SuiteConfig {
        synthesis: SynthesisConfig {
            check_normality: true,
            ..Default::default()
        },
        ..Default::default()
    };
    let entries = match run_suite(benchmarks, &cfg) {
        Ok(e) => e,
        Err(e) => {
            return vec![Line {
                name: "suite convergence",
                pass: Some(false),
                detail: e.to_string(),
            }]
        }
    };
    let elapsed = start.elapsed();

    let mut not_converged = Vec::new();
    let mut honesty = Vec::new();
    let mut normality = Vec::new();
    let mut progress = Vec::new();
    let mut fidelity = Vec::new();
    let mut with_oracle = 0;
    let mut normality_checks = 0;
    let mut refuted = 0;
    let mut rounds: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &entries {
        let name = e.row.name.clone();
        let Some(r) = &e.report else {
            not_converged.push(format!("{name}: {}", e.error.clone().unwrap_or_default()));
            continue;
        };
        let bound = r.total_predicates() + 1;
        rounds.insert(name.clone(), (r.rounds, bound));
        if !matches!(r.outcome, Outcome::Invariant(_)) || r.final_check != Some(true) || r.rounds > bound {
            not_converged.push(format!("{name}: {} after {} rounds", r.outcome.name(), r.rounds));
        }
        if let Ok(b) = Bench::load(&benchmarks.join(format!("{name}.npl"))) {
            let preds = gen_predicates(&b.program, &b.options);
            if matches!(b.oracle_candidate(&preds), Ok(Some(_))) {
                with_oracle += 1;
            }
        }
        let a = &r.audit;
        let tag = |v: &Vec<usize>| v.iter().map(|k| format!("{name}#{k}")).collect::<Vec<_>>();
        honesty.extend(tag(&a.honesty_violations));
        normality.extend(tag(&a.normality_violations));
        progress.extend(tag(&a.progress_violations));
        progress.extend(tag(&a.constraint_violations));
        fidelity.extend(tag(&a.fidelity_violations));
        normality_checks += a.normality_checks;
        refuted += a.refuted_checks;
    }
    let enough = entries.len() >= 10;
    let summary = |v: &Vec<String>| {
        if v.is_empty() {
            "none".to_string()
        } else {
            v.join(", ")
        }
    };
    vec![
        Line {
            name: "suite convergence",
            pass: Some(enough && not_converged.is_empty() && elapsed < Duration::from_secs(600)),
            detail: format!(
                "{} benchmarks in {elapsed:.2?}; rounds/bound {}; failures: {}",
                entries.len(),
                rounds
                    .iter()
                    .map(|(n, (k, b))| format!("{n} {k}/{b}"))
                    .collect::<Vec<_>>()
                    .join(" "),
                summary(&not_converged)
            ),
        },
        Line {
            name: "honesty",
            pass: Some(with_oracle == entries.len() && honesty.is_empty()),
            detail: format!("{with_oracle} benchmarks with oracle; violations: {}", summary(&honesty)),
        },
        Line {
            name: "normality",
            pass: Some(normality.is_empty()),
            detail: format!("{normality_checks} re-checks; violations: {}", summary(&normality)),
        },
        Line {
            name: "progress",
            pass: Some(progress.is_empty()),
            detail: format!("violations: {}", summary(&progress)),
        },
        Line {
            name: "model fidelity",
            pass: Some(fidelity.is_empty()),
            detail: format!("{refuted} refuted outcomes; violations: {}", summary(&fidelity)),
        },
    ]
}

fn solver_available() -> bool {
    std::process::Command::new(SolverConfig::default().path)
        .arg("-version")
        .output()
        .is_ok()
}

fn main() -> ExitCode {
    let benchmarks = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks");
    let mut lines = vec![translation_equivalence(), houdini_maximality()];
    if solver_available() {
        lines.push(inverse_regression(&benchmarks));
        lines.extend(suite_lines(&benchmarks));
    } else {
        for name in [
            "inverse regression",
            "suite convergence",
            "honesty",
            "normality",
            "progress",
            "model fidelity",
        ] {
            lines.push(Line {
                name,
                pass: None,
                detail: "no SMT solver found".into(),
            });
        }
    }
    report(&lines)
}
