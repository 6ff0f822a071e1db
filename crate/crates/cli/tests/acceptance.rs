//! Acceptance suite: one PASS/FAIL line per criterion, each driven by the
//! bundled config file exactly as `fraclayer --config <file> <command>`
//! would run it. Operators are shared between criteria through the session
//! cache, so later criteria reuse assemblies of earlier ones.

use std::io::Write;
use std::time::{Duration, Instant};

use fraclayer_cli::{bundled_config, run, Command, RunReport, Session};

struct Criterion {
    number: usize,
    title: &'static str,
    config: &'static str,
    command: Command,
    budget: Duration,
}

fn criteria() -> Vec<Criterion> {
    let check = || Command::Check { names: vec![] };
    let secs = Duration::from_secs;
    vec![
        Criterion { number: 1, title: "eigenvalue oracle at s = 2", config: "criterion-01-funk-hecke.json", command: check(), budget: secs(1) },
        Criterion { number: 2, title: "assembled operator spectral accuracy", config: "criterion-02-spectral.json", command: check(), budget: secs(120) },
        Criterion { number: 3, title: "closed-form field and surface trace", config: "criterion-03-closed-form.json", command: check(), budget: secs(60) },
        Criterion { number: 4, title: "end-to-end exterior problem", config: "criterion-04-bvp.json", command: Command::Bvp, budget: secs(120) },
        Criterion { number: 5, title: "definiteness and conditioning growth", config: "criterion-05-conditioning.json", command: check(), budget: secs(180) },
        Criterion { number: 6, title: "weighted symmetry", config: "criterion-06-symmetry.json", command: check(), budget: secs(10) },
        Criterion { number: 7, title: "planar convolution identity", config: "criterion-07-semigroup-flat.json", command: check(), budget: secs(60) },
        Criterion { number: 8, title: "composition structure", config: "criterion-08-composition.json", command: check(), budget: secs(120) },
        Criterion { number: 9, title: "weak fractional harmonicity", config: "criterion-09-weak.json", command: check(), budget: secs(300) },
        Criterion { number: 10, title: "Riesz semigroup and Fourier symbol", config: "criterion-10-riesz.json", command: check(), budget: secs(180) },
        Criterion { number: 11, title: "Sobolev norm equivalence envelope", config: "criterion-11-norm-equivalence.json", command: check(), budget: secs(1) },
        Criterion { number: 12, title: "Besov patch seminorm", config: "criterion-12-besov.json", command: check(), budget: secs(60) },
    ]
}

fn failure_summary(report: &RunReport) -> String {
    report
        .checks
        .iter()
        .flat_map(|c| c.failures().map(move |m| format!("{}: {}", c.check, m.describe())))
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() {
    let out = tempfile::tempdir().expect("temporary output directory");
    let base = Session::new(Default::default(), out.path(), true);
    let mut stdout = std::io::stdout().lock();
    let mut failed = Vec::new();
    for c in criteria() {
        let config = bundled_config(c.config).unwrap_or_else(|e| panic!("{}: {e}", c.config));
        let session = base.with_config(config);
        let start = Instant::now();
        let outcome = run(&session, &c.command);
        let elapsed = start.elapsed();
        let timing = format!("{:.1} s, budget {} s", elapsed.as_secs_f64(), c.budget.as_secs());
        let (passed, note) = match outcome {
            Ok(report) if report.passed && elapsed <= c.budget => (true, String::new()),
            Ok(report) if report.passed => (false, "over runtime budget".to_string()),
            Ok(report) => (false, failure_summary(&report)),
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if passed { "PASS" } else { "FAIL" };
        let line = format!("{verdict} criterion {:>2}: {} ({timing})", c.number, c.title);
        if note.is_empty() {
            writeln!(stdout, "{line}").unwrap();
        } else {
            writeln!(stdout, "{line} -- {note}").unwrap();
        }
        stdout.flush().unwrap();
        if !passed {
            failed.push(c.number);
        }
    }
    if failed.is_empty() {
        writeln!(stdout, "acceptance: all criteria pass").unwrap();
    } else {
        writeln!(stdout, "acceptance: failing criteria {failed:?}").unwrap();
        std::process::exit(1);
    }
}
