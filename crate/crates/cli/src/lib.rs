//! Command-line experiments: mesh generation, operator assembly, solves,
//! field evaluation and the numerical checks, driven by JSON configs.

pub mod checks;
pub mod commands;
pub mod config;
pub mod report;

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use clap::{Parser, Subcommand};
use fraclayer::{BoundaryOperator, SurfaceMesh};
use thiserror::Error;

pub use config::{CheckName, Datum, ExperimentConfig, Resolution, Tolerances};
pub use report::{CheckReport, Measurement, Relation, RunReport};

/// Exit status when every tolerance passes.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one tolerance fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for invalid configs, unknown checks and bad arguments.
pub const EXIT_SCHEMA: i32 = 2;
/// Exit status when a computation or file operation errors out.
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] fraclayer::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Core(_) | CliError::Io(_) => EXIT_RUNTIME,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

type OperatorSlot = Arc<OnceLock<std::result::Result<Arc<BoundaryOperator>, String>>>;

/// Config, output directory and an operator cache shared by the checks of
/// one process, so each `(mesh, order)` pair is assembled once.
pub struct Session {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub quiet: bool,
    operators: Arc<Mutex<HashMap<String, OperatorSlot>>>,
}

impl Session {
    pub fn new(config: ExperimentConfig, out_dir: impl Into<PathBuf>, quiet: bool) -> Self {
        Self { config, out_dir: out_dir.into(), quiet, operators: Arc::default() }
    }

    /// Shares the operator cache with `self` under a different config.
    pub fn with_config(&self, config: ExperimentConfig) -> Self {
        Self { config, out_dir: self.out_dir.clone(), quiet: self.quiet, operators: Arc::clone(&self.operators) }
    }

    /// Mesh of the configured surface.
    pub fn mesh(&self, resolution: Resolution) -> Result<SurfaceMesh> {
        Ok(SurfaceMesh::new(self.config.surface, resolution.nlat, resolution.nlon)?)
    }

    /// Operator of order `s` with the configured correction, assembled on
    /// first use.
    pub fn operator(&self, mesh: &SurfaceMesh, s: f64) -> Result<Arc<BoundaryOperator>> {
        let params = self.config.correction;
        let key = format!("{}|{}|{:?}", mesh.fingerprint(), s.to_bits(), params);
        let slot = self.operators.lock().expect("operator cache poisoned").entry(key).or_default().clone();
        let op = slot.get_or_init(|| {
            if let Some(path) = &self.config.operator_file {
                match BoundaryOperator::read_binary(path, mesh) {
                    Ok(op) if op.spec().s() == s => return Ok(Arc::new(op)),
                    Ok(_) => self.log(&format!("{}: different order, assembling", path.display())),
                    Err(e) => self.log(&format!("{}: {e}, assembling", path.display())),
                }
            }
            let (nlat, nlon) = mesh.resolution();
            self.log(&format!("assembling s = {s} on {nlat}x{nlon}"));
            BoundaryOperator::assemble_with(mesh, s, params).map(Arc::new).map_err(|e| e.to_string())
        });
        op.clone().map_err(|e| CliError::Core(fraclayer::Error::Precondition(format!("assembly failed: {e}"))))
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn log(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Command-line arguments.
#[derive(Debug, Parser)]
#[command(name = "fraclayer", version, about = "Single-layer Riesz potentials on closed surfaces")]
pub struct Cli {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random densities and sample points (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write the mesh CSV and its JSON sidecar.
    Mesh,
    /// Assemble the operator, dump it and report its conditioning.
    Assemble,
    /// Solve for the density of the configured boundary datum.
    Solve,
    /// Evaluate the potential of the configured density.
    Field,
    /// Run named checks (or the config's list).
    Check { names: Vec<String> },
    /// Track a discretization error over mesh resolutions.
    Convergence,
    /// Boundary datum → density → exterior field → far-field decay.
    Bvp,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Assemble => "assemble",
            Command::Solve => "solve",
            Command::Field => "field",
            Command::Check { .. } => "check",
            Command::Convergence => "convergence",
            Command::Bvp => "bvp",
        }
    }
}

/// Runs one command and writes `<command>-report.json` to the output directory.
pub fn run(session: &Session, command: &Command) -> Result<RunReport> {
    std::fs::create_dir_all(&session.out_dir)?;
    let (checks, mut artifacts) = match command {
        Command::Mesh => commands::mesh(session)?,
        Command::Assemble => commands::assemble(session)?,
        Command::Solve => commands::solve(session)?,
        Command::Field => commands::field(session)?,
        Command::Convergence => commands::convergence(session)?,
        Command::Bvp => commands::bvp(session)?,
        Command::Check { names } => {
            let names = resolve_checks(names, &session.config)?;
            let mut reports = Vec::with_capacity(names.len());
            let mut artifacts = Vec::new();
            for name in names {
                let (report, files) = checks::run_check(session, name)?;
                session.log(&report.summary());
                reports.push(report);
                artifacts.extend(files);
            }
            (reports, artifacts)
        }
    };
    let file = format!("{}-report.json", command.name());
    artifacts.push(file.clone());
    let report = RunReport::new(command.name(), session.config.seed, checks, artifacts);
    fraclayer::io::write_json(&session.artifact(&file), &report)?;
    Ok(report)
}

fn resolve_checks(names: &[String], config: &ExperimentConfig) -> Result<Vec<CheckName>> {
    let names: Vec<CheckName> = if names.is_empty() {
        config.checks.clone()
    } else {
        names.iter().map(|n| n.parse()).collect::<Result<_>>()?
    };
    if names.is_empty() {
        return Err(CliError::Schema("no checks named on the command line or in the config".into()));
    }
    Ok(names)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_PASS };
        }
    };
    let outcome = load_config(&cli).and_then(|config| {
        let out = config.output.clone();
        run(&Session::new(config, out, cli.quiet), &cli.command)
    });
    match outcome {
        Ok(report) => {
            if !cli.quiet {
                println!("{}: {}", report.command, if report.passed { "PASS" } else { "FAIL" });
                for f in &report.failing {
                    println!("  failed: {f}");
                }
            }
            if report.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Reads a config file from the repository's `configs/` directory.
pub fn bundled_config(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(dir: &Path, args: &[&str]) -> i32 {
        let out = dir.to_str().unwrap();
        let mut all = vec!["fraclayer", "--quiet", "--out", out];
        all.extend_from_slice(args);
        main_with_args(all)
    }

    #[test]
    fn funk_hecke_check_passes() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_args(dir.path(), &["check", "funk-hecke"]), EXIT_PASS);
        let report: serde_json::Value = fraclayer::io::read_json(&dir.path().join("check-report.json")).unwrap();
        assert_eq!(report["passed"], true);
        assert_eq!(report["checks"][0]["check"], "funk-hecke");
        assert!(dir.path().join("funk-hecke.csv").exists());
    }

    #[test]
    fn unknown_check_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_args(dir.path(), &["check", "no-such-check"]), EXIT_SCHEMA);
        assert_eq!(run_args(dir.path(), &["check"]), EXIT_SCHEMA);
        assert_eq!(run_args(dir.path(), &["frobnicate"]), EXIT_SCHEMA);
    }

    #[test]
    fn bad_config_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"alpha": 0.75, "typo_field": 1}"#).unwrap();
        assert_eq!(run_args(dir.path(), &["--config", path.to_str().unwrap(), "check", "funk-hecke"]), EXIT_SCHEMA);
        let missing = dir.path().join("missing.json");
        assert_eq!(run_args(dir.path(), &["--config", missing.to_str().unwrap(), "mesh"]), EXIT_SCHEMA);
    }

    #[test]
    fn failing_tolerance_exits_one_and_names_the_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("strict.json");
        std::fs::write(&path, r#"{"tolerances": {"funk_hecke": 0.0}}"#).unwrap();
        assert_eq!(run_args(dir.path(), &["--config", path.to_str().unwrap(), "check", "funk-hecke"]), EXIT_FAIL);
        let report: serde_json::Value = fraclayer::io::read_json(&dir.path().join("check-report.json")).unwrap();
        assert_eq!(report["passed"], false);
        assert!(report["failing"][0].as_str().unwrap().starts_with("funk-hecke: "));
    }

    #[test]
    fn outputs_are_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for dir in [a.path(), b.path()] {
            let cfg = dir.join("c.json");
            std::fs::write(&cfg, r#"{"resolution": {"nlat": 8, "nlon": 16}, "density": {"kind": "random", "lmax": 3}}"#)
                .unwrap();
            let cfg = cfg.to_str().unwrap();
            assert_eq!(run_args(dir, &["--config", cfg, "--seed", "7", "mesh"]), EXIT_PASS);
            assert_eq!(run_args(dir, &["--config", cfg, "--seed", "7", "field"]), EXIT_PASS);
            assert_eq!(run_args(dir, &["--config", cfg, "--seed", "7", "check", "besov", "funk-hecke"]), EXIT_PASS);
        }
        for file in ["mesh.csv", "mesh.json", "field.csv", "field-report.json", "check-report.json", "funk-hecke.csv"] {
            let x = std::fs::read(a.path().join(file)).unwrap();
            let y = std::fs::read(b.path().join(file)).unwrap();
            assert_eq!(x, y, "{file} differs");
        }
    }

    #[test]
    fn dumped_operator_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        let op = dir.path().join("operator.bin");
        std::fs::write(
            &cfg,
            format!(r#"{{"resolution": {{"nlat": 12, "nlon": 24}}, "operator_file": {:?}}}"#, op.to_str().unwrap()),
        )
        .unwrap();
        let cfg = cfg.to_str().unwrap();
        assert_eq!(run_args(dir.path(), &["--config", cfg, "assemble"]), EXIT_PASS);
        let config = ExperimentConfig::load(Path::new(cfg)).unwrap();
        let session = Session::new(config.clone(), dir.path(), true);
        let mesh = session.mesh(config.resolution).unwrap();
        let loaded = session.operator(&mesh, 1.5).unwrap();
        let fresh = BoundaryOperator::assemble_with(&mesh, 1.5, config.correction).unwrap();
        assert_eq!(loaded.matrix(), fresh.matrix());
        assert_eq!(run_args(dir.path(), &["--config", cfg, "solve"]), EXIT_PASS);
    }

    #[test]
    fn bundled_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let mut count = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
        assert!(count >= 12);
    }
}
