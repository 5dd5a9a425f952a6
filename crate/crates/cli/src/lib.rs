//! Batch front end: `fracshape <experiment> --config run.json --out DIR`.
//!
//! Every run writes `summary.json`, zero or more CSV files and a
//! `manifest.json` indexing them by SHA-256. Result files carry no timings,
//! so identical configs give byte-identical results whatever `--threads` is.
//! Failures write `error.json` and exit with 2 (invalid config) or 3
//! (numerical failure).

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use config::{ConfigError, Experiment};
use experiments::Clock;
use output::{Artifact, Manifest};

#[derive(Debug, Parser)]
#[command(name = "fracshape", version, about = "Fractional shape-optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dirichlet eigenpairs and the objective of a union of lattice balls.
    Eigs(RunArgs),
    /// Torsion of a ball against its closed form.
    TorsionValidate(RunArgs),
    /// Simulated annealing of `λ_k + |A|` over lattice domains.
    OptimizeShape(RunArgs),
    /// Rearrangement checks on random fields and masks.
    RearrangeCheck(RunArgs),
    /// Gradient-descent sweep of the point-charge toy energy.
    ToySweep(RunArgs),
    /// Stationarity and stability of one charge configuration.
    ToyClassify(RunArgs),
    /// Weiss curves of an extension.
    Weiss(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Master seed, overriding the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    pub fn parts(&self) -> (Experiment, &RunArgs) {
        match self {
            Command::Eigs(a) => (Experiment::Eigs, a),
            Command::TorsionValidate(a) => (Experiment::TorsionValidate, a),
            Command::OptimizeShape(a) => (Experiment::OptimizeShape, a),
            Command::RearrangeCheck(a) => (Experiment::RearrangeCheck, a),
            Command::ToySweep(a) => (Experiment::ToySweep, a),
            Command::ToyClassify(a) => (Experiment::ToyClassify, a),
            Command::Weiss(a) => (Experiment::Weiss, a),
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical(String),
    Io(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

/// Machine-readable failure, written to `error.json` and stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub experiment: &'static str,
    pub kind: &'static str,
    pub field: Option<String>,
    pub message: String,
    pub exit_code: i32,
}

impl ErrorRecord {
    fn new(experiment: Experiment, e: &RunError) -> Self {
        let (kind, field, message) = match e {
            RunError::Config(c) => ("invalid-config", Some(c.field.clone()), c.to_string()),
            RunError::Numerical(m) => ("numerical-failure", None, m.clone()),
            RunError::Io(m) => ("io", None, m.clone()),
        };
        Self { status: "error", experiment: experiment.as_str(), kind, field, message, exit_code: e.exit_code() }
    }
}

/// A successful run: where it wrote and what.
#[derive(Debug)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub manifest: Manifest,
}

/// Configs carrying a master seed.
pub trait Seeded {
    fn seed_mut(&mut self) -> &mut u64;
}

macro_rules! seeded {
    ($($t:ty),*) => {
        $(impl Seeded for $t {
            fn seed_mut(&mut self) -> &mut u64 {
                &mut self.seed
            }
        })*
    };
}

seeded!(
    config::EigsConfig,
    config::TorsionConfig,
    config::OptimizeConfig,
    config::RearrangeConfig,
    config::ToySweepConfig,
    config::ToyClassifyConfig,
    config::WeissConfig
);

struct Executed {
    config: serde_json::Value,
    seed: u64,
    artifacts: Vec<Artifact>,
    clock: Clock,
}

/// Parses, applies the seed override and runs one experiment.
fn configured<C, F>(text: &str, seed: Option<u64>, f: F) -> Result<Executed, RunError>
where
    C: DeserializeOwned + Serialize + Seeded,
    F: FnOnce(&C, &mut Clock) -> Result<Vec<Artifact>, RunError>,
{
    let mut clock = Clock::default();
    let mut cfg: C = clock.time("parse", || config::parse(text))?;
    if let Some(s) = seed {
        *cfg.seed_mut() = s;
    }
    let used = *cfg.seed_mut();
    let config = serde_json::to_value(&cfg).expect("configs serialize");
    let artifacts = f(&cfg, &mut clock)?;
    Ok(Executed { config, seed: used, artifacts, clock })
}

fn dispatch(experiment: Experiment, text: &str, seed: Option<u64>) -> Result<Executed, RunError> {
    use experiments::*;
    match experiment {
        Experiment::Eigs => configured(text, seed, eigs),
        Experiment::TorsionValidate => configured(text, seed, torsion_validate),
        Experiment::OptimizeShape => configured(text, seed, optimize_shape),
        Experiment::RearrangeCheck => configured(text, seed, rearrange_check),
        Experiment::ToySweep => configured(text, seed, toy_sweep),
        Experiment::ToyClassify => configured(text, seed, toy_classify),
        Experiment::Weiss => configured(text, seed, weiss),
    }
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<RunOutcome, RunError> {
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let wall = Instant::now();
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError::new("config", format!("{}: {e}", p.display())))?,
        None => "{}".to_string(),
    };
    let Executed { config, seed, artifacts, mut clock } = match args.threads {
        Some(0) => return Err(ConfigError::new("threads", "must be at least 1").into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| RunError::Io(e.to_string()))?
            .install(|| dispatch(experiment, &text, args.seed))?,
        None => dispatch(experiment, &text, args.seed)?,
    };
    let files = clock
        .time("write", || output::emit(&args.out, &artifacts))
        .map_err(|e| RunError::Io(format!("{}: {e}", args.out.display())))?;
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: experiment.as_str().into(),
        seed,
        threads: args.threads,
        config,
        started_unix_seconds: started,
        wall_clock_seconds: wall.elapsed().as_secs_f64(),
        timings: clock.timings,
        files,
    };
    output::write_manifest(&args.out, &manifest).map_err(|e| RunError::Io(e.to_string()))?;
    Ok(RunOutcome { out: args.out.clone(), manifest })
}

fn record_error(out: &Path, record: &ErrorRecord) {
    let mut bytes = serde_json::to_vec_pretty(record).expect("error records serialize");
    bytes.push(b'\n');
    if std::fs::create_dir_all(out).is_ok() {
        let _ = output::write_atomic(&out.join("error.json"), &bytes);
    }
    eprintln!("{}", serde_json::to_string(record).expect("error records serialize"));
}

/// Runs the command and returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let (experiment, args) = cli.command.parts();
    match execute(experiment, args) {
        Ok(outcome) => {
            println!("{}", outcome.out.join("manifest.json").display());
            0
        }
        Err(e) => {
            record_error(&args.out, &ErrorRecord::new(experiment, &e));
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(RunError::Config(ConfigError::new("s", "bad")).exit_code(), 2);
        assert_eq!(RunError::Numerical("no convergence".into()).exit_code(), 3);
        let rec = ErrorRecord::new(Experiment::Weiss, &RunError::Numerical("x".into()));
        assert_eq!((rec.kind, rec.exit_code, rec.field), ("numerical-failure", 3, None));
    }

    #[test]
    fn subcommand_names_match_config_tags() {
        for (name, e) in [("eigs", Experiment::Eigs), ("torsion-validate", Experiment::TorsionValidate), ("toy-sweep", Experiment::ToySweep)] {
            let cli = Cli::try_parse_from(["fracshape", name, "--out", "x"]).unwrap();
            assert_eq!(cli.command.parts().0, e);
            assert_eq!(serde_json::to_value(e).unwrap(), name);
        }
    }
}
