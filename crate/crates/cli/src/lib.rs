//! Declarative experiment runner for the `hcpinn` toolkit.
//!
//! Each experiment is one TOML file with a `kind`, a sweep and optional
//! `[[checks]]`. Running it writes `results.csv` (one row per sweep point,
//! with the config echoed as `#` comment lines), `summary.json` and any side
//! outputs under `<out>/<id>/`.

pub mod analysis;
pub mod config;
pub mod experiments;
pub mod report;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, Kind};
pub use experiments::{run_experiment, Outcome, Summary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<hcpinn::Error> for CliError {
    fn from(e: hcpinn::Error) -> Self {
        match e {
            hcpinn::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hcpinn", version, about = "Tangent-kernel experiments for hard-constraint PINNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Replace the sweep seeds with this single seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Experiment config; its `[correlate]` section and `<out>/<id>/results.csv` are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Result table to read instead of the config's.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    #[arg(long)]
    pub stratify: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Accepted for symmetry with the other verbs; the report covers the whole directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel assembly with kernel CSVs persisted.
    Ntk(RunArgs),
    /// Trial and residual kernel spectra over boundary-function sweeps.
    Spectrum(RunArgs),
    /// Frozen-kernel residual dynamics.
    Dynamics(RunArgs),
    /// Training studies and optimizer comparisons.
    Train(RunArgs),
    /// Network-kernel invariance over seeds, widths, depths or activations.
    Invariance(RunArgs),
    /// Spearman correlations between result columns.
    Correlate(CorrelateArgs),
    /// Consolidated pass/fail summary over an output directory.
    Report(ReportArgs),
}

fn allowed(command: &Command) -> &'static [Kind] {
    use Kind::*;
    match command {
        Command::Ntk(_) => &[
            KnInvarianceSeed,
            KnInvarianceWidth,
            KnInvarianceDepth,
            KnInvarianceActivation,
            KtSpectrum,
            KrSpectrum,
            KrCorrelation,
        ],
        Command::Spectrum(_) => &[KtSpectrum, KrSpectrum, KrCorrelation],
        Command::Dynamics(_) => &[DynamicsSim],
        Command::Train(_) => &[TrainStudy, OptimizerCompare],
        Command::Invariance(_) => &[KnInvarianceSeed, KnInvarianceWidth, KnInvarianceDepth, KnInvarianceActivation],
        Command::Correlate(_) | Command::Report(_) => &[],
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let cfg = ExperimentConfig::load(path)?;
    Ok(match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Executes one command and returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32, CliError> {
    let kinds = allowed(&cli.command);
    let persist = matches!(cli.command, Command::Ntk(_));
    match cli.command {
        Command::Ntk(a) | Command::Spectrum(a) | Command::Dynamics(a) | Command::Train(a) | Command::Invariance(a) => {
            let mut cfg = load(&a.config, a.seed)?;
            if !kinds.contains(&cfg.kind) {
                return Err(CliError::Config(format!("kind {} cannot run under this verb", cfg.kind.name())));
            }
            if persist {
                cfg.persist_kernels = true;
            }
            let o = run_experiment(&cfg, &a.out)?;
            for c in &o.summary.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{}: {} ok, {} failed -> {}", o.summary.id, o.summary.rows_ok, o.summary.rows_failed, o.dir.display());
            Ok(if o.summary.rows_failed > 0 { 2 } else { 0 })
        }
        Command::Correlate(a) => {
            let (table, mut features, mut targets, mut stratify, out) = match &a.config {
                Some(p) => {
                    let cfg = load(p, a.seed)?;
                    let dir = a.out.join(&cfg.id);
                    let c = cfg.correlate.clone().unwrap_or(config::CorrelateSpec {
                        features: vec![],
                        targets: vec![],
                        stratify: None,
                    });
                    (dir.join("results.csv"), c.features, c.targets, c.stratify, dir.join("correlations.json"))
                }
                None => {
                    let t = a
                        .table
                        .clone()
                        .ok_or_else(|| CliError::Config("correlate needs --config or --table".into()))?;
                    (t, vec![], vec![], None, a.out.join("correlations.json"))
                }
            };
            let table = a.table.clone().unwrap_or(table);
            if !a.features.is_empty() {
                features = a.features.clone();
            }
            if !a.targets.is_empty() {
                targets = a.targets.clone();
            }
            if a.stratify.is_some() {
                stratify = a.stratify.clone();
            }
            if features.is_empty() || targets.is_empty() {
                return Err(CliError::Config("correlate needs feature and target columns".into()));
            }
            let rows = table::read_csv(&table)?;
            let corr = analysis::correlate(&rows, &features, &targets, stratify.as_deref());
            for c in &corr {
                let rho = c.rho.map(table::fmt_f64).unwrap_or_else(|| "undefined".into());
                println!("{} {} {} n={} rho={rho}", c.stratum, c.feature, c.target, c.n);
            }
            write_json(&out, &corr)?;
            table::write_csv(
                &out.with_extension("csv"),
                &format!("table = {:?}", table.display().to_string()),
                &analysis::correlation_rows(&corr),
            )?;
            Ok(0)
        }
        Command::Report(a) => {
            let r = report::report(&a.out)?;
            write_json(&a.out.join("report.json"), &r)?;
            for e in &r.experiments {
                for c in &e.checks {
                    println!("{} {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, e.id, c.name, c.detail);
                }
            }
            println!(
                "{} experiment(s), {} check(s) passed, {} failed",
                r.experiments.len(),
                r.checks_passed,
                r.checks_failed
            );
            Ok(0)
        }
    }
}

/// Log level from `HCPINN_LOG` (`error`, `warn`, `info`, `debug`, `trace`), default `warn`.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("HCPINN_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
