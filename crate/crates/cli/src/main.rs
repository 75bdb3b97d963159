use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dirac_lasso_core::config::{ExperimentConfig, ExperimentKind};
use dirac_lasso_core::experiment::{resolve_output_dir, run_experiment, RunReport};
use dirac_lasso_core::output::{default_output_dir, write_json};
use dirac_lasso_core::reproduce::{reproduce_all, Tolerances};

const EXIT_EXPECTATION: u8 = 2;
const EXIT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "dirac-lasso", version, about = "Eigenbundle signs and forced degeneracies for loops of symmetric operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory [default: $DIRAC_LASSO_OUT, else ./dirac-lasso-out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized model constructions (overrides the config)
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for parallel grid evaluation
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Experiment config (JSON)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues along a family, written as spectra.csv (j,t,lambda)
    Spectrum(ConfigArg),
    /// Window validity along a family plus transported frames
    Track(ConfigArg),
    /// Transported window-bundle sign around a loop
    Holonomy(ConfigArg),
    /// Gap map over a filling disc and a refined degeneracy certificate
    LassoScan(ConfigArg),
    /// Symmetry, zero modes and growth of a truncated Dirac spectrum
    Properties(ConfigArg),
    /// Run every acceptance criterion and print a pass/fail table
    ReproduceAll {
        /// Tolerance overrides (JSON); pinned defaults otherwise
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
}

fn run_one(kind: ExperimentKind, config_path: &Path, common: &Common) -> Result<RunReport> {
    let mut config = ExperimentConfig::from_path(config_path)?;
    if let Some(seed) = common.seed {
        config.override_seed(seed);
    }
    let out = resolve_output_dir(common.out.as_deref(), &config);
    let report = run_experiment(kind, &config, &out)?;
    println!("{} report: {}", kind.name(), out.join("report.json").display());
    for e in &report.expectations {
        println!(
            "  [{}] {}: expected {}, observed {}",
            if e.passed { "PASS" } else { "FAIL" },
            e.name,
            e.expected,
            e.observed
        );
    }
    Ok(report)
}

fn reproduce(config: Option<&Path>, common: &Common) -> Result<bool> {
    let tol = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<Tolerances>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Tolerances::default(),
    };
    let rows = reproduce_all(&tol);
    for row in &rows {
        println!("{}", row.line());
    }
    let passed = rows.iter().all(|r| r.passed);
    println!("{}/{} criteria pass", rows.iter().filter(|r| r.passed).count(), rows.len());
    let out = common.out.clone().unwrap_or_else(default_output_dir);
    write_json(&out.join("reproduce.json"), &serde_json::json!({"tolerances": tol, "criteria": rows}))?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    let kind = match &cli.command {
        Command::Spectrum(_) => Some(ExperimentKind::Spectrum),
        Command::Track(_) => Some(ExperimentKind::Track),
        Command::Holonomy(_) => Some(ExperimentKind::Holonomy),
        Command::LassoScan(_) => Some(ExperimentKind::LassoScan),
        Command::Properties(_) => Some(ExperimentKind::Properties),
        Command::ReproduceAll { .. } => None,
    };
    let outcome = match (&cli.command, kind) {
        (Command::ReproduceAll { config }, _) => reproduce(config.as_deref(), &cli.common),
        (
            Command::Spectrum(c) | Command::Track(c) | Command::Holonomy(c) | Command::LassoScan(c) | Command::Properties(c),
            Some(kind),
        ) => run_one(kind, &c.config, &cli.common).map(|r| r.passed),
        _ => unreachable!("every experiment subcommand has a kind"),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_EXPECTATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
