use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use conelab::report::Report;
use conelab::suites::{self, LabConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conelab", version, about = "Numerical lab for the L2 to L6 extension inequality on the cone")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.json and CSV tables.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the search and fixture seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Skip the sampling-resolution refusal.
    #[arg(long, global = true)]
    force_nyquist: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    VerifyConstant,
    VerifySymmetries,
    CapExtract,
    Decompose,
    SearchExtremizer,
    BilinearDecay,
    BoostDeficiency,
    BForms,
}

fn load(cli: &Cli) -> anyhow::Result<LabConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            LabConfig::from_toml_str(&text).with_context(|| format!("invalid config {}", path.display()))?
        }
        None => LabConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.search.search.seed = seed;
        cfg.caps.seed = seed;
    }
    cfg.force_nyquist |= cli.force_nyquist;
    cfg.validate().context("invalid config")?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    let cfg = load(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let report = match cli.command {
        Command::VerifyConstant => suites::verify_constant(&cfg),
        Command::VerifySymmetries => suites::verify_symmetries(&cfg),
        Command::CapExtract => suites::cap_extract(&cfg),
        Command::Decompose => suites::decompose_suite(&cfg),
        Command::SearchExtremizer => suites::search_extremizer(&cfg),
        Command::BilinearDecay => suites::bilinear_decay(&cfg),
        Command::BoostDeficiency => suites::boost_deficiency(&cfg),
        Command::BForms => suites::b_forms(&cfg),
    }?;
    report.write(&cli.out).with_context(|| format!("writing reports to {}", cli.out.display()))?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            for a in &report.assertions {
                println!(
                    "{} {}: {:e} (tol {:e}) {}",
                    if a.passed { "PASS" } else { "FAIL" },
                    a.name,
                    a.value,
                    a.tolerance,
                    a.detail
                );
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: {} assertion(s) failed", report.suite, report.failures().len());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
