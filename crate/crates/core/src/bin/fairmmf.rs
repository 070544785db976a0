use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairmmf::experiment::{self, ExperimentConfig};
use fairmmf::Result;

#[derive(Parser)]
#[command(name = "fairmmf", version, about = "Provider max-min fair online re-ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy on every horizon; writes run.jsonl and summary.json.
    Run(Common),
    /// Summed oracle regret per horizon length; writes regret.csv.
    Regret(Common),
    /// Lorenz curves of provider exposure; writes lorenz.csv.
    Lorenz(Common),
    /// Per-arrival timing of selection and the dual step; writes bench.csv.
    Bench(Common),
    /// Check a config and its data, and print it with defaults filled.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Never fill lists from exhausted providers.
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config)?.with_overrides(self.out.clone(), self.seed, self.strict)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => {
            let cfg = c.load()?;
            let out = experiment::cmd_run(&cfg)?;
            eprintln!(
                "{} records over {} horizons ({} arrivals dropped) -> {}",
                out.records.len(),
                out.summary.horizons,
                out.summary.dropped_arrivals,
                cfg.out_dir.display()
            );
        }
        Command::Regret(c) => {
            let cfg = c.load()?;
            let rows = experiment::cmd_regret(&cfg)?;
            eprintln!("{} rows -> {}", rows.len(), cfg.out_dir.join("regret.csv").display());
        }
        Command::Lorenz(c) => {
            let cfg = c.load()?;
            let rows = experiment::cmd_lorenz(&cfg)?;
            eprintln!("{} rows -> {}", rows.len(), cfg.out_dir.join("lorenz.csv").display());
        }
        Command::Bench(c) => {
            let cfg = c.load()?;
            let rows = experiment::cmd_bench(&cfg)?;
            eprintln!("{} rows -> {}", rows.len(), cfg.out_dir.join("bench.csv").display());
        }
        Command::ValidateConfig(c) => {
            let cfg = c.load()?;
            print!("{}", experiment::validate_config(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
