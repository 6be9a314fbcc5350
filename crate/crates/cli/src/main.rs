use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use viscotherm_cli::commands::{self, RunOptions};
use viscotherm_cli::{exit_code, InputError, Status};

const DEFAULT_OUT: &str = "viscotherm_out";

#[derive(Parser)]
#[command(name = "viscotherm", version, about = "Audited simulations of a heat-conducting viscoelastic fluid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model assumptions of a configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory [env: VISCOTHERM_OUT]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one simulation and audit it.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-check a finished run directory from its stored files.
    Audit {
        /// Run directory [env: VISCOTHERM_OUT]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// eps, k, mu or modes
        #[arg(long)]
        axis: String,
        /// Comma-separated, strictly increasing
        #[arg(long)]
        values: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Abort on the first failed invariant
    #[arg(long)]
    strict: bool,
    /// Snapshot times, e.g. 0,0.5,1
    #[arg(long)]
    snapshots: Option<String>,
    /// Snapshot grid, e.g. 128x128
    #[arg(long)]
    plot_grid: Option<String>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions> {
        Ok(RunOptions {
            strict: self.strict,
            snapshots: self.snapshots.as_deref().map(commands::parse_list).transpose()?,
            plot_grid: self.plot_grid.as_deref().map(commands::parse_plot_grid).transpose()?,
            threads: self.threads,
        })
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("VISCOTHERM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn execute(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Validate { config, out } => {
            let (status, report) = commands::cmd_validate(&config, &out_dir(out))?;
            for row in report.failures() {
                eprintln!("FAIL {row}");
            }
            println!(
                "validate: {}",
                if status == Status::Pass { "all assumptions hold" } else { "assumption checks failed" }
            );
            Ok(status)
        }
        Command::Run { config, out, run } => {
            let dir = out_dir(out);
            let (status, report) = commands::cmd_run(&config, &dir, &run.options()?)?;
            for v in &report.verdicts {
                println!("{v}");
            }
            println!("run written to {}", dir.display());
            Ok(status)
        }
        Command::Audit { out } => {
            let dir = out.or_else(|| std::env::var_os("VISCOTHERM_OUT").map(PathBuf::from));
            let dir = dir.ok_or_else(|| InputError("audit needs --out <run dir>".into()))?;
            let (status, report) = commands::cmd_audit(&dir)?;
            for v in &report.verdicts {
                println!("{v}");
            }
            Ok(status)
        }
        Command::Sweep { config, out, axis, values, run } => {
            let dir = out_dir(out);
            let values = commands::parse_list(&values)?;
            let (status, rows) = commands::cmd_sweep(&config, &axis, &values, &dir, &run.options()?)?;
            for r in &rows {
                println!("{} = {:?}: {}", axis, r.value, r.status);
            }
            println!("summary written to {}", dir.join(commands::SWEEP_SUMMARY).display());
            Ok(status)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
