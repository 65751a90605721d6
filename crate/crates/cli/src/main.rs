mod commands;
mod config;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CmdError, Command, Run};
use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "georabi", version, about = "Quantum geometric tensors from Rabi oscillations")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Measurement seed; overrides `protocol.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Run drives outside the weak-drive regime.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tensors, metric, curvature and coupling spectra at one point.
    Qgt,
    /// Rabi spectroscopy of the configured drive.
    Rabi,
    /// Plan and run eigenstate preparation.
    Prep,
    /// Mixing-transform tomography between a single and a two-tone drive.
    Tomo,
    /// Metric and curvature eigenvalues from Rabi data.
    Extract,
    /// Sweep-rate fit of a coupling eigenvalue.
    Lz,
    /// Rotating-wave validity along a parameter path.
    CheckRwa,
    /// Fast invariant checks.
    Selftest {
        /// Force the named check to fail.
        #[arg(long, hide = true)]
        inject_failure: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn run(cli: Cli) -> Result<(), CmdError> {
    let command = match cli.command {
        Cmd::Selftest { inject_failure } => return selftest(inject_failure.as_deref()),
        Cmd::Qgt => Command::Qgt,
        Cmd::Rabi => Command::Rabi,
        Cmd::Prep => Command::Prep,
        Cmd::Tomo => Command::Tomo,
        Cmd::Extract => Command::Extract,
        Cmd::Lz => Command::Lz,
        Cmd::CheckRwa => Command::CheckRwa,
    };
    let path = cli.config.ok_or_else(|| CmdError::Config(format!("`{}` needs --config <FILE>", command.name())))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.protocol.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output.directory = out;
    }
    let dir = cfg.output.directory.clone();
    let run = Run::new(cfg, cli.force, cli.jobs)?;
    for path in run.execute(command, dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn selftest(inject: Option<&str>) -> Result<(), CmdError> {
    if let Some(name) = inject {
        if !selftest::names().contains(&name) {
            return Err(CmdError::Config(format!("unknown check `{name}`")));
        }
    }
    let report = selftest::run(inject);
    for c in &report.checks {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {:<36} {:>12.3e}  tol {:.1e}  ({:.3}s)", c.name, c.value, c.tolerance, c.seconds);
    }
    println!("report hash {}", report.hash);
    if report.passed {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        Err(CmdError::Invariant(format!("{failed} selftest check(s) failed")))
    }
}
