use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperbolic_nbody::EquilibriumClass;
use hyperbolic_nbody_cli::report::to_canonical;
use hyperbolic_nbody_cli::{run, CliError, Command, Output, Overrides, RunConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hnbody", version, about = "Curved n-body problem on the hyperbolic half-plane")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving the report and any CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Certificate sample count.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Equilibrium class, e.g. elliptic_cyclic or ParabolicCyclic.
    #[arg(long, global = true, value_parser = parse_class)]
    class: Option<EquilibriumClass>,
    /// Certificate body count.
    #[arg(long, global = true)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the equations of motion.
    Simulate,
    /// Solve for or evaluate a Möbius-solution condition.
    Equilibria {
        #[command(subcommand)]
        mode: Mode,
    },
    /// Sample the non-existence sign identities.
    Certify,
    /// Sample the closed-form flow of a Killing field.
    Flow,
    /// Transport a trajectory by a subgroup and measure the EOM defect.
    Invariance,
    /// Map points between the half-plane and the disk.
    Map,
    /// Weak-form kinetic residual along a trajectory.
    Vlasov,
}

#[derive(Subcommand)]
enum Mode {
    Find,
    Check,
}

fn parse_class(s: &str) -> Result<EquilibriumClass, String> {
    s.parse().map_err(|e: hyperbolic_nbody::Error| e.to_string())
}

fn write_outputs(dir: &Path, out: &Output) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let report = dir.join(out.report_name);
    std::fs::write(&report, &out.report).map_err(|e| CliError::io(&report, e))?;
    for (name, bytes) in &out.files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let cfg = match &cli.common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Equilibria { mode: Mode::Find } => Command::EquilibriaFind,
        Cmd::Equilibria { mode: Mode::Check } => Command::EquilibriaCheck,
        Cmd::Certify => Command::Certify,
        Cmd::Flow => Command::Flow,
        Cmd::Invariance => Command::Invariance,
        Cmd::Map => Command::Map,
        Cmd::Vlasov => Command::Vlasov,
    };
    let c = &cli.common;
    let over = Overrides { seed: c.seed, samples: c.samples, class: c.class, n: c.n };
    let out = run(command, &cfg, &over)?;
    if let Some(dir) = &c.out {
        write_outputs(dir, &out)?;
    }
    Ok(out.report)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let body = json!({ "error": { "code": err.code, "message": err.message } });
            eprint!("{}", to_canonical(&body).unwrap_or_else(|_| format!("{err}\n")));
            ExitCode::from(err.exit)
        }
    }
}
