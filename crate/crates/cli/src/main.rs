use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polystate_core::scenario::{load_scenario, Limits};
use polystate_core::{Error, Result};

mod args;
mod commands;
mod render;

#[derive(Parser, Debug)]
#[command(name = "polystate", version)]
#[command(about = "Evaluate polystates of quantum systems on worldlines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print sectors at given proper times, optionally with an expectation.
    Eval {
        scenario: PathBuf,
        /// Proper time per subsystem, e.g. A=1.0,B=0.5
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// Subsystems of one sector, e.g. AB or A,B. All sectors if omitted.
        #[arg(long)]
        sector: Option<String>,
        /// sigma_x, sigma_y, sigma_z, charge, identity, or a JSON matrix file
        #[arg(long)]
        observable: Option<String>,
    },
    /// CSV of states and charges along the leaves of a foliation.
    Sweep {
        scenario: PathBuf,
        /// Named foliation or frame velocity components
        #[arg(long, allow_hyphen_values = true)]
        foliation: String,
        /// START:END:STEPS over the leaf parameter
        #[arg(long, allow_hyphen_values = true)]
        t_range: String,
        /// polystate, foliation, future or past
        #[arg(long, default_value = "polystate")]
        source: String,
    },
    /// Compare single-state update rules against the polystate.
    Audit {
        scenario: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        /// Expected <σz_A>,<σz_B>,<σz_A σz_B>; exact conditional statistics if omitted
        #[arg(long, allow_hyphen_values = true)]
        targets: Option<String>,
        /// Foliation for the fixed-foliation rule; rest frame if omitted
        #[arg(long, allow_hyphen_values = true)]
        foliation: Option<String>,
        /// Foliation for the charge ledger; the leaf through the evaluation
        /// events if omitted
        #[arg(long, allow_hyphen_values = true)]
        ledger_foliation: Option<String>,
        /// START:END:STEPS leaf grid for the charge ledger
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Sample runs and compare empirical sectors with exact ones.
    Ensemble {
        scenario: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    /// Geometry of a 1+1 dimensional scenario for plotting.
    Diagram {
        scenario: PathBuf,
        /// FOLIATION:ITEMS, items being leaf parameters or subsystem names
        /// (leaf through that subsystem's first intervention). Repeatable.
        #[arg(long = "leaf", allow_hyphen_values = true)]
        leaves: Vec<String>,
        /// MIN:MAX proper-time window for worldline polylines
        #[arg(long, allow_hyphen_values = true)]
        tau_range: Option<String>,
    },
    /// Check a scenario file and list violated invariants.
    Validate { scenario: PathBuf },
}

fn limits() -> Result<Limits> {
    let mut limits = Limits::default();
    if let Ok(v) = std::env::var("POLYSTATE_MAX_DIM") {
        limits.max_dim = v.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("POLYSTATE_MAX_DIM={v:?} is not a positive integer"))
        })?;
    }
    Ok(limits)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let limits = limits()?;
    let load = |path: &PathBuf| load_scenario(path, &limits);
    match cli.command {
        Command::Eval {
            scenario,
            tau,
            sector,
            observable,
        } => commands::eval(
            &load(&scenario)?,
            &tau,
            sector.as_deref(),
            observable.as_deref(),
        ),
        Command::Sweep {
            scenario,
            foliation,
            t_range,
            source,
        } => commands::sweep(&load(&scenario)?, &foliation, &t_range, &source),
        Command::Audit {
            scenario,
            tau,
            targets,
            foliation,
            ledger_foliation,
            grid,
        } => commands::audit(
            &load(&scenario)?,
            &tau,
            targets.as_deref(),
            foliation.as_deref(),
            ledger_foliation.as_deref(),
            grid.as_deref(),
        ),
        Command::Ensemble {
            scenario,
            n,
            seed,
            tau,
        } => commands::ensemble(&load(&scenario)?, n, seed, &tau),
        Command::Diagram {
            scenario,
            leaves,
            tau_range,
        } => commands::diagram(&load(&scenario)?, &leaves, tau_range.as_deref()),
        Command::Validate { scenario } => commands::validate(&scenario, &limits),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ImpossibleOutcome(_) | Error::EmptyEnsemble(_) => 2,
        _ => 1,
    }
}

fn report(e: &Error) {
    match e {
        Error::Validation(diags) => {
            eprintln!("error: scenario failed validation");
            for d in diags {
                eprintln!("  {d}");
            }
        }
        other => eprintln!("error: {other}"),
    }
}

fn main() -> ExitCode {
    // clap's own usage failures would exit 2, which is reserved for
    // impossible outcomes
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
