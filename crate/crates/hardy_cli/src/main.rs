//! `hardy`: evaluate Hardy-perturbed subordinated Bessel kernels, tabulate
//! couplings, run verification checks and probe blow-up.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 domain or
//! configuration error, 3 numerical non-convergence.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hardy_kernel::error::{HardyError, Result};

use config::{parse_config, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "hardy", version, about = "Subordinated Bessel heat kernels with Hardy potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key=value file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    zeta: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Ground-state exponent of the coupling.
    #[arg(long, global = true, conflicts_with = "kappa")]
    eta: Option<String>,
    /// Coupling constant; `<x>kc` means x times the critical value.
    #[arg(long, global = true, allow_hyphen_values = true)]
    kappa: Option<String>,
    /// Times (comma-separated).
    #[arg(long, global = true)]
    t: Option<String>,
    /// First spatial arguments (comma-separated).
    #[arg(long, global = true)]
    r: Option<String>,
    /// Second spatial arguments (comma-separated).
    #[arg(long, global = true)]
    s: Option<String>,
    /// `default` (t ∈ {1/4, 1, 4}, r, s at nine log-spaced points in
    /// [0.05, 20]) or a point count n for an n×n spatial grid.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long = "rel-tol", global = true)]
    rel_tol: Option<String>,
    /// Write the CSV output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Add the α = 2 closed form as an extra column.
    #[arg(long, global = true)]
    oracle: bool,
    /// Comma-separated checks for `verify`, or `all`.
    #[arg(long, global = true)]
    check: Option<String>,
    /// Exponent for the moment identities.
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Number of series terms for the blow-up probe.
    #[arg(long = "n-max", global = true)]
    n_max: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Kernel values, comparator and ratio at points or on a grid.
    Eval,
    /// The coupling map along its branch and the critical coupling.
    Couplings,
    /// Run verification checks; exits 1 if any fails.
    Verify,
    /// Perturbation series at an arbitrary coupling.
    Blowup,
    /// The exactly solvable one-point example.
    Toy,
}

impl Cli {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("zeta", &self.zeta),
            ("alpha", &self.alpha),
            ("eta", &self.eta),
            ("kappa", &self.kappa),
            ("t", &self.t),
            ("r", &self.r),
            ("s", &self.s),
            ("grid", &self.grid),
            ("rel-tol", &self.rel_tol),
            ("out", &self.out),
            ("check", &self.check),
            ("beta", &self.beta),
            ("n-max", &self.n_max),
        ];
        let mut map: BTreeMap<String, String> = pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect();
        if self.oracle {
            map.insert("oracle".into(), "true".into());
        }
        map
    }
}

fn run(cli: &Cli) -> Result<commands::Output> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| HardyError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let cfg = RunConfig::resolve(&cli.flags(), &file)?;
    let output = match cli.command {
        Command::Eval => commands::eval(&cfg),
        Command::Couplings => commands::couplings(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Blowup => commands::blowup(&cfg),
        Command::Toy => commands::toy(&cfg),
    }?;
    if let (Some(path), Some(csv)) = (&cfg.out, &output.csv) {
        std::fs::write(path, csv).map_err(|e| HardyError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            print!("{}", output.stdout);
            ExitCode::from(output.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}
