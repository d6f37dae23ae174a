mod analyses;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quench_core::oracles::{alpha_p_lower, exact_one_d};
use quench_core::ProblemParams;

use config::ExperimentConfig;
use pipeline::Mode;

/// A configuration problem: bad syntax, unknown keys, violated parameter
/// invariants, missing files.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// The more serious of two exit codes: config errors, then resolution
/// errors, then non-convergence.
pub fn worse(a: i32, b: i32) -> i32 {
    let rank = |c: i32| match c {
        0 => 0,
        3 => 1,
        4 => 2,
        2 => 3,
        _ => 4,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

#[derive(Parser)]
#[command(name = "quench", version, about = "Two-phase quenching experiments for the p-Laplacian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const OVERRIDE_HELP: &str = "Config overrides as `--<section>-<key> VALUE`, e.g. `--problem-p 3` \
or `--grid-shape [129,129]`. Values are TOML literals.";

#[derive(Subcommand)]
enum Command {
    /// Solve and run the analyses listed in a config file.
    Run {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, help = OVERRIDE_HELP)]
        overrides: Vec<String>,
    },
    /// Solve only; writes the solution, energy history and summary.
    Solve(Generic),
    /// Analyse an existing field (`--input-field PATH`); with no analyses
    /// configured, runs all but the blow-up.
    Analyze(Generic),
    /// Blow-up sequence around a point (`--blowup-center`, `--blowup-r0`,
    /// `--blowup-count`), of `--input-field` or of a fresh solve.
    Blowup(Generic),
    /// Stability sweep in p (`--psweep-p-sequence [2.5,2.25,2.1]`).
    Psweep(Generic),
    /// Closed-form one-dimensional two-phase profile.
    Exact1d {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_plus: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_minus: f64,
    },
    /// Lower bound for the planar C^{1,α} exponent and the γ it admits.
    Alphap {
        #[arg(long)]
        p: f64,
    },
}

#[derive(Args)]
struct Generic {
    /// Config file; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, help = OVERRIDE_HELP)]
    overrides: Vec<String>,
}

fn records(rows: &[(&str, f64)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    let (mode, path, overrides) = match cli.command {
        Command::Run { config, overrides } => (Mode::Run, Some(config), overrides),
        Command::Solve(g) => (Mode::Solve, g.config, g.overrides),
        Command::Analyze(g) => (Mode::Analyze, g.config, g.overrides),
        Command::Blowup(g) => (Mode::Blowup, g.config, g.overrides),
        Command::Psweep(g) => (Mode::Psweep, g.config, g.overrides),
        Command::Exact1d { p, gamma, lambda_plus, lambda_minus } => {
            let pr = ProblemParams::new(p, gamma, lambda_plus, lambda_minus)
                .map_err(|e| ConfigError(e.to_string()))?;
            let ex = exact_one_d(&pr).map_err(|e| ConfigError(e.to_string()))?;
            print!(
                "{}",
                records(&[
                    ("p", p),
                    ("gamma", gamma),
                    ("lambda_plus", lambda_plus),
                    ("lambda_minus", lambda_minus),
                    ("eta", ex.eta),
                    ("c_plus", ex.c_plus),
                    ("c_minus", ex.c_minus),
                    ("identity_mismatch", ex.euler_lagrange_mismatch()),
                ])
            );
            return Ok(0);
        }
        Command::Alphap { p } => {
            let b = alpha_p_lower(p).map_err(|e| ConfigError(e.to_string()))?;
            print!(
                "{}",
                records(&[
                    ("p", p),
                    ("alpha_lower", b.alpha_lower),
                    ("gamma_bound_alpha", p * b.alpha_lower / (1.0 + b.alpha_lower)),
                    ("gamma_bound_half_p", p / 2.0),
                    ("gamma_max", b.max_admissible_gamma()),
                ])
            );
            return Ok(0);
        }
    };
    let cfg = ExperimentConfig::load(path.as_deref(), &overrides)?;
    let name = path
        .as_deref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| mode.name().to_owned());
    pipeline::execute(&cfg, mode, &name)
}

fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<quench_core::Error>() {
        Some(quench_core::Error::InsufficientResolution(_)) => 4,
        Some(quench_core::Error::NonConvergence(_)) => 3,
        Some(quench_core::Error::Io(_) | quench_core::Error::Csv(_) | quench_core::Error::Json(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_dominate() {
        assert_eq!(worse(0, 3), 3);
        assert_eq!(worse(3, 4), 4);
        assert_eq!(worse(2, 4), 2);
        assert_eq!(worse(4, 0), 4);
    }
}
