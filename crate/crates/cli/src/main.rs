//! `fracevo`: solve and check time-fractional evolution problems from a TOML config.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Grading, RunConfig};
use error::CliError;
use output::{write_artifacts, Artifacts};

/// Environment variable that overrides `output.dir`.
const OUT_DIR_ENV: &str = "FRACEVO_OUT_DIR";

const EXIT_CODES: &str = "Exit codes: 0 ok, 2 config, 3 precondition failed, 4 non-contraction, \
5 blowup, 6 accuracy ceiling. Every run writes report.json (with the resolved config), \
summary.txt and the CSV files listed per subcommand into output.dir \
(or $FRACEVO_OUT_DIR, or --out).";

#[derive(Parser, Debug)]
#[command(name = "fracevo", version, about = "Time-fractional evolution solvers and checks", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory; overrides output.dir and $FRACEVO_OUT_DIR.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate Φ_α(z), E_α(-z) and E_α,α(-z).
    ///
    /// specfun.csv: alpha, z, wright_phi, ml_alpha_1, ml_alpha_alpha
    SpecfunTable(Common),
    /// Linear solve u = S(t,0)u0 through the solution-operator table.
    ///
    /// solution.csv: k, t, l2, closed_form_gap (gap to E_α(L t^α)u0 for
    /// time-independent generators, nan otherwise)
    SolveLinear(Common),
    /// Picard iteration for the semilinear problem, continued over
    /// continuation.windows windows.
    ///
    /// trajectory.csv: k, t, l2, l_2p, weighted;
    /// picard.csv: iteration, distance, ratio;
    /// windows.csv: window, start, end, iterations, weighted_sup
    SolveSemilinear(Common),
    /// L1 time stepping of the same problem (independent of the representation).
    ///
    /// oracle.csv: k, t, l2, linf
    OracleSolve(Common),
    /// Representation versus L1 oracle on the same grid.
    ///
    /// compare.csv: k, t, representation_l2, oracle_l2, gap_l2
    Compare(Common),
    /// Fit the small-time decay of S and P against -αλ_A(1/p - 1/q).
    ///
    /// slopes.csv: operator, p, q, expected_slope, fitted_slope, rel_error,
    /// r_squared, skipped; samples.csv: operator, p, q, t, norm.
    /// The time horizon is chosen from ultra.tau_lo/tau_hi; grid.T is ignored.
    CheckUltra(Common),
    /// Sample the sectorial resolvent bound and the Hölder continuity in time.
    ///
    /// at_samples.csv: kind, t, s, lambda, value
    CheckAt(Common),
    /// Evaluate the small-data condition and, if it holds, continue the solution.
    ///
    /// Same CSV files as solve-semilinear.
    CheckGlobal(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common, Grading, fn(&RunConfig) -> Artifacts) {
        match self {
            Command::SpecfunTable(c) => ("specfun-table", c, Grading::Solver, commands::specfun_table),
            Command::SolveLinear(c) => ("solve-linear", c, Grading::Solver, commands::solve_linear_cmd),
            Command::SolveSemilinear(c) => ("solve-semilinear", c, Grading::Solver, commands::solve_semilinear_cmd),
            Command::OracleSolve(c) => ("oracle-solve", c, Grading::Oracle, commands::oracle_solve),
            Command::Compare(c) => ("compare", c, Grading::Oracle, commands::compare),
            Command::CheckUltra(c) => ("check-ultra", c, Grading::Solver, commands::check_ultra),
            Command::CheckAt(c) => ("check-at", c, Grading::Solver, commands::check_at),
            Command::CheckGlobal(c) => ("check-global", c, Grading::Solver, commands::check_global),
        }
    }
}

fn load(common: &Common, grading: Grading) -> Result<RunConfig, CliError> {
    let path = common.config.display().to_string();
    let text = std::fs::read_to_string(&common.config).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{path}: {msg}")),
        other => other,
    })?;
    if let Some(dir) = common.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)) {
        cfg.output.dir = dir;
    }
    cfg.resolve(grading)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, grading, pipeline) = cli.command.parts();
    let cfg = match load(common, grading) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let art = pipeline(&cfg);
    for line in &art.summary {
        println!("{line}");
    }
    match write_artifacts(&cfg.output.dir, name, &cfg, &art) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    }
    if let Some(msg) = &art.message {
        eprintln!("{}: {msg}", art.status.label());
    }
    ExitCode::from(art.status.exit_code())
}
