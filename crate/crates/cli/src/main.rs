//! `coindeg` command-line front end.
//!
//! Exit codes: 0 success, 2 certificate declined, 3 solver or oracle
//! failure, 4 invalid input.

mod commands;
mod file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use coindeg::setvalued::{Regularization, Selection};

use crate::commands::{Run, INVALID};
use crate::file::{Loaded, Overrides};

type CommandFn = fn(&Loaded, &Overrides) -> Result<Run, u8>;

#[derive(Parser, Debug)]
#[command(name = "coindeg", version, about = "Constrained equilibria of reaction-diffusion inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every random choice; overrides `solver.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    regularization: Option<RegArg>,
    #[arg(long, global = true, value_enum)]
    selection: Option<SelArg>,
    /// No human summary on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectral certificate for a degree jump between zero and infinity.
    Certify { path: PathBuf },
    /// Full existence pipeline; writes the report and the solution profile.
    Solve { path: PathBuf },
    /// Jump table of the Krasowski and Filippov regularizations of `f`.
    Regularize { path: PathBuf },
    /// Brute-force degree cross-check (at most 3 unknowns).
    Oracle { path: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RegArg {
    Krasowski,
    Filippov,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelArg {
    Mid,
    Lower,
    Upper,
}

fn write_out(file: &Loaded, run: &Run) -> Result<(), String> {
    let text = serde_json::to_string_pretty(&run.report).map_err(|e| e.to_string())? + "\n";
    match &file.file.output.report {
        Some(p) => std::fs::write(file.resolve(p), text).map_err(|e| format!("writing report: {e}"))?,
        None => print!("{text}"),
    }
    if let (Some(csv), Some(p)) = (&run.profile, &file.file.output.profile) {
        std::fs::write(file.resolve(p), csv).map_err(|e| format!("writing profile: {e}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ov = Overrides {
        seed: cli.seed,
        regularization: cli.regularization.map(|r| match r {
            RegArg::Krasowski => Regularization::Krasowski,
            RegArg::Filippov => Regularization::Filippov,
        }),
        selection: cli.selection.map(|s| match s {
            SelArg::Mid => Selection::Mid,
            SelArg::Lower => Selection::Lower,
            SelArg::Upper => Selection::Upper,
        }),
    };
    let (path, cmd): (&PathBuf, CommandFn) = match &cli.command {
        Command::Certify { path } => (path, commands::certify),
        Command::Solve { path } => (path, commands::solve),
        Command::Regularize { path } => (path, commands::regularize),
        Command::Oracle { path } => (path, commands::oracle),
    };
    let file = match Loaded::read(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(INVALID);
        }
    };
    if ov.regularization == Some(Regularization::Filippov) && !cli.quiet {
        eprintln!("warning: Filippov regularization may break tangency at jumps on the boundary of the cone");
    }
    let run = match cmd(&file, &ov) {
        Ok(r) => r,
        Err(code) => return ExitCode::from(code),
    };
    if !cli.quiet {
        eprint!("{}", run.summary);
    }
    if let Err(e) = write_out(&file, &run) {
        eprintln!("error: {e}");
        return ExitCode::from(commands::FAILURE);
    }
    ExitCode::from(run.code)
}
