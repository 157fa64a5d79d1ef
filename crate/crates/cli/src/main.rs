//! `oligomer`: spectra, sweeps, scattering spectra, radiation patterns, g²
//! maps, state counts and lifetime optimization of ring oligomers.
//!
//! Exit codes: 0 success, 2 usage, 3 numerical failure, 4 partial sweep
//! failure.

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;
mod settings;

use settings::Settings;

#[derive(Debug, Parser)]
#[command(name = "oligomer", version, about = "Collective states of planar ring oligomers of dipole emitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single- or double-excitation eigenstates of one geometry
    Spectrum(Settings),
    /// Grid sweep over the spacing a (and b/a)
    Sweep(Settings),
    /// Normalized scattering cross section under a Bessel beam
    Scs(Settings),
    /// Far-field radiation pattern of a single-excitation state
    Pattern(Settings),
    /// Two-photon correlation map of a doubly excited state
    G2(Settings),
    /// Lifetime optimization of the B1 (−,−) state over (a, b/a)
    Optimize(Settings),
    /// Doubly excited states per momentum sector
    Count(Settings),
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    /// Some grid points failed and are flagged in the output.
    Partial { failed: usize, total: usize },
    Io(std::io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) | Failure::Io(_) => 3,
            Failure::Partial { .. } => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Partial { failed, total } => write!(f, "{failed} of {total} grid points failed"),
            Failure::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<oligomer::Error> for Failure {
    fn from(e: oligomer::Error) -> Self {
        match e {
            oligomer::Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Spectrum(s) => commands::spectrum(s.resolve()?),
        Command::Sweep(s) => commands::sweep(s.resolve()?),
        Command::Scs(s) => commands::scs(s.resolve()?),
        Command::Pattern(s) => commands::pattern(s.resolve()?),
        Command::G2(s) => commands::g2(s.resolve()?),
        Command::Optimize(s) => commands::optimize(s.resolve()?),
        Command::Count(s) => commands::count(s.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream reader closed early (`| head`)
        Err(Failure::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oligomer: {e}");
            ExitCode::from(e.code())
        }
    }
}
