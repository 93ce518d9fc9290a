use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use vesselsim::report::{run_command, write_csv, Command};
use vesselsim::{parse_scenario, Error};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Subcommand {
    /// Four coincidence estimates and the Bell combination.
    VesselChsh,
    /// Factorization search and context witnesses over sampled diameters.
    LocalityCheck,
    /// Born sampling of the superposition state and its Schmidt rank.
    SampleState,
    /// Spin singlet reference at the scenario's settings.
    QuantumChsh,
    /// One time-stepped siphon drainage.
    Flow,
}

impl From<Subcommand> for Command {
    fn from(s: Subcommand) -> Self {
        match s {
            Subcommand::VesselChsh => Command::VesselChsh,
            Subcommand::LocalityCheck => Command::LocalityCheck,
            Subcommand::SampleState => Command::SampleState,
            Subcommand::QuantumChsh => Command::QuantumChsh,
            Subcommand::Flow => Command::Flow,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "vesselsim", version, about = "Interconnected-vessels Bell experiment simulator")]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (0 = one per core). Does not affect results.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

fn render(cli: &Cli) -> Result<Vec<u8>, Error> {
    let scenario = parse_scenario(&cli.scenario)?;
    let command = Command::from(cli.subcommand);
    match cli.format {
        Format::Json => Ok(run_command(command, &scenario, cli.workers)?.to_json().into_bytes()),
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(command, &scenario, &mut buf)?;
            Ok(buf)
        }
    }
}

fn emit(cli: &Cli, bytes: &[u8]) -> io::Result<()> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(bytes)?;
            w.flush()
        }
        None => io::stdout().lock().write_all(bytes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // render fully before writing so failures leave no partial report
    let bytes = match render(&cli) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("vesselsim: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = emit(&cli, &bytes) {
        eprintln!("vesselsim: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
