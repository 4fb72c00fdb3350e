use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use viscoflow::scenario::{dispatch, parse_with_overrides, DispatchOptions, Subcommand};
use viscoflow::stability::SweepSpec;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Speeds,
    Stability,
    Dispersion,
    Simulate,
    BlowupCert,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Speeds => Subcommand::Speeds,
            Command::Stability => Subcommand::Stability,
            Command::Dispersion => Subcommand::Dispersion,
            Command::Simulate => Subcommand::Simulate,
            Command::BlowupCert => Subcommand::BlowupCert,
        }
    }
}

/// Relaxation hydrodynamics with bulk and shear viscosity.
///
/// Exit codes: 0 ok, 2 config error, 3 breakdown detected, 4 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "viscoflow", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (line-oriented `key = value` with `[section]` headers).
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV output and the run record.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value`, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// `kmin:kmax:n` for `dispersion`.
    #[arg(long, value_parser = SweepSpec::parse)]
    sweep: Option<SweepSpec>,
    /// Stream the diagnostic series to stdout during `simulate`.
    #[arg(long)]
    diagnostics: bool,
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("VISCOFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("VISCOFLOW_THREADS: expected a positive integer, got {v:?}"))?;
    if n == 0 {
        return Err("VISCOFLOW_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_with_overrides(&text, &cli.overrides) {
        Ok(c) => c,
        Err(errs) => {
            for e in &errs.0 {
                eprintln!("{}: {e}", cli.config.display());
            }
            return ExitCode::from(2);
        }
    };
    let options = DispatchOptions {
        out_dir: cli.out,
        sweep: cli.sweep,
        diagnostics: cli.diagnostics,
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = match dispatch(cli.command.into(), &cfg, &options, &mut lock) {
        Ok(record) => {
            let _ = lock.flush();
            if record.exit_code != 0 {
                eprintln!("{}", record.status);
            }
            record.exit_code
        }
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
