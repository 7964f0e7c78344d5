use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use trapchain::config::{ModeName, OrientationName};
use trapchain::{commands, suite, sweep, table1, CliError, Format, Report, Result, RunConfig};

#[derive(Parser)]
#[command(name = "trapchain", version, about = "Spin chains of trapped electrons: couplings, transfer and fidelity")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    mode: Option<ModeArg>,
    #[arg(long, global = true)]
    orientation: Option<OrientationArg>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: FormatArg,
    /// Skip the regime check on couplings.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trap frequencies, hierarchy and regime report.
    Freqs,
    /// Pairwise J^z and J^xy for the configured chain.
    Couplings,
    /// End-to-end transfer fidelity against time.
    Transfer,
    /// Thermal error budget and transition estimates.
    Fidelity,
    /// Recompute the built-in design table.
    Table1,
    /// Grid sweep with Pareto front.
    Sweep,
    /// Microscopic and two-spin validation suite.
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Approx,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Z,
    X,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.mode {
        let m = match m {
            ModeArg::Exact => ModeName::Exact,
            ModeArg::Approx => ModeName::Approx,
        };
        cfg.trap.anomaly_mode = Some(m);
        cfg.oracle.anomaly_mode = m;
    }
    if let Some(o) = cli.orientation {
        cfg.geometry.orientation = match o {
            OrientationArg::Z => OrientationName::Z,
            OrientationArg::X => OrientationName::X,
        };
    }
    cfg.force |= cli.force;
    Ok(cfg)
}

/// The report, plus acceptance failures that should turn into exit code 3
/// after the report is written.
fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(Report, Vec<String>)> {
    Ok(match cli.command {
        Command::Freqs => (commands::freqs(cfg)?, Vec::new()),
        Command::Couplings => (commands::couplings(cfg)?, Vec::new()),
        Command::Transfer => (commands::transfer(cfg)?, Vec::new()),
        Command::Fidelity => (commands::fidelity(cfg)?, Vec::new()),
        Command::Table1 => {
            let t = table1::compute(&cfg.constants()?)?;
            (table1::report(&t), t.failures())
        }
        Command::Sweep => {
            let rows = sweep::run(cfg)?;
            (sweep::report(cfg, &rows), Vec::new())
        }
        Command::Oracle => {
            let r = suite::run(&cfg.oracle, cfg.orientation(), &cfg.constants()?)?;
            (suite::report(&cfg.oracle, cfg.orientation(), &r), r.failures())
        }
    })
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    let (report, failures) = execute(cli, &cfg)?;
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(format, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            report.write(format, &mut w)?;
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failures.join("; ")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
