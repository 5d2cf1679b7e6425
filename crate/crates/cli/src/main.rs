use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smoothdist_cli::config::{OutputFormat, RunConfig, Side};
use smoothdist_cli::format::write_json;
use smoothdist_cli::report::{self, Command};
use smoothdist_core::Error;

#[derive(Parser)]
#[command(
    name = "smoothdist",
    version,
    about = "Exact counts and saddle-point estimates of smooth numbers in arithmetic progressions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: CliCommand,

    /// Count smooth integers up to x (required)
    #[arg(long, global = true)]
    x: Option<f64>,
    /// Smoothness bound: only primes <= y may divide a counted integer (required)
    #[arg(long, global = true)]
    y: Option<f64>,
    /// Modulus of the progressions
    #[arg(long, global = true, default_value_t = 1)]
    q: u64,
    /// Transition width of the smooth cutoff weight
    #[arg(long, global = true, default_value_t = 0.05)]
    epsilon: f64,
    /// Whether the weight sits below or above the sharp cutoff
    #[arg(long, global = true, value_enum, default_value_t = Side::Lower)]
    side: Side,
    /// Order bound for the problem-character scan
    #[arg(long = "B", global = true, default_value_t = 10)]
    b_order: u64,
    /// Multiplier on the default flagging threshold sqrt(u) / (40 B^2)
    #[arg(long = "threshold-scale", global = true, default_value_t = 1.0)]
    threshold_scale: f64,
    /// Central-band parameter in [1, sqrt(u)]; default 1/sqrt(epsilon), clamped
    #[arg(long = "U", global = true)]
    u_central: Option<f64>,
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the report to this path (atomically) instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the randomized consistency probes
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Exact per-residue counts of smooth integers
    Psi,
    /// Saddle-point data and the smooth-count estimate
    Saddle,
    /// Character sums normalized by the coprime total
    Spectrum,
    /// Full equidistribution report: counts, spectrum, saddle, problem set
    Equidist,
    /// Problem characters, their joint kernel, and per-coset count spreads
    Subgroup,
    /// Certified truncated contour for the principal character
    Contour,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Domain(_) => 2,
        Error::Capacity(_) => 3,
        Error::Numeric(_) | Error::Internal(_) => 4,
    }
}

fn atomic_write(path: &Path, data: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(data.as_bytes())?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), (u8, String)> {
    let x = cli.x.ok_or((2u8, "--x is required".to_string()))?;
    let y = cli.y.ok_or((2u8, "--y is required".to_string()))?;
    let cfg = RunConfig {
        x,
        y,
        q: cli.q,
        epsilon: cli.epsilon,
        side: cli.side,
        b_order: cli.b_order,
        threshold_scale: cli.threshold_scale,
        u_central: cli.u_central,
        format: cli.format,
        seed: cli.seed,
    };
    let cmd = match cli.cmd {
        CliCommand::Psi => Command::Psi,
        CliCommand::Saddle => Command::Saddle,
        CliCommand::Spectrum => Command::Spectrum,
        CliCommand::Equidist => Command::Equidist,
        CliCommand::Subgroup => Command::Subgroup,
        CliCommand::Contour => Command::Contour,
    };

    let report = report::run(cmd, &cfg).map_err(|e| (exit_code_for(&e), e.to_string()))?;
    let payload = match cfg.format {
        OutputFormat::Json => write_json(&report.json),
        OutputFormat::Csv => report.csv.expect("csv payload exists when format is csv"),
    };

    match &cli.out {
        None => {
            print!("{payload}");
            Ok(())
        }
        Some(path) => atomic_write(path, &payload)
            .map_err(|e| (2u8, format!("cannot write {}: {e}", path.display()))),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
