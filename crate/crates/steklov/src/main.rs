//! Command-line front end: kernel certification, reconstruction export,
//! convergence ladders, modular-inequality audits, and Luxemburg norms.
//!
//! Exit codes: 0 success, 1 verdict failure, 2 configuration error,
//! 3 numerical error.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use steklov::experiments::{
    report_csv, reconstruction_csv, run_certify, run_convergence, run_inequality_audit,
    write_report, AuditConfig, ExperimentConfig, ReportFormat,
};
use steklov::kernels::Kernel;
use steklov::operator::{default_grid, SteklovParams};
use steklov::orlicz::{luxemburg_norm, PhiFunction};
use steklov::quad::QuadratureSpec;
use steklov::signals::Signal;
use steklov::{Error, Result};

#[derive(Parser)]
#[command(name = "steklov", version, about = "Steklov sampling operators: certification, reconstruction, Orlicz convergence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify kernels as partitions of unity (time domain + Fourier).
    Certify(CertifyArgs),
    /// Reconstruct a signal on a grid and export CSV.
    Reconstruct(ReconstructArgs),
    /// Run a convergence ladder from a JSON config.
    Converge(ConfigArgs),
    /// Audit the modular continuity inequality from a JSON config.
    Audit(ConfigArgs),
    /// Luxemburg norm of a signal.
    Norm(NormArgs),
}

#[derive(Args)]
struct CertifyArgs {
    /// Kernel ids, e.g. "fejer", "jackson:n=2,alpha=1", "bspline:n=3".
    #[arg(required = true)]
    kernels: Vec<String>,
    #[arg(long, default_value_t = 1e-3)]
    tol_pou: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol_ft: f64,
    #[arg(long, default_value_t = 5)]
    k_ft: i64,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    signal: String,
    #[arg(long)]
    kernel: String,
    #[arg(long)]
    r: u32,
    #[arg(long)]
    w: f64,
    /// Output CSV path (columns: x, reconstruction, signal, abs_error).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 401)]
    points: usize,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct NormArgs {
    /// φ id, e.g. "power:p=2", "zygmund:alpha=1,beta=1", "exp:alpha=1".
    #[arg(long)]
    phi: String,
    /// Signal spec or path to a CSV file with header "x,value".
    #[arg(long)]
    signal: String,
}

fn load_signal(arg: &str) -> Result<Signal> {
    if std::path::Path::new(arg).is_file() {
        Signal::from_csv(std::path::Path::new(arg))
    } else {
        Signal::from_spec(arg)
    }
}

/// Ok(true) = success, Ok(false) = verdict failure (exit 1).
fn run(cli: Cli) -> Result<bool> {
    let spec = QuadratureSpec::default();
    match cli.command {
        Command::Certify(args) => {
            let certs = run_certify(&args.kernels, args.tol_pou, args.tol_ft, args.k_ft, &spec)?;
            println!("{}", serde_json::to_string_pretty(&certs)?);
            Ok(certs.iter().all(|c| c.partition_of_unity_ok))
        }
        Command::Reconstruct(args) => {
            let f = load_signal(&args.signal)?;
            let kernel = Kernel::from_id(&args.kernel)?;
            let params = SteklovParams::new(args.r, args.w)?;
            let b = f.support_bound.ok_or_else(|| {
                Error::Config("reconstruct needs a compactly supported signal".into())
            })?;
            let grid = default_grid(b, args.points);
            let csv = reconstruction_csv(&f, &kernel, params, &grid, &spec)?;
            let mut file = std::fs::File::create(&args.out)?;
            file.write_all(csv.as_bytes())?;
            eprintln!("wrote {} rows to {}", grid.len(), args.out.display());
            Ok(true)
        }
        Command::Converge(args) => {
            let text = std::fs::read_to_string(&args.config)?;
            let config: ExperimentConfig = serde_json::from_str(&text)?;
            let report = run_convergence(&config)?;
            let format = config.format.unwrap_or(ReportFormat::Csv);
            match &config.output {
                Some(path) => write_report(&report, format, std::path::Path::new(path))?,
                None => print!("{}", report_csv(&report)),
            }
            println!("{}", serde_json::to_string_pretty(&report.verdicts)?);
            Ok(report.verdicts.all_pass())
        }
        Command::Audit(args) => {
            let text = std::fs::read_to_string(&args.config)?;
            let configs: Vec<AuditConfig> = serde_json::from_str(&text)?;
            let report = run_inequality_audit(&configs)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.all_pass)
        }
        Command::Norm(args) => {
            let phi = PhiFunction::from_id(&args.phi)?;
            let f = load_signal(&args.signal)?;
            let norm = luxemburg_norm(&phi, |x| f.eval(x), &f.breakpoints, 1e-8, &spec)?;
            println!("{norm:.12e}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
