use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use steklov::cli::{self, exit, Command, Format};

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  other numerical failure
  2  invalid or unreadable config
  3  spectral validity: eigenvalues with imaginary part above 1e-8
  4  oracle did not converge (epsilon too large for the direct solve)";

/// Steklov eigenvalues and Dirichlet-to-Neumann operators of perturbed disks and balls.
#[derive(Parser)]
#[command(name = "steklov", version, after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Lowest eigenvalues at a fixed eps (branch, sigma, im_residual).
    Spectrum(Common),
    /// Eigenvalue branches over an eps grid with polynomial fits.
    Curves(Common),
    /// First- and second-order coefficients per unperturbed eigenvalue.
    Coeffs(Common),
    /// Series against the direct solver over an eps sweep (eps, err, slope).
    Oracle(Common),
    /// Norms of the interior and boundary series terms with growth rates.
    Radius(Common),
    /// Volume-constrained ascent on an eigenvalue group.
    Optimize(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Output format; CSV for tables, JSON for coeffs and optimize by default.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Spectrum(a) => (Command::Spectrum, a),
        Sub::Curves(a) => (Command::Curves, a),
        Sub::Coeffs(a) => (Command::Coeffs, a),
        Sub::Oracle(a) => (Command::Oracle, a),
        Sub::Radius(a) => (Command::Radius, a),
        Sub::Optimize(a) => (Command::Optimize, a),
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("steklov: cannot configure {n} threads: {e}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    }
    let format = args.format.map(|f| match f {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    });
    match cli::run(command, &args.config, &args.out, format) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("steklov {}: {e}", command.name());
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
