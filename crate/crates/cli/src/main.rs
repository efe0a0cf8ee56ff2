use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use starstar::verify::{run_and_write, Command, Format, RunConfig};
use starstar::Complex64;

/// Evaluate elliptic gamma functions and run seeded verification suites for
/// the star-star relation and the identities behind it.
#[derive(Parser, Debug)]
#[command(name = "starstar", version)]
struct Args {
    /// eval-gamma, eval-phi, verify-reflection, verify-rains,
    /// verify-star-star, verify-chain or partition-demo
    #[arg(long)]
    command: Command,
    /// Elliptic nome p in (0, 1).
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    /// Elliptic nome q in (0, 1).
    #[arg(long, default_value_t = 0.2)]
    q: f64,
    /// Spin rank.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    draws: usize,
    /// Quadrature points per dimension.
    #[arg(long, default_value_t = 128)]
    grid: usize,
    /// Largest grid the doubling loop may reach; defaults to --grid (no refinement).
    #[arg(long)]
    max_grid: Option<usize>,
    /// Pass threshold for the maximum residual.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Write the full report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Evaluation point `re` or `re,im` for eval-gamma / eval-phi.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z: Option<Complex64>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(parse(re)?, parse(im)?)),
        None => Ok(Complex64::new(parse(s)?, 0.0)),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = RunConfig {
        command: args.command,
        nome_p: args.p,
        nome_q: args.q,
        n: args.n,
        seed: args.seed,
        draws: args.draws,
        grid_n: args.grid,
        max_grid_n: args.max_grid.unwrap_or(args.grid),
        rel_tol: args.tol,
        output_path: args.out,
        format: args.format,
        point: args.z,
    };
    match run_and_write(&config) {
        Ok(report) => {
            println!("{}", report.summary_line());
            for draw in report.draws.iter().filter(|d| d.error.is_some()) {
                eprintln!("draw {}: {}", draw.index, draw.error.as_deref().unwrap_or(""));
            }
            if report.summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
