use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ringbif::{ProblemKind, ProblemParams};

mod commands;
mod output;

#[derive(Parser)]
#[command(name = "ringbif", version, about = "Bifurcation analysis of the vortex/filament ring with a central element")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Vortex,
    Filament,
}

#[derive(Args, Clone)]
struct Problem {
    /// Number of ring elements.
    #[arg(long)]
    n: usize,
    /// Circulation of the central element.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Traveling-wave velocity (filament only).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "vortex")]
    kind: Kind,
    /// Write machine-readable output here.
    #[arg(long)]
    json: Option<PathBuf>,
}

impl Problem {
    fn params(&self) -> Result<ProblemParams, Failure> {
        let kind = match self.kind {
            Kind::Vortex => ProblemKind::Vortex,
            Kind::Filament => ProblemKind::Filament,
        };
        Ok(ProblemParams::new(self.n, self.mu, self.gamma, kind)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ring equilibrium: frequency, gradient norm and Hessian kernel.
    Equilibrium(Problem),
    /// Analytic and numeric Hessian blocks B_k side by side.
    Blocks(Problem),
    /// Eigenvalues and Morse index of m_k(nu) on a frequency grid.
    Spectrum {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        nu_max: Option<f64>,
        #[arg(long, default_value_t = 400)]
        grid: usize,
        /// CSV of the grid values; a gnuplot script is written next to it.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Bifurcation frequencies with their index jumps.
    Bifurcations {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        k: Option<usize>,
        /// Scan up to this frequency instead of using closed forms.
        #[arg(long)]
        nu_max: Option<f64>,
        /// Scan with this many cells instead of using closed forms.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Spectral stability window of the vortex ring.
    Stability {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        check_mu: Option<f64>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Continue the periodic orbits bifurcating from a point of block k.
    Branch {
        #[command(flatten)]
        problem: Problem,
        #[arg(long)]
        k: usize,
        /// nu_plus, nu_minus, nu_bar_plus, nu_bar_minus, nu0, nu1, nu_k or scan:INDEX.
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = 1e-3)]
        amplitude: f64,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        /// Time samples of the last loop; the modes go to `<stem>_modes.csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Integrate the equations of motion from the perturbed ring.
    Simulate {
        #[command(flatten)]
        problem: Problem,
        /// Perturb along the irreducible subspace of block k.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1e-4)]
        perturb: f64,
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Exit 1 for analysis failures, 2 for requests that cannot be served.
#[derive(Debug)]
pub enum Failure {
    Analysis(String),
    Usage(String),
}

impl From<ringbif::Error> for Failure {
    fn from(e: ringbif::Error) -> Self {
        use ringbif::Error::*;
        match e {
            InvalidParameter(_) | UnsupportedParameter(_) | IndexOutOfRange { .. } | DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

fn init_threads() {
    if let Some(t) = std::env::var("RINGBIF_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Equilibrium(p) => commands::equilibrium(&p),
        Command::Blocks(p) => commands::blocks(&p),
        Command::Spectrum { problem, k, nu_max, grid, csv } => commands::spectrum(&problem, k, nu_max, grid, csv),
        Command::Bifurcations { problem, k, nu_max, grid, csv } => {
            commands::bifurcations(&problem, k, nu_max, grid, csv)
        }
        Command::Stability { n, check_mu, json } => commands::stability(n, check_mu, json),
        Command::Branch { problem, k, point, amplitude, steps, csv } => {
            commands::branch(&problem, k, point.as_deref(), amplitude, steps, csv)
        }
        Command::Simulate { problem, k, perturb, t_end, tol, csv } => {
            commands::simulate(&problem, k, perturb, t_end, tol, csv)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Analysis(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
