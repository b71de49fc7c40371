//! `melnikov`: exact Melnikov derivatives, published-table comparison, quadrature checks and
//! periodic-orbit shooting from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use melnikov_core::SystemName;
use melnikov_lab::Model;
use output::{Format, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "melnikov", version, about = "Exact Melnikov derivatives and numeric verification lab")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    output: Format,
    /// Significant digits for decimal renderings.
    #[arg(long, global = true, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=200))]
    digits: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SystemArg {
    FoldedNode,
    FalknerSkan,
    Nose,
}

impl SystemArg {
    pub fn name(self) -> SystemName {
        match self {
            SystemArg::FoldedNode => SystemName::FoldedNode,
            SystemArg::FalknerSkan => SystemName::FalknerSkan,
            SystemArg::Nose => SystemName::Nose,
        }
    }

    pub fn model(self) -> Model {
        match self {
            SystemArg::FoldedNode => Model::FoldedNodeScaled,
            SystemArg::FalknerSkan => Model::FalknerSkan,
            SystemArg::Nose => Model::Nose,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact Hermite identity suite against a monomial-basis oracle.
    Identities {
        /// Largest basis degree in product and pair checks.
        #[arg(long, default_value_t = 15)]
        max_degree: usize,
        /// Largest index in triple-product and parity checks.
        #[arg(long, default_value_t = 12)]
        max_triple: usize,
    },
    /// Melnikov derivatives, classification and oracle agreement for one system.
    Melnikov {
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(1..=200))]
        n: u32,
    },
    /// Folded-node third derivatives against the published comparison table.
    Table1,
    /// Coefficient rows `c_kj` (and `d_kj` for the Nose system) with their structural checks.
    Coeffs {
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(1..=500))]
        k: u32,
    },
    /// Numeric quadrature of every derivative integrand against the exact value.
    Quadcheck {
        #[arg(long, value_enum)]
        system: SystemArg,
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(1..=60))]
        n: u32,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
    },
    /// Symmetric periodic orbit by shooting; writes the trace CSV and the result JSON.
    Orbit(OrbitArgs),
    /// Classification (and optionally quadrature) over a range of systems and indices, in parallel.
    Sweep {
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SystemArg::FoldedNode, SystemArg::FalknerSkan, SystemArg::Nose])]
        systems: Vec<SystemArg>,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=200))]
        n_min: u32,
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=200))]
        n_max: u32,
        /// Also run the quadrature cross-check at this relative tolerance.
        #[arg(long)]
        quadrature: Option<f64>,
    },
}

#[derive(clap::Args, Debug)]
pub struct OrbitArgs {
    #[arg(long, value_enum)]
    pub system: SystemArg,
    #[arg(long)]
    pub mu: f64,
    /// Shooting bracket for the start ordinate `y1`; scanned automatically when omitted.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub bracket: Option<Vec<f64>>,
    /// Half-width of the twist-counting window around the weak canard.
    #[arg(long, default_value_t = melnikov_lab::shooting::DEFAULT_TWIST_WINDOW)]
    pub twist_window: f64,
    /// Chart handoff threshold.
    #[arg(long, default_value_t = melnikov_lab::atlas::DEFAULT_HANDOFF)]
    pub handoff: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    /// Directory for the trace CSV and result JSON.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let digits = cli.digits as usize;
    let outcome = match cli.command {
        Command::Identities { max_degree, max_triple } => commands::identities(max_degree, max_triple),
        Command::Melnikov { system, n } => commands::melnikov(system, n as usize, digits),
        Command::Table1 => commands::table1(digits),
        Command::Coeffs { system, k } => commands::coeffs(system, k as usize, digits),
        Command::Quadcheck { system, n, rel_tol } => commands::quadcheck(system, n as usize, rel_tol, digits),
        Command::Orbit(args) => commands::orbit(&args),
        Command::Sweep { systems, n_min, n_max, quadrature } => {
            if n_min > n_max {
                eprintln!("error: --n-min must not exceed --n-max");
                return ExitCode::from(EXIT_USAGE as u8);
            }
            commands::sweep(&systems, n_min as usize, n_max as usize, quadrature, digits)
        }
    };
    match outcome {
        Ok(o) => {
            match o.render(cli.output) {
                Ok(s) => print!("{s}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            ExitCode::from(o.code as u8)
        }
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
