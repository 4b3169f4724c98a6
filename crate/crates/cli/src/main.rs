mod commands;
mod envelope;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relent::ensembles::ChainKind;
use relent::formulas::Pair;

use crate::envelope::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "relent",
    version,
    about = "Average quantum relative entropy of random states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Chain {
    MatrixWalk,
    Eigenphase,
}

impl From<Chain> for ChainKind {
    fn from(c: Chain) -> Self {
        match c {
            Chain::MatrixWalk => ChainKind::MatrixWalk,
            Chain::Eigenphase => ChainKind::Eigenphase,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact average relative entropy at finite dimension.
    Exact(ExactArgs),
    /// Large-dimension limit at fixed ratios c1 = n1/m, c2 = n2/m.
    Limit(LimitArgs),
    /// Monte Carlo estimate compared with the exact value.
    Simulate(SimulateArgs),
    /// Sweep over (c1, m) and write the comparison table as CSV.
    Figure(FigureArgs),
    /// Check zonal-polynomial identities and Haar integrals.
    ZonalVerify(ZonalArgs),
    /// Run the fast invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub pair: Pair,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n1: f64,
    #[arg(long)]
    pub n2: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long)]
    pub pair: Pair,
    #[arg(long)]
    pub c1: f64,
    #[arg(long)]
    pub c2: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub pair: Pair,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n1: f64,
    #[arg(long)]
    pub n2: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Metropolis chain for Bures–Hall states with n > m.
    #[arg(long, value_enum, default_value = "matrix-walk")]
    pub chain: Chain,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long)]
    pub pair: Pair,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub c1: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub c2: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value = "eigenphase")]
    pub chain: Chain,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `csv` writes only the table; `json` also prints the envelope.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ZonalArgs {
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub l_max: u32,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Replace one Bernoulli number to exercise the failure path.
    #[arg(long, hide = true)]
    pub corrupt_bernoulli: bool,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Exact(a) => commands::exact(&a),
        Command::Limit(a) => commands::limit(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Figure(a) => commands::figure(&a),
        Command::ZonalVerify(a) => commands::zonal_verify(&a),
        Command::Selftest(a) => commands::selftest(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
