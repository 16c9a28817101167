//! Command-line interface definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Environment variable naming the default data directory searched by the
/// `estimate` and `reproduce` commands when `--data` is not given.
pub const DATA_DIR_ENV: &str = "MERTON_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "merton-default",
    about = "Optimal stock/cash allocation for a stock that can default",
    long_about = "Computes optimal stock/cash allocation policies when the stock can jump to \
                  zero at an exponential default time: closed-form log-utility ratios, the \
                  non-myopic power-utility weight path, value functions, Monte Carlo \
                  verification, and drift/volatility estimation from price CSVs.",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classical and pre-default Merton ratios plus a lambda sweep
    Ratio(RatioArgs),
    /// Optimal weight path pi_t for one or more gamma values
    Path(PathArgs),
    /// Value functions on a time grid
    Value(ValueArgs),
    /// Monte Carlo verification: grid optimality, Fubini identity, closed-form match
    Simulate(SimulateArgs),
    /// Annualized drift/volatility estimates from a price CSV
    Estimate(EstimateArgs),
    /// End-to-end reproduction of the reference allocation tables
    Reproduce(ReproduceArgs),
}

/// Market model parameters. Defaults are the Bombardier-style reference
/// example (annualized, lambda from rating tables).
#[derive(Debug, Args, Clone, Copy)]
pub struct MarketArgs {
    /// Annualized drift mu (1/year)
    #[arg(long, default_value_t = 0.4027, allow_negative_numbers = true)]
    pub mu: f64,
    /// Annualized volatility sigma (1/sqrt(year))
    #[arg(long, default_value_t = 0.5905)]
    pub sigma: f64,
    /// Annualized risk-free rate r (1/year)
    #[arg(long, default_value_t = 0.0501)]
    pub r: f64,
    /// Default intensity lambda (1/year)
    #[arg(long, default_value_t = 0.024)]
    pub lambda: f64,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Output file (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Significant digits printed (1-17); 17 round-trips f64 exactly
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    pub precision: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RatioArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Upper end of the lambda sweep
    #[arg(long, default_value_t = 0.25)]
    pub lambda_max: f64,
    /// Number of sweep points (including both endpoints)
    #[arg(long, default_value_t = 51)]
    pub sweep_points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Risk-aversion values; gamma = 1 (and anything within 1e-4 of it)
    /// emits the constant log-utility line
    #[arg(long = "gamma", value_delimiter = ',', num_args = 1.., default_values_t = vec![1.0, 1.5, 2.0, 2.5, 3.0])]
    pub gammas: Vec<f64>,
    /// Maturity T in years
    #[arg(long = "T", visible_alias = "maturity", default_value_t = 1.0)]
    pub maturity: f64,
    /// Integration grid steps (default: max(1000, 1000 T))
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValueArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Risk aversion gamma
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Maturity T in years
    #[arg(long = "T", visible_alias = "maturity", default_value_t = 1.0)]
    pub maturity: f64,
    /// Number of grid points in the emitted time series
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Wealth at which values are evaluated
    #[arg(long, default_value_t = 1.0)]
    pub wealth: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Maturity T in years
    #[arg(long = "T", visible_alias = "maturity", default_value_t = 1.0)]
    pub maturity: f64,
    /// Simulation grid steps over [0, T]
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Monte Carlo paths per estimate
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// RNG seed; identical seeds give bit-identical results
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Constant-weight grid for the optimality study
    /// (default: 21 points over [-0.5, 0.95])
    #[arg(long = "grid", value_delimiter = ',', num_args = 1..)]
    pub grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Price CSV (`-` for stdin); falls back to $MERTON_DATA_DIR
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Trading days per year used for annualization
    #[arg(long, default_value_t = 252)]
    pub trading_days: u32,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Price CSV (`-` for stdin); falls back to $MERTON_DATA_DIR
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Risk-free rate fed to the allocation rules
    #[arg(long, default_value_t = 0.0501)]
    pub r: f64,
    /// Default intensity fed to the allocation rules
    #[arg(long, default_value_t = 0.024)]
    pub lambda: f64,
    /// Risk-aversion values for the terminal-weight table
    #[arg(long = "gamma", value_delimiter = ',', num_args = 1.., default_values_t = vec![1.0, 1.5, 2.0, 2.5, 3.0])]
    pub gammas: Vec<f64>,
    /// Perturb sigma_hat by this multiplicative factor before computing
    /// allocations (sensitivity smoke test; table cells are still checked
    /// against the unperturbed expectations)
    #[arg(long, default_value_t = 1.0)]
    pub sigma_scale: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
