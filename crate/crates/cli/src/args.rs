use clap::{Args, Parser, Subcommand, ValueEnum};

use binpath::PayoffKind;

#[derive(Debug, Parser)]
#[command(
    name = "binpath",
    version,
    about = "Exact and Monte Carlo valuation on recombinant binomial trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value one option and print a run report.
    Price(PriceArgs),
    /// Repeated-experiment Monte Carlo studies, printed as CSV.
    Study(StudyArgs),
    /// Time exact valuation over a grid of depths and worker counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Rank-partitioned full enumeration over `--workers` ranks.
    Exact,
    /// Serial full enumeration.
    ExactSerial,
    /// Binomial leaf-weight formula (European payoffs, constant p).
    Leaf,
    /// Basic Monte Carlo.
    Mc,
    /// Partitioned Monte Carlo, proportional allocation.
    Pmc,
    /// Partitioned Monte Carlo with `--samples` draws in every stratum.
    PmcEqual,
    /// Shared-sample Monte Carlo.
    Smc,
}

impl MethodArg {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodArg::Exact => "exact",
            MethodArg::ExactSerial => "exact-serial",
            MethodArg::Leaf => "leaf",
            MethodArg::Mc => "mc",
            MethodArg::Pmc => "pmc",
            MethodArg::PmcEqual => "pmc-equal",
            MethodArg::Smc => "smc",
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, MethodArg::Exact | MethodArg::ExactSerial | MethodArg::Leaf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableArg {
    /// Basic MC over a list of sample sizes.
    McConvergence,
    /// Partitioned MC over a list of stratum counts, proportional allocation.
    PmcVariance,
    /// Equal-allocation partitioned MC against shared-sample MC.
    SmcVsPmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Csv,
    Table,
}

fn parse_payoff(s: &str) -> Result<PayoffKind, String> {
    s.parse().map_err(|e: binpath::payoffs::UnknownPayoff| e.to_string())
}

/// Market inputs and tree overrides shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct MarketArgs {
    /// euro-call, euro-put, asian-put or lookback-put.
    #[arg(long, default_value = "euro-put", value_parser = parse_payoff)]
    pub payoff: PayoffKind,
    /// Spot price.
    #[arg(long = "S0", default_value_t = 5.0)]
    pub s0: f64,
    /// Strike.
    #[arg(long = "K", default_value_t = 10.0)]
    pub k: f64,
    /// Annual risk-free rate.
    #[arg(long, default_value_t = 0.06, allow_negative_numbers = true)]
    pub q: f64,
    /// Annual volatility.
    #[arg(long, default_value_t = 0.30)]
    pub sigma: f64,
    /// Years to maturity.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t: f64,
    /// Comma-separated per-step up-probabilities, one per step.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    /// Test-only: replace the up factor (d = 1/u).
    #[arg(long, hide = true)]
    pub override_u: Option<f64>,
    /// Test-only: replace every up-probability.
    #[arg(long, hide = true)]
    pub override_p: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PriceArgs {
    #[arg(long, value_enum, default_value = "exact")]
    pub method: MethodArg,
    #[command(flatten)]
    pub market: MarketArgs,
    /// Tree depth.
    #[arg(long = "N", default_value_t = 16)]
    pub n: u32,
    /// Worker ranks (exact) or strata (pmc, pmc-equal, smc).
    #[arg(long, default_value_t = 1)]
    pub workers: u64,
    /// Monte Carlo sample size R.
    #[arg(long, default_value_t = 1024)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Independent repetitions; estimates and variance estimates are averaged.
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    /// OS threads; defaults to the worker count (exact) or the core count (MC).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Allow exact enumeration for N above 28.
    #[arg(long)]
    pub force_large: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[arg(long, value_enum)]
    pub table: TableArg,
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long = "N", default_value_t = 16)]
    pub n: u32,
    /// Sample sizes for mc-convergence.
    #[arg(long = "R-list", value_delimiter = ',')]
    pub r_list: Option<Vec<u64>>,
    /// Stratum counts for pmc-variance and smc-vs-pmc.
    #[arg(long = "M-list", value_delimiter = ',')]
    pub m_list: Option<Vec<u64>>,
    /// Sample size R (total for pmc-variance, per stratum for smc-vs-pmc).
    #[arg(long, default_value_t = 1024)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub reps: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Tree depths.
    #[arg(long = "N-list", value_delimiter = ',', required = true)]
    pub n_list: Vec<u32>,
    /// Worker counts, ascending; the first is the speedup baseline.
    #[arg(long = "M-list", value_delimiter = ',', required = true)]
    pub m_list: Vec<u64>,
    /// Timed runs per grid point; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    #[arg(long)]
    pub force_large: bool,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: BenchFormat,
}
