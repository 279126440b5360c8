use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdov_core::verify::Suite;
use serde::Serialize;

/// Homozygosity under symmetric overdominance: coefficient tables,
/// moments, tilted series, phase map, rate functions and Monte Carlo.
#[derive(Debug, Parser)]
#[command(name = "pdov", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalOpts {
    /// Write data output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Treat an importance-sampling ESS warning as an error (exit 4).
    #[arg(long, global = true)]
    pub strict: bool,
    /// Write a run manifest (JSON) to this path.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Coefficient table A_{k,l}(theta); theta = 0 gives the limit table.
    Coeffs(CoeffsArgs),
    /// Heterozygosity moments E(1-H2)^k by table, recursion and optionally Monte Carlo.
    Moments(MomentsArgs),
    /// Ratios K_n, ~K_n and the diagnostics F_n, G over a theta list.
    Kn(KnArgs),
    /// MGF of H2 under the tilted law, with its theta -> 0 limit.
    Mgf(MgfArgs),
    /// Phase map lambda -> u over a grid.
    Phase(PhaseArgs),
    /// Tail beyond the leading levels against its closed-form bound.
    Tails(TailsArgs),
    /// Rate functions J, S at a configuration.
    Rate(RateArgs),
    /// Importance-sampling estimates under the tilted law.
    Sample(SampleArgs),
    /// Run property suites and report pass/fail.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CoeffsArgs {
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long)]
    pub kmax: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub kmax: usize,
    /// Add GEM Monte Carlo estimates with this many draws.
    #[arg(long, value_name = "N")]
    pub mc_check: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct KnArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub theta: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MgfArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub t: Vec<f64>,
    /// Moments per inner series (default: sizing rule for lambda, theta, t).
    #[arg(long)]
    pub kmax: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long)]
    pub lambda_min: f64,
    #[arg(long)]
    pub lambda_max: f64,
    #[arg(long)]
    pub step: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TailsArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub theta: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RateArgs {
    #[arg(long)]
    pub lambda: f64,
    /// Frequencies, any order; sorted descending before evaluation.
    #[arg(long, value_delimiter = ',', conflicts_with = "uniform", required_unless_present = "uniform")]
    pub config: Option<Vec<f64>>,
    /// Use the uniform configuration (1/K, ..., 1/K).
    #[arg(long, value_name = "K")]
    pub uniform: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub samples: usize,
    /// Weighted histogram of H2 with this many bins on (0, 1].
    #[arg(long, value_name = "B", conflicts_with = "ball")]
    pub hist_bins: Option<usize>,
    /// Probability of the ball of radius DELTA around (1/K, ..., 1/K).
    #[arg(long, value_name = "K,DELTA", value_delimiter = ',', num_args = 1)]
    pub ball: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// ubmh, coef1, coef2, ft, ml, phase, inclusion, mc-oracle or all.
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    pub suite: Suite,
    /// Draws per Monte Carlo estimate in mc-oracle.
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Random configurations per level in inclusion.
    #[arg(long, default_value_t = 10_000)]
    pub inclusion_samples: usize,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Suite::EACH.iter().map(|x| x.name()).chain(["all"]).collect();
        format!("expected one of {}", names.join(", "))
    })
}
