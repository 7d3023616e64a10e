use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loopgas_core::asymptotics::ModelId;

#[derive(Parser, Debug)]
#[command(
    name = "loopgas",
    version,
    about = "Random doodles: sampling, enumeration and loop statistics"
)]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true, env = "LOOPGAS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw uniform random rooted quartic maps.
    Sample(SampleArgs),
    /// Estimate the mean loop count at p = 2^ell.
    Montecarlo(MonteCarloArgs),
    /// Exact counts and loop statistics for small sizes.
    Enumerate(EnumerateArgs),
    /// Fit sigma' p + gamma' ln p + kappa' to a loop-count table.
    Fit(FitArgs),
    /// Predicted gamma' = d gamma / dn at n = 1.
    Predict(PredictArgs),
    /// Check serialized maps.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MapFormat {
    Text,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Plain,
    Json,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Number of vertices.
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MapFormat::Text)]
    pub format: MapFormat,
    /// Also write the Gauss code of every map here.
    #[arg(long)]
    pub gauss_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    /// Range of ell as `a:b`, or a single value.
    #[arg(long, value_parser = parse_range)]
    pub ells: RangeInclusive<u32>,
    /// Samples per size; overrides the budget rule.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Vertex budget per size: N = min(cap, budget / 2^ell).
    #[arg(long, default_value_t = 1 << 30)]
    pub budget: u64,
    /// Per-size sample cap used with the budget rule.
    #[arg(long, default_value_t = loopgas_core::stats::DEFAULT_MAX_SAMPLES)]
    pub cap: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the u-series here as well.
    #[arg(long)]
    pub u_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct EnumerateArgs {
    /// Sizes to report, as `a:b` or a single value.
    #[arg(long, value_parser = parse_range, default_value = "1:5")]
    pub sizes: RangeInclusive<u32>,
    /// Largest size for which maps are generated exhaustively.
    #[arg(long, default_value_t = loopgas_core::enumeration::DEFAULT_MAX_P)]
    pub max_p: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// `ell,k,err` table or `montecarlo` output; the bundled published table
    /// when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Smallest ell of each fit, as `a:b` or a single value.
    #[arg(long, value_parser = parse_range, default_value = "2:19")]
    pub lmin: RangeInclusive<u32>,
    /// Largest ell of every fit; the largest in the input when absent.
    #[arg(long)]
    pub lmax: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: ModelId,
    /// Also print the central charge and gamma at this loop weight.
    #[arg(long)]
    pub weight: Option<f64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Plain)]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Map file in text or binary form.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Plain)]
    pub format: ReportFormat,
}

fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse().map_err(|e: loopgas_core::Error| e.to_string())
}

pub fn parse_range(s: &str) -> Result<RangeInclusive<u32>, String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok(a..=b)
}
