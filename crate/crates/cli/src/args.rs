use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pathbounds", version, about = "Confidence bands and plausible bounds for effect paths")]
pub struct Cli {
    /// Worker threads (falls back to PATHBOUNDS_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute all four band sets for an estimate file.
    Bands(BandsArgs),
    /// Run the Monte Carlo study and write a metrics table.
    Simulate(SimulateArgs),
    /// Volume of the Wald region relative to the sup-t box.
    Volume(VolumeArgs),
    /// Print the PoSI and sup-t critical values for an estimate file.
    Posi(PosiArgs),
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Monte Carlo draws for critical values.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    /// Estimate file: JSON {beta_hat, cov, labels?} or delimited text.
    pub input: PathBuf,
    #[command(flatten)]
    pub mc: McArgs,
    /// Output path for the bands document (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one `h,center,lower,upper` series per band.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PosiArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub mc: McArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Mse,
    Coverage,
    Widths,
    Df,
    Surrogates,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated DGPs: constant, smooth_flat, hump, wiggly, or all.
    #[arg(long, default_value = "all")]
    pub dgp: String,
    /// Comma-separated correlations.
    #[arg(long, default_value = "0,0.8", allow_hyphen_values = true)]
    pub rho: String,
    /// Comma-separated sigma² values (default: 7 log-spaced points).
    #[arg(long)]
    pub sigma2_grid: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long = "H", alias = "horizon", default_value_t = 36)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub wiggly_seed: u64,
    #[command(flatten)]
    pub mc: McArgs,
    /// Emit only the series behind one figure instead of the full table.
    #[arg(long, value_enum)]
    pub figure: Option<Figure>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long = "H", alias = "horizon", default_value_t = 12, allow_negative_numbers = true)]
    pub horizon: i64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub rho: f64,
    #[command(flatten)]
    pub mc: McArgs,
    /// Emit the curve for H = 1..24 and rho in {0, 0.95}.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
