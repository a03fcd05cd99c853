use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use partsel_core::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "partsel", version, about = "Differentially private partition selection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one mechanism and print a JSON report.
    Run(RunArgs),
    /// Write a synthetic skewed corpus in user-lines format.
    Generate(GenerateArgs),
    /// Convert approximate zCDP to approximate DP, in either direction.
    Convert(ConvertArgs),
    /// Run a mechanism over one swept parameter and print CSV rows.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mechanism {
    /// Weighted Gaussian
    Wgauss,
    /// DP-SIPS
    Sips,
    /// Policy Gaussian
    Dpsu,
    /// Greedy updates without sampling (Laplace, takes --eps/--delta-dp)
    Gw,
    /// Iterated DPSU; requires --experimental
    DpsuIter,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Wgauss => "wgauss",
            Mechanism::Sips => "sips",
            Mechanism::Dpsu => "dpsu",
            Mechanism::Gw => "gw",
            Mechanism::DpsuIter => "dpsu-iter",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }

    pub fn uses_laplace(self) -> bool {
        self == Mechanism::Gw
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    /// One user per line, whitespace-separated items
    Lines,
    /// user_id,item rows without a header
    Csv,
    /// user_id,item rows after a header line
    CsvHeader,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum TruncationArg {
    #[default]
    TopFrequency,
    Uniform,
}

#[derive(Clone, Debug, Args)]
pub struct DataArgs {
    /// Dataset file
    #[arg(long, value_name = "PATH", required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Lines)]
    pub format: FormatArg,
    /// Generate this many synthetic users in memory instead of reading a file
    #[arg(long, value_name = "USERS")]
    pub synthetic: Option<usize>,
    /// Seed for --synthetic
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub data_seed: u64,
    /// Keep only the first N users
    #[arg(long, value_name = "N")]
    pub users: Option<usize>,
}

#[derive(Clone, Debug, Args)]
pub struct MechArgs {
    #[arg(long, value_enum)]
    pub mech: Mechanism,
    /// Allow unsupported research mechanisms
    #[arg(long)]
    pub experimental: bool,
    /// zCDP ρ (Gaussian mechanisms; default 0.1)
    #[arg(long)]
    pub rho: Option<f64>,
    /// zCDP δ (Gaussian mechanisms; default 1e-5)
    #[arg(long)]
    pub delta: Option<f64>,
    /// DP ε (gw only; default 1.7)
    #[arg(long)]
    pub eps: Option<f64>,
    /// DP δ (gw only; default 8.1142e-5)
    #[arg(long)]
    pub delta_dp: Option<f64>,
    /// δ_CDP used to report gw's implied zCDP ρ
    #[arg(long, default_value_t = 1e-5)]
    pub equiv_delta_cdp: f64,
    /// Per-user contribution bound (default 100)
    #[arg(long)]
    pub delta0: Option<usize>,
    /// SIPS rounds (default 3)
    #[arg(long)]
    pub iters: Option<usize>,
    /// SIPS budget ratio r (default 1/3)
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Mechanism seed (default 1592598563)
    #[arg(long, conflicts_with = "entropy")]
    pub seed: Option<u64>,
    /// Draw a random seed (still echoed in the report)
    #[arg(long)]
    pub entropy: bool,
    /// Worker threads (default: PARTSEL_WORKERS or available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Buffer added to the threshold by dpsu and gw
    #[arg(long)]
    pub buffer: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    pub gw_truncation: TruncationArg,
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub mech: MechArgs,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write released items, one per line
    #[arg(long, value_name = "PATH")]
    pub released: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub users: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file (stdout if omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    pub pareto_scale: f64,
    #[arg(long, default_value_t = 1.16)]
    pub pareto_shape: f64,
    #[arg(long, default_value_t = 1.1)]
    pub zeta: f64,
    #[arg(long)]
    pub max_list_len: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub delta_cdp: f64,
    /// Compute δ_DP for this ε
    #[arg(long, required_unless_present = "delta_dp", conflicts_with = "delta_dp")]
    pub eps: Option<f64>,
    /// Compute the smallest ε reaching this δ_DP
    #[arg(long)]
    pub delta_dp: Option<f64>,
    /// Emit JSON instead of a table
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    /// zCDP ρ (Gaussian mechanisms)
    Rho,
    /// DP ε (gw)
    Eps,
    /// δ, or δ_DP for gw
    Delta,
    Delta0,
    Ratio,
    Iterations,
    Workers,
    /// Dataset prefix size in users
    Users,
}

#[derive(Clone, Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub mech: MechArgs,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Comma-separated values for the swept axis
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
    /// Seeds per value; repetition i uses seed + i
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    /// Write CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
