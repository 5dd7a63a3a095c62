use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "tsnbound",
    version,
    about = "Worst-case delay bounds for time-sensitive networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a network and write `<out>.json` and `<out>.md` reports.
    Analyze(AnalyzeArgs),
    /// Convert a network between the physical XML and output-port JSON formats.
    Convert(ConvertArgs),
    /// Generate a network and write it as output-port JSON.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Network file (.xml physical or .json output-port).
    pub input: PathBuf,
    /// Input format, overriding the file extension.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Downgrade unknown keys and attributes to warnings.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Xml,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "UPPER")]
pub enum MultiplexingArg {
    Fifo,
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn enabled(self) -> bool {
        self == Switch::On
    }
}

/// Overrides of the analysis options stored in a network file.
#[derive(Debug, Default, Args)]
pub struct OptionArgs {
    #[arg(long, value_enum, ignore_case = true)]
    pub multiplexing: Option<MultiplexingArg>,
    /// Input shaping by upstream link capacities.
    #[arg(long, value_enum)]
    pub shaping: Option<Switch>,
    /// Store-and-forward packetization.
    #[arg(long, value_enum)]
    pub packetizer: Option<Switch>,
    /// Rounding quantum for cyclic iteration, e.g. `1ns`, or `off`.
    #[arg(long)]
    pub ceil: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated methods: TFA, SFA or all.
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[command(flatten)]
    pub options: OptionArgs,
    /// Base name of the report files; defaults to the input file stem.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate each method on a single thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Target format.
    #[arg(long, value_enum)]
    pub to: FormatArg,
    /// Output file; defaults to the input path with the target extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Topology {
    Interleave,
    Ring,
    Mesh,
    Fixed,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub topology: Topology,
    /// Number of servers (interleave, ring, mesh).
    #[arg(long)]
    pub size: Option<usize>,
    /// Number of flows (fixed).
    #[arg(long)]
    pub flows: Option<usize>,
    /// JSON object mapping each switch to its neighbors (fixed).
    #[arg(long)]
    pub connections: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Flow burst, e.g. `10B` or a range `10B..1kB` (fixed only).
    #[arg(long, default_value = "10B")]
    pub burst: String,
    #[arg(long, default_value = "10kbps")]
    pub arrival_rate: String,
    #[arg(long, default_value = "50B")]
    pub max_packet_length: String,
    #[arg(long, default_value = "10us")]
    pub latency: String,
    #[arg(long, default_value = "4Mbps")]
    pub service_rate: String,
    /// Output link capacity; links are unlimited when omitted.
    #[arg(long)]
    pub capacity: Option<String>,
    #[command(flatten)]
    pub options: OptionArgs,
    /// Output file; defaults to `<topology>-<n>.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
