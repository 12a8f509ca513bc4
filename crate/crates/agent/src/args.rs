// SPDX-License-Identifier: Apache-2.0

use std::num::NonZeroU64;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edtemu_core::config::{parse_delay, parse_rate};
use edtemu_core::sim::DatapathKind;
use edtemu_core::{KeyMode, ThrottleMode, DEFAULT_CAPACITY};
use ipnet::Ipv4Net;

/// Test-bed agent: loads link emulation tables, generates full-mesh
/// configurations and runs the virtual-time experiments.
#[derive(Debug, Parser)]
#[command(name = "edtemu", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a link configuration file and bulk-load it into a map.
    Load(LoadArgs),
    /// Write the link configuration of a full mesh.
    Mesh(MeshArgs),
    /// Run an experiment and emit its samples as CSV.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Args)]
pub struct LoadArgs {
    /// Link configuration file, one `<src> <dst> [rate=..] [delay=..]` per line.
    pub config: PathBuf,
    /// Key the map by destination only or by (source, destination).
    #[arg(long, value_enum, default_value_t = KeyModeArg::Dst)]
    pub key_mode: KeyModeArg,
    /// Maximum number of map entries.
    #[arg(long, default_value_t = DEFAULT_CAPACITY)]
    pub capacity: usize,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Number of processes in the mesh (at least 2).
    #[arg(long)]
    pub n: usize,
    /// Subnet the process addresses are taken from, in order.
    #[arg(long, default_value = "10.0.0.0/8")]
    pub subnet: Ipv4Net,
    /// Rate limit on every link, e.g. `100Mbit`.
    #[arg(long, value_parser = rate_arg)]
    pub rate: Option<NonZeroU64>,
    /// One-way delay on every link, e.g. `20ms`.
    #[arg(long, value_parser = delay_arg)]
    pub delay: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Configuration time of a full mesh, per link or per map entry.
    Config(ConfigBenchArgs),
    /// Round-trip time of periodic probes against the number of entries.
    Latency(SweepArgs),
    /// Goodput of a saturating flow against the number of entries.
    Throughput(SweepArgs),
    /// One emulated link over both datapaths, side by side.
    Accuracy(AccuracyArgs),
}

#[derive(Debug, Args)]
pub struct ConfigBenchArgs {
    /// Mechanism to configure: filter-chain or edt-map.
    #[arg(long, default_value = "filter-chain")]
    pub datapath: DatapathKind,
    /// Mesh size; the benchmark configures n*(n-1) links.
    #[arg(long, default_value_t = 256, conflicts_with = "entries")]
    pub n: usize,
    /// Load this many destination entries instead of a mesh (edt-map only).
    #[arg(long)]
    pub entries: Option<usize>,
    /// Report measured map load times instead of modeled ones. The output
    /// is then no longer reproducible.
    #[arg(long)]
    pub wall_clock: bool,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Mechanism under test: edt-map or filter-chain.
    #[arg(long, default_value = "edt-map")]
    pub datapath: DatapathKind,
    /// Comma-separated entry counts. Defaults to a sweep up to 65000, or to
    /// a single entry when an emulation is given.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<usize>>,
    /// Table position of the entry matching the probe traffic. Defaults to 0
    /// when an emulation is given; without one nothing matches.
    #[arg(long)]
    pub match_index: Option<usize>,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Emulated rate limit, e.g. `100Mbit`.
    #[arg(long, value_parser = rate_arg)]
    pub rate: Option<NonZeroU64>,
    /// Emulated one-way delay, e.g. `5ms`.
    #[arg(long, value_parser = delay_arg)]
    pub delay: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Virtual experiment length.
    #[arg(long, value_parser = delay_arg, default_value = "60s")]
    pub duration: u64,
    /// Bytes per packet of the throughput flow.
    #[arg(long, default_value_t = 1500)]
    pub packet_length: u32,
    /// Round-trip time of the path without any emulation.
    #[arg(long, value_parser = delay_arg, default_value = "300us")]
    pub baseline_rtt: u64,
    /// Half-width of the uniform spread around the baseline round-trip time.
    #[arg(long, value_parser = delay_arg, default_value = "0ns")]
    pub jitter: u64,
    /// Wire speed of the egress device.
    #[arg(long, value_parser = rate_arg, default_value = "4600Mbit")]
    pub line_rate: NonZeroU64,
    /// Packets the sender may have inside the device at once.
    #[arg(long, default_value_t = 1000)]
    pub queue_limit: usize,
    /// Rate limiter behaviour after an idle period.
    #[arg(long, value_enum, default_value_t = ModeArg::Clamped)]
    pub mode: ModeArg,
}

/// Overrides for the datapath cost model, all in nanoseconds.
#[derive(Debug, Args)]
pub struct CostArgs {
    /// Cost of checking one filter of the chain.
    #[arg(long)]
    pub filter_check_ns: Option<u64>,
    /// Time to attach the first filter.
    #[arg(long)]
    pub attach_base_ns: Option<u64>,
    /// Extra attach time per already attached filter.
    #[arg(long)]
    pub attach_per_existing_ns: Option<u64>,
    /// Cost of one map lookup.
    #[arg(long)]
    pub map_lookup_ns: Option<u64>,
    /// Modeled time of one map update.
    #[arg(long)]
    pub map_update_ns: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Seed for every random choice of the run.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output CSV file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KeyModeArg {
    Dst,
    Pair,
}

impl From<KeyModeArg> for KeyMode {
    fn from(arg: KeyModeArg) -> Self {
        match arg {
            KeyModeArg::Dst => KeyMode::Destination,
            KeyModeArg::Pair => KeyMode::Pair,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Clamped,
    Literal,
}

impl From<ModeArg> for ThrottleMode {
    fn from(arg: ModeArg) -> Self {
        match arg {
            ModeArg::Clamped => ThrottleMode::Clamped,
            ModeArg::Literal => ThrottleMode::Literal,
        }
    }
}

fn rate_arg(s: &str) -> Result<NonZeroU64, String> {
    let rate = parse_rate(s).map_err(|e| e.to_string())?;
    NonZeroU64::new(rate).ok_or_else(|| "rate must be positive".to_string())
}

fn delay_arg(s: &str) -> Result<u64, String> {
    parse_delay(s).map_err(|e| e.to_string())
}
