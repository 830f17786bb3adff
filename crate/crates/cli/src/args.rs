//! Command-line surface. Every option struct serializes to the same
//! kebab-case keys a config file uses, so manifests can be replayed.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "trafficsim", version, about = "Deterministic microscopic traffic simulation pipeline")]
pub struct Cli {
    /// JSON file supplying flags, or a run manifest to replay.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Where to write the run manifest (default: next to the primary output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Compile a raw feature collection into a lane-level network.
    BuildMap(BuildMapArgs),
    /// Generate a Manhattan grid network.
    GenGrid(GenGridArgs),
    /// Generate an OD matrix with a rule-based model.
    GenOd(GenOdArgs),
    /// Convert an OD matrix into timed trips.
    GenDemand(GenDemandArgs),
    /// Run the simulation and record vehicle states and road speeds.
    Simulate(SimulateArgs),
    /// Compute travel times, road speeds and comparison metrics.
    Analyze(AnalyzeArgs),
    /// Time repeated runs on synthetic grid scenarios.
    Bench(BenchArgs),
}

impl Command {
    pub const NAMES: [&'static str; 7] = ["build-map", "gen-grid", "gen-od", "gen-demand", "simulate", "analyze", "bench"];

    pub fn name(&self) -> &'static str {
        match self {
            Command::BuildMap(_) => "build-map",
            Command::GenGrid(_) => "gen-grid",
            Command::GenOd(_) => "gen-od",
            Command::GenDemand(_) => "gen-demand",
            Command::Simulate(_) => "simulate",
            Command::Analyze(_) => "analyze",
            Command::Bench(_) => "bench",
        }
    }

    /// Options as a flat JSON object keyed by flag name.
    pub fn options(&self) -> serde_json::Value {
        let tagged = serde_json::to_value(self).expect("options serialize");
        tagged.as_object().and_then(|o| o.values().next().cloned()).unwrap_or_default()
    }
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BuildMapArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 3.5)]
    pub lane_width: f64,
    #[arg(long, default_value_t = 5.0)]
    pub snap_radius: f64,
    #[arg(long)]
    pub allow_boundaries: bool,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenGridArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 200.0)]
    pub block: f64,
    #[arg(long, default_value_t = 1)]
    pub lanes: u32,
    #[arg(long, default_value_t = 16.67)]
    pub speed: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdModel {
    Gravity,
    Radiation,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenOdArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub zones: PathBuf,
    #[arg(long, value_enum, default_value_t = OdModel::Gravity)]
    pub model: OdModel,
    /// Total trips; the radiation model splits it by zone mass.
    #[arg(long, default_value_t = 100_000.0)]
    pub total: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Uniform,
    Peaked,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenDemandArgs {
    #[arg(long)]
    pub od: PathBuf,
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long, value_enum, default_value_t = Profile::Uniform)]
    pub profile: Profile,
    /// Departure window `start:end` in seconds.
    #[arg(long, default_value = "0:3600")]
    pub window: String,
    /// Peak time in seconds (peaked profile).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_mean: Option<f64>,
    /// Peak spread in seconds (peaked profile).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_std: Option<f64>,
    /// Share of trips made by car.
    #[arg(long, default_value_t = 1.0)]
    pub mode_share: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Fixed,
    Maxpressure,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long, default_value_t = 3600)]
    pub steps: u64,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    /// Signal control (default: the engine config's, else fixed).
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerKind>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Line-delimited vehicle record stream.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<PathBuf>,
    /// Per-road windowed mean speeds.
    #[arg(long)]
    pub roads: PathBuf,
    /// Engine parameters (IDM, MOBIL, amber, windows) as JSON.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine_config: Option<PathBuf>,
    /// Worker threads (default: hardware parallelism).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub record: PathBuf,
    #[arg(long)]
    pub roads: PathBuf,
    #[arg(long)]
    pub trips: PathBuf,
    /// Observed road speeds to compare against.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_speeds: Option<PathBuf>,
    /// Generated OD matrix, compared against `--compare-od`.
    #[arg(long, requires = "compare_od")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub od: Option<PathBuf>,
    /// Observed OD matrix.
    #[arg(long, requires = "od")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_od: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchArgs {
    /// Scenario `ROWSxCOLS:TRIPS`; repeat the flag for more.
    #[arg(long = "scenario", required = true)]
    #[serde(rename = "scenario")]
    pub scenarios: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 3600)]
    pub steps: u64,
    #[arg(long, default_value_t = 200.0)]
    pub block: f64,
    #[arg(long, default_value_t = 1)]
    pub lanes: u32,
    #[arg(long, default_value_t = 13.89)]
    pub speed: f64,
    /// Departure window length, seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub window: f64,
    #[arg(long, value_enum, default_value_t = ControllerKind::Fixed)]
    pub controller: ControllerKind,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
}
