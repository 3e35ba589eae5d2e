//! Command-line definitions. Defaults follow the engine defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mosaic_qaoa_core::metrics::DEFAULT_SHOTS;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mosaic-qaoa", version, about = "Adaptive QAOA circuit synthesis for Max-E3-SAT")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random 3-CNF instances as DIMACS files plus a manifest.
    Generate(GenerateArgs),
    /// Run the adaptive engine on instances and record circuits and metrics.
    Run(RunArgs),
    /// Turn run records into train/val/test JSONL token datasets.
    ExportDataset(ExportArgs),
    /// Score token-encoded circuits against their formulas.
    EvalCircuit(EvalArgs),
    /// Emit tidy CSV tables from run records.
    Plotdata(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Uniform,
    Balanced,
    /// First half uniform, second half balanced.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SatFilter {
    Any,
    Sat,
    Unsat,
    /// First half satisfiable, second half unsatisfiable.
    Half,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = Kind::Uniform)]
    pub kind: Kind,
    #[arg(long = "sat", value_enum, default_value_t = SatFilter::Any)]
    pub sat: SatFilter,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Attempts per instance before the sat filter gives up.
    #[arg(long, default_value_t = 1000)]
    pub max_attempts: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// A DIMACS file or a directory of `.cnf` files.
    #[arg(long)]
    pub input: PathBuf,
    /// adapt, tetris, mosaic or all.
    #[arg(long, default_value = "mosaic")]
    pub strategy: String,
    /// One probe angle, or a comma list to keep the best run over the list.
    #[arg(long, default_value = "0.5")]
    pub gamma0: String,
    #[arg(long, default_value_t = 20)]
    pub max_layers: usize,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Fill the wall_time CSV column. Makes metrics.csv non-reproducible.
    #[arg(long)]
    pub record_wall_time: bool,
    /// Record the per-layer selection sums of all three strategies.
    #[arg(long)]
    pub compare_selectors: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    /// Directory holding `runs/` or the run JSON files themselves.
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Strategy whose circuits are exported, or all.
    #[arg(long, default_value = "mosaic")]
    pub strategy: String,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// One token sequence per line.
    #[arg(long, requires = "instance", conflicts_with_all = ["requests", "circuit"])]
    pub tokens: Option<PathBuf>,
    /// DIMACS instance the token sequences must encode.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// JSONL request file; one response line per request goes to --out.
    #[arg(long, conflicts_with = "circuit")]
    pub requests: Option<PathBuf>,
    /// A run record; its circuit is re-simulated and checked.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
    /// Use only the first K sequences.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    EnergyTrace,
    MaxGrad,
    OpHistogram,
    ParamBands,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub runs: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
