// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cutmap", version, about = "Delay-oriented technology mapping with learned cut-delay classes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Write seeded random AIGs in AIGER format.
    Gen(GenArgs),
    /// Map a circuit and write a Verilog netlist plus a JSON report.
    Map(MapArgs),
    /// Map a circuit and report its critical path.
    Time(MapArgs),
    /// List the priority cuts of every node.
    Cuts(CutsArgs),
    /// Map with shuffled cut orders and write one CSV row per trial.
    Shuffle(ShuffleArgs),
    /// Label critical-path cuts of every circuit in a directory.
    ExtractLabels(ExtractArgs),
    /// Pre-train the graph encoder on a circuit directory.
    Pretrain(PretrainArgs),
    /// Train the cut-delay classifier on a labelled dataset.
    Finetune(FinetuneArgs),
    /// Score a model on a dataset split, or compare cost models with --map.
    Eval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Map(_) => "map",
            Command::Time(_) => "time",
            Command::Cuts(_) => "cuts",
            Command::Shuffle(_) => "shuffle",
            Command::ExtractLabels(_) => "extract-labels",
            Command::Pretrain(_) => "pretrain",
            Command::Finetune(_) => "finetune",
            Command::Eval(_) => "eval",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CostArg {
    Unit,
    Lib,
    Learned,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CutArgs {
    /// Maximum cut size.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Priority cuts kept per node.
    #[arg(long, default_value_t = 8)]
    pub c_limit: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BinArgs {
    /// Number of delay classes.
    #[arg(long = "classes", default_value_t = 8)]
    pub k: usize,
    /// Width of one delay class in ps.
    #[arg(long, default_value_t = 100.0)]
    pub bin_width: f64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub inputs: usize,
    #[arg(long, default_value_t = 120)]
    pub ands: usize,
    /// Number of circuits; seeds run from --seed upwards.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Write binary AIGER (.aig) instead of ASCII (.aag).
    #[arg(long)]
    pub binary: bool,
    /// Output file for a single circuit, otherwise a directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct MapArgs {
    #[arg(long)]
    pub aig: PathBuf,
    /// Genlib library; the bundled 12-cell library when omitted.
    #[arg(long)]
    pub lib: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CostArg::Lib)]
    pub cost: CostArg,
    /// Parameter file, required by --cost learned.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Shuffle each node's cut list with this seed before selection.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub cuts: CutArgs,
    /// Verilog output (map) or report output (time); stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// JSON report path for map; defaults to the output with a .json extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CutsArgs {
    #[arg(long)]
    pub aig: PathBuf,
    #[command(flatten)]
    pub cuts: CutArgs,
    /// Only this node.
    #[arg(long)]
    pub node: Option<u32>,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ShuffleArgs {
    #[arg(long)]
    pub aig: PathBuf,
    #[arg(long)]
    pub lib: Option<PathBuf>,
    /// Shuffled trials in addition to the unshuffled default.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = CostArg::Unit)]
    pub cost: CostArg,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub cuts: CutArgs,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub circuits: PathBuf,
    #[arg(long)]
    pub lib: Option<PathBuf>,
    #[command(flatten)]
    pub bins: BinArgs,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct TrainOverrides {
    /// Model configuration (JSON); missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct PretrainArgs {
    #[arg(long)]
    pub circuits: PathBuf,
    #[command(flatten)]
    pub train: TrainOverrides,
    /// Parameter file to write.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Per-epoch metrics CSV; defaults to the output with a .csv extension.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub circuits: PathBuf,
    #[arg(long)]
    pub lib: Option<PathBuf>,
    /// Starting parameters (e.g. from pretrain); a fresh model when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub circuits: PathBuf,
    #[arg(long)]
    pub lib: Option<PathBuf>,
    /// Trained parameters; required unless --map runs without the learned cost.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Labelled dataset for classification metrics.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Val)]
    pub split: SplitArg,
    /// Map every circuit of the split and compare geomean area and delay.
    #[arg(long)]
    pub map: bool,
    /// Cost models compared by --map; learned is included when --params is given.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub costs: Option<Vec<CostArg>>,
    #[command(flatten)]
    pub cuts: CutArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}
