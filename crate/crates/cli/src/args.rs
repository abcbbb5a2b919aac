use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fgl_core::instances::{PlantKind, UNIVERSE_BOUND};
use fgl_core::witness_trees::SearchVariant;

#[derive(Debug, Parser)]
#[command(name = "fgl", version, about = "Convolution-3SUM reduction workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded instance file.
    Gen(GenArgs),
    /// Run one pipeline and print its verdict as JSON.
    Solve(SolveArgs),
    /// Measure false positives against their predicted bounds (CSV).
    FpMeasure(FpArgs),
    /// Sweep build and query cost of the witness search structures (CSV).
    Tradeoff(TradeoffArgs),
    /// Run the built-in invariant checks.
    Selftest(SelftestArgs),
}

/// `n=..,universe=..,plant=..` as given to `--gen`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub universe: i64,
    pub plant: Option<PlantKind>,
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut n = None;
        let mut spec = GenSpec { n: 0, universe: UNIVERSE_BOUND, plant: None };
        for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(|| format!("expected key=value, got '{item}'"))?;
            match key.trim() {
                "n" => n = Some(value.parse().map_err(|e| format!("n: {e}"))?),
                "universe" | "u" => spec.universe = value.parse().map_err(|e| format!("universe: {e}"))?,
                "plant" => {
                    spec.plant = match value {
                        "none" => None,
                        other => Some(other.parse()?),
                    }
                }
                other => return Err(format!("unknown generator key '{other}' (expected n, universe, plant)")),
            }
        }
        spec.n = n.ok_or("generator spec needs n=<count>")?;
        Ok(spec)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long = "gen", value_name = "SPEC")]
    pub spec: GenSpec,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pipeline {
    Lemma1Tree,
    MatmulTree,
    HistogramReport,
    HistogramDecide,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "gen"]))]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub pipeline: Pipeline,
    #[arg(long = "in", value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long = "gen", value_name = "SPEC")]
    pub gen: Option<GenSpec>,
    /// Seeds both the generator and the pipeline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Compare the verdict with the brute-force oracle; exit 2 on mismatch.
    #[arg(long)]
    pub check: bool,
    /// Bucket count for tree pipelines, hash range for histogram reporting.
    #[arg(long = "R", value_name = "R")]
    pub r: Option<u64>,
    /// Leaf parameter of the search structures.
    #[arg(long = "X", value_name = "X", default_value_t = 64)]
    pub x: usize,
    #[arg(long, value_parser = SearchVariant::from_str)]
    pub variant: Option<SearchVariant>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scheme: Option<u8>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Tree pipelines: rehash once false positives exceed this times n^2/R.
    #[arg(long)]
    pub fp_budget: Option<f64>,
    /// Tree pipelines: hash redraws allowed after the first.
    #[arg(long)]
    pub max_rehash: Option<usize>,
    /// Route histogram reporting through a split structure.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Per-gap false-positive CSV of histogram reporting.
    #[arg(long, value_name = "FILE")]
    pub fp_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FpMode {
    Lemma1,
    Lemma3,
}

#[derive(Debug, Args)]
pub struct FpArgs {
    #[arg(long, value_enum)]
    pub mode: FpMode,
    /// Instance length; defaults to 2048 (lemma1) or 64 (lemma3).
    #[arg(long)]
    pub n: Option<usize>,
    /// Hash ranges to measure.
    #[arg(long = "R", value_name = "R", value_delimiter = ',')]
    pub r: Vec<u64>,
    /// Per-digit bases; lemma3 only, giving R = base^ell.
    #[arg(long, value_delimiter = ',', conflicts_with = "r")]
    pub base: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub ell: Vec<usize>,
    /// Defaults to 30 (lemma1) or 1000 (lemma3).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = UNIVERSE_BOUND)]
    pub universe: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TradeoffArgs {
    #[arg(long, value_delimiter = ',', value_parser = SearchVariant::from_str, default_value = "ones-split-binary")]
    pub variant: Vec<SearchVariant>,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long = "R", value_name = "R", value_delimiter = ',', default_value = "8")]
    pub r: Vec<usize>,
    /// Leaf parameters to sweep.
    #[arg(long = "X", value_name = "X", value_delimiter = ',', default_value = "16,64,256,1024", num_args = 1..)]
    pub x: Vec<usize>,
    /// Repetitions per point; the median time is reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Witnesses listed per queried position; all when absent.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long, default_value_t = UNIVERSE_BOUND)]
    pub universe: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Random instances per check.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
