use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lemmings_core::{AnchorMethod, Hyper, Iterations, SolverKind, SolverSpec, Task};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "lemmings", version, about = "Multiple-instance classification and ranking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Train one model and write it to a model file.
    Train(TrainArgs),
    /// Score bags with a saved model.
    Predict(PredictArgs),
    /// Cross-validate a solver configuration.
    Cv(CvArgs),
    /// Turn annotated protein sequences into a bag file.
    BagsFromFasta(FastaArgs),
    /// Re-execute a command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Musk,
    Bags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Class,
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kmeans,
    Random,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Bags)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long, value_enum)]
    pub solver: Family,
    /// SSGO iterations; defaults to 50 per training bag.
    #[arg(long)]
    pub iters: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, required_if_eq("solver", "local"))]
    pub anchors: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = Method::Kmeans)]
    pub anchor_method: Method,
    /// Skip feature standardization.
    #[arg(long)]
    pub no_scale: bool,
    /// Append a constant feature after scaling.
    #[arg(long)]
    pub bias: bool,
}

impl SolverArgs {
    pub fn kind(&self) -> SolverKind {
        let task = match self.mode {
            Mode::Class => Task::Classification,
            Mode::Rank => Task::Ranking,
        };
        SolverKind::from_parts(task, self.solver == Family::Local)
    }

    pub fn spec(&self, lambda: f64) -> SolverSpec {
        let kind = self.kind();
        let hyper = if kind.is_local() {
            let method = match self.anchor_method {
                Method::Kmeans => AnchorMethod::KMeans,
                Method::Random => AnchorMethod::Random,
            };
            Hyper::local(lambda, self.anchors.unwrap_or(0), self.sigma, method)
        } else {
            Hyper::linear(lambda)
        };
        let mut spec = SolverSpec::new(kind, hyper);
        spec.iterations = self.iters.map_or(Iterations::DEFAULT, Iterations::Fixed);
        spec.scale = !self.no_scale;
        spec.bias = self.bias;
        spec
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Model file to write; the manifest goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Scores file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub solver: SolverArgs,
    /// Fixed lambda; with `--grid` it is ignored in favour of the grid.
    #[arg(long, required_unless_present = "grid")]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// JSON grid, e.g. {"lambda": [1, 0.1], "anchors": [16, 32], "sigma": [1, 10]}.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub inner_folds: usize,
    /// Leave-one-bag-out instead of k-fold.
    #[arg(long)]
    pub loo: bool,
    /// Assign folds without stratifying by label.
    #[arg(long)]
    pub no_stratify: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// JSON report to write; a text table and the manifest go next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FastaArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, value_enum, default_value_t = Features::Aac)]
    pub features: Features,
    /// Ignore residues outside the 20-letter alphabet.
    #[arg(long)]
    pub skip_unknown: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Features {
    Aac,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the primary output here instead of the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
