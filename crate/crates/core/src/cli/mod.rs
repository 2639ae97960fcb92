//! Command-line pipeline: every stage reads and writes plain files.
//!
//! Class and channel numbers are 1-based on the command line.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::Split;
use crate::error::{CsixError, Result};
use crate::manipulation::{Granularity, Mode, OrderingKind, OrderingSource};
use crate::mlp::Init;

pub use commands::run;

#[derive(Debug, Parser)]
#[command(name = "csix", version, about = "Explainable DNN localization on Wi-Fi CSI fingerprints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/test pair.
    Gen(GenArgs),
    /// Train a network on a CSV training set.
    Train(TrainArgs),
    /// Evaluate a model (and optional baselines) on a test set.
    Eval(EvalArgs),
    /// Project inputs or last-hidden activations to 2D with t-SNE.
    Embed(EmbedArgs),
    /// Progressive channel nullification or modification curve.
    Curve(CurveArgs),
    /// Relevance heatmap and JSON for a class pair.
    Explain(ExplainArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// JSON generator config; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for train.csv and test.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Hidden layer widths, comma separated.
    #[arg(long, default_value = "300,280,260", value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Backpropagation epochs.
    #[arg(long, default_value_t = 1500)]
    pub iters: usize,
    /// Pretraining epochs per hidden layer.
    #[arg(long, default_value_t = 30)]
    pub pretrain: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Scaled)]
    pub init: InitArg,
    /// Per-epoch loss CSV; defaults to the model path with a `.loss.csv` extension.
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    /// Scale each channel to [0, 1] by the training set's min/max. The scaler
    /// is stored in the model and applied by every command that loads it.
    #[arg(long)]
    pub min_max: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InitArg {
    Scaled,
    GaussianUnit,
}

impl From<InitArg> for Init {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::Scaled => Init::Scaled,
            InitArg::GaussianUnit => Init::GaussianUnit,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Training set for the baselines.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// `knn`, `knn:k=5`, `svm` or `svm:gamma=0.01,c=1`; repeatable.
    #[arg(long = "baseline")]
    pub baselines: Vec<String>,
    /// Output JSON report.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayerArg {
    Input,
    LastHidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(v: SplitArg) -> Self {
        match v {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AffinityArg {
    Perplexity,
    FixedBandwidth,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV files to embed together; repeatable.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = LayerArg::LastHidden)]
    pub layer: LayerArg,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = AffinityArg::Perplexity)]
    pub affinity: AffinityArg,
    /// Split whose silhouette is reported and drawn in the darker shade.
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub silhouette_on: SplitArg,
    /// Output prefix; writes PREFIX.svg and PREFIX.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Nullify,
    Modify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Channel,
    Subcarrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    PerSample,
    ClassMean,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// True location n (1-based).
    #[arg(long = "true")]
    pub true_class: usize,
    /// Target location m (1-based).
    #[arg(long)]
    pub target: usize,
    /// Ordering: O1 (descending), O2 (ascending), O3 (descending |h'|), O4 (ascending |h'|).
    #[arg(long, value_parser = parse_kind)]
    pub kind: OrderingKind,
    #[arg(long, value_enum, default_value_t = ModeArg::Nullify)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = GranularityArg::Channel)]
    pub granularity: GranularityArg,
    #[arg(long, value_enum, default_value_t = SourceArg::PerSample)]
    pub ordering_source: SourceArg,
    /// Training CSV supplying class statistics; required for `--mode modify`.
    #[arg(long)]
    pub stats_from: Option<PathBuf>,
    /// Output prefix; writes PREFIX.csv and PREFIX.svg.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Input location n (1-based); its samples are explained.
    #[arg(long = "true")]
    pub true_class: usize,
    /// Target location m (1-based).
    #[arg(long)]
    pub target: usize,
    /// Only explain samples of this split.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// One heatmap panel per antenna pair over its subcarriers.
    #[arg(long)]
    pub subcarrier: bool,
    /// Output prefix; writes PREFIX.svg and PREFIX.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<OrderingKind, String> {
    s.parse::<OrderingKind>().map_err(|e| e.to_string())
}

impl From<ModeArg> for Mode {
    fn from(v: ModeArg) -> Self {
        match v {
            ModeArg::Nullify => Mode::Nullify,
            ModeArg::Modify => Mode::Modify,
        }
    }
}

impl From<GranularityArg> for Granularity {
    fn from(v: GranularityArg) -> Self {
        match v {
            GranularityArg::Channel => Granularity::Channel,
            GranularityArg::Subcarrier => Granularity::Subcarrier,
        }
    }
}

impl From<SourceArg> for OrderingSource {
    fn from(v: SourceArg) -> Self {
        match v {
            SourceArg::PerSample => OrderingSource::PerSample,
            SourceArg::ClassMean => OrderingSource::ClassMean,
        }
    }
}

/// A `--baseline` value.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline {
    Knn { k: usize },
    Svm { gamma: Option<f64>, c: f64 },
}

impl std::str::FromStr for Baseline {
    type Err = CsixError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, opts) = s.split_once(':').unwrap_or((s, ""));
        let mut pairs = Vec::new();
        for kv in opts.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CsixError::Config(format!("baseline option `{kv}` is not key=value")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| CsixError::Config(format!("baseline option `{kv}` has a non-numeric value")))?;
            pairs.push((k.to_ascii_lowercase(), v));
        }
        let unknown = |k: &str| CsixError::Config(format!("unknown option `{k}` for baseline `{name}`"));
        match name {
            "knn" => {
                let mut k = crate::baselines::DEFAULT_K;
                for (key, v) in pairs {
                    match key.as_str() {
                        "k" if v >= 1.0 && v.fract() == 0.0 => k = v as usize,
                        "k" => return Err(CsixError::Config("k must be a positive integer".into())),
                        other => return Err(unknown(other)),
                    }
                }
                Ok(Baseline::Knn { k })
            }
            "svm" => {
                let (mut gamma, mut c) = (None, 1.0);
                for (key, v) in pairs {
                    match key.as_str() {
                        "gamma" => gamma = Some(v),
                        "c" => c = v,
                        other => return Err(unknown(other)),
                    }
                }
                Ok(Baseline::Svm { gamma, c })
            }
            other => Err(CsixError::Config(format!(
                "unknown baseline `{other}` (expected knn or svm)"
            ))),
        }
    }
}

impl Baseline {
    pub fn scheme(&self) -> String {
        match self {
            Baseline::Knn { k } => format!("knn (k={k})"),
            Baseline::Svm { .. } => "svm (rbf, one-vs-all)".into(),
        }
    }
}

/// Applies `CSIX_THREADS` to the global rayon pool when set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("CSIX_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CsixError::Config(format!("CSIX_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CsixError::Config(format!("cannot size the thread pool: {e}")))
}
