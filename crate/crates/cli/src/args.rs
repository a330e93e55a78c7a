use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use word2rate::analysis::MatrixDraw;
use word2rate::corpus::TargetPolicy;
use word2rate::persistence::VectorKind;
use word2rate::trainer::Mode;

#[derive(Debug, Parser)]
#[command(name = "word2rate", version, about = "Train and analyze rate-matrix word embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count a corpus and write the vocabulary TSV.
    BuildVocab(BuildVocabArgs),
    /// Train embeddings on a corpus and write a checkpoint.
    Train(TrainArgs),
    /// Write word or target vectors from a checkpoint as text.
    Export(ExportArgs),
    /// Print the nearest neighbors of a word.
    Neighbors(NeighborsArgs),
    /// Write the magnitude of long first-order products as CSV.
    Stability(StabilityArgs),
    /// Run a word-order or length probe on sentence embeddings.
    Probe(ProbeArgs),
    /// Sample a corpus from the built-in toy grammar.
    Synth(SynthArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Cbow,
    Cmow,
    Fos,
    Fop,
    Sos,
    HybridFosFop,
    HybridFosSos,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Cbow => Mode::Cbow,
            ModeArg::Cmow => Mode::Cmow,
            ModeArg::Fos => Mode::Fos,
            ModeArg::Fop => Mode::Fop,
            ModeArg::Sos => Mode::Sos,
            ModeArg::HybridFosFop => Mode::HybridFosFop,
            ModeArg::HybridFosSos => Mode::HybridFosSos,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetsArg {
    WithReplacement,
    WithoutReplacement,
}

impl From<TargetsArg> for TargetPolicy {
    fn from(t: TargetsArg) -> TargetPolicy {
        match t {
            TargetsArg::WithReplacement => TargetPolicy::WithReplacement,
            TargetsArg::WithoutReplacement => TargetPolicy::WithoutReplacement,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WhichArg {
    Word,
    Target,
}

impl From<WhichArg> for VectorKind {
    fn from(w: WhichArg) -> VectorKind {
        match w {
            WhichArg::Word => VectorKind::Word,
            WhichArg::Target => VectorKind::Target,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DrawArg {
    Signed,
    Projected,
}

impl From<DrawArg> for MatrixDraw {
    fn from(d: DrawArg) -> MatrixDraw {
        match d {
            DrawArg::Signed => MatrixDraw::Signed,
            DrawArg::Projected => MatrixDraw::Projected,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProbeKind {
    /// Adjacent interior words swapped or not.
    Bshift,
    /// Sentence longer than the median or not.
    Length,
}

#[derive(Debug, Args)]
pub struct LengthArgs {
    /// Shortest sentence kept, in tokens.
    #[arg(long, default_value_t = 10)]
    pub min_len: usize,
    /// Longest sentence kept, in tokens.
    #[arg(long, default_value_t = 20)]
    pub max_len: usize,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    /// Corpus file, one sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Vocabulary TSV to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Minimum token count.
    #[arg(long, default_value_t = 100)]
    pub min_count: u64,
    #[command(flatten)]
    pub lengths: LengthArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus file, one sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Fos)]
    pub mode: ModeArg,
    /// Embedding size [default: 25, or 50 for hybrids]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Rate-matrix step size [default: per mode, e.g. 0.01 for FOS, 0.001 for FOP/SOS]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Context words on each side of the target.
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    /// Negative samples per example.
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// Examples per batch.
    #[arg(long, default_value_t = 1000)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Score left and right contexts separately.
    #[arg(long)]
    pub lr_split: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exponent applied to counts in the negative-sampling distribution.
    #[arg(long, default_value_t = 0.75)]
    pub neg_exponent: f64,
    /// Minimum token count.
    #[arg(long, default_value_t = 100)]
    pub min_count: u64,
    #[command(flatten)]
    pub lengths: LengthArgs,
    /// How target positions are drawn from each sentence.
    #[arg(long, value_enum, default_value_t = TargetsArg::WithReplacement)]
    pub targets: TargetsArg,
    /// Worker threads; the result does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Suppress per-epoch progress lines.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Text vector file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Composed word embeddings or target vectors.
    #[arg(long, value_enum, default_value_t = WhichArg::Word)]
    pub which: WhichArg,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Query word.
    #[arg(long)]
    pub word: String,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 25)]
    pub dim: usize,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001,0.0001")]
    pub epsilons: Vec<f64>,
    /// Longest product length.
    #[arg(long, default_value_t = 20)]
    pub max_len: usize,
    /// Number of random seeds, counted up from `--seed`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Distribution of the random factors.
    #[arg(long, value_enum, default_value_t = DrawArg::Signed)]
    pub draw: DrawArg,
    /// CSV file to write [default: standard output]
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Probe sentences, one per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = ProbeKind::Bshift)]
    pub probe: ProbeKind,
    /// Repetitions with derived seeds; accuracies are averaged.
    #[arg(long, default_value_t = 1)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shortest probe sentence kept [default: the checkpoint's bound]
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Longest probe sentence kept [default: the checkpoint's bound]
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Corpus file to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub sentences: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Mode to check [default: every mode]
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Check only the split objective.
    #[arg(long, conflicts_with = "joint")]
    pub lr_split: bool,
    /// Check only the joint objective.
    #[arg(long)]
    pub joint: bool,
    /// Embedding size; rounded up to a square for CMOW.
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub window: usize,
    #[arg(long, default_value_t = 3)]
    pub negatives: usize,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    /// Largest accepted relative error per coordinate.
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
