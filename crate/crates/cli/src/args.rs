use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "shakk", version, about = "Uncertainty markers in Arabic posts and their engagement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every record of a corpus as uncertain or certain.
    Classify(ClassifyArgs),
    /// Group means and regression models on a labeled corpus.
    Analyze(AnalyzeArgs),
    /// Score predictions against human labels.
    Validate(ValidateArgs),
    /// Draw a stratified annotation sample.
    Sample(SampleArgs),
    /// Generate a synthetic corpus, or run the attenuation experiment.
    Simulate(SimulateArgs),
    /// Re-render saved results.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    /// Corpus file (JSONL or CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Source column for a canonical field, as field=column. Repeatable.
    #[arg(long = "map", value_name = "FIELD=COLUMN")]
    pub field_map: Vec<String>,
    /// Fail on the first malformed row.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub ingest: IngestArgs,
    /// Lexicon TSV; the built-in lexicon is used when unset.
    #[arg(long, env = "SHAKK_LEXICON")]
    pub lexicon: Option<PathBuf>,
    /// Keep alef/ya variants and diacritics distinct.
    #[arg(long)]
    pub no_fold: bool,
    /// Labeled JSONL output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Ols,
    Negbin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterArg {
    AuthorId,
    TweetId,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Labeled JSONL from `classify`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "ols")]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value = "author-id")]
    pub cluster: ClusterArg,
    /// Use CR0 instead of the CR1 small-sample correction.
    #[arg(long)]
    pub cr0: bool,
    /// Also refit without the top fraction of total engagement (OLS only).
    #[arg(long, value_name = "FRACTION")]
    pub drop_top: Option<f64>,
    /// Iteration cap for the negative binomial fit.
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Output directory; the text report goes to stdout when omitted.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write a bar chart of group means.
    #[arg(long, requires = "out_dir")]
    pub svg: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    /// Labeled JSONL with classifier predictions.
    #[arg(long, requires = "gold", conflicts_with = "matrix")]
    pub predictions: Option<PathBuf>,
    /// CSV with tweet_id,human_label.
    #[arg(long, requires = "predictions")]
    pub gold: Option<PathBuf>,
    /// Score a confusion matrix given as TP,FP,FN,TN.
    #[arg(long, value_name = "TP,FP,FN,TN", value_delimiter = ',')]
    pub matrix: Option<Vec<u64>>,
    /// Output directory; the text report goes to stdout when omitted.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// Labeled JSONL from `classify`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub per_stratum: usize,
    #[arg(long)]
    pub seed: u64,
    /// Annotation manifest CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_conflicts_with_subcommands = true)]
pub struct SimulateArgs {
    #[command(subcommand)]
    #[serde(skip)]
    pub action: Option<SimulateAction>,
    #[command(flatten)]
    pub generate: GenerateArgs,
}

#[derive(Debug, Args, Serialize, Default)]
pub struct SimConfigArgs {
    /// TOML simulation config; unset keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config corpus size.
    #[arg(long)]
    pub n_tweets: Option<usize>,
}

#[derive(Debug, Args, Serialize, Default)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub sim: SimConfigArgs,
    /// Corpus JSONL output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth JSON output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimulateAction {
    /// Refit on labels corrupted to a target precision and recall.
    Attenuate(AttenuateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AttenuateArgs {
    #[command(flatten)]
    pub sim: SimConfigArgs,
    #[arg(long, default_value_t = 0.47)]
    pub precision: f64,
    #[arg(long, default_value_t = 1.0)]
    pub recall: f64,
    /// Replace predicted labels with a random permutation of the truth.
    #[arg(long, conflicts_with_all = ["precision", "recall"])]
    pub randomize: bool,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Report JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// results.json files from `analyze` or `validate`; merged in order.
    #[arg(long = "results")]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub svg: bool,
}
