use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Surprisal and attention probing of GPT-2 checkpoints.
#[derive(Debug, Parser)]
#[command(name = "interfere", version)]
pub struct Cli {
    /// Worker threads (default: one per core). 1 gives the reference ordering.
    #[arg(long, global = true)]
    pub(crate) workers: Option<usize>,

    #[command(subcommand)]
    pub(crate) command: Command,
}

#[derive(Debug, Subcommand)]
pub(crate) enum Command {
    /// Per-word surprisal of sentences.
    Surprisal(SurprisalArgs),
    /// Score every attention head on a dependency relation.
    FindHeads(FindHeadsArgs),
    /// Run a factorial interference experiment on a stimulus file.
    Experiment(ExperimentArgs),
    /// Count annotated agreement errors by subject number and distractor type.
    CountCorpus(CountCorpusArgs),
}

#[derive(Debug, Clone, Args)]
pub(crate) struct ModelArgs {
    /// Safetensors checkpoint.
    #[arg(long)]
    pub(crate) checkpoint: PathBuf,
    /// Model config JSON (default: 12-layer 124M GPT-2).
    #[arg(long)]
    pub(crate) config: Option<PathBuf>,
    /// vocab.json (default: next to the checkpoint).
    #[arg(long)]
    pub(crate) vocab: Option<PathBuf>,
    /// merges.txt (default: next to the checkpoint).
    #[arg(long)]
    pub(crate) merges: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub(crate) struct OutArgs {
    /// Directory for CSV/JSON outputs and the run manifest.
    #[arg(long, default_value = ".")]
    pub(crate) out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub(crate) struct SurprisalArgs {
    #[command(flatten)]
    pub(crate) model: ModelArgs,
    #[command(flatten)]
    pub(crate) out: OutArgs,
    /// A sentence given inline.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub(crate) text: Option<String>,
    /// A file with one sentence per line.
    #[arg(long)]
    pub(crate) input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub(crate) struct FindHeadsArgs {
    #[command(flatten)]
    pub(crate) model: ModelArgs,
    #[command(flatten)]
    pub(crate) out: OutArgs,
    /// CoNLL-U treebank.
    #[arg(long, conflicts_with = "reflexive", required_unless_present = "reflexive")]
    pub(crate) conllu: Option<PathBuf>,
    /// Reflexive JSONL: {text, antecedent_word_index, anaphor_word_index}.
    #[arg(long)]
    pub(crate) reflexive: Option<PathBuf>,
    /// Dependency label to score (required with --conllu).
    #[arg(long)]
    pub(crate) relation: Option<String>,
    /// Use this baseline proportion instead of the corpus's modal offset share.
    #[arg(long)]
    pub(crate) baseline: Option<f64>,
    /// Let the argmax land on the governor's own token.
    #[arg(long)]
    pub(crate) include_self: bool,
    /// Ignore punctuation when computing word offsets.
    #[arg(long)]
    pub(crate) skip_punct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub(crate) enum Mode {
    /// Subject-verb agreement (default head 4/3).
    Agreement,
    /// Reflexive-antecedent agreement (default head 1/5).
    Reflexive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum AnchorArg {
    First,
    Last,
}

#[derive(Debug, Args)]
pub(crate) struct ExperimentArgs {
    #[command(flatten)]
    pub(crate) model: ModelArgs,
    #[command(flatten)]
    pub(crate) out: OutArgs,
    /// Stimulus JSONL.
    #[arg(long)]
    pub(crate) stimuli: PathBuf,
    #[arg(long, value_enum, default_value = "agreement")]
    pub(crate) mode: Mode,
    #[arg(long)]
    pub(crate) layer: Option<usize>,
    #[arg(long)]
    pub(crate) head: Option<usize>,
    /// Subtoken of the critical word whose attention row is measured.
    #[arg(long, value_enum, default_value = "first")]
    pub(crate) anchor: AnchorArg,
    /// Include the word after the critical word in surprisal.
    #[arg(long)]
    pub(crate) spillover: bool,
}

#[derive(Debug, Args)]
pub(crate) struct CountCorpusArgs {
    #[command(flatten)]
    pub(crate) out: OutArgs,
    /// Annotated sentence JSONL.
    #[arg(long)]
    pub(crate) input: PathBuf,
}

