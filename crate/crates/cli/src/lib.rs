//! Command-line verbs and the local HTTP service for `gam-edit`.

pub mod commands;
pub mod server;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "gam-edit", version, about = "Edit, evaluate and serve binned GAM models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the editing protocol (and an optional UI bundle) on localhost.
    Serve(ServeArgs),
    /// Apply an edit script, committing and confirming every edit.
    Apply(ApplyArgs),
    /// Print original/previous/current metrics for a scope.
    Metrics(MetricsArgs),
    /// Check a model file (and dataset), including its history.
    Validate(DataArgs),
    /// Rewrite a model file in canonical form.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Validation CSV with one column per feature plus the label column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Skip malformed CSV rows instead of rejecting the file.
    #[arg(long)]
    pub lenient: bool,
    /// Name of the label column.
    #[arg(long, default_value = gam_edit::io::DEFAULT_LABEL_COLUMN)]
    pub label_column: String,
    /// Decision threshold for classification metrics.
    #[arg(long, default_value_t = gam_edit::metrics::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
    /// Directory holding the built UI bundle.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Where SaveModel writes the model; without it the model is only returned.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Edit-script JSON file.
    #[arg(long)]
    pub script: PathBuf,
    /// Output model file, written with its history.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict to samples in bins of this term (with --bins or --label).
    #[arg(long)]
    pub term: Option<String>,
    /// Inclusive bin range `FIRST-LAST` or a single bin.
    #[arg(long, requires = "term", conflicts_with = "label")]
    pub bins: Option<String>,
    /// Category label of a categorical term.
    #[arg(long, requires = "term")]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Drop the history block, keeping only the head model.
    #[arg(long)]
    pub no_history: bool,
}
