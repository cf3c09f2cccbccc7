use std::path::PathBuf;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand};

use zoorank_core::pipeline::DataFormat;
use zoorank_core::{Metric, SearchRequest, Strategy};

#[derive(Debug, Parser)]
#[command(name = "zoorank", version, about = "Search a classifier zoo and rank the results per class")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and evaluate a budget of configurations, then write the results file.
    Search(SearchArgs),
    /// Print runs of a results file ranked by one metric.
    Report(ReportArgs),
    /// Serve the HTTP API (and optionally the dashboard's static files).
    Serve(ServeArgs),
    /// List the architecture templates with their parameter counts.
    Templates(TemplatesArgs),
}

fn strategy_parser() -> impl TypedValueParser<Value = Strategy> {
    PossibleValuesParser::new(Strategy::ALL.map(Strategy::name)).map(|s| s.parse::<Strategy>().expect("listed"))
}

fn format_parser() -> impl TypedValueParser<Value = DataFormat> {
    PossibleValuesParser::new(["cifar-binary", "csv"]).map(|s| s.parse::<DataFormat>().expect("listed"))
}

fn metric_parser() -> impl TypedValueParser<Value = Metric> {
    PossibleValuesParser::new(Metric::ALL.map(Metric::name)).map(|s| s.parse::<Metric>().expect("listed"))
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Dataset file; relative paths are resolved against $AUTOCL_DATA_DIR when set.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = format_parser())]
    pub format: DataFormat,
    /// Number of configurations to evaluate.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub budget: u32,
    #[arg(long, value_parser = strategy_parser())]
    pub strategy: Strategy,
    #[arg(long, default_value_t = SearchRequest::DEFAULT_SEED)]
    pub seed: u64,
    /// Fraction of every class held out for testing.
    #[arg(long, default_value_t = SearchRequest::DEFAULT_TEST_FRACTION)]
    pub test_fraction: f64,
    /// Results file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Stratified subsample of this many samples, taken before splitting.
    #[arg(long, conflicts_with = "per_class")]
    pub subset: Option<usize>,
    /// Exactly this many samples of every class, taken before splitting.
    #[arg(long)]
    pub per_class: Option<usize>,
    /// CSV column holding the class label.
    #[arg(long, default_value = SearchRequest::DEFAULT_LABEL_COLUMN)]
    pub label_column: String,
    /// Store measured wall time per run (makes the output non-reproducible).
    #[arg(long)]
    pub record_timing: bool,
    /// Suppress per-run progress on standard error.
    #[arg(long, short)]
    pub quiet: bool,
}

impl SearchArgs {
    pub fn request(&self) -> SearchRequest {
        SearchRequest {
            data: zoorank_core::pipeline::resolve_data_path(&self.data),
            format: self.format,
            label_column: self.label_column.clone(),
            budget: self.budget as usize,
            strategy: self.strategy,
            seed: self.seed,
            test_fraction: self.test_fraction,
            subset: self.subset,
            per_class: self.per_class,
            record_timing: self.record_timing,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_parser = metric_parser(), default_value = "accuracy")]
    pub metric: Metric,
    /// Rank by the one-vs-rest metric of this class instead of the overall value.
    #[arg(long)]
    pub class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory receiving the results file of every finished job.
    #[arg(long, default_value = "results")]
    pub results_dir: PathBuf,
    /// Results file to serve until the first job completes.
    #[arg(long)]
    pub load: Option<PathBuf>,
    /// Directory with the built dashboard, served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TemplatesArgs {
    /// Per-sample input shape, e.g. 3,32,32.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 32, 32])]
    pub input_shape: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
}
