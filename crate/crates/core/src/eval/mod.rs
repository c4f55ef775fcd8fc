//! Experiments, metrics and reports.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod report;

pub use config::{DataSource, Mode, RunConfig};
pub use experiment::{load_source, repeat_seed, run_experiment, run_repeat, ExperimentOutput, RepeatOutcome, Source};
pub use metrics::{compute_metrics, mean_std, Confusion, Metrics, UndefinedFlags, METRIC_NAMES};
pub use model::{concat_views, load_model, read_embeddings, save_model, write_embeddings, Model};
pub use report::{parse_report, MetricsReport, SummaryRow};
