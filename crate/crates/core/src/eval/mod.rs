//! Metrics, Student-t statistics, and the multi-seed experiment harness.

mod experiment;
mod metrics;
mod report;
mod stats;

pub use experiment::{
    evaluate_windows, grid_search, parse_grid, prepare, run_ablation, split_row, train_prepared, GridResult, GridRow,
    Prepared, RunOutcome,
};
pub use metrics::{accuracy, confusion, f1, grouped_metrics, mae, mse, precision, recall, Confusion};
pub use report::{format_percent_interval, EvalReport, MetricRow, MetricSample, RunFailure};
pub use stats::{
    confidence_interval, ln_gamma, regularized_incomplete_beta, student_t_cdf, student_t_quantile, welch_t_test,
    Interval, WelchResult,
};
