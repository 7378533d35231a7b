//! Experiment harness: runtime, bias and mode-count grids written as CSV, the
//! k-NN KL estimator used for bias, and the tree-shrinkage Monte-Carlo check.

mod config;
mod grid;
mod knn;
mod shrinkage;
mod summary;
mod verify;

pub use config::{budget_for, Algorithm, CellSpec, ExperimentConfig, CONFIG_VERSION};
pub use grid::{
    read_csv, run_bias_grid, run_mode_sweep, run_runtime_grid, write_csv, ResultRow, CSV_HEADER,
};
pub use knn::{knn_kl_estimate, DISTANCE_JITTER};
pub use shrinkage::{verify_shrinkage, DepthShrinkage, ShrinkageReport};
pub use summary::{
    kolmogorov_sf, ks_test, linear_r_squared, spearman, summarize, CellSummary, ColumnStats,
    KsResult,
};
pub use verify::{run_suite, CheckOutcome, Suite};
