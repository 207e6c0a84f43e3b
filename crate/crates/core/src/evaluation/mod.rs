//! Zero-shot evaluation protocol, statistics and timing.

pub mod benchmark;
pub mod report;
pub mod score;
pub mod split;
pub mod stats;
pub mod timing;

pub use benchmark::{
    default_c_grid, grid_search_c, run_benchmark, run_in_sample, BenchmarkConfig, BenchmarkReport, CellResult,
    GridSearchResult, NamedDataset,
};
pub use score::relative_mse;
pub use split::{assign_folds, make_splits, FoldAssignment, ZeroShotSplit};
pub use stats::{friedman_ranks, nemenyi_cd, nemenyi_test, rank_row, FriedmanResult, NemenyiResult};
pub use timing::{run_timing, TimingOptions, TimingReport, TimingRow, TIMING_METHODS};
