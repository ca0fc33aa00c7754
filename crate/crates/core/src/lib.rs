//! Walk-forward backtesting of search-volume and price-return predictors
//! with explicit guards against look-ahead and data-snooping bias.
//!
//! The pipeline: parse and stitch search-volume exports ([`ingest`]), form
//! weekly holding-window returns ([`series`]), derive positions either from
//! a fixed moving-average rule ([`strategies`]) or from a walk-forward tree
//! ensemble over lagged features ([`features`], [`learner`]), run them
//! through a cost-aware ledger ([`backtest`]) and summarize ([`stats`]).

pub mod backtest;
pub mod error;
pub mod features;
pub mod ingest;
pub mod learner;
pub mod series;
pub mod stats;
pub mod strategies;

pub use backtest::{equity_curve, priced_positions, run_backtest, BacktestLedger, LedgerRow};
pub use error::{Error, Result};
pub use features::{
    build_features, leakage_audit, FeatureMatrix, FeatureMode, FeatureSpec, LeakageReport,
    RawInputs,
};
pub use ingest::{
    keyword_slug, load_keyword_set, parse_svi_csv, stitch_windows, KeywordSet, RawSviWindow,
    StitchedSvi, DEFAULT_MIN_OVERLAP,
};
pub use learner::{
    anti_lookahead_check, anti_lookahead_check_with, walk_forward, BaggedTrees, LookaheadReport,
    PositionModel, WalkForwardConfig,
};
pub use series::{
    align, iso_week_end, read_price_csv, read_weekly_csv, rolling_mean, rolling_median,
    weekly_return, write_weekly_csv, DailyPriceSeries, WeeklyReturns, WeeklySeries,
};
pub use stats::{null_calibration, perf_stats, wilcoxon_ranksum, NullCalibration, PerfStats};
pub use strategies::{ensemble_positions, k_scan, preis_signal, PositionSeries};
