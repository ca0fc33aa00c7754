//! Walk-forward learner: bagged shallow regression trees retrained on a
//! sliding calibration window, plus the look-ahead audit.

mod tree;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::strategies::PositionSeries;

pub use tree::RegressionTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkForwardConfig {
    pub calibration_weeks: usize,
    pub retrain_every: usize,
    pub ensemble_size: usize,
    pub tree_depth: usize,
    pub subsample_fraction: f64,
    pub seed: u64,
}

impl Default for WalkForwardConfig {
    fn default() -> Self {
        Self {
            calibration_weeks: 26,
            retrain_every: 1,
            ensemble_size: 100,
            tree_depth: 2,
            subsample_fraction: 0.8,
            seed: 0,
        }
    }
}

impl WalkForwardConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if self.calibration_weeks < 10 {
            return bad("calibration_weeks must be at least 10");
        }
        if self.ensemble_size == 0 {
            return bad("ensemble_size must be at least 1");
        }
        if self.retrain_every == 0 {
            return bad("retrain_every must be at least 1");
        }
        if self.tree_depth == 0 {
            return bad("tree_depth must be at least 1");
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return bad("subsample_fraction must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Anything that turns a feature matrix into positions.
pub trait PositionModel: Sync {
    fn positions(&self, fm: &FeatureMatrix) -> Result<PositionSeries>;
}

/// Bagged regression trees on the sign of the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaggedTrees {
    pub config: WalkForwardConfig,
}

impl BaggedTrees {
    pub fn new(config: WalkForwardConfig) -> Self {
        Self { config }
    }
}

impl PositionModel for BaggedTrees {
    fn positions(&self, fm: &FeatureMatrix) -> Result<PositionSeries> {
        walk_forward(fm, &self.config)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Stateless per-tree generator keyed by `(seed, asset, week, tree)`.
fn tree_rng(seed: u64, asset: &str, week: NaiveDate, tree: usize) -> ChaCha8Rng {
    let mut key = splitmix64(seed);
    key = splitmix64(key ^ fnv1a(asset.as_bytes()));
    key = splitmix64(key ^ week.num_days_from_ce() as u64);
    key = splitmix64(key ^ tree as u64);
    ChaCha8Rng::seed_from_u64(key)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn train_ensemble(
    fm: &FeatureMatrix,
    cfg: &WalkForwardConfig,
    rows: std::ops::Range<usize>,
    week: NaiveDate,
) -> Vec<RegressionTree> {
    let x = &fm.rows[rows.clone()];
    let y: Vec<f64> = fm.targets[rows].iter().map(|&t| sign(t)).collect();
    let n = x.len();
    let draws = ((cfg.subsample_fraction * n as f64).round() as usize).max(1);
    (0..cfg.ensemble_size)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(cfg.seed, &fm.asset, week, t);
            let sample: Vec<usize> = (0..draws).map(|_| rng.random_range(0..n)).collect();
            RegressionTree::fit(x, &y, &sample, cfg.tree_depth)
        })
        .collect()
}

/// Out-of-sample positions for every row from `calibration_weeks` on.
///
/// The model deciding at row `i` is trained on rows
/// `[i - calibration_weeks, i)` only, refitted every `retrain_every` rows.
/// Each tree votes with the sign of its prediction; the position is the
/// mean vote.
pub fn walk_forward(fm: &FeatureMatrix, cfg: &WalkForwardConfig) -> Result<PositionSeries> {
    cfg.validate()?;
    let cal = cfg.calibration_weeks;
    if fm.n_rows() < cal + 1 {
        return Err(Error::InsufficientHistory {
            needed: cal + 1,
            available: fm.n_rows(),
        });
    }
    let mut model: Vec<RegressionTree> = Vec::new();
    let mut points = Vec::with_capacity(fm.n_rows() - cal);
    for i in cal..fm.n_rows() {
        if (i - cal).is_multiple_of(cfg.retrain_every) {
            model = train_ensemble(fm, cfg, i - cal..i, fm.weeks[i]);
        }
        let votes: f64 = model.iter().map(|t| sign(t.predict(&fm.rows[i]))).sum();
        points.push((fm.weeks[i], (votes / model.len() as f64).clamp(-1.0, 1.0)));
    }
    PositionSeries::new(fm.asset.clone(), points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookaheadMismatch {
    pub week: NaiveDate,
    pub full: f64,
    pub truncated: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LookaheadReport {
    pub cut: Option<NaiveDate>,
    pub mismatches: Vec<LookaheadMismatch>,
}

impl LookaheadReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compares positions for decision weeks before `cut` computed from the full
/// matrix with those computed from the matrix truncated at `cut`.
pub fn anti_lookahead_check_with(
    model: &dyn PositionModel,
    fm: &FeatureMatrix,
    cut: NaiveDate,
) -> LookaheadReport {
    let Ok(full) = model.positions(fm) else {
        return LookaheadReport {
            cut: Some(cut),
            mismatches: Vec::new(),
        };
    };
    let truncated = model.positions(&fm.truncated(cut)).ok();
    let mismatches = full
        .points()
        .iter()
        .filter(|(week, _)| *week < cut)
        .filter_map(|&(week, w)| {
            let other = truncated.as_ref().and_then(|p| p.get(week));
            (other.map(f64::to_bits) != Some(w.to_bits())).then_some(LookaheadMismatch {
                week,
                full: w,
                truncated: other,
            })
        })
        .collect();
    LookaheadReport {
        cut: Some(cut),
        mismatches,
    }
}

pub fn anti_lookahead_check(
    fm: &FeatureMatrix,
    cfg: &WalkForwardConfig,
    cut: NaiveDate,
) -> LookaheadReport {
    anti_lookahead_check_with(&BaggedTrees::new(*cfg), fm, cut)
}
