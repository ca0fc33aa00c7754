use std::path::{Path, PathBuf};

use chrono::Weekday;
use serde::{Deserialize, Serialize};
use trendcheck::{FeatureMode, WalkForwardConfig, DEFAULT_MIN_OVERLAP};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PreisSingle,
    PreisEnsemble,
    Learner,
}

/// Inclusive range of moving-average lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KRange {
    pub start: usize,
    pub end: usize,
}

impl KRange {
    pub fn values(self) -> Vec<usize> {
        (self.start..=self.end).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub universe: Vec<String>,
    pub price_dir: PathBuf,
    pub svi_dir: PathBuf,
    pub keyword_sets: Vec<String>,
    pub mode: Mode,
    /// `None` runs all three feature modes.
    pub feature_mode: Option<FeatureMode>,
    pub binary: bool,
    pub lags: usize,
    pub median_window: usize,
    pub k: usize,
    pub k_range: KRange,
    pub cost_bps: f64,
    pub threshold: f64,
    pub min_overlap: usize,
    pub entry_day: Weekday,
    pub exit_day: Weekday,
    pub walk_forward: WalkForwardConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            universe: Vec::new(),
            price_dir: PathBuf::from("prices"),
            svi_dir: PathBuf::from("svi"),
            keyword_sets: Vec::new(),
            mode: Mode::PreisEnsemble,
            feature_mode: None,
            binary: false,
            lags: 4,
            median_window: 26,
            k: 10,
            k_range: KRange { start: 1, end: 100 },
            cost_bps: 2.0,
            threshold: 1.96,
            min_overlap: DEFAULT_MIN_OVERLAP,
            entry_day: Weekday::Mon,
            exit_day: Weekday::Fri,
            walk_forward: WalkForwardConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file. Relative data paths are resolved against the
    /// directory holding the file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.price_dir, &mut cfg.svi_dir, &mut cfg.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// The lengths scanned or averaged over; a single-rule run uses `k` only.
    pub fn ks(&self) -> Vec<usize> {
        match self.mode {
            Mode::PreisSingle => vec![self.k],
            _ => self.k_range.values(),
        }
    }

    pub fn feature_modes(&self) -> Vec<FeatureMode> {
        self.feature_mode
            .map_or_else(|| FeatureMode::ALL.to_vec(), |m| vec![m])
    }

    pub fn validate(&self) -> Vec<CliError> {
        let mut problems = Vec::new();
        let mut bad = |msg: String| problems.push(CliError::Config(msg));
        if self.k == 0 {
            bad("k must be at least 1".into());
        }
        if self.k_range.start == 0 || self.k_range.start > self.k_range.end {
            bad(format!(
                "k_range {}..={} must be a nonempty range of positive lengths",
                self.k_range.start, self.k_range.end
            ));
        }
        if !(self.cost_bps >= 0.0 && self.cost_bps.is_finite()) {
            bad(format!(
                "cost_bps {} must be a finite value >= 0",
                self.cost_bps
            ));
        }
        if let Err(e) = self.walk_forward.validate() {
            bad(e.to_string());
        }
        problems
    }
}
