//! Learner inputs built from lagged weekly returns and search-volume
//! changes, with an optional rolling-median binary reduction.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{WeeklySeries, WEEK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    ReturnsOnly,
    GtOnly,
    Both,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [
        FeatureMode::Both,
        FeatureMode::GtOnly,
        FeatureMode::ReturnsOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::ReturnsOnly => "returns_only",
            FeatureMode::GtOnly => "gt_only",
            FeatureMode::Both => "both",
        }
    }

    pub fn uses_svi(self) -> bool {
        self != FeatureMode::ReturnsOnly
    }

    fn uses_returns(self) -> bool {
        self != FeatureMode::GtOnly
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub mode: FeatureMode,
    pub lags: usize,
    pub binary: bool,
    pub median_window: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            mode: FeatureMode::ReturnsOnly,
            lags: 4,
            binary: false,
            median_window: 26,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Return,
    SviChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Column {
    source: Source,
    lag: usize,
}

impl Column {
    fn name(self, binary: bool) -> String {
        let base = match self.source {
            Source::Return => format!("ret_lag{}", self.lag),
            Source::SviChange => format!("svi_chg_lag{}", self.lag),
        };
        if binary {
            base + "_bin"
        } else {
            base
        }
    }
}

fn columns(spec: &FeatureSpec) -> Vec<Column> {
    let mut cols = Vec::new();
    if spec.mode.uses_returns() {
        cols.extend((1..=spec.lags).map(|lag| Column {
            source: Source::Return,
            lag,
        }));
    }
    if spec.mode.uses_svi() {
        cols.extend((1..=spec.lags).map(|lag| Column {
            source: Source::SviChange,
            lag,
        }));
    }
    cols
}

/// Raw data a feature matrix is computed from.
#[derive(Debug, Clone, Copy)]
pub struct RawInputs<'a> {
    pub returns: &'a WeeklySeries,
    pub svi: Option<&'a WeeklySeries>,
}

impl RawInputs<'_> {
    fn raw_value(&self, col: Column, week: NaiveDate) -> Option<f64> {
        let at = week - WEEK * col.lag as i32;
        match col.source {
            Source::Return => self.returns.get(at),
            Source::SviChange => {
                let svi = self.svi?;
                let (now, before) = (svi.get(at)?, svi.get(at - WEEK)?);
                (before != 0.0).then(|| now / before - 1.0)
            }
        }
    }

    /// Feature value at `week`, using only data at or before `week`.
    fn value(&self, col: Column, spec: &FeatureSpec, week: NaiveDate) -> Option<f64> {
        let x = self.raw_value(col, week)?;
        if !spec.binary {
            return Some(x);
        }
        // 1 when more than half of the trailing window lies strictly below x:
        // x above the median for odd windows, above the upper central value
        // for even ones; ties with the median give 0
        let mut below = 0;
        for j in 1..=spec.median_window {
            if self.raw_value(col, week - WEEK * j as i32)? < x {
                below += 1;
            }
        }
        Some(if 2 * below > spec.median_window {
            1.0
        } else {
            0.0
        })
    }
}

/// Rows ordered by decision week; the target of a row is the return of the
/// holding window that follows its decision week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub asset: String,
    pub columns: Vec<String>,
    pub weeks: Vec<NaiveDate>,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub spec: FeatureSpec,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Rows with decision week strictly before `cut`.
    pub fn truncated(&self, cut: NaiveDate) -> Self {
        let keep = self.weeks.partition_point(|w| *w < cut);
        Self {
            asset: self.asset.clone(),
            columns: self.columns.clone(),
            weeks: self.weeks[..keep].to_vec(),
            rows: self.rows[..keep].to_vec(),
            targets: self.targets[..keep].to_vec(),
            spec: self.spec,
        }
    }

    /// Applies `f(column, value)` to every feature cell.
    pub fn map_features(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.rows {
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(j, *v);
            }
        }
        out
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["week_end".to_string()];
        header.extend(self.columns.iter().cloned());
        header.push("target".into());
        w.write_record(&header)?;
        for ((week, row), target) in self.weeks.iter().zip(&self.rows).zip(&self.targets) {
            let mut record = vec![week.to_string()];
            record.extend(row.iter().map(f64::to_string));
            record.push(target.to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn validate(spec: &FeatureSpec, svi: Option<&WeeklySeries>) -> Result<()> {
    if spec.lags == 0 {
        return Err(Error::InvalidParameter("lags must be at least 1".into()));
    }
    if spec.binary && spec.median_window < 2 {
        return Err(Error::InvalidParameter(
            "median_window must be at least 2".into(),
        ));
    }
    if spec.mode.uses_svi() && svi.is_none() {
        return Err(Error::MissingSvi(spec.mode.as_str()));
    }
    Ok(())
}

/// Builds the feature matrix for one asset on the weekly grid of `returns`.
///
/// Return features are `r(t - lag)`; search-volume features are relative
/// changes `s(t - lag) / s(t - lag - 1) - 1`, which cancel any global scale.
/// Rows where a feature or the target is unavailable (including a zero
/// search-volume denominator) are dropped.
pub fn build_features(
    returns: &WeeklySeries,
    svi: Option<&WeeklySeries>,
    spec: FeatureSpec,
) -> Result<FeatureMatrix> {
    validate(&spec, svi)?;
    let raw = RawInputs { returns, svi };
    let cols = columns(&spec);
    let (mut weeks, mut rows, mut targets) = (Vec::new(), Vec::new(), Vec::new());
    for week in returns.weeks() {
        let Some(target) = returns.get(week + WEEK) else {
            continue;
        };
        let row: Option<Vec<f64>> = cols.iter().map(|&c| raw.value(c, &spec, week)).collect();
        if let Some(row) = row {
            weeks.push(week);
            rows.push(row);
            targets.push(target);
        }
    }
    if rows.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: spec.lags + 2 + if spec.binary { spec.median_window } else { 0 },
            available: returns.len(),
        });
    }
    Ok(FeatureMatrix {
        asset: returns.id().to_string(),
        columns: cols.iter().map(|c| c.name(spec.binary)).collect(),
        weeks,
        rows,
        targets,
        spec,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageViolation {
    pub week: NaiveDate,
    pub column: String,
    pub stored: f64,
    pub recomputed: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub violations: Vec<LeakageViolation>,
}

impl LeakageReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn flagged_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.violations.iter().map(|v| v.column.as_str()).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }
}

/// Recomputes every feature cell from the raw inputs truncated at the row's
/// decision week and reports cells that differ bitwise.
pub fn leakage_audit(fm: &FeatureMatrix, raw: RawInputs<'_>) -> LeakageReport {
    let cols = columns(&fm.spec);
    let mut violations = Vec::new();
    for (week, row) in fm.weeks.iter().zip(&fm.rows) {
        let returns = raw.returns.truncated(*week);
        let svi = raw.svi.map(|s| s.truncated(*week));
        let truncated = RawInputs {
            returns: &returns,
            svi: svi.as_ref(),
        };
        for (j, &stored) in row.iter().enumerate() {
            let recomputed = cols
                .get(j)
                .and_then(|&c| truncated.value(c, &fm.spec, *week));
            if recomputed.map(f64::to_bits) != Some(stored.to_bits()) {
                violations.push(LeakageViolation {
                    week: *week,
                    column: fm.columns[j].clone(),
                    stored,
                    recomputed,
                });
            }
        }
    }
    LeakageReport { violations }
}
