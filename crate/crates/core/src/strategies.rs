//! Fixed-rule moving-average strategies on search-volume series.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::single_asset_net_returns;
use crate::error::{Error, Result};
use crate::series::WeeklySeries;
use crate::stats::perf_stats;

/// Per-week target weight in `[-1, 1]` for one asset. A weight decided at
/// week `t` is held over the holding window of week `t + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSeries {
    asset: String,
    points: Vec<(NaiveDate, f64)>,
}

impl PositionSeries {
    pub fn new(asset: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        for (i, &(week, w)) in points.iter().enumerate() {
            if !w.is_finite() || w.abs() > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "weight {w} at {week} outside [-1, 1]"
                )));
            }
            if i > 0 && week <= points[i - 1].0 {
                return Err(Error::Unordered { date: week });
            }
        }
        Ok(Self {
            asset: asset.into(),
            points,
        })
    }

    pub fn asset(&self) -> &str {
        &self.asset
    }

    pub fn with_asset(mut self, asset: impl Into<String>) -> Self {
        self.asset = asset.into();
        self
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn get(&self, week: NaiveDate) -> Option<f64> {
        self.points
            .binary_search_by_key(&week, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }
}

fn preis_weight(current: f64, past: &[f64]) -> f64 {
    // k * (current - mean(past)), summed as differences to limit cancellation
    let diff: f64 = past.iter().map(|p| current - p).sum();
    let scale: f64 = past.iter().map(|p| current.abs() + p.abs()).sum();
    if diff.abs() <= 1e-12 * scale {
        0.0
    } else if diff > 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Contrarian moving-average rule: short when the series sits above its
/// trailing `k`-week mean, long when below, flat on a tie (up to floating
/// rounding).
pub fn preis_signal(svi: &WeeklySeries, k: usize) -> Result<PositionSeries> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if svi.len() <= k {
        return Err(Error::InsufficientHistory {
            needed: k + 1,
            available: svi.len(),
        });
    }
    let v = svi.values();
    let points = (k..v.len())
        .map(|t| (svi.week(t), preis_weight(v[t], &v[t - k..t])))
        .collect();
    PositionSeries::new(svi.id(), points)
}

/// Backtested t-stat of the single-asset moving-average rule for each `k`.
/// Weeks without a priced next holding window are skipped; a strategy that
/// never trades scores 0.
pub fn k_scan(
    svi: &WeeklySeries,
    asset_returns: &WeeklySeries,
    ks: &[usize],
    cost_bps: f64,
) -> Result<Vec<(usize, f64)>> {
    ks.par_iter()
        .map(|&k| {
            let positions = preis_signal(svi, k)?.with_asset(asset_returns.id());
            let net = single_asset_net_returns(&positions, asset_returns, cost_bps)?;
            Ok((k, perf_stats(&net)?.tstat.unwrap_or(0.0)))
        })
        .collect()
}

pub fn write_k_scan_csv(scan: &[(usize, f64)], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "tstat"])?;
    for (k, t) in scan {
        w.write_record([k.to_string(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Equal-weight average of several position series for one asset, over the
/// weeks where every component has a position.
pub fn ensemble_positions(signals: &[PositionSeries]) -> Result<PositionSeries> {
    let Some(first) = signals.first() else {
        return Err(Error::EmptyInput("signals"));
    };
    if let Some(other) = signals.iter().find(|s| s.asset != first.asset) {
        return Err(Error::MixedAssets(first.asset.clone(), other.asset.clone()));
    }
    let mut sums: BTreeMap<NaiveDate, (usize, f64)> =
        first.points.iter().map(|&(w, v)| (w, (1, v))).collect();
    for s in &signals[1..] {
        for &(week, v) in &s.points {
            if let Some(entry) = sums.get_mut(&week) {
                entry.0 += 1;
                entry.1 += v;
            }
        }
    }
    let n = signals.len();
    let points = sums
        .into_iter()
        .filter(|(_, (count, _))| *count == n)
        .map(|(week, (_, sum))| (week, (sum / n as f64).clamp(-1.0, 1.0)))
        .collect();
    PositionSeries::new(first.asset.clone(), points)
}
