//! Portfolio ledger: equal-weight aggregation of per-asset positions,
//! turnover costs, exposures and additive cumulated performance.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{WeeklySeries, WEEK};
use crate::strategies::PositionSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    /// Week whose holding window earns `gross_return`; positions were
    /// decided the week before.
    pub week_end: NaiveDate,
    pub gross_return: f64,
    pub cost: f64,
    pub net_return: f64,
    pub net_exposure: f64,
    pub gross_exposure: f64,
    pub n_stocks: usize,
    pub cumulated: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BacktestLedger {
    pub rows: Vec<LedgerRow>,
}

impl BacktestLedger {
    pub fn net_returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.net_return).collect()
    }

    pub fn total_cost(&self) -> f64 {
        self.rows.iter().map(|r| r.cost).sum()
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "week_end",
            "gross_return",
            "cost",
            "net_return",
            "net_exposure",
            "gross_exposure",
            "n_stocks",
            "cumulated",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.week_end.to_string(),
                r.gross_return.to_string(),
                r.cost.to_string(),
                r.net_return.to_string(),
                r.net_exposure.to_string(),
                r.gross_exposure.to_string(),
                r.n_stocks.to_string(),
                r.cumulated.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the portfolio over every week from the first to the last decision
/// week found in `positions`.
///
/// Assets without a position in some week are flat that week. Active names
/// are equally weighted: `w = position / N` with `N` the number of nonzero
/// positions. Costs are `cost_bps` per unit of absolute weight change,
/// starting from an empty book. Returns are looked up by series id.
pub fn run_backtest(
    positions: &[PositionSeries],
    returns: &[WeeklySeries],
    cost_bps: f64,
) -> Result<BacktestLedger> {
    if !(cost_bps >= 0.0 && cost_bps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cost_bps {cost_bps} must be >= 0"
        )));
    }
    let mut by_asset: BTreeMap<&str, &PositionSeries> = BTreeMap::new();
    for p in positions {
        if by_asset.insert(p.asset(), p).is_some() {
            return Err(Error::InvalidParameter(format!(
                "duplicate positions for {}",
                p.asset()
            )));
        }
    }
    let returns_by_asset: BTreeMap<&str, &WeeklySeries> =
        returns.iter().map(|r| (r.id(), r)).collect();
    let weeks: BTreeSet<NaiveDate> = positions
        .iter()
        .flat_map(|p| p.points().iter().map(|q| q.0))
        .collect();
    let (Some(&first), Some(&last)) = (weeks.first(), weeks.last()) else {
        return Ok(BacktestLedger::default());
    };

    let cost_rate = cost_bps / 1e4;
    let mut previous: BTreeMap<&str, f64> = by_asset.keys().map(|&a| (a, 0.0)).collect();
    let mut rows = Vec::new();
    let mut cumulated = 0.0;
    let mut week = first;
    while week <= last {
        let raw: Vec<(&str, f64)> = by_asset
            .iter()
            .map(|(&a, p)| (a, p.get(week).unwrap_or(0.0)))
            .collect();
        let n_stocks = raw.iter().filter(|(_, p)| *p != 0.0).count();
        let holding = week + WEEK;
        let (mut gross_return, mut turnover, mut net_exposure, mut gross_exposure) =
            (0.0, 0.0, 0.0, 0.0);
        for (asset, p) in raw {
            let w = if n_stocks == 0 {
                0.0
            } else {
                p / n_stocks as f64
            };
            if w != 0.0 {
                let r = returns_by_asset
                    .get(asset)
                    .and_then(|s| s.get(holding))
                    .ok_or_else(|| Error::UnpricedPosition {
                        asset: asset.to_string(),
                        week: holding,
                    })?;
                gross_return += w * r;
            }
            let prev = previous.get_mut(asset).expect("asset registered");
            turnover += (w - *prev).abs();
            *prev = w;
            net_exposure += w;
            gross_exposure += w.abs();
        }
        let cost = cost_rate * turnover;
        let net_return = gross_return - cost;
        cumulated += net_return;
        rows.push(LedgerRow {
            week_end: holding,
            gross_return,
            cost,
            net_return,
            net_exposure,
            gross_exposure,
            n_stocks,
            cumulated,
        });
        week += WEEK;
    }
    Ok(BacktestLedger { rows })
}

/// Cumulated net return per holding week.
pub fn equity_curve(ledger: &BacktestLedger) -> WeeklySeries {
    let start = ledger.rows.first().map(|r| r.week_end).unwrap_or_default();
    WeeklySeries::new(
        "equity",
        start,
        ledger.rows.iter().map(|r| r.cumulated).collect(),
    )
    .expect("ledger values are finite")
}

/// Drops decision weeks whose next holding window has no return.
pub fn priced_positions(positions: &PositionSeries, returns: &WeeklySeries) -> PositionSeries {
    let points = positions
        .points()
        .iter()
        .filter(|(week, _)| returns.get(*week + WEEK).is_some())
        .copied()
        .collect();
    PositionSeries::new(positions.asset(), points).expect("subset of a valid series")
}

/// Net weekly returns of a single-asset strategy over its priced weeks.
pub(crate) fn single_asset_net_returns(
    positions: &PositionSeries,
    returns: &WeeklySeries,
    cost_bps: f64,
) -> Result<Vec<f64>> {
    let priced = priced_positions(positions, returns);
    let ledger = run_backtest(&[priced], std::slice::from_ref(returns), cost_bps)?;
    Ok(ledger.net_returns())
}
