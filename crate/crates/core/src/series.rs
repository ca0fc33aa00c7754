//! Weekly and daily time-series types and the elementary transforms the
//! rest of the crate is built on.
//!
//! Weeks are identified by their ISO week-ending date (the Sunday closing a
//! Monday..Sunday calendar week). A [`WeeklySeries`] is stored as a start
//! week plus a dense vector of values, so the 7-day spacing and the absence
//! of interior gaps hold by construction.

use std::io::{Read, Write};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) const WEEK: Duration = Duration::days(7);

/// The Sunday that closes the ISO week containing `date`.
pub fn iso_week_end(date: NaiveDate) -> NaiveDate {
    date + Duration::days(6 - i64::from(date.weekday().num_days_from_monday()))
}

fn week_monday(week_end: NaiveDate) -> NaiveDate {
    week_end - Duration::days(6)
}

/// Dense weekly series: one finite value per week, no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklySeries {
    id: String,
    start: NaiveDate,
    values: Vec<f64>,
}

impl WeeklySeries {
    pub fn new(id: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                week: start + WEEK * i as i32,
            });
        }
        Ok(Self {
            id: id.into(),
            start,
            values,
        })
    }

    /// Builds a series from explicit `(week, value)` points, checking the
    /// 7-day spacing.
    pub fn from_points(id: impl Into<String>, points: &[(NaiveDate, f64)]) -> Result<Self> {
        let Some(&(start, _)) = points.first() else {
            return Err(Error::EmptySeries);
        };
        for pair in points.windows(2) {
            let (prev, next) = (pair[0].0, pair[1].0);
            if next <= prev {
                return Err(Error::Unordered { date: next });
            }
            if next - prev != WEEK {
                return Err(Error::IrregularSpacing { prev, next });
            }
        }
        Self::new(id, start, points.iter().map(|p| p.1).collect())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last covered week. Equals `start` for an empty series.
    pub fn end(&self) -> NaiveDate {
        self.week(self.values.len().saturating_sub(1))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn week(&self, index: usize) -> NaiveDate {
        self.start + WEEK * index as i32
    }

    pub fn weeks(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(|i| self.week(i))
    }

    pub fn points(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.week(i), v))
    }

    /// Index of `week` in this series, if covered.
    pub fn index_of(&self, week: NaiveDate) -> Option<usize> {
        let days = (week - self.start).num_days();
        if days < 0 || days % 7 != 0 {
            return None;
        }
        let i = (days / 7) as usize;
        (i < self.values.len()).then_some(i)
    }

    pub fn get(&self, week: NaiveDate) -> Option<f64> {
        self.index_of(week).map(|i| self.values[i])
    }

    /// Keeps only weeks `<= last`.
    pub fn truncated(&self, last: NaiveDate) -> Self {
        let keep = if last < self.start {
            0
        } else {
            (((last - self.start).num_days() / 7 + 1) as usize).min(self.values.len())
        };
        Self {
            id: self.id.clone(),
            start: self.start,
            values: self.values[..keep].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.id.clone(),
            self.start,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            id: self.id.clone(),
            start: self.week(from),
            values: self.values[from..to].to_vec(),
        }
    }
}

/// Daily closing prices for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyPriceSeries {
    asset: String,
    points: Vec<(NaiveDate, f64)>,
}

impl DailyPriceSeries {
    pub fn new(asset: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, &(date, close)) in points.iter().enumerate() {
            if !(close.is_finite() && close > 0.0) {
                return Err(Error::InvalidPrice { date, close });
            }
            if i > 0 && date <= points[i - 1].0 {
                return Err(Error::Unordered { date });
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

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    /// Last close with date in `[from, to]`.
    fn last_close_between(&self, from: NaiveDate, to: NaiveDate) -> Option<(NaiveDate, f64)> {
        let end = self.points.partition_point(|p| p.0 <= to);
        let &(date, close) = self.points[..end].last()?;
        (date >= from).then_some((date, close))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapReason {
    NoEntryClose,
    NoExitClose,
    ExitNotAfterEntry,
}

/// A week for which no holding-window return could be formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekGap {
    pub week: NaiveDate,
    pub reason: GapReason,
}

/// Weekly holding-window returns plus the weeks that could not be priced.
///
/// Weeks are labelled by the ISO week in which the position is entered.
/// Untradable weeks before the first or after the last priced week are
/// trimmed; untradable weeks inside the span carry a zero return (the
/// position could not be opened) and are listed in `gaps`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyReturns {
    pub series: WeeklySeries,
    pub gaps: Vec<WeekGap>,
}

/// Holding-window return per calendar week, from the close on `entry_day`
/// to the close on `exit_day`.
///
/// When `exit_day` does not fall after `entry_day` the exit is taken in the
/// following week (with `entry_day == exit_day` this is the full-week
/// mode). A requested day resolves to the last close at or before it within
/// the same calendar week.
pub fn weekly_return(
    prices: &DailyPriceSeries,
    entry_day: Weekday,
    exit_day: Weekday,
) -> Result<WeeklyReturns> {
    let entry_off = Duration::days(i64::from(entry_day.num_days_from_monday()));
    let exit_off = Duration::days(i64::from(exit_day.num_days_from_monday()));
    let exit_next_week = exit_day.num_days_from_monday() <= entry_day.num_days_from_monday();

    let first = iso_week_end(prices.points[0].0);
    let last = iso_week_end(prices.points[prices.points.len() - 1].0);

    let mut raw: Vec<(NaiveDate, std::result::Result<f64, GapReason>)> = Vec::new();
    let mut week = first;
    while week <= last {
        let monday = week_monday(week);
        let exit_monday = if exit_next_week {
            monday + WEEK
        } else {
            monday
        };
        let entry = prices.last_close_between(monday, monday + entry_off);
        let exit = prices.last_close_between(exit_monday, exit_monday + exit_off);
        let value = match (entry, exit) {
            (None, _) => Err(GapReason::NoEntryClose),
            (_, None) => Err(GapReason::NoExitClose),
            (Some((d0, _)), Some((d1, _))) if d1 <= d0 => Err(GapReason::ExitNotAfterEntry),
            (Some((_, c0)), Some((_, c1))) => Ok(c1 / c0 - 1.0),
        };
        raw.push((week, value));
        week += WEEK;
    }

    let gaps: Vec<WeekGap> = raw
        .iter()
        .filter_map(|(week, v)| {
            v.err().map(|reason| WeekGap {
                week: *week,
                reason,
            })
        })
        .collect();
    let Some(lo) = raw.iter().position(|(_, v)| v.is_ok()) else {
        return Err(Error::EmptySeries);
    };
    let hi = raw.iter().rposition(|(_, v)| v.is_ok()).unwrap_or(lo);
    let values = raw[lo..=hi].iter().map(|(_, v)| v.unwrap_or(0.0)).collect();
    Ok(WeeklyReturns {
        series: WeeklySeries::new(prices.asset.clone(), raw[lo].0, values)?,
        gaps,
    })
}

fn rolling(s: &WeeklySeries, k: usize, f: impl Fn(&[f64]) -> f64) -> Result<WeeklySeries> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "window length must be at least 1".into(),
        ));
    }
    if k > s.len() {
        return Err(Error::InsufficientHistory {
            needed: k,
            available: s.len(),
        });
    }
    let values = (k..=s.len()).map(|t| f(&s.values[t - k..t])).collect();
    WeeklySeries::new(s.id.clone(), s.week(k), values)
}

/// Trailing mean over the `k` weeks strictly before each week.
///
/// The output starts at week index `k` and runs one week past the end of
/// the input: the last point is the mean available for the next,
/// not-yet-observed week.
pub fn rolling_mean(s: &WeeklySeries, k: usize) -> Result<WeeklySeries> {
    rolling(s, k, |w| w.iter().sum::<f64>() / w.len() as f64)
}

/// Trailing median over the `k` weeks strictly before each week; same
/// output layout as [`rolling_mean`].
pub fn rolling_median(s: &WeeklySeries, k: usize) -> Result<WeeklySeries> {
    rolling(s, k, median)
}

pub(crate) fn median(window: &[f64]) -> f64 {
    let mut sorted = window.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Restricts both series to their common weeks.
pub fn align(a: &WeeklySeries, b: &WeeklySeries) -> Result<(WeeklySeries, WeeklySeries)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DisjointSpans);
    }
    let lo = a.start.max(b.start);
    let hi = a.end().min(b.end());
    match (
        a.index_of(lo),
        a.index_of(hi),
        b.index_of(lo),
        b.index_of(hi),
    ) {
        (Some(a0), Some(a1), Some(b0), Some(b1)) if lo <= hi => {
            Ok((a.slice(a0, a1 + 1), b.slice(b0, b1 + 1)))
        }
        _ => Err(Error::DisjointSpans),
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
}

pub(crate) fn parse_date(field: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(field.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Parse(format!("bad date {field:?}: {e}")))
}

pub(crate) fn parse_number(field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {field:?}")))
}

/// Reads a `date,close` price file. Extra columns are ignored.
pub fn read_price_csv(asset: &str, reader: impl Read) -> Result<DailyPriceSeries> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (di, ci) = (
        column_index(&headers, "date")?,
        column_index(&headers, "close")?,
    );
    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        points.push((parse_date(field(di))?, parse_number(field(ci))?));
    }
    DailyPriceSeries::new(asset, points)
}

pub(crate) fn read_week_value_rows(reader: impl Read) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let (wi, vi) = (
        column_index(&headers, "week_end")?,
        column_index(&headers, "value")?,
    );
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        rows.push((parse_date(field(wi))?, parse_number(field(vi))?));
    }
    Ok(rows)
}

/// Reads a `week_end,value` file.
pub fn read_weekly_csv(id: &str, reader: impl Read) -> Result<WeeklySeries> {
    WeeklySeries::from_points(id, &read_week_value_rows(reader)?)
}

pub fn write_weekly_csv(series: &WeeklySeries, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["week_end", "value"])?;
    for (week, value) in series.points() {
        w.write_record([week.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
