//! Performance statistics, the Wilcoxon rank-sum test and the null-keyword
//! calibration harness.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::backtest::single_asset_net_returns;
use crate::error::{Error, Result};
use crate::series::WeeklySeries;
use crate::strategies::preis_signal;

pub const WEEKS_PER_YEAR: f64 = 52.0;

/// Samples up to this combined size use exact enumeration.
pub const EXACT_WILCOXON_MAX: usize = 12;

/// Summary of a weekly return stream. `tstat` and `ir_annualized` are
/// `None` when the returns have zero dispersion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfStats {
    pub n_weeks: usize,
    pub mean_weekly_bps: f64,
    pub vol_weekly_bps: f64,
    pub tstat: Option<f64>,
    pub ir_annualized: Option<f64>,
}

/// Mean, sample standard deviation, t-stat and annualized zero-rate
/// information ratio of weekly returns.
pub fn perf_stats(weekly_returns: &[f64]) -> Result<PerfStats> {
    let n = weekly_returns.len();
    if n < 2 {
        return Err(Error::InsufficientHistory {
            needed: 2,
            available: n,
        });
    }
    let mean = weekly_returns.iter().sum::<f64>() / n as f64;
    let first = weekly_returns[0];
    let vol = if weekly_returns.iter().all(|&r| r == first) {
        0.0
    } else {
        let ss: f64 = weekly_returns.iter().map(|r| (r - mean) * (r - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    let sharpe = (vol > 0.0).then(|| mean / vol);
    Ok(PerfStats {
        n_weeks: n,
        mean_weekly_bps: mean * 1e4,
        vol_weekly_bps: vol * 1e4,
        tstat: sharpe.map(|s| s * (n as f64).sqrt()),
        ir_annualized: sharpe.map(|s| s * WEEKS_PER_YEAR.sqrt()),
    })
}

struct Ranked {
    /// Twice the midrank of each observation of the first sample.
    doubled_a: Vec<u64>,
    doubled_all: Vec<u64>,
    /// Sum of t^3 - t over tie groups.
    tie_term: f64,
}

fn rank(a: &[f64], b: &[f64]) -> Result<Ranked> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("wilcoxon sample"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN in wilcoxon sample".into()));
    }
    let mut order: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    order.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut doubled_a = Vec::with_capacity(a.len());
    let mut doubled_all = Vec::with_capacity(order.len());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].0 == order[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the midrank (i + j + 2) / 2
        let doubled = (i + j + 2) as u64;
        for item in &order[i..=j] {
            doubled_all.push(doubled);
            if item.1 {
                doubled_a.push(doubled);
            }
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    Ok(Ranked {
        doubled_a,
        doubled_all,
        tie_term,
    })
}

/// Two-sided rank-sum p-value: exact for small samples, normal
/// approximation otherwise.
pub fn wilcoxon_ranksum(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() + b.len() <= EXACT_WILCOXON_MAX {
        wilcoxon_exact(a, b)
    } else {
        wilcoxon_normal(a, b)
    }
}

/// Exact two-sided p-value: the probability, over all equally likely
/// assignments of the pooled midranks to the first sample, that its rank sum
/// deviates from the null mean at least as much as observed.
pub fn wilcoxon_exact(a: &[f64], b: &[f64]) -> Result<f64> {
    let ranked = rank(a, b)?;
    let n = ranked.doubled_all.len();
    let m = a.len();
    if n > 60 {
        return Err(Error::InvalidParameter(format!(
            "exact rank-sum distribution limited to 60 observations, got {n}"
        )));
    }
    let max_sum: u64 = ranked.doubled_all.iter().sum();
    let width = max_sum as usize + 1;
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0u64; width]; m + 1];
    ways[0][0] = 1;
    for &r in &ranked.doubled_all {
        let r = r as usize;
        for j in (1..=m).rev() {
            let (lower, upper) = ways.split_at_mut(j);
            for s in (r..width).rev() {
                upper[0][s] += lower[j - 1][s - r];
            }
        }
    }
    // null mean of the doubled sum is m * (n + 1)
    let centre = (m * (n + 1)) as i64;
    let observed: u64 = ranked.doubled_a.iter().sum();
    let threshold = (observed as i64 - centre).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for (s, &count) in ways[m].iter().enumerate() {
        total += count;
        if (s as i64 - centre).abs() >= threshold {
            extreme += count;
        }
    }
    Ok(extreme as f64 / total as f64)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn wilcoxon_normal(a: &[f64], b: &[f64]) -> Result<f64> {
    let ranked = rank(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let w = ranked.doubled_a.iter().sum::<u64>() as f64 / 2.0;
    let mean = na * (n + 1.0) / 2.0;
    let tie_adjust = if n > 1.0 {
        ranked.tie_term / (n * (n - 1.0))
    } else {
        0.0
    };
    let var = na * nb / 12.0 * ((n + 1.0) - tie_adjust);
    if var <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * normal.sf(z)).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTstat {
    pub keyword: String,
    pub tstat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibration {
    /// One entry per keyword, in input order.
    pub tstats: Vec<KeywordTstat>,
    pub threshold: f64,
    pub exceed_fraction: f64,
    /// Three best performances, best first.
    pub top: Vec<KeywordTstat>,
    /// Three worst performances, worst first.
    pub bottom: Vec<KeywordTstat>,
}

pub const MIN_NULL_KEYWORDS: usize = 20;

/// Runs the moving-average rule for every keyword series against one asset
/// and reports the spread of the resulting t-stats. Keyword labels are the
/// series ids. A keyword whose strategy never trades scores 0.
pub fn null_calibration(
    keyword_series: &[WeeklySeries],
    asset_returns: &WeeklySeries,
    k: usize,
    cost_bps: f64,
    threshold: f64,
) -> Result<NullCalibration> {
    if keyword_series.len() < MIN_NULL_KEYWORDS {
        return Err(Error::InvalidParameter(format!(
            "null calibration needs at least {MIN_NULL_KEYWORDS} keyword series, got {}",
            keyword_series.len()
        )));
    }
    let tstats: Vec<KeywordTstat> = keyword_series
        .par_iter()
        .map(|svi| {
            let positions = preis_signal(svi, k)?.with_asset(asset_returns.id());
            let net = single_asset_net_returns(&positions, asset_returns, cost_bps)?;
            Ok(KeywordTstat {
                keyword: svi.id().to_string(),
                tstat: perf_stats(&net)?.tstat.unwrap_or(0.0),
            })
        })
        .collect::<Result<_>>()?;
    let exceed = tstats.iter().filter(|t| t.tstat.abs() > threshold).count();

    let mut ranked = tstats.clone();
    ranked.sort_by(|x, y| {
        y.tstat
            .partial_cmp(&x.tstat)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.keyword.cmp(&y.keyword))
    });
    let top = ranked.iter().take(3).cloned().collect();
    let bottom = ranked.iter().rev().take(3).cloned().collect();
    Ok(NullCalibration {
        exceed_fraction: exceed as f64 / tstats.len() as f64,
        tstats,
        threshold,
        top,
        bottom,
    })
}

/// Counts of `values` in `bins` equal-width bins over `[lo, hi)`; values
/// outside the range are clamped into the edge bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = ((v - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + width * i as f64, lo + width * (i + 1) as f64, c))
        .collect()
}
