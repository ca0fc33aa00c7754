use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use trendcheck::stats::{histogram, KeywordTstat};
use trendcheck::strategies::write_k_scan_csv;
use trendcheck::{
    build_features, ensemble_positions, equity_curve, k_scan, keyword_slug, null_calibration,
    perf_stats, preis_signal, priced_positions, run_backtest, walk_forward, wilcoxon_ranksum,
    write_weekly_csv, BacktestLedger, FeatureMode, FeatureSpec, PerfStats, PositionSeries,
    WeeklySeries,
};

use crate::config::RunConfig;
use crate::data::{self, preflight, Needs, Plan};
use crate::error::CliError;

type Outcome = Result<(), Vec<CliError>>;

const HIST_RANGE: (f64, f64) = (-5.0, 5.0);
const HIST_BINS: usize = 40;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> trendcheck::Result<()>,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w).map_err(CliError::core(path.display().to_string()))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

/// Performance summary written next to each ledger. Recomputable from the
/// ledger's `net_return` column.
#[derive(Serialize)]
struct StatsReport<'a> {
    label: &'a str,
    assets: Vec<&'a str>,
    cost_bps: f64,
    total_cost: f64,
    #[serde(flatten)]
    stats: PerfStats,
}

fn write_ledger(
    cfg: &RunConfig,
    plan: &Plan,
    label: &str,
    ledger: &BacktestLedger,
) -> Result<PerfStats, CliError> {
    let stats = perf_stats(&ledger.net_returns())
        .map_err(CliError::core(format!("statistics for {label}")))?;
    write_with(&cfg.output_dir.join(format!("ledger_{label}.csv")), |w| {
        ledger.write_csv(w)
    })?;
    write_with(&cfg.output_dir.join(format!("equity_{label}.csv")), |w| {
        write_weekly_csv(&equity_curve(ledger), w)
    })?;
    let report = StatsReport {
        label,
        assets: plan.assets.iter().map(|(a, _)| a.as_str()).collect(),
        cost_bps: cfg.cost_bps,
        total_cost: ledger.total_cost(),
        stats,
    };
    write_json(&cfg.output_dir.join(format!("stats_{label}.json")), &report)?;
    Ok(stats)
}

#[derive(Serialize)]
struct NullSummary<'a> {
    set: &'a str,
    asset: &'a str,
    n_keywords: usize,
    k: usize,
    cost_bps: f64,
    threshold: f64,
    exceed_fraction: f64,
    top: &'a [KeywordTstat],
    bottom: &'a [KeywordTstat],
}

/// t-stat spread of the moving-average rule over each keyword set, against
/// the first asset of the universe.
pub fn null_calibrate(cfg: &RunConfig) -> Outcome {
    let plan = preflight(
        cfg,
        Needs {
            prices: true,
            keywords: true,
            asset_svi: false,
        },
    )?;
    let (asset, path) = &plan.assets[0];
    let returns = data::load_returns(cfg, asset, path).map_err(|e| vec![e])?;
    for set in &plan.sets {
        let series = data::load_set(cfg, &plan, set).map_err(|e| vec![e])?;
        let cal = null_calibration(&series, &returns, cfg.k, cfg.cost_bps, cfg.threshold).map_err(
            |e| {
                vec![CliError::core(format!("null calibration of {}", set.name))(
                    e,
                )]
            },
        )?;
        let out = |name: &str| cfg.output_dir.join(format!("{name}_{}", set.name));
        write_with(&out("tstats").with_extension("csv"), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["keyword", "tstat"])?;
            for t in &cal.tstats {
                csv.write_record([t.keyword.clone(), t.tstat.to_string()])?;
            }
            csv.flush()?;
            Ok(())
        })
        .map_err(|e| vec![e])?;
        let values: Vec<f64> = cal.tstats.iter().map(|t| t.tstat).collect();
        write_with(&out("histogram").with_extension("csv"), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record(["lo", "hi", "count"])?;
            for (lo, hi, count) in histogram(&values, HIST_RANGE.0, HIST_RANGE.1, HIST_BINS) {
                csv.write_record([lo.to_string(), hi.to_string(), count.to_string()])?;
            }
            csv.flush()?;
            Ok(())
        })
        .map_err(|e| vec![e])?;
        let summary = NullSummary {
            set: &set.name,
            asset,
            n_keywords: cal.tstats.len(),
            k: cfg.k,
            cost_bps: cfg.cost_bps,
            threshold: cal.threshold,
            exceed_fraction: cal.exceed_fraction,
            top: &cal.top,
            bottom: &cal.bottom,
        };
        write_json(&out("null").with_extension("json"), &summary).map_err(|e| vec![e])?;
    }
    Ok(())
}

/// Per-keyword t-stat as a function of the moving-average length.
pub fn k_scan_cmd(cfg: &RunConfig) -> Outcome {
    let plan = preflight(
        cfg,
        Needs {
            prices: true,
            keywords: true,
            asset_svi: false,
        },
    )?;
    let (asset, path) = &plan.assets[0];
    let returns = data::load_returns(cfg, asset, path).map_err(|e| vec![e])?;
    let ks = cfg.ks();
    for set in &plan.sets {
        let series = data::load_set(cfg, &plan, set).map_err(|e| vec![e])?;
        let dir = cfg.output_dir.join(format!("kscan_{}", set.name));
        for svi in &series {
            let scan = k_scan(svi, &returns, &ks, cfg.cost_bps)
                .map_err(|e| vec![CliError::core(format!("k scan of {:?}", svi.id()))(e)])?;
            write_with(&dir.join(format!("{}.csv", keyword_slug(svi.id()))), |w| {
                write_k_scan_csv(&scan, w)
            })
            .map_err(|e| vec![e])?;
        }
    }
    Ok(())
}

/// Mean position of one keyword over every configured length, detached
/// from the keyword label so that keywords can be averaged in turn.
fn keyword_ensemble(svi: &WeeklySeries, ks: &[usize]) -> trendcheck::Result<PositionSeries> {
    let signals = ks
        .iter()
        .map(|&k| preis_signal(svi, k))
        .collect::<trendcheck::Result<Vec<_>>>()?;
    Ok(ensemble_positions(&signals)?.with_asset(""))
}

/// Averages the moving-average rule over all keywords of a set and all
/// lengths, then trades the result on every asset of the universe.
pub fn ensemble(cfg: &RunConfig) -> Outcome {
    let plan = preflight(
        cfg,
        Needs {
            prices: true,
            keywords: true,
            asset_svi: false,
        },
    )?;
    let returns = data::load_all_returns(cfg, &plan).map_err(|e| vec![e])?;
    let ks = cfg.ks();
    for set in &plan.sets {
        let series = data::load_set(cfg, &plan, set).map_err(|e| vec![e])?;
        let per_keyword = series
            .par_iter()
            .map(|svi| keyword_ensemble(svi, &ks))
            .collect::<trendcheck::Result<Vec<_>>>()
            .and_then(|p| ensemble_positions(&p))
            .map_err(|e| vec![CliError::core(format!("ensemble of {}", set.name))(e)])?;
        let positions: Vec<PositionSeries> = returns
            .iter()
            .map(|r| priced_positions(&per_keyword.clone().with_asset(r.id()), r))
            .collect();
        let ledger = run_backtest(&positions, &returns, cfg.cost_bps)
            .map_err(|e| vec![CliError::core(format!("backtest of {}", set.name))(e)])?;
        write_ledger(cfg, &plan, &set.name, &ledger).map_err(|e| vec![e])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Comparison {
    a: FeatureMode,
    b: FeatureMode,
    p_value: f64,
}

/// Walk-forward learner per feature mode, traded as one equal-weight book.
pub fn learner(cfg: &RunConfig) -> Outcome {
    let modes = cfg.feature_modes();
    let needs_svi = modes.iter().any(|m| m.uses_svi());
    let plan = preflight(
        cfg,
        Needs {
            prices: true,
            keywords: false,
            asset_svi: needs_svi,
        },
    )?;
    let returns = data::load_all_returns(cfg, &plan).map_err(|e| vec![e])?;
    let svi: Vec<Option<WeeklySeries>> = returns
        .par_iter()
        .map(|r| match plan.asset_svi.get(r.id()) {
            Some(src) => src.load(r.id(), cfg.min_overlap).map(|s| Some(s.series)),
            None => Ok(None),
        })
        .collect::<Result<_, _>>()
        .map_err(|e| vec![e])?;

    let mut net = Vec::new();
    for &mode in &modes {
        let spec = FeatureSpec {
            mode,
            lags: cfg.lags,
            binary: cfg.binary,
            median_window: cfg.median_window,
        };
        let positions = returns
            .par_iter()
            .zip(&svi)
            .map(|(r, s)| {
                let fm = build_features(r, s.as_ref().filter(|_| mode.uses_svi()), spec)?;
                Ok(priced_positions(&walk_forward(&fm, &cfg.walk_forward)?, r))
            })
            .collect::<trendcheck::Result<Vec<_>>>()
            .and_then(|p| run_backtest(&p, &returns, cfg.cost_bps))
            .map_err(|e| vec![CliError::core(format!("learner with {mode}"))(e)])?;
        write_ledger(cfg, &plan, mode.as_str(), &positions).map_err(|e| vec![e])?;
        net.push((mode, positions.net_returns()));
    }

    if net.len() > 1 {
        let mut comparisons = Vec::new();
        for (i, (a, ra)) in net.iter().enumerate() {
            for (b, rb) in &net[i + 1..] {
                let p_value = wilcoxon_ranksum(ra, rb)
                    .map_err(|e| vec![CliError::core(format!("{a} vs {b}"))(e)])?;
                comparisons.push(Comparison {
                    a: *a,
                    b: *b,
                    p_value,
                });
            }
        }
        write_json(&cfg.output_dir.join("wilcoxon.json"), &comparisons).map_err(|e| vec![e])?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StitchReport<'a> {
    keyword: &'a str,
    windows_used: usize,
    scales: &'a [f64],
    overlap_fit_error: f64,
}

/// Stitches every keyword's windows onto one scale.
pub fn stitch(cfg: &RunConfig) -> Outcome {
    let plan = preflight(
        cfg,
        Needs {
            prices: false,
            keywords: true,
            asset_svi: false,
        },
    )?;
    let stitched = plan
        .keyword_svi
        .par_iter()
        .map(|(k, src)| src.load(k, cfg.min_overlap))
        .collect::<Vec<_>>();
    let (ok, errors): (Vec<_>, Vec<_>) = stitched.into_iter().partition(Result::is_ok);
    if !errors.is_empty() {
        return Err(errors.into_iter().filter_map(Result::err).collect());
    }
    let ok: Vec<_> = ok.into_iter().filter_map(Result::ok).collect();
    let dir = cfg.output_dir.join("stitched");
    for s in &ok {
        write_with(
            &dir.join(format!("{}.csv", keyword_slug(&s.keyword))),
            |w| write_weekly_csv(&s.series, w),
        )
        .map_err(|e| vec![e])?;
    }
    let report: Vec<StitchReport> = ok
        .iter()
        .map(|s| StitchReport {
            keyword: &s.keyword,
            windows_used: s.windows_used,
            scales: &s.scales,
            overlap_fit_error: s.overlap_fit_error,
        })
        .collect();
    write_json(&cfg.output_dir.join("stitch_report.json"), &report).map_err(|e| vec![e])
}
