//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any failed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use trendcheck::stats::{wilcoxon_exact, wilcoxon_normal};
use trendcheck::{
    anti_lookahead_check, anti_lookahead_check_with, build_features, null_calibration, perf_stats,
    preis_signal, run_backtest, stitch_windows, walk_forward, wilcoxon_ranksum, FeatureMatrix,
    FeatureSpec, PositionModel, PositionSeries, RawSviWindow, Result, WalkForwardConfig,
    WeeklySeries,
};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2004, 1, 4).unwrap()
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn weekly(id: &str, values: Vec<f64>) -> WeeklySeries {
    WeeklySeries::new(id, start(), values).unwrap()
}

/// Weekly returns of a geometric random walk.
fn random_walk_returns(rng: &mut ChaCha8Rng, n: usize, vol: f64) -> WeeklySeries {
    weekly(
        "SPY",
        gaussian(rng, n)
            .into_iter()
            .map(|z| (vol * z).exp() - 1.0)
            .collect(),
    )
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

// 1 ------------------------------------------------------------------------

fn summary_stat_consistency() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = gaussian(&mut rng, 458);
    let m = z.iter().sum::<f64>() / 458.0;
    let s = (z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 457.0).sqrt();
    let returns: Vec<f64> = z.iter().map(|v| (v - m) / s * 134e-4 + 17.1e-4).collect();
    let stats = perf_stats(&returns).unwrap();
    let elapsed = t0.elapsed();
    let (ir, t) = (stats.ir_annualized.unwrap(), stats.tstat.unwrap());
    assert!((stats.mean_weekly_bps - 17.1).abs() < 1e-9);
    assert!((stats.vol_weekly_bps - 134.0).abs() < 1e-9);
    assert!((ir - 0.92).abs() <= 0.005, "IR {ir}");
    assert!((t - 2.73).abs() <= 0.03, "t-stat {t}");
    assert!(elapsed < Duration::from_secs(1));
    format!("IR {ir:.4} (0.92 +- 0.005), t {t:.4} (2.73 +- 0.03), {elapsed:?}")
}

// 2 ------------------------------------------------------------------------

fn null_keyword_calibration() -> String {
    let t0 = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let cal = pool.install(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let returns = random_walk_returns(&mut rng, 480, 0.025);
        let keywords: Vec<WeeklySeries> = (0..400)
            .map(|i| {
                weekly(
                    &format!("kw{i:03}"),
                    gaussian(&mut rng, 480)
                        .into_iter()
                        .map(|z| 50.0 + 10.0 * z)
                        .collect(),
                )
            })
            .collect();
        null_calibration(&keywords, &returns, 10, 2.0, 1.96).unwrap()
    });
    let elapsed = t0.elapsed();
    let f = cal.exceed_fraction;
    assert!((0.03..=0.07).contains(&f), "exceed fraction {f}");
    assert!(elapsed < Duration::from_secs(60));
    format!("exceed fraction {f:.4} in [0.03, 0.07], single thread {elapsed:?}")
}

// 3 ------------------------------------------------------------------------

/// Oracle: midranks by direct counting, then every subset of the pooled
/// sample enumerated as a bitmask.
fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let midrank = |v: f64| {
        let below = pooled.iter().filter(|&&x| x < v).count() as f64;
        let equal = pooled.iter().filter(|&&x| x == v).count() as f64;
        below + (equal + 1.0) / 2.0
    };
    let ranks: Vec<f64> = pooled.iter().map(|&v| midrank(v)).collect();
    let n = pooled.len();
    let mean = a.len() as f64 * (n as f64 + 1.0) / 2.0;
    let observed = (ranks[..a.len()].iter().sum::<f64>() - mean).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let sum: f64 = (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        total += 1;
        if (sum - mean).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

fn wilcoxon_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_exact: f64 = 0.0;
    let mut pairs = 0;
    for na in 1..10 {
        for nb in 1..=(10 - na) {
            pairs += 1;
            for _ in 0..100 {
                let a: Vec<f64> = (0..na)
                    .map(|_| f64::from(rng.random_range(0..6u8)))
                    .collect();
                let b: Vec<f64> = (0..nb)
                    .map(|_| f64::from(rng.random_range(0..6u8)))
                    .collect();
                let p = wilcoxon_ranksum(&a, &b).unwrap();
                let diff = (p - brute_force_p(&a, &b)).abs();
                worst_exact = worst_exact.max(diff);
                assert!(
                    diff <= 1e-12,
                    "exact branch off by {diff} for {a:?} vs {b:?}"
                );
            }
        }
    }
    let mut worst_approx: f64 = 0.0;
    for (na, nb) in [(6, 6), (6, 7), (7, 6)] {
        for _ in 0..200 {
            let shift = rng.random_range(0.0..2.0);
            let a: Vec<f64> = gaussian(&mut rng, na);
            let b: Vec<f64> = gaussian(&mut rng, nb)
                .into_iter()
                .map(|v| v + shift)
                .collect();
            let diff = (wilcoxon_normal(&a, &b).unwrap() - wilcoxon_exact(&a, &b).unwrap()).abs();
            worst_approx = worst_approx.max(diff);
        }
    }
    assert!(worst_approx <= 0.02, "approximation off by {worst_approx}");
    format!("{pairs} size pairs x 100 samples, max exact diff {worst_exact:.1e}; max approx diff {worst_approx:.4} <= 0.02")
}

// 4 ------------------------------------------------------------------------

fn stitcher_recovery() -> String {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = gaussian(&mut rng, 400);
    let truth: Vec<f64> = (0..400)
        .map(|t| {
            let t = t as f64;
            50.0 * (0.3 * (2.0 * std::f64::consts::PI * t / 52.0).sin()
                + 0.002 * t
                + 0.1 * noise[t as usize])
                .exp()
        })
        .collect();
    let spans = [(0, 90), (78, 168), (156, 246), (234, 324), (312, 400)];
    let maxima: Vec<f64> = spans
        .iter()
        .map(|&(a, b)| truth[a..b].iter().cloned().fold(f64::MIN, f64::max))
        .collect();
    let windows: Vec<RawSviWindow> = spans
        .iter()
        .zip(&maxima)
        .map(|(&(a, b), max)| {
            let vals = truth[a..b]
                .iter()
                .map(|t| (t / max * 100.0).round())
                .collect();
            RawSviWindow::new("kw", start() + chrono::Duration::days(7 * a as i64), vals).unwrap()
        })
        .collect();
    let stitched = stitch_windows(&windows, 12).unwrap();
    let elapsed = t0.elapsed();
    assert_eq!(stitched.series.len(), 400);
    let corr = pearson(stitched.series.values(), &truth);
    let worst_scale = stitched
        .scales
        .iter()
        .zip(&maxima)
        .map(|(s, m)| (s / (m / maxima[0]) - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(corr >= 0.99, "correlation {corr}");
    assert!(worst_scale <= 0.05, "scale error {worst_scale}");
    assert!(elapsed < Duration::from_secs(1));
    format!(
        "corr {corr:.5} >= 0.99, worst scale error {:.3}% <= 5%, {elapsed:?}",
        100.0 * worst_scale
    )
}

// 5 ------------------------------------------------------------------------

fn noise_matrix(rng: &mut ChaCha8Rng, rows: usize, features: usize) -> FeatureMatrix {
    FeatureMatrix {
        asset: "X".into(),
        columns: (1..=features).map(|l| format!("ret_lag{l}")).collect(),
        weeks: (0..rows)
            .map(|i| start() + chrono::Duration::days(7 * i as i64))
            .collect(),
        rows: (0..rows).map(|_| gaussian(rng, features)).collect(),
        targets: gaussian(rng, rows).into_iter().map(|z| 0.02 * z).collect(),
        spec: FeatureSpec {
            lags: features,
            ..FeatureSpec::default()
        },
    }
}

/// Deliberately leaky: z-scores the first feature with full-sample moments.
struct FullSampleZScore;

impl PositionModel for FullSampleZScore {
    fn positions(&self, fm: &FeatureMatrix) -> Result<PositionSeries> {
        let col: Vec<f64> = fm.rows.iter().map(|r| r[0]).collect();
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
            .sqrt()
            .max(1e-12);
        let points = fm
            .weeks
            .iter()
            .zip(&col)
            .map(|(&w, &v)| (w, ((v - mean) / sd).clamp(-1.0, 1.0)))
            .collect();
        PositionSeries::new(fm.asset.clone(), points)
    }
}

fn anti_lookahead() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = WalkForwardConfig {
        ensemble_size: 50,
        ..WalkForwardConfig::default()
    };
    let (mut clean, mut flagged, mut checked_weeks) = (0, 0, 0);
    for trial in 0..50 {
        let rows = rng.random_range(60..120);
        let features = rng.random_range(2..6);
        let fm = noise_matrix(&mut rng, rows, features);
        let cut_row = rng.random_range(cfg.calibration_weeks + 1..rows);
        let cut = fm.weeks[cut_row];
        let cfg = WalkForwardConfig { seed: trial, ..cfg };
        let report = anti_lookahead_check(&fm, &cfg, cut);
        assert!(report.is_clean(), "trial {trial}: {:?}", report.mismatches);
        checked_weeks += cut_row - cfg.calibration_weeks;
        clean += 1;
        if !anti_lookahead_check_with(&FullSampleZScore, &fm, cut).is_clean() {
            flagged += 1;
        }
    }
    assert_eq!(flagged, 50, "leaky variant flagged in {flagged}/50");
    format!("{clean}/50 clean ({checked_weeks} pre-cut positions compared), leaky variant flagged {flagged}/50")
}

// 6 ------------------------------------------------------------------------

fn ledger_closed_forms() -> String {
    let t = 100;
    let weeks: Vec<NaiveDate> = (0..t)
        .map(|i| start() + chrono::Duration::days(7 * i as i64))
        .collect();
    let positions = PositionSeries::new(
        "A",
        weeks
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let returns = WeeklySeries::new(
        "A",
        weeks[1],
        gaussian(&mut rng, t)
            .into_iter()
            .map(|z| 0.02 * z)
            .collect(),
    )
    .unwrap();
    let ledger = run_backtest(
        std::slice::from_ref(&positions),
        std::slice::from_ref(&returns),
        2.0,
    )
    .unwrap();
    let expected = 2.0 / 1e4 * (1.0 + 2.0 * 99.0);
    let total = ledger.total_cost();
    assert!(
        (total - expected).abs() <= 1e-15,
        "total cost {total} vs {expected}"
    );

    let free = run_backtest(&[positions], &[returns], 0.0).unwrap();
    assert!(free
        .rows
        .iter()
        .all(|r| r.net_return.to_bits() == r.gross_return.to_bits() && r.cost == 0.0));
    format!(
        "total cost {total:.12} = 2e-4 * 199; zero-cost net == gross bitwise over {} weeks",
        free.rows.len()
    )
}

// 7 ------------------------------------------------------------------------

fn monotone_map(rng: &mut ChaCha8Rng) -> Box<dyn Fn(f64) -> f64> {
    match rng.random_range(0..5) {
        0 => {
            let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(-10.0..10.0));
            Box::new(move |x| a * x + b)
        }
        1 => {
            let c = rng.random_range(0.1..2.0);
            Box::new(move |x| (c * x).exp())
        }
        2 => Box::new(|x| x * x * x + x),
        3 => {
            let c = rng.random_range(0.1..2.0);
            Box::new(move |x| (c * x).atan())
        }
        _ => Box::new(|x: f64| x.sinh()),
    }
}

fn strategy_invariance() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base: Vec<f64> = (0..300)
        .map(|i| {
            (50.0 + 30.0 * (i as f64 / 9.0).sin() + 10.0 * rng.sample::<f64, _>(StandardNormal))
                .clamp(0.0, 100.0)
                .round()
        })
        .collect();
    let svi = weekly("kw", base);
    for _ in 0..1000 {
        let k = rng.random_range(1..=30);
        let a = 10f64.powf(rng.random_range(-2.0..2.0));
        let b = rng.random_range(-1000.0..1000.0);
        let moved = svi.map(|v| a * v + b).unwrap();
        assert_eq!(
            preis_signal(&svi, k).unwrap(),
            preis_signal(&moved, k).unwrap(),
            "k={k} a={a} b={b}"
        );
    }

    let fm = noise_matrix(&mut rng, 120, 4);
    let cfg = WalkForwardConfig {
        seed: 11,
        ..WalkForwardConfig::default()
    };
    let reference = walk_forward(&fm, &cfg).unwrap();
    for m in 0..100 {
        let maps: Vec<_> = (0..fm.n_features())
            .map(|_| monotone_map(&mut rng))
            .collect();
        let moved = fm.map_features(|j, v| maps[j](v));
        assert_eq!(
            walk_forward(&moved, &cfg).unwrap(),
            reference,
            "monotone map {m}"
        );
    }
    "preis positions identical for 1000 affine draws; learner positions identical for 100 monotone maps".into()
}

// 8 ------------------------------------------------------------------------

fn noise_floor() -> String {
    const SEEDS: u64 = 200;
    const WEEKS: usize = 260;
    let cfg = WalkForwardConfig::default();
    let mut inside = 0;
    let (mut hits, mut total, mut worst_seed_accuracy) = (0usize, 0usize, 1.0f64);
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let returns = weekly(
            "X",
            gaussian(&mut rng, WEEKS)
                .into_iter()
                .map(|z| 0.02 * z)
                .collect(),
        );
        let fm = build_features(&returns, None, FeatureSpec::default()).unwrap();
        let positions = walk_forward(&fm, &WalkForwardConfig { seed, ..cfg }).unwrap();
        let ledger = run_backtest(&[positions], std::slice::from_ref(&returns), 0.0).unwrap();
        let t = perf_stats(&ledger.net_returns())
            .unwrap()
            .tstat
            .unwrap_or(0.0);
        if t.abs() < 1.96 {
            inside += 1;
        }

        let mut oracle = fm.clone();
        oracle.columns.push("sign_target".into());
        for (row, target) in oracle.rows.iter_mut().zip(&fm.targets) {
            row.push(target.signum());
        }
        let positions = walk_forward(&oracle, &WalkForwardConfig { seed, ..cfg }).unwrap();
        let (mut seed_hits, mut seed_total) = (0, 0);
        for (&(week, w), target) in positions
            .points()
            .iter()
            .zip(&oracle.targets[cfg.calibration_weeks..])
        {
            debug_assert_eq!(
                oracle.weeks[oracle.weeks.iter().position(|x| *x == week).unwrap()],
                week
            );
            seed_total += 1;
            if w != 0.0 && w.signum() == target.signum() {
                seed_hits += 1;
            }
        }
        worst_seed_accuracy = worst_seed_accuracy.min(seed_hits as f64 / seed_total as f64);
        hits += seed_hits;
        total += seed_total;
    }
    let share = inside as f64 / SEEDS as f64;
    let accuracy = hits as f64 / total as f64;
    assert!(share >= 0.93, "|t| < 1.96 in {share}");
    assert!(accuracy >= 0.90, "oracle accuracy {accuracy}");
    format!(
        "|t| < 1.96 in {inside}/{SEEDS} seeds ({:.1}% >= 93%); oracle accuracy {:.2}% >= 90% (worst seed {:.2}%)",
        100.0 * share,
        100.0 * accuracy,
        100.0 * worst_seed_accuracy
    )
}

fn main() {
    let criteria: [(&str, fn() -> String); 8] = [
        ("1 summary-stat consistency", summary_stat_consistency),
        ("2 null-keyword calibration", null_keyword_calibration),
        ("3 wilcoxon oracle equivalence", wilcoxon_oracle),
        ("4 stitcher recovery", stitcher_recovery),
        ("5 anti-lookahead", anti_lookahead),
        ("6 ledger closed forms", ledger_closed_forms),
        ("7 strategy invariance", strategy_invariance),
        ("8 noise-floor honesty", noise_floor),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{:.2?}]", t0.elapsed()),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
