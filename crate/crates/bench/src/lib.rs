//! Synthetic inputs shared by the criterion benches.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trendcheck::{FeatureMatrix, FeatureSpec, WeeklySeries};

pub fn start_week() -> NaiveDate {
    NaiveDate::from_ymd_opt(2004, 1, 4).expect("valid date")
}

pub fn uniform_series(id: &str, n: usize, lo: f64, hi: f64, seed: u64) -> WeeklySeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    WeeklySeries::new(id, start_week(), values).expect("finite values")
}

pub fn noise_matrix(rows: usize, features: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let returns = uniform_series("X", rows, -0.05, 0.05, seed ^ 0x5eed);
    FeatureMatrix {
        asset: "X".into(),
        columns: (1..=features).map(|l| format!("ret_lag{l}")).collect(),
        weeks: returns.weeks().collect(),
        rows: (0..rows)
            .map(|_| (0..features).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
        targets: returns.values().to_vec(),
        spec: FeatureSpec {
            lags: features,
            ..FeatureSpec::default()
        },
    }
}
