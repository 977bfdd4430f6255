#![allow(dead_code)]

use std::collections::BTreeSet;

use gad_core::detector::{Combine, Criterion, DetectorConfig};
use gad_core::model::{ConstellationId, Epoch, RawSeries, SatelliteKey, SatelliteObservation};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Value on a decimal grid, built the way a decimal parser would round it.
pub fn on_grid(rng: &mut impl RngCore, lo: f64, hi: f64, scale: f64) -> f64 {
    let lo_i = (lo * scale).ceil() as i64;
    let hi_i = (hi * scale).floor() as i64;
    rng.random_range(lo_i..=hi_i) as f64 / scale
}

pub fn random_key(rng: &mut impl RngCore) -> SatelliteKey {
    let c = *ConstellationId::ALL.choose(rng).unwrap();
    SatelliteKey::new(c, rng.random_range(1..=40)).unwrap()
}

pub fn random_observation(rng: &mut impl RngCore, key: SatelliteKey) -> SatelliteObservation {
    let az = on_grid(rng, 0.0, 359.9, 10.0);
    let el = on_grid(rng, -90.0, 90.0, 10.0);
    let obs = if rng.random_bool(0.8) {
        SatelliteObservation::tracked(key, on_grid(rng, 0.1, 64.0, 10.0), az, el)
            .with_fix(rng.random_bool(0.5))
    } else {
        SatelliteObservation::untracked(key, az, el)
    };
    obs.with_nav_data(rng.random_bool(0.5), rng.random_bool(0.5))
}

pub fn random_epoch(rng: &mut impl RngCore, t: f64, max_obs: usize) -> Epoch {
    random_epoch_sized(rng, t, 0, max_obs)
}

pub fn random_epoch_sized(rng: &mut impl RngCore, t: f64, min_obs: usize, max_obs: usize) -> Epoch {
    let n = rng.random_range(min_obs..=max_obs);
    let keys: BTreeSet<SatelliteKey> = (0..n).map(|_| random_key(rng)).collect();
    let obs = keys.into_iter().map(|k| random_observation(rng, k)).collect();
    Epoch::new(t, obs).unwrap()
}

/// Random series with cadence 1 s, possibly containing empty epochs.
pub fn random_series(rng: &mut impl RngCore, min_epochs: usize, max_epochs: usize) -> RawSeries {
    series_with(rng, min_epochs, max_epochs, 0)
}

/// Like [`random_series`] but every epoch holds at least one observation.
/// Consecutive epochs are at least half a cadence apart and all values sit on
/// the GAD-CSV grid, so the series survives a write/parse round trip.
pub fn random_recorded_series(rng: &mut impl RngCore, min_epochs: usize, max_epochs: usize) -> RawSeries {
    series_with(rng, min_epochs, max_epochs, 1)
}

fn series_with(rng: &mut impl RngCore, min_epochs: usize, max_epochs: usize, min_obs: usize) -> RawSeries {
    let n = rng.random_range(min_epochs..=max_epochs);
    let mut t = on_grid(rng, -50.0, 1000.0, 1000.0);
    let mut epochs = Vec::with_capacity(n);
    for _ in 0..n {
        epochs.push(random_epoch_sized(rng, t, min_obs, 10));
        let gap = if rng.random_bool(0.8) { 1.0 } else { on_grid(rng, 0.5, 3.0, 1000.0) };
        t = ((t + gap) * 1000.0).round() / 1000.0;
    }
    RawSeries::new(epochs, 1.0).unwrap()
}

/// Random series covering at least `span_s` seconds.
pub fn random_series_spanning(rng: &mut impl RngCore, span_s: f64) -> RawSeries {
    loop {
        let n = span_s.ceil() as usize + rng.random_range(0..40);
        let s = random_series(rng, n, n);
        if s.span_s() >= span_s {
            return s;
        }
    }
}

pub fn map_epochs(series: &RawSeries, mut f: impl FnMut(&Epoch) -> Vec<SatelliteObservation>) -> RawSeries {
    let epochs = series.epochs().iter().map(|e| Epoch::new(e.timestamp_s(), f(e)).unwrap()).collect();
    RawSeries::new(epochs, series.cadence_s()).unwrap()
}

/// Observations the filters must drop: excluded keys, or tracked below the mask.
pub fn inject_filtered(rng: &mut impl RngCore, series: &RawSeries, config: &DetectorConfig) -> RawSeries {
    let excluded: Vec<_> = config.excluded.iter().copied().collect();
    map_epochs(series, |e| {
        let mut obs = e.observations().to_vec();
        for _ in 0..rng.random_range(0..3) {
            let key = random_key(rng);
            if obs.iter().any(|o| o.key == key) {
                continue;
            }
            let cn0 = on_grid(rng, 0.0, 64.0, 10.0);
            let el = match config.elevation_mask_deg {
                Some(m) if m > -90.0 && !excluded.contains(&key) => {
                    on_grid(rng, -90.0, m - 0.1, 10.0).max(-90.0)
                }
                _ if excluded.contains(&key) => 45.0,
                _ => continue,
            };
            obs.push(SatelliteObservation::tracked(key, cn0, 10.0, el).with_fix(rng.random_bool(0.5)));
        }
        if let Some(&key) = excluded.choose(rng) {
            if obs.iter().all(|o| o.key != key) {
                obs.push(SatelliteObservation::tracked(key, 60.0, 0.0, 80.0));
            }
        }
        obs
    })
}

pub fn random_criterion(rng: &mut impl RngCore) -> Criterion {
    match rng.random_range(0..4) {
        0 => Criterion::MaxCn0Below(on_grid(rng, 0.0, 64.0, 10.0)),
        1 => Criterion::AvgCn0Below(on_grid(rng, 0.0, 64.0, 10.0)),
        2 => Criterion::DistinctSatsBelow(rng.random_range(0..60) as f64),
        _ => Criterion::FixSatsBelow(rng.random_range(0..12) as f64),
    }
}

pub fn random_config(rng: &mut impl RngCore) -> DetectorConfig {
    let n = rng.random_range(1..=4);
    DetectorConfig {
        init_duration_s: on_grid(rng, 0.0, 60.0, 10.0),
        measure_duration_s: on_grid(rng, 0.5, 60.0, 10.0),
        criteria: (0..n).map(|_| random_criterion(rng)).collect(),
        combine: if rng.random_bool(0.5) { Combine::All } else { Combine::Any },
        elevation_mask_deg: rng.random_bool(0.5).then(|| on_grid(rng, -10.0, 60.0, 10.0)),
        excluded: (0..rng.random_range(0..4)).map(|_| random_key(rng)).collect(),
        ..DetectorConfig::default()
    }
}

/// Two-pass mean and sample standard deviation, written independently of the library.
pub fn naive_summary(values: &[f64]) -> (f64, f64, f64, f64, usize) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, var.sqrt(), min, max, n)
}

/// `|a - b| <= tol * max(|b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Brute-force KS distance: evaluate both CDFs by counting at every union point.
pub fn naive_ks(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |xs: &[f64], x: f64| xs.iter().filter(|&&v| v <= x).count() as f64 / xs.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
        .fold(0.0, f64::max)
}
