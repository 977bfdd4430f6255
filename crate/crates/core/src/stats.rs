//! Windowed summaries over a series, and empirical distributions.
//!
//! All windows are expressed relative to the first epoch of the series and
//! are half-open: `start <= t < start + duration`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Epoch, RawSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("window duration must be positive and finite, got {0}")]
    InvalidWindow(f64),
    #[error("window contains no samples")]
    EmptyWindow,
    #[error("an empirical distribution needs at least one value")]
    EmptyInput,
    #[error("sample value {0} is not finite")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    start_s: f64,
    duration_s: f64,
}

impl Window {
    pub fn new(start_s: f64, duration_s: f64) -> Result<Self, StatsError> {
        if !(duration_s.is_finite() && duration_s > 0.0 && start_s.is_finite()) {
            return Err(StatsError::InvalidWindow(duration_s));
        }
        Ok(Window { start_s, duration_s })
    }

    /// Covers every epoch of `series`.
    pub fn whole(series: &RawSeries) -> Self {
        Window { start_s: 0.0, duration_s: series.span_s().max(f64::MIN_POSITIVE) }
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }

    pub fn contains(&self, relative_t: f64) -> bool {
        self.start_s <= relative_t && relative_t < self.end_s()
    }

    /// Epochs of `series` inside the window.
    pub fn select<'a>(&self, series: &'a RawSeries) -> impl Iterator<Item = &'a Epoch> + 'a {
        let w = *self;
        series.relative().filter(move |(t, _)| w.contains(*t)).map(|(_, e)| e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single sample.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl SummaryStats {
    /// Single-pass (Welford) summary; `None` for an empty sample.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Option<Self> {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for x in values {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
            min = min.min(x);
            max = max.max(x);
        }
        if n == 0 {
            return None;
        }
        let std_dev = if n > 1 { (m2.max(0.0) / (n - 1) as f64).sqrt() } else { 0.0 };
        Some(SummaryStats { mean: mean.clamp(min, max), std_dev, min, max, n })
    }
}

/// Which per-epoch satellite count to summarise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SatCount {
    /// S_i: satellites with a signal.
    Available,
    /// X_i: satellites used in the fix.
    UsedInFix,
}

/// C/N0 statistics pooled over every signal-present observation in the window.
pub fn cn0_summary(series: &RawSeries, window: &Window) -> Result<SummaryStats, StatsError> {
    let values = window.select(series).flat_map(|e| e.present().map(|o| o.cn0_dbhz));
    SummaryStats::from_values(values).ok_or(StatsError::EmptyWindow)
}

/// Statistics of the per-epoch satellite count sequence within the window.
pub fn satcount_summary(
    series: &RawSeries,
    window: &Window,
    which: SatCount,
) -> Result<SummaryStats, StatsError> {
    let values = window.select(series).map(|e| match which {
        SatCount::Available => e.satellite_count() as f64,
        SatCount::UsedInFix => e.fix_count() as f64,
    });
    SummaryStats::from_values(values).ok_or(StatsError::EmptyWindow)
}

/// Time from the first epoch to the first epoch with a fix.
pub fn time_to_first_fix(series: &RawSeries) -> Option<f64> {
    series.relative().find(|(_, e)| e.fix_count() > 0).map(|(t, _)| t)
}

/// Number of distinct satellites heard at least once in the window.
pub fn distinct_satellites(series: &RawSeries, window: &Window) -> usize {
    window
        .select(series)
        .flat_map(|e| e.present().map(|o| o.key))
        .collect::<HashSet<_>>()
        .len()
}

/// Empirical CDF of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(bad));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Ecdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// P(X <= x)
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// P(X < x)
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    /// Distinct sample points with the cumulative probability reached at each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = p,
                _ => out.push((v, p)),
            }
        }
        out
    }
}

/// Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
///
/// Both step functions only change at sample points, so a merge walk over
/// the two sorted samples visits every candidate.
pub fn ks_distance(a: &Ecdf, b: &Ecdf) -> f64 {
    let (xs, ys) = (&a.sorted, &b.sorted);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    // one sample is exhausted, the other's CDF is still below 1
    if i < xs.len() || j < ys.len() {
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}
