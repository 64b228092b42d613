//! Distortion and timing measurements.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum number of timed runs behind a bench timing summary.
pub const MIN_TIMING_RUNS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub prd: f64,
    pub n: usize,
    pub packet_index: Option<usize>,
}

/// Percentage root-mean-square distortion, `100·‖x − x̂‖₂ / ‖x‖₂`.
pub fn prd(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    if x.len() != x_hat.len() {
        return Err(Error::Dimension {
            context: "prd",
            expected: x.len(),
            actual: x_hat.len(),
        });
    }
    let reference = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err = x
        .iter()
        .zip(x_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * err / reference)
}

pub fn distortion(x: &[f64], x_hat: &[f64], packet_index: Option<usize>) -> Result<DistortionReport> {
    Ok(DistortionReport {
        prd: prd(x, x_hat)?,
        n: x.len(),
        packet_index,
    })
}

/// Runs `f` once and measures it with the monotonic clock.
pub fn time_op<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub runs: usize,
    pub median_s: f64,
    pub mean_s: f64,
}

impl TimingSummary {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        Some(TimingSummary {
            runs: samples.len(),
            median_s: median(samples)?,
            mean_s: mean(samples)?,
        })
    }
}

/// Times `f` `max(runs, MIN_TIMING_RUNS)` times; returns the last result.
pub fn time_repeated<T>(runs: usize, mut f: impl FnMut() -> T) -> (T, TimingSummary) {
    let runs = runs.max(MIN_TIMING_RUNS);
    let mut samples = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs {
        let (out, d) = time_op(&mut f);
        samples.push(d.as_secs_f64());
        last = Some(out);
    }
    let summary = TimingSummary::from_samples(&samples).expect("at least one run");
    (last.expect("at least one run"), summary)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    })
}
