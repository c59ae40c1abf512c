use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dataset::LinkTrace;
use crate::error::domain;
use crate::Result;

/// How the non-normalized autocorrelation `R_k` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CorrelationMethod {
    /// Zero-padded FFT, O(N log N) for all lags.
    #[default]
    Transform,
    /// Word-parallel direct summation, O(N / 64) per lag.
    Direct,
}

/// Normalized autocorrelation `rho_k = R_k / R_0` of a binary trace for lags
/// `0..=max_lag`; negative lags mirror positive ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationResult {
    pub r0: u64,
    /// `rho[k]` for `k = 0..=max_lag`.
    pub rho: Vec<f64>,
    /// Maximum of `rho_k` over `k != 0`, `None` when no such lag is in range.
    pub rho_max: Option<f64>,
    /// Smallest positive lag attaining `rho_max`.
    pub rho_max_lag: Option<usize>,
}

impl AutocorrelationResult {
    pub fn max_lag(&self) -> usize {
        self.rho.len() - 1
    }

    pub fn rho_at(&self, k: i64) -> Option<f64> {
        self.rho.get(k.unsigned_abs() as usize).copied()
    }

    /// `R_k` recovered from `rho_k * R_0`.
    pub fn r_at(&self, k: i64) -> Option<f64> {
        self.rho_at(k).map(|r| r * self.r0 as f64)
    }
}

/// Full-range autocorrelation, lags `|k| <= N / 2`, via the transform path.
pub fn autocorrelation(trace: &LinkTrace) -> Result<AutocorrelationResult> {
    autocorrelation_with(trace, None, CorrelationMethod::Transform)
}

/// Autocorrelation restricted to `|k| <= min(max_lag, N / 2)`.
pub fn autocorrelation_with(
    trace: &LinkTrace,
    max_lag: Option<usize>,
    method: CorrelationMethod,
) -> Result<AutocorrelationResult> {
    let n = trace.len();
    let r0 = trace.count_ones() as u64;
    if r0 == 0 {
        return Err(domain("autocorrelation of a trace without any 1 is undefined (R_0 = 0)"));
    }
    let max_lag = max_lag.map_or(n / 2, |m| m.min(n / 2));
    let r = match method {
        CorrelationMethod::Transform => lags_fft(trace, max_lag),
        CorrelationMethod::Direct => lags_direct(trace, max_lag),
    };
    debug_assert_eq!(r[0], r0);
    let rho: Vec<f64> = r.iter().map(|&v| v as f64 / r0 as f64).collect();
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in rho.iter().enumerate().skip(1) {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    Ok(AutocorrelationResult {
        r0,
        rho,
        rho_max: best.map(|b| b.1),
        rho_max_lag: best.map(|b| b.0),
    })
}

/// `R_k` for `k = 0..=max_lag` as exact integers. The FFT result is rounded:
/// for 0/1 inputs every `R_k` is an integer and the transform error stays far
/// below one half for any trace that fits in memory.
fn lags_fft(trace: &LinkTrace, max_lag: usize) -> Vec<u64> {
    let n = trace.len();
    let size = (n + max_lag + 1).next_power_of_two();
    let mut buf = vec![Complex::new(0.0f64, 0.0); size];
    trace.ones_in(0, n, |i| buf[i].re = 1.0);

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / size as f64;
    buf[..=max_lag]
        .iter()
        .map(|c| (c.re * scale).round().max(0.0) as u64)
        .collect()
}

/// `R_k = popcount(x AND (x >> k))`, word by word.
fn lags_direct(trace: &LinkTrace, max_lag: usize) -> Vec<u64> {
    let words = trace.words();
    (0..=max_lag)
        .map(|k| {
            let (ws, bs) = (k / 64, k % 64);
            let mut total = 0u64;
            for i in 0..words.len().saturating_sub(ws) {
                let lo = words[i + ws] >> bs;
                let hi = if bs == 0 {
                    0
                } else {
                    words.get(i + ws + 1).map_or(0, |w| w << (64 - bs))
                };
                total += (words[i] & (lo | hi)).count_ones() as u64;
            }
            total
        })
        .collect()
}
