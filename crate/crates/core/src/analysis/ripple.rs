//! Dither ripple and reversal-jump measures on uniformly sampled series.

use super::frf::fit_sinusoid;
use crate::error::{Error, Result};

/// Centered moving average over `window` samples; edges use the available part.
pub fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    let n = y.len();
    if window <= 1 || n == 0 {
        return y.to_vec();
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in y {
        prefix.push(prefix.last().unwrap() + v);
    }
    let lo_half = window / 2;
    let hi_half = window - lo_half;
    (0..n)
        .map(|k| {
            let a = k.saturating_sub(lo_half);
            let b = (k + hi_half).min(n);
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect()
}

/// Largest pressure excursion accumulated while the speed stays inside
/// `±band`, both series smoothed over `window` samples.
///
/// This is the height of the vertical segment a stick phase draws in the
/// pressure-against-speed plane. `window` should span whole periods of any
/// ripple to be ignored.
pub fn reversal_jump(signal: &[f64], speed: &[f64], band: f64, window: usize) -> Result<f64> {
    if signal.len() != speed.len() {
        return Err(Error::Analysis("signal and speed lengths differ".into()));
    }
    let s = moving_average(signal, window);
    let v = moving_average(speed, window);
    let hi = s.len().saturating_sub(window);
    let mut best: Option<f64> = None;
    let mut run: Option<(f64, f64)> = None;
    for k in window.min(hi)..hi {
        if v[k].abs() <= band {
            let (lo_v, hi_v) = run.unwrap_or((s[k], s[k]));
            run = Some((lo_v.min(s[k]), hi_v.max(s[k])));
        } else if let Some((a, b)) = run.take() {
            best = Some(best.map_or(b - a, |x: f64| x.max(b - a)));
        }
    }
    if let Some((a, b)) = run {
        best = Some(best.map_or(b - a, |x: f64| x.max(b - a)));
    }
    best.ok_or_else(|| Error::Analysis("no samples inside the reversal band".into()))
}

/// Amplitude of the `frequency_hz` component after removing the slow part.
pub fn ripple_amplitude(t: &[f64], y: &[f64], frequency_hz: f64, window: usize) -> Result<f64> {
    let slow = moving_average(y, window);
    let hp: Vec<f64> = y.iter().zip(&slow).map(|(a, b)| a - b).collect();
    let lo = window.min(hp.len());
    let hi = hp.len().saturating_sub(window).max(lo);
    Ok(fit_sinusoid(&t[lo..hi], &hp[lo..hi], frequency_hz)?.amplitude)
}
