//! Step-response metrics: 63% rise time and overshoot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rise time, overshoot and the levels they were measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Time from the step instant to 63% of the final change (ms).
    pub rise_time_63_ms: f64,
    /// Peak excursion beyond the final value, in % of the change; zero for a
    /// monotone response.
    pub overshoot_pct: f64,
    pub initial: f64,
    pub final_value: f64,
    /// False when the tail still drifts or the window is too short.
    pub reliable: bool,
}

/// Minimum post-step window (s).
pub const MIN_SETTLE_WINDOW: f64 = 0.5;

/// Metrics of a single step applied at `t_step`.
///
/// The initial level is the mean before the step, the final level the mean
/// of the last 20% of the record.
pub fn step_metrics(t: &[f64], y: &[f64], t_step: f64) -> Result<StepMetrics> {
    if t.len() != y.len() || t.len() < 10 {
        return Err(Error::Analysis("step record too short".into()));
    }
    let pre: Vec<f64> = t
        .iter()
        .zip(y)
        .filter(|(ti, _)| **ti < t_step)
        .map(|(_, v)| *v)
        .collect();
    let initial = if pre.is_empty() {
        y[0]
    } else {
        pre.iter().sum::<f64>() / pre.len() as f64
    };
    let start = t
        .iter()
        .position(|&ti| ti >= t_step)
        .ok_or_else(|| Error::Analysis("no samples after the step".into()))?;
    let post = &y[start..];
    let post_t = &t[start..];
    let n = post.len();
    let tail = &post[n - (n / 5).max(1)..];
    let final_value = tail.iter().sum::<f64>() / tail.len() as f64;
    let change = final_value - initial;
    if change == 0.0 {
        return Err(Error::Analysis("step has zero amplitude".into()));
    }
    let level = initial + 0.63 * change;
    let above = |v: f64| (v - level) * change.signum() >= 0.0;
    let mut rise = f64::NAN;
    for k in 0..n {
        if above(post[k]) {
            rise = if k == 0 {
                post_t[0] - t_step
            } else {
                let w = (level - post[k - 1]) / (post[k] - post[k - 1]);
                post_t[k - 1] + w * (post_t[k] - post_t[k - 1]) - t_step
            };
            break;
        }
    }
    let peak = post
        .iter()
        .map(|v| (v - initial) * change.signum())
        .fold(f64::NEG_INFINITY, f64::max);
    let monotone = post.windows(2).all(|w| (w[1] - w[0]) * change.signum() >= 0.0);
    let overshoot_pct = if monotone {
        0.0
    } else {
        ((peak - change.abs()) / change.abs() * 100.0).max(0.0)
    };

    let window = post_t[n - 1] - t_step;
    let k10 = (n / 10).max(1);
    let last = &post[n - k10..];
    let prev = &post[n - 2 * k10..n - k10];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let drift = (mean(last) - mean(prev)).abs() / change.abs();
    Ok(StepMetrics {
        rise_time_63_ms: rise * 1e3,
        overshoot_pct,
        initial,
        final_value,
        reliable: window >= MIN_SETTLE_WINDOW && drift < 0.02 && rise.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_order_rise_is_time_constant() {
        let tau = 0.02;
        let t: Vec<f64> = (0..100_000).map(|k| k as f64 * 1e-5).collect();
        let y: Vec<f64> = t
            .iter()
            .map(|&t| if t < 0.1 { 0.0 } else { 1.0 - (-(t - 0.1) / tau).exp() })
            .collect();
        let m = step_metrics(&t, &y, 0.1).unwrap();
        // 63% rather than 1 − 1/e gives 0.994 τ.
        assert!((m.rise_time_63_ms - tau * 1e3).abs() / (tau * 1e3) < 0.01);
        assert_eq!(m.overshoot_pct, 0.0);
        assert!(m.reliable);
    }

    #[test]
    fn short_window_is_unreliable() {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * 1e-4).collect();
        let y: Vec<f64> = t.iter().map(|&t| if t < 0.05 { 0.0 } else { 1.0 }).collect();
        assert!(!step_metrics(&t, &y, 0.05).unwrap().reliable);
    }
}
