//! High-frequency pressure dither and the speed low-pass filter.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Sinusoidal dither superimposed on the pressure command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DitherConfig {
    pub frequency_hz: f64,
    /// Amplitude growth per Pa of desired pressure.
    pub amplitude_slope: f64,
    /// Amplitude at zero desired pressure (Pa).
    pub amplitude_floor: f64,
    pub enabled: bool,
}

impl Default for DitherConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 150.0,
            amplitude_slope: 0.05,
            amplitude_floor: 20e3,
            enabled: true,
        }
    }
}

impl DitherConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn amplitude(&self, p_desired: f64) -> f64 {
        self.amplitude_floor + self.amplitude_slope * p_desired
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(invalid("dither.frequency_hz", "must be positive"));
        }
        if !(self.amplitude_slope >= 0.0 && self.amplitude_floor >= 0.0) {
            return Err(invalid("dither", "amplitude terms must be non-negative"));
        }
        Ok(())
    }
}

/// Dither pressure (Pa) at time `t` for desired pressure `p_desired`.
pub fn dither_signal(t: f64, p_desired: f64, cfg: &DitherConfig) -> f64 {
    if !cfg.enabled {
        return 0.0;
    }
    cfg.amplitude(p_desired) * (2.0 * PI * cfg.frequency_hz * t).sin()
}

/// Discrete first-order low-pass, exact for piecewise-constant input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    alpha: f64,
    y: f64,
}

impl LowPass {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        Self {
            alpha: 1.0 - (-2.0 * PI * cutoff_hz * dt).exp(),
            y: 0.0,
        }
    }

    pub fn reset(&mut self, value: f64) {
        self.y = value;
    }

    pub fn update(&mut self, u: f64) -> f64 {
        self.y += self.alpha * (u - self.y);
        self.y
    }

    pub fn value(&self) -> f64 {
        self.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_is_silent() {
        let cfg = DitherConfig::disabled();
        for k in 0..100 {
            assert_eq!(dither_signal(k as f64 * 1.3e-3, 1e6, &cfg), 0.0);
        }
    }

    #[test]
    fn zero_phase_and_peak() {
        let cfg = DitherConfig {
            amplitude_floor: 0.0,
            ..Default::default()
        };
        assert_eq!(dither_signal(0.0, 1e6, &cfg), 0.0);
        let quarter = 0.25 / cfg.frequency_hz;
        assert!((dither_signal(quarter, 1e6, &cfg) - 5e4).abs() < 1e-6);
        assert!((dither_signal(3.0 * quarter, 1e6, &cfg) + 5e4).abs() < 1e-6);
    }

    #[test]
    fn low_pass_step_matches_exponential() {
        let dt = 1e-3;
        let mut f = LowPass::new(150.0, dt);
        let mut y = 0.0;
        for _ in 0..3 {
            y = f.update(1.0);
        }
        let expect = 1.0 - (-2.0 * PI * 150.0 * 3.0 * dt).exp();
        assert!((y - expect).abs() < 1e-12);
    }
}
