//! Pressure PID on either the master (collocated) or slave (non-collocated) cylinder.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::dither::{dither_signal, DitherConfig, LowPass};
use super::{actuate, ControlInput, ControlOutput, Controller, Measurements};
use crate::analysis::frf::{bandwidth, Bandwidth, FrfPoint};
use crate::error::{invalid, Result};
use crate::linalg::{transfer, C64};
use crate::plant::params::PRESSURE_MAX;
use crate::plant::{build_state_space, PlantParams, Saturation};

/// Integral gain of the collocated loop (1/s): the 6 dB margin limit found
/// by [`calibrate_pid`] (31.29), rounded down.
pub const KI_MASTER_DEFAULT: f64 = 31.2;
/// Integral gain of the non-collocated loop (1/s), from [`calibrate_pid`] on
/// the default dwell grid.
pub const KI_SLAVE_DEFAULT: f64 = 16.37;

/// Bandwidth targets used by the calibration (Hz).
pub const MASTER_BANDWIDTH_TARGET: f64 = 11.0;
pub const SLAVE_BANDWIDTH_TARGET: f64 = 3.0;
/// Minimum gain margin kept by the calibration (dB).
pub const MIN_GAIN_MARGIN_DB: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackTap {
    MasterPressure,
    SlavePressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidConfig {
    pub kp: f64,
    /// Integral gain (1/s).
    pub ki: f64,
    /// Derivative gain (s).
    pub kd: f64,
    pub tap: FeedbackTap,
    /// Bound on the integrator contribution (Pa).
    pub integrator_limit: f64,
    /// Cutoff of the derivative filter (Hz).
    pub derivative_filter_hz: f64,
    pub dither: DitherConfig,
}

impl Default for PidConfig {
    fn default() -> Self {
        Self::master_default()
    }
}

impl PidConfig {
    pub fn master_default() -> Self {
        Self {
            kp: 0.0,
            ki: KI_MASTER_DEFAULT,
            kd: 0.0,
            tap: FeedbackTap::MasterPressure,
            integrator_limit: PRESSURE_MAX,
            derivative_filter_hz: 150.0,
            dither: DitherConfig::default(),
        }
    }

    pub fn slave_default() -> Self {
        Self {
            ki: KI_SLAVE_DEFAULT,
            tap: FeedbackTap::SlavePressure,
            ..Self::master_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dither.validate()?;
        for (name, v) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid("pid", format!("{name} must be finite and non-negative")));
            }
        }
        if !(self.integrator_limit > 0.0 && self.derivative_filter_hz > 0.0) {
            return Err(invalid(
                "pid",
                "integrator_limit and derivative_filter_hz must be positive",
            ));
        }
        Ok(())
    }
}

/// Parallel PID on the pressure error with conditional integration.
///
/// The command is the pretension pressure plus the PID correction plus dither.
#[derive(Debug, Clone)]
pub struct Pid {
    cfg: PidConfig,
    params: PlantParams,
    dt: f64,
    integrator: f64,
    prev_error: Option<f64>,
    derivative: LowPass,
    last_saturation: Saturation,
}

impl Pid {
    pub fn new(cfg: PidConfig, params: PlantParams, dt: f64) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        Ok(Self {
            cfg,
            params,
            dt,
            integrator: 0.0,
            prev_error: None,
            derivative: LowPass::new(cfg.derivative_filter_hz, dt),
            last_saturation: Saturation::None,
        })
    }

    pub fn integrator(&self) -> f64 {
        self.integrator
    }

    fn feedback(&self, meas: &Measurements) -> f64 {
        match self.cfg.tap {
            FeedbackTap::MasterPressure => meas.p_master,
            FeedbackTap::SlavePressure => meas.p_slave,
        }
    }
}

impl Controller for Pid {
    fn name(&self) -> &'static str {
        match self.cfg.tap {
            FeedbackTap::MasterPressure => "master_pid",
            FeedbackTap::SlavePressure => "slave_pid",
        }
    }

    fn reset(&mut self, p_desired: f64, _meas: &Measurements) {
        let lim = self.cfg.integrator_limit;
        self.integrator = (p_desired - self.params.geometry.p_dc).clamp(-lim, lim);
        self.prev_error = None;
        self.derivative.reset(0.0);
        self.last_saturation = Saturation::None;
    }

    fn step(&mut self, input: &ControlInput) -> Result<ControlOutput> {
        let e = input.p_desired - self.feedback(&input.meas);
        let winding = match self.last_saturation {
            Saturation::High => e > 0.0,
            Saturation::Low => e < 0.0,
            Saturation::None => false,
        };
        if !winding {
            let lim = self.cfg.integrator_limit;
            self.integrator = (self.integrator + self.cfg.ki * e * self.dt).clamp(-lim, lim);
        }
        let de = match self.prev_error {
            Some(prev) => self.derivative.update((e - prev) / self.dt),
            None => self.derivative.value(),
        };
        self.prev_error = Some(e);
        let correction = self.cfg.kp * e + self.integrator + self.cfg.kd * de;
        let pressure =
            self.params.geometry.p_dc + correction + dither_signal(input.t, input.p_desired, &self.cfg.dither);
        let out = actuate(pressure * self.params.geometry.area_master, &self.params);
        self.last_saturation = out.saturation;
        Ok(out)
    }
}

/// Linear-model properties of one PID loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PidLoopMetrics {
    pub gain_margin_db: f64,
    /// Frequency of the binding phase crossover (Hz).
    pub phase_crossover_hz: f64,
    pub bandwidth: Bandwidth,
    pub frf: Vec<FrfPoint>,
}

/// Margin and closed-loop `P_s/P_d` of a PID loop on the linear model.
///
/// `delay` is the transport delay inserted in the loop (s); `grid` lists the
/// frequencies at which the closed-loop response is evaluated.
pub fn pid_loop_metrics(params: &PlantParams, cfg: &PidConfig, delay: f64, grid: &[f64]) -> PidLoopMetrics {
    let ss = build_state_space(params);
    let b = ss.b_vec();
    let c_s = ss.c_d_vec();
    let c_m = ss.c.row(crate::plant::linear::Y_P_MASTER).transpose();
    let c_tap = match cfg.tap {
        FeedbackTap::MasterPressure => c_m,
        FeedbackTap::SlavePressure => c_s.clone(),
    };
    let area = params.geometry.area_master;
    let ctrl = |s: C64| (C64::new(cfg.kp, 0.0) + cfg.ki / s + cfg.kd * s) * area;
    let eval = |f: f64| {
        let s = C64::new(0.0, 2.0 * PI * f);
        let d = (-s * delay).exp();
        let g_tap = transfer(&ss.a, &b, &c_tap, 0.0, s) * d;
        let g_s = transfer(&ss.a, &b, &c_s, 0.0, s) * d;
        let k = ctrl(s);
        (k * g_tap, k * g_s / (1.0 + k * g_tap))
    };

    // Gain margin from a dense log grid of the loop transfer.
    let n = 6000;
    let (f_lo, f_hi) = (0.05f64, 3000.0f64);
    let mut gm = f64::INFINITY;
    let mut f_gm = f64::NAN;
    let mut prev: Option<(f64, f64, f64)> = None;
    let mut unwrap = 0.0;
    for k in 0..n {
        let f = f_lo * (f_hi / f_lo).powf(k as f64 / (n - 1) as f64);
        let (l, _) = eval(f);
        let mut ph = l.arg().to_degrees() + unwrap;
        if let Some((_, p_prev, _)) = prev {
            while ph - p_prev > 180.0 {
                ph -= 360.0;
                unwrap -= 360.0;
            }
            while ph - p_prev < -180.0 {
                ph += 360.0;
                unwrap += 360.0;
            }
        }
        let mag = l.norm();
        if let Some((f_prev, p_prev, m_prev)) = prev {
            // Crossing of any odd multiple of −180°.
            let band = |p: f64| ((p + 180.0) / 360.0).floor();
            if band(p_prev) != band(ph) {
                let target = 360.0 * band(p_prev.max(ph)) - 180.0;
                let w = (target - p_prev) / (ph - p_prev);
                let m = m_prev + w * (mag - m_prev);
                let margin = -20.0 * m.log10();
                if margin < gm {
                    gm = margin;
                    f_gm = f_prev + w * (f - f_prev);
                }
            }
        }
        prev = Some((f, ph, mag));
    }

    let mut frf = Vec::with_capacity(grid.len());
    let mut unwrap = 0.0;
    let mut last: Option<f64> = None;
    for &f in grid {
        let (_, t) = eval(f);
        let mut ph = t.arg().to_degrees() + unwrap;
        if let Some(p) = last {
            while ph - p > 180.0 {
                ph -= 360.0;
                unwrap -= 360.0;
            }
            while ph - p < -180.0 {
                ph += 360.0;
                unwrap += 360.0;
            }
        }
        last = Some(ph);
        frf.push(FrfPoint {
            frequency_hz: f,
            magnitude_db: 20.0 * t.norm().log10(),
            phase_deg: ph,
            flagged: false,
        });
    }
    PidLoopMetrics {
        gain_margin_db: gm,
        phase_crossover_hz: f_gm,
        bandwidth: bandwidth(&frf),
        frf,
    }
}

/// Result of the integral-gain calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct PidCalibration {
    pub ki: f64,
    pub bandwidth_hz: f64,
    pub gain_margin_db: f64,
    /// Largest integral gain that still keeps the margin.
    pub ki_margin_limit: f64,
    /// False when the margin limit stops the gain short of the target.
    pub target_reached: bool,
}

/// Finds the integral-only gain reaching `target_hz` without dropping below
/// `min_gm_db` of gain margin.
///
/// The loop includes the clutch delay plus half a control period of hold.
pub fn calibrate_pid(
    params: &PlantParams,
    tap: FeedbackTap,
    target_hz: f64,
    min_gm_db: f64,
    control_dt: f64,
    grid: &[f64],
) -> PidCalibration {
    let delay = params.clutch.tau_delay + 0.5 * control_dt;
    let cfg_for = |ki: f64| PidConfig {
        kp: 0.0,
        ki,
        kd: 0.0,
        tap,
        ..PidConfig::master_default()
    };
    let metrics = |ki: f64| pid_loop_metrics(params, &cfg_for(ki), delay, grid);
    let bw_of = |m: &PidLoopMetrics| m.bandwidth.hz().unwrap_or(f64::INFINITY);

    let (mut lo, mut hi) = (0.0, 1.0);
    while metrics(hi).gain_margin_db >= min_gm_db && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if metrics(mid).gain_margin_db >= min_gm_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ki_limit = lo;
    let at_limit = metrics(ki_limit);
    if bw_of(&at_limit) < target_hz {
        return PidCalibration {
            ki: ki_limit,
            bandwidth_hz: bw_of(&at_limit),
            gain_margin_db: at_limit.gain_margin_db,
            ki_margin_limit: ki_limit,
            target_reached: false,
        };
    }
    let (mut lo, mut hi) = (0.0, ki_limit);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if bw_of(&metrics(mid)) < target_hz {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = metrics(hi);
    PidCalibration {
        ki: hi,
        bandwidth_hz: bw_of(&m),
        gain_margin_db: m.gain_margin_db,
        ki_margin_limit: ki_limit,
        target_reached: true,
    }
}
