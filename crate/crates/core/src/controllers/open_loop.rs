//! Feedthrough controller with optional ball-screw friction compensation.

use serde::{Deserialize, Serialize};

use super::dither::{dither_signal, DitherConfig, LowPass};
use super::{actuate, ControlInput, ControlOutput, Controller, Measurements};
use crate::error::{invalid, Result};
use crate::plant::{friction_pressure, FrictionMode, FrictionParams, PlantParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpenLoopConfig {
    pub friction_compensation: bool,
    /// Friction model fed forward; its `mode` is normally the smooth law.
    pub friction_model: FrictionParams,
    /// Cutoff of the ball-nut speed filter (Hz).
    pub speed_filter_hz: f64,
    pub dither: DitherConfig,
}

impl Default for OpenLoopConfig {
    fn default() -> Self {
        Self::baseline()
    }
}

impl OpenLoopConfig {
    pub fn baseline() -> Self {
        Self {
            friction_compensation: false,
            friction_model: FrictionParams {
                mode: FrictionMode::SmoothTanh,
                ..FrictionParams::default()
            },
            speed_filter_hz: 150.0,
            dither: DitherConfig::disabled(),
        }
    }

    pub fn compensated() -> Self {
        Self {
            friction_compensation: true,
            dither: DitherConfig::default(),
            ..Self::baseline()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.friction_model.validate()?;
        self.dither.validate()?;
        if !(self.speed_filter_hz > 0.0) {
            return Err(invalid("speed_filter_hz", "must be positive"));
        }
        Ok(())
    }
}

/// Open-loop pressure command `P_d + P_f + P_dither`.
#[derive(Debug, Clone)]
pub struct OpenLoop {
    cfg: OpenLoopConfig,
    params: PlantParams,
    speed: LowPass,
}

impl OpenLoop {
    pub fn new(cfg: OpenLoopConfig, params: PlantParams, dt: f64) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        Ok(Self {
            cfg,
            params,
            speed: LowPass::new(cfg.speed_filter_hz, dt),
        })
    }

    /// Compensation pressure for the current filtered speed.
    pub fn compensation(&self, p_master: f64) -> f64 {
        if !self.cfg.friction_compensation {
            return 0.0;
        }
        friction_pressure(p_master.max(0.0), self.speed.value(), &self.cfg.friction_model)
    }
}

impl Controller for OpenLoop {
    fn name(&self) -> &'static str {
        if self.cfg.friction_compensation {
            "friction_compensation"
        } else {
            "open_loop"
        }
    }

    fn reset(&mut self, _p_desired: f64, meas: &Measurements) {
        self.speed.reset(meas.v1);
    }

    fn step(&mut self, input: &ControlInput) -> Result<ControlOutput> {
        self.speed.update(input.meas.v1);
        let g = &self.params.geometry;
        let extra = self.compensation(input.meas.p_master) + dither_signal(input.t, input.p_desired, &self.cfg.dither);
        let force = input.p_desired * g.area_slave + extra * g.area_master;
        Ok(actuate(force, &self.params))
    }
}
