//! Physical constants of one MR-hydrostatic transmission line.
//!
//! Every struct deserializes with `#[serde(default)]`, so an empty config
//! file yields the identified system.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Maximum joint torque of one line (N·m).
pub const JOINT_TORQUE_MAX: f64 = 29.0;
/// Line pressure reached at [`JOINT_TORQUE_MAX`] (Pa).
pub const PRESSURE_MAX: f64 = 2.31e6;

/// Three-mass chain, all values reflected at the slave piston.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmissionParams {
    /// Clutch + ball screw + piston mass (kg).
    pub m1: f64,
    /// Hydraulic fluid mass (kg).
    pub m2: f64,
    /// Robot structure + payload mass (kg).
    pub m3: f64,
    /// Power-unit transmission stiffness (N/m).
    pub k1: f64,
    /// Robot-side transmission stiffness (N/m).
    pub k2: f64,
    /// Robot structure + base stiffness (N/m).
    pub k3: f64,
    /// Clutch + ball screw damping (N·s/m).
    pub b1: f64,
    /// Hydraulic viscous damping (N·s/m).
    pub b2: f64,
    /// Robot + base viscous damping (N·s/m).
    pub b3: f64,
}

impl Default for TransmissionParams {
    fn default() -> Self {
        Self {
            m1: 11.0,
            m2: 7.0,
            m3: 976.0,
            k1: 6.2e5,
            k2: 5.3e5,
            k3: 2.2e5,
            b1: 650.0,
            b2: 204.0,
            b3: 10_000.0,
        }
    }
}

impl TransmissionParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("m3", self.m3),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("b1", self.b1),
            ("b2", self.b2),
            ("b3", self.b3),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(
                    "transmission",
                    format!("{name} must be strictly positive, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Static torque curve and first-order-plus-delay dynamics of the MR clutch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MrClutchParams {
    pub poly_c3: f64,
    pub poly_c2: f64,
    pub poly_c1: f64,
    pub poly_c0: f64,
    /// Pure transport delay of drive + fluid (s).
    pub tau_delay: f64,
    /// Cutoff of the first-order torque lag (rad/s).
    pub omega_c: f64,
    /// Torque rating (N·m).
    pub torque_max: f64,
    /// Coil drive limit (A).
    pub current_max: f64,
}

impl Default for MrClutchParams {
    fn default() -> Self {
        Self {
            poly_c3: -0.015,
            poly_c2: 0.104,
            poly_c1: 0.225,
            poly_c0: 0.044,
            tau_delay: 0.002,
            omega_c: 2.0 * PI * 64.0,
            torque_max: 2.0,
            current_max: 3.0,
        }
    }
}

impl MrClutchParams {
    /// Raw polynomial value, no clamping.
    pub fn poly(&self, i: f64) -> f64 {
        ((self.poly_c3 * i + self.poly_c2) * i + self.poly_c1) * i + self.poly_c0
    }

    /// dT/dI of the polynomial.
    pub fn poly_slope(&self, i: f64) -> f64 {
        (3.0 * self.poly_c3 * i + 2.0 * self.poly_c2) * i + self.poly_c1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.current_max > 0.0 && self.torque_max > 0.0) {
            return Err(invalid("clutch", "current_max and torque_max must be positive"));
        }
        if !(self.omega_c > 0.0) {
            return Err(invalid("clutch", "omega_c must be positive"));
        }
        if !(self.tau_delay >= 0.0) {
            return Err(invalid("clutch", "tau_delay must be non-negative"));
        }
        // The slope is quadratic in i, so its minimum over the interval sits
        // at an endpoint or at the vertex.
        let mut probes = vec![0.0, self.current_max];
        if self.poly_c3 != 0.0 {
            let vertex = -self.poly_c2 / (3.0 * self.poly_c3);
            if vertex > 0.0 && vertex < self.current_max {
                probes.push(vertex);
            }
        }
        if probes.iter().any(|&i| self.poly_slope(i) <= 0.0) {
            return Err(invalid(
                "clutch",
                "torque polynomial must be strictly increasing on [0, current_max]",
            ));
        }
        Ok(())
    }
}

/// Friction law selector for the ball-screw nut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionMode {
    SmoothTanh,
    StickSlipSign,
    Off,
}

/// Load-proportional Coulomb friction of the ball screw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionParams {
    pub mu: f64,
    /// Slope of the tanh transition (s/m).
    pub n_steepness: f64,
    pub mode: FrictionMode,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self {
            mu: 0.14,
            n_steepness: 1000.0,
            mode: FrictionMode::SmoothTanh,
        }
    }
}

impl FrictionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.mu) {
            return Err(invalid("friction", format!("mu must lie in [0, 1), got {}", self.mu)));
        }
        if !(self.n_steepness > 0.0) {
            return Err(invalid("friction", "n_steepness must be positive"));
        }
        Ok(())
    }
}

/// Piston areas, pulley and screw geometry, and line pretension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryParams {
    /// Master piston area (m²).
    pub area_master: f64,
    /// Slave piston area (m²).
    pub area_slave: f64,
    /// Joint pulley radius (m).
    pub r_pulley: f64,
    /// Ball-screw lead (m/rev).
    pub screw_lead: f64,
    /// Nominal joint torque / clutch torque ratio.
    pub ratio_r: f64,
    /// Cable pretension pressure added to every reference (Pa).
    pub p_dc: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        let screw_lead = 0.008;
        let clutch_torque_max = MrClutchParams::default().torque_max;
        // Ideal screw force at full clutch torque balances PRESSURE_MAX on the
        // master piston; the slave side mirrors it.
        let area_master = clutch_torque_max * 2.0 * PI / screw_lead / PRESSURE_MAX;
        let area_slave = area_master;
        Self {
            area_master,
            area_slave,
            r_pulley: JOINT_TORQUE_MAX / PRESSURE_MAX / area_slave,
            screw_lead,
            ratio_r: 14.7,
            p_dc: 205e3,
        }
    }
}

impl GeometryParams {
    /// Linear force on the piston per N·m of clutch torque (ideal screw).
    pub fn force_per_torque(&self) -> f64 {
        2.0 * PI / self.screw_lead
    }

    /// Joint torque produced per Pa of slave pressure (m³).
    pub fn torque_per_pressure(&self) -> f64 {
        self.area_slave * self.r_pulley
    }

    /// Joint/clutch torque ratio implied by the geometry.
    pub fn geometric_ratio(&self) -> f64 {
        self.force_per_torque() * self.torque_per_pressure() / self.area_master
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("area_master", self.area_master),
            ("area_slave", self.area_slave),
            ("r_pulley", self.r_pulley),
            ("screw_lead", self.screw_lead),
            ("ratio_r", self.ratio_r),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid("geometry", format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.p_dc >= 0.0) {
            return Err(invalid("geometry", "p_dc must be non-negative"));
        }
        Ok(())
    }
}

/// Complete parameter set of the simulated actuator line.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    pub transmission: TransmissionParams,
    pub clutch: MrClutchParams,
    pub friction: FrictionParams,
    pub geometry: GeometryParams,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        self.transmission.validate()?;
        self.clutch.validate()?;
        self.friction.validate()?;
        self.geometry.validate()
    }

    /// Largest linear force the clutch may be asked for (N).
    pub fn force_max(&self) -> f64 {
        self.clutch.torque_max * self.geometry.force_per_torque()
    }

    pub fn with_friction_mode(mut self, mode: FrictionMode) -> Self {
        self.friction.mode = mode;
        self
    }
}
