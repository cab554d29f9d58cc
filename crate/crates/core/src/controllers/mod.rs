//! Discrete controllers mapping pressure reference and sensor readings to
//! MR clutch current.

pub mod dither;
pub mod lqgi;
pub mod open_loop;
pub mod pid;

use serde::{Deserialize, Serialize};

pub use dither::{dither_signal, DitherConfig, LowPass};
pub use lqgi::{Lqgi, LqgiConfig};
pub use open_loop::{OpenLoop, OpenLoopConfig};
pub use pid::{
    calibrate_pid, pid_loop_metrics, FeedbackTap, Pid, PidCalibration, PidConfig, PidLoopMetrics, KI_MASTER_DEFAULT,
    KI_SLAVE_DEFAULT, MASTER_BANDWIDTH_TARGET, MIN_GAIN_MARGIN_DB, SLAVE_BANDWIDTH_TARGET,
};

use crate::error::Result;
use crate::plant::{current_from_force, force_from_current, PlantParams, Saturation};
use crate::synthesis::GainSet;

/// Sensor readings available to every controller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Measurements {
    /// Ball-nut position (m).
    pub x1: f64,
    /// Ball-nut speed (m/s).
    pub v1: f64,
    /// Joint position reflected at the slave piston (m).
    pub x3: f64,
    pub p_master: f64,
    pub p_slave: f64,
}

impl Measurements {
    /// Estimator output vector `[x1, v1, x3, p_master]`.
    pub fn y(&self) -> [f64; 4] {
        [self.x1, self.v1, self.x3, self.p_master]
    }
}

/// One controller tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput {
    pub t: f64,
    /// Desired slave pressure (Pa).
    pub p_desired: f64,
    pub meas: Measurements,
}

/// Command produced by one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    /// Coil current (A).
    pub current: f64,
    /// Force the clutch settles to under that current (N).
    pub force: f64,
    /// Force requested before the actuator limits (N).
    pub force_request: f64,
    pub saturation: Saturation,
    /// Controller internal state, when it has one (estimate and integrator).
    pub internal: Option<[f64; 8]>,
}

/// Common interface of the discrete controllers.
pub trait Controller: Send {
    fn name(&self) -> &'static str;

    /// Re-initializes internal state for a plant resting at `p_desired`.
    fn reset(&mut self, p_desired: f64, meas: &Measurements);

    fn step(&mut self, input: &ControlInput) -> Result<ControlOutput>;
}

/// Converts a force request into coil current and the force it delivers.
pub fn actuate(force_request: f64, params: &PlantParams) -> ControlOutput {
    let (current, saturation) = current_from_force(force_request, params);
    ControlOutput {
        current,
        force: force_from_current(current, params),
        force_request,
        saturation,
        internal: None,
    }
}

/// The five strategies compared in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Feedthrough only, no dither.
    OpenLoop,
    /// Feedthrough with friction compensation and dither.
    FrictionCompensation,
    MasterPid,
    SlavePid,
    Lqgi,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::OpenLoop,
        ControllerKind::FrictionCompensation,
        ControllerKind::MasterPid,
        ControllerKind::SlavePid,
        ControllerKind::Lqgi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerKind::OpenLoop => "open_loop",
            ControllerKind::FrictionCompensation => "friction_compensation",
            ControllerKind::MasterPid => "master_pid",
            ControllerKind::SlavePid => "slave_pid",
            ControllerKind::Lqgi => "lqgi",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::OpenLoop => "Open-loop (baseline)",
            ControllerKind::FrictionCompensation => "Open-loop + friction compens.",
            ControllerKind::MasterPid => "Master pressure PID",
            ControllerKind::SlavePid => "Slave pressure PID",
            ControllerKind::Lqgi => "State feedback LQGI",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s.trim())
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tunable settings of every strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSettings {
    pub open_loop: OpenLoopConfig,
    pub friction_compensation: OpenLoopConfig,
    pub master_pid: PidConfig,
    pub slave_pid: PidConfig,
    pub lqgi: LqgiConfig,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            open_loop: OpenLoopConfig::baseline(),
            friction_compensation: OpenLoopConfig::compensated(),
            master_pid: PidConfig::master_default(),
            slave_pid: PidConfig::slave_default(),
            lqgi: LqgiConfig::default(),
        }
    }
}

impl ControllerSettings {
    pub fn validate(&self) -> Result<()> {
        self.open_loop.validate()?;
        self.friction_compensation.validate()?;
        self.master_pid.validate()?;
        self.slave_pid.validate()?;
        self.lqgi.validate()
    }
}

/// Instantiates one strategy running every `dt` seconds.
///
/// `gains` is only consulted for [`ControllerKind::Lqgi`].
pub fn build_controller(
    kind: ControllerKind,
    settings: &ControllerSettings,
    params: &PlantParams,
    gains: &GainSet,
    dt: f64,
) -> Result<Box<dyn Controller>> {
    Ok(match kind {
        ControllerKind::OpenLoop => Box::new(OpenLoop::new(settings.open_loop, *params, dt)?),
        ControllerKind::FrictionCompensation => Box::new(OpenLoop::new(settings.friction_compensation, *params, dt)?),
        ControllerKind::MasterPid => Box::new(Pid::new(settings.master_pid, *params, dt)?),
        ControllerKind::SlavePid => Box::new(Pid::new(settings.slave_pid, *params, dt)?),
        ControllerKind::Lqgi => Box::new(Lqgi::new(settings.lqgi, *params, gains.clone(), dt)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ControllerKind::ALL {
            assert_eq!(ControllerKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(ControllerKind::parse("nope"), None);
    }

    #[test]
    fn actuation_flags_limits() {
        let p = PlantParams::default();
        let lo = actuate(-10.0, &p);
        assert_eq!((lo.current, lo.saturation), (0.0, Saturation::Low));
        let hi = actuate(5000.0, &p);
        assert_eq!((hi.current, hi.saturation), (3.0, Saturation::High));
        let mid = actuate(500.0, &p);
        assert_eq!(mid.saturation, Saturation::None);
        assert!((mid.force - 500.0).abs() < 1e-3);
    }
}
