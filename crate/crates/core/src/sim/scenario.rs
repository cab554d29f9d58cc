//! Experiment descriptions: reference profile, output condition and timing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::controllers::ControllerKind;
use crate::error::{invalid, Result};
use crate::plant::FrictionMode;
use crate::synthesis::NoiseCovariances;

/// Plant integration step (s).
pub const PLANT_DT: f64 = 1e-4;
/// Controller period (s).
pub const CONTROL_DT: f64 = 1e-3;
/// Torque step used for rise-time and overshoot (N·m).
pub const STEP_TORQUE_NM: f64 = 12.0;

/// Joint-torque reference over time, in N·m above pretension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    Constant {
        torque_nm: f64,
    },
    Step {
        initial_nm: f64,
        final_nm: f64,
        t_step_s: f64,
    },
    /// Linear interpolation between `t_start_s` and `t_end_s`, held outside.
    Ramp {
        from_nm: f64,
        to_nm: f64,
        t_start_s: f64,
        t_end_s: f64,
    },
    /// Linear sweep from `f_start_hz` to `f_end_hz` over `sweep_s` seconds.
    Chirp {
        offset_nm: f64,
        amplitude_nm: f64,
        f_start_hz: f64,
        f_end_hz: f64,
        sweep_s: f64,
    },
    Sine {
        offset_nm: f64,
        amplitude_nm: f64,
        frequency_hz: f64,
    },
}

impl Reference {
    /// Reference torque (N·m) at time `t`.
    pub fn torque(&self, t: f64) -> f64 {
        match *self {
            Reference::Constant { torque_nm } => torque_nm,
            Reference::Step {
                initial_nm,
                final_nm,
                t_step_s,
            } => {
                if t >= t_step_s {
                    final_nm
                } else {
                    initial_nm
                }
            }
            Reference::Ramp {
                from_nm,
                to_nm,
                t_start_s,
                t_end_s,
            } => {
                let w = ((t - t_start_s) / (t_end_s - t_start_s)).clamp(0.0, 1.0);
                from_nm + w * (to_nm - from_nm)
            }
            Reference::Chirp {
                offset_nm,
                amplitude_nm,
                f_start_hz,
                f_end_hz,
                sweep_s,
            } => {
                let ts = t.min(sweep_s);
                let k = (f_end_hz - f_start_hz) / sweep_s;
                let mut phase = 2.0 * PI * (f_start_hz * ts + 0.5 * k * ts * ts);
                if t > sweep_s {
                    phase += 2.0 * PI * f_end_hz * (t - sweep_s);
                }
                offset_nm + amplitude_nm * phase.sin()
            }
            Reference::Sine {
                offset_nm,
                amplitude_nm,
                frequency_hz,
            } => offset_nm + amplitude_nm * (2.0 * PI * frequency_hz * t).sin(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Reference::Constant { torque_nm } => torque_nm.is_finite(),
            Reference::Step {
                initial_nm,
                final_nm,
                t_step_s,
            } => initial_nm.is_finite() && final_nm.is_finite() && t_step_s >= 0.0,
            Reference::Ramp {
                from_nm,
                to_nm,
                t_start_s,
                t_end_s,
            } => from_nm.is_finite() && to_nm.is_finite() && t_end_s > t_start_s,
            Reference::Chirp {
                offset_nm,
                amplitude_nm,
                f_start_hz,
                f_end_hz,
                sweep_s,
            } => {
                offset_nm.is_finite()
                    && amplitude_nm.is_finite()
                    && f_start_hz >= 0.0
                    && f_end_hz >= f_start_hz
                    && f_end_hz <= 200.0
                    && sweep_s > 0.0
            }
            Reference::Sine {
                offset_nm,
                amplitude_nm,
                frequency_hz,
            } => offset_nm.is_finite() && amplitude_nm.is_finite() && frequency_hz > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("reference", format!("inconsistent profile {self:?}")))
        }
    }
}

/// Sinusoidal motion imposed on the joint, expressed at the slave piston.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackdriveProfile {
    pub amplitude_m: f64,
    pub frequency_hz: f64,
    pub cycles: u32,
}

impl Default for BackdriveProfile {
    fn default() -> Self {
        Self {
            amplitude_m: super::BACKDRIVE_AMPLITUDE_M,
            frequency_hz: 1.0,
            cycles: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Step,
    Chirp,
    SineDwell,
    Backdrive,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Step => "step",
            ScenarioKind::Chirp => "chirp",
            ScenarioKind::SineDwell => "sine_dwell",
            ScenarioKind::Backdrive => "backdrive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Step, Self::Chirp, Self::SineDwell, Self::Backdrive]
            .into_iter()
            .find(|k| k.as_str() == s.trim())
    }
}

/// One self-contained simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub controller: ControllerKind,
    pub reference: Reference,
    /// Prescribed joint motion; `None` keeps the output blocked.
    pub backdrive: Option<BackdriveProfile>,
    /// Overrides the plant friction law for this run.
    pub friction_mode: Option<FrictionMode>,
    pub noise: bool,
    /// Sensor variances for x1, v1, x3 and pressure; the slave sensor reuses the pressure term.
    pub noise_variances: [f64; 4],
    pub duration_s: f64,
    pub seed: u64,
    pub plant_dt: f64,
    pub control_dt: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::step(ControllerKind::OpenLoop)
    }
}

impl Scenario {
    fn base(kind: ScenarioKind, controller: ControllerKind, reference: Reference, duration_s: f64) -> Self {
        Self {
            kind,
            controller,
            reference,
            backdrive: None,
            friction_mode: None,
            noise: false,
            noise_variances: NoiseCovariances::default().r_l,
            duration_s,
            seed: 0,
            plant_dt: PLANT_DT,
            control_dt: CONTROL_DT,
        }
    }

    /// Blocked-output torque step from 0 to 12 N·m at 0.1 s.
    pub fn step(controller: ControllerKind) -> Self {
        let reference = Reference::Step {
            initial_nm: 0.0,
            final_nm: STEP_TORQUE_NM,
            t_step_s: 0.1,
        };
        Self::base(ScenarioKind::Step, controller, reference, 1.0)
    }

    /// Blocked-output chirp over 0 to 200 Hz about 10 N·m.
    pub fn chirp(controller: ControllerKind) -> Self {
        let reference = Reference::Chirp {
            offset_nm: DWELL_OFFSET_NM,
            amplitude_nm: DWELL_AMPLITUDE_NM,
            f_start_hz: 0.0,
            f_end_hz: 200.0,
            sweep_s: 10.0,
        };
        Self::base(ScenarioKind::Chirp, controller, reference, 10.0)
    }

    /// Blocked-output sine dwell about 10 N·m with 5 N·m amplitude.
    ///
    /// The run lasts the settling window plus [`DWELL_FIT_CYCLES`] cycles.
    pub fn sine_dwell(controller: ControllerKind, frequency_hz: f64) -> Self {
        let reference = Reference::Sine {
            offset_nm: DWELL_OFFSET_NM,
            amplitude_nm: DWELL_AMPLITUDE_NM,
            frequency_hz,
        };
        let duration = dwell_settle_s(frequency_hz) + DWELL_FIT_CYCLES as f64 / frequency_hz;
        Self::base(ScenarioKind::SineDwell, controller, reference, duration)
    }

    /// Backdrive at `frequency_hz` under constant `command_nm`, stick-slip friction.
    pub fn backdrive(controller: ControllerKind, frequency_hz: f64, command_nm: f64, amplitude_m: f64) -> Self {
        let profile = BackdriveProfile {
            amplitude_m,
            frequency_hz,
            cycles: 5,
        };
        let mut sc = Self::base(
            ScenarioKind::Backdrive,
            controller,
            Reference::Constant { torque_nm: command_nm },
            profile.cycles as f64 / frequency_hz,
        );
        sc.backdrive = Some(profile);
        sc.friction_mode = Some(FrictionMode::StickSlipSign);
        sc
    }

    /// Number of controller ticks after the initial one.
    pub fn control_steps(&self) -> usize {
        (self.duration_s / self.control_dt).round() as usize
    }

    /// Plant substeps per controller tick.
    pub fn substeps(&self) -> usize {
        (self.control_dt / self.plant_dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.reference.validate()?;
        if !(self.plant_dt > 0.0 && self.control_dt > 0.0) {
            return Err(invalid("scenario", "time steps must be positive"));
        }
        let ratio = self.control_dt / self.plant_dt;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(invalid(
                "scenario",
                "control period must be a whole number of plant steps",
            ));
        }
        if self.noise_variances.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("noise_variances", "must be non-negative"));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("scenario", "duration must be positive"));
        }
        if let Some(b) = self.backdrive {
            if !(b.amplitude_m >= 0.0 && b.frequency_hz > 0.0 && b.cycles > 0) {
                return Err(invalid(
                    "backdrive",
                    "amplitude ≥ 0, frequency > 0 and cycles > 0 required",
                ));
            }
        } else if self.kind == ScenarioKind::Backdrive {
            return Err(invalid("backdrive", "backdrive scenario without a backdrive profile"));
        }
        Ok(())
    }
}

/// Mean joint torque of dwells and chirps (N·m).
pub const DWELL_OFFSET_NM: f64 = 10.0;
/// Torque swing of dwells and chirps (N·m); well above the friction band
/// of about 1.8 N·m at the offset.
pub const DWELL_AMPLITUDE_NM: f64 = 5.0;

/// Steady cycles fitted in each sine dwell.
pub const DWELL_FIT_CYCLES: u32 = 10;

/// Settling time before the fit window of a dwell at `f` Hz (s).
pub fn dwell_settle_s(frequency_hz: f64) -> f64 {
    (5.0 / frequency_hz).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chirp_starts_at_offset_and_sweeps() {
        let r = Scenario::chirp(ControllerKind::OpenLoop).reference;
        assert_eq!(r.torque(0.0), 10.0);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn ramp_holds_outside_window() {
        let r = Reference::Ramp {
            from_nm: 1.0,
            to_nm: 3.0,
            t_start_s: 1.0,
            t_end_s: 2.0,
        };
        assert_eq!(r.torque(0.0), 1.0);
        assert_eq!(r.torque(1.5), 2.0);
        assert_eq!(r.torque(5.0), 3.0);
    }

    #[test]
    fn presets_validate() {
        for k in ControllerKind::ALL {
            Scenario::step(k).validate().unwrap();
            Scenario::sine_dwell(k, 7.0).validate().unwrap();
            Scenario::backdrive(k, 5.0, 10.0, 1e-3).validate().unwrap();
        }
        let mut sc = Scenario::step(ControllerKind::OpenLoop);
        sc.plant_dt = 3e-4;
        assert!(sc.validate().is_err());
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let sc = Scenario::backdrive(ControllerKind::Lqgi, 5.0, 10.0, 1e-3);
        let text = toml::to_string(&sc).unwrap();
        assert_eq!(toml::from_str::<Scenario>(&text).unwrap(), sc);
    }
}
