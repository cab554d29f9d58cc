//! Fixed-step closed-loop simulation of one scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::scenario::Scenario;
use super::trace::SimTrace;
use crate::controllers::{build_controller, ControlInput, Controller, ControllerSettings, Measurements};
use crate::error::{invalid, Error};
use crate::plant::dynamics::{V1, X1, X3};
use crate::plant::{torque_to_pressure, OutputCondition, Plant, PlantParams, PrescribedMotion};
use crate::synthesis::GainSet;

/// A run stopped early; `trace` holds every sample recorded before the fault.
#[derive(Debug)]
pub struct SimAbort {
    pub trace: SimTrace,
    pub error: Error,
}

impl std::fmt::Display for SimAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.trace.time.last().copied().unwrap_or(0.0);
        write!(
            f,
            "{} (aborted after {} samples, t = {t:.4} s)",
            self.error,
            self.trace.len()
        )
    }
}

impl std::error::Error for SimAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<SimAbort> for Error {
    fn from(a: SimAbort) -> Self {
        a.error
    }
}

struct Sensors {
    rng: ChaCha8Rng,
    std: [f64; 4],
    enabled: bool,
}

impl Sensors {
    fn read(&mut self, plant: &Plant) -> Measurements {
        let x = plant.state();
        let mut m = Measurements {
            x1: x[X1],
            v1: x[V1],
            x3: x[X3],
            p_master: plant.p_master(),
            p_slave: plant.p_slave(),
        };
        if self.enabled {
            let mut n = |s: f64| s * self.rng.sample::<f64, _>(StandardNormal);
            m.x1 += n(self.std[0]);
            m.v1 += n(self.std[1]);
            m.x3 += n(self.std[2]);
            m.p_master += n(self.std[3]);
            m.p_slave += n(self.std[3]);
        }
        m
    }
}

/// Runs `sc` on the nonlinear plant with `controller` in the loop.
///
/// The plant advances with RK4 at `sc.plant_dt`; the controller runs every
/// `sc.control_dt` and its force command is held in between. One sample is
/// recorded per controller tick, from `t = 0` to `t = duration_s`.
pub fn run_scenario(
    sc: &Scenario,
    params: &PlantParams,
    controller: &mut dyn Controller,
) -> Result<SimTrace, SimAbort> {
    let abort = |trace: SimTrace, error: Error| Err(SimAbort { trace, error });
    if let Err(e) = sc.validate() {
        return abort(SimTrace::default(), e);
    }
    let mut plant_params = *params;
    if let Some(mode) = sc.friction_mode {
        plant_params.friction.mode = mode;
    }
    let geometry = plant_params.geometry;
    let p_desired = |t: f64| torque_to_pressure(sc.reference.torque(t), &geometry).pressure;

    let f0 = p_desired(0.0) * geometry.area_slave;
    let cond = match sc.backdrive {
        Some(b) => OutputCondition::Prescribed(PrescribedMotion {
            amplitude_m: b.amplitude_m,
            frequency_hz: b.frequency_hz,
            offset_m: f0.clamp(0.0, plant_params.force_max()) / plant_params.transmission.k3,
        }),
        None => OutputCondition::Blocked,
    };
    let mut plant = match Plant::new(plant_params, sc.plant_dt, cond, f0) {
        Ok(p) => p,
        Err(e) => return abort(SimTrace::default(), e),
    };
    let mut sensors = Sensors {
        rng: ChaCha8Rng::seed_from_u64(sc.seed),
        std: sc.noise_variances.map(f64::sqrt),
        enabled: sc.noise,
    };

    let steps = sc.control_steps();
    let sub = sc.substeps();
    let mut trace = SimTrace::with_capacity(steps + 1);
    let clean = Sensors {
        rng: ChaCha8Rng::seed_from_u64(0),
        std: [0.0; 4],
        enabled: false,
    }
    .read(&plant);
    controller.reset(p_desired(0.0), &clean);

    for k in 0..=steps {
        let t = k as f64 * sc.control_dt;
        let meas = sensors.read(&plant);
        let pd = p_desired(t);
        let out = match controller.step(&ControlInput { t, p_desired: pd, meas }) {
            Ok(o) => o,
            Err(e) => return abort(trace, e),
        };
        trace.time.push(t);
        trace.state.push(*plant.state());
        trace.meas.push(meas);
        trace.p_desired.push(pd);
        trace.torque_ref.push(sc.reference.torque(t));
        trace.current.push(out.current);
        trace.force_cmd.push(out.force);
        trace.force_request.push(out.force_request);
        trace.saturation.push(out.saturation);
        trace.p_master.push(plant.p_master());
        trace.p_slave.push(plant.p_slave());
        trace.torque.push(plant.joint_torque());
        if let Some(int) = out.internal {
            trace.internal.push(int);
        }
        if k == steps {
            break;
        }
        for _ in 0..sub {
            if let Err(e) = plant.step(out.force) {
                return abort(trace, e);
            }
        }
    }
    Ok(trace)
}

/// Runs a backdrive scenario; the joint follows the prescribed sinusoid.
pub fn run_backdrive(
    sc: &Scenario,
    params: &PlantParams,
    controller: &mut dyn Controller,
) -> Result<SimTrace, SimAbort> {
    if sc.backdrive.is_none() {
        return Err(SimAbort {
            trace: SimTrace::default(),
            error: invalid("backdrive", "scenario has no backdrive profile"),
        });
    }
    run_scenario(sc, params, controller)
}

/// Builds the scenario's controller and runs it.
pub fn simulate(
    sc: &Scenario,
    params: &PlantParams,
    settings: &ControllerSettings,
    gains: &GainSet,
) -> Result<SimTrace, SimAbort> {
    let mut c = build_controller(sc.controller, settings, params, gains, sc.control_dt).map_err(|error| SimAbort {
        trace: SimTrace::default(),
        error,
    })?;
    run_scenario(sc, params, c.as_mut())
}

/// Runs independent scenarios concurrently; results keep the input order.
pub fn run_batch(
    scenarios: &[Scenario],
    params: &PlantParams,
    settings: &ControllerSettings,
    gains: &GainSet,
) -> Vec<Result<SimTrace, SimAbort>> {
    scenarios
        .par_iter()
        .map(|sc| simulate(sc, params, settings, gains))
        .collect()
}
