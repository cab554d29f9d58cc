//! The experiment matrix: step, sine-dwell FRF, backdrive deviation,
//! friction identification and the dither study.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_scenario, simulate, SimAbort};
use super::scenario::{dwell_settle_s, Reference, Scenario, ScenarioKind};
use super::trace::SimTrace;
use super::BACKDRIVE_AMPLITUDE_M;
use crate::analysis::{
    bandwidth, comparison_report, frf_from_sine_dwell, identify_friction, reversal_jump, ripple_amplitude,
    step_metrics, torque_deviation, Bandwidth, ComparisonReport, DwellRecord, FrfPoint, FrictionFit, Metrics,
    StepMetrics,
};
use crate::controllers::{ControllerKind, ControllerSettings, DitherConfig, OpenLoop, OpenLoopConfig};
use crate::error::{Error, Result};
use crate::plant::dynamics::{F_MR, V1};
use crate::plant::{FrictionMode, PlantParams};
use crate::synthesis::{synthesize, CostWeights, GainSet, NoiseCovariances};

/// Everything needed to run any controller on any scenario.
#[derive(Debug, Clone)]
pub struct Bench {
    pub params: PlantParams,
    pub settings: ControllerSettings,
    pub gains: GainSet,
    /// Joint displacement amplitude at the slave piston for backdrive runs (m).
    pub backdrive_amplitude_m: f64,
    pub noise: bool,
    pub noise_variances: [f64; 4],
    pub seed: u64,
    pub plant_dt: f64,
    pub control_dt: f64,
}

impl Bench {
    pub fn new(params: PlantParams, settings: ControllerSettings, gains: GainSet) -> Self {
        let sc = Scenario::default();
        Self {
            params,
            settings,
            gains,
            backdrive_amplitude_m: BACKDRIVE_AMPLITUDE_M,
            noise: false,
            noise_variances: sc.noise_variances,
            seed: 0,
            plant_dt: sc.plant_dt,
            control_dt: sc.control_dt,
        }
    }

    /// Bench with freshly synthesized LQGI gains.
    pub fn synthesized(
        params: PlantParams,
        settings: ControllerSettings,
        weights: &CostWeights,
        noise: &NoiseCovariances,
    ) -> Result<Self> {
        let (gains, _) = synthesize(&params, weights, noise)?;
        Ok(Self::new(params, settings, gains))
    }

    /// Default plant, settings and weights.
    pub fn standard() -> Result<Self> {
        Self::synthesized(
            PlantParams::default(),
            ControllerSettings::default(),
            &CostWeights::default(),
            &NoiseCovariances::default(),
        )
    }

    /// Applies the bench's timing, noise and seed to a scenario.
    pub fn prepare(&self, mut sc: Scenario) -> Scenario {
        sc.noise = self.noise;
        sc.noise_variances = self.noise_variances;
        sc.seed = self.seed;
        sc.plant_dt = self.plant_dt;
        sc.control_dt = self.control_dt;
        sc
    }

    pub fn run(&self, sc: &Scenario) -> Result<SimTrace, SimAbort> {
        simulate(&self.prepare(*sc), &self.params, &self.settings, &self.gains)
    }

    /// 0 to 12 N·m blocked-output step and its metrics on joint torque.
    pub fn step_response(&self, kind: ControllerKind) -> Result<(SimTrace, StepMetrics)> {
        let sc = Scenario::step(kind);
        let trace = self.run(&sc)?;
        let Reference::Step { t_step_s, .. } = sc.reference else {
            unreachable!("step preset uses a step reference")
        };
        let m = step_metrics(&trace.time, &trace.torque, t_step_s)?;
        Ok((trace, m))
    }

    /// Steady window of a sine dwell: desired against true slave pressure.
    pub fn dwell(&self, kind: ControllerKind, frequency_hz: f64) -> Result<DwellRecord> {
        let trace = self.run(&Scenario::sine_dwell(kind, frequency_hz))?;
        let k0 = trace.window_start(dwell_settle_s(frequency_hz));
        Ok(DwellRecord {
            t: trace.time[k0..].to_vec(),
            reference: trace.p_desired[k0..].to_vec(),
            output: trace.p_slave[k0..].to_vec(),
        })
    }

    pub fn frf(&self, kind: ControllerKind, freqs: &[f64]) -> Result<Vec<FrfPoint>> {
        frf_from_sine_dwell(|f| self.dwell(kind, f), freqs)
    }

    /// Backdrive run and its peak torque deviation after the first cycle.
    pub fn backdrive(&self, kind: ControllerKind, frequency_hz: f64, command_nm: f64) -> Result<(SimTrace, f64)> {
        let sc = Scenario::backdrive(kind, frequency_hz, command_nm, self.backdrive_amplitude_m);
        let trace = self.run(&sc)?;
        let dev = torque_deviation(&trace.time, &trace.torque, command_nm, 1.0 / frequency_hz)?;
        Ok((trace, dev))
    }

    /// The six table cells of one controller; failed cells are `None` and
    /// explained in the returned notes.
    pub fn metrics(&self, kind: ControllerKind, freqs: &[f64]) -> (Metrics, Vec<String>) {
        let mut notes = Vec::new();
        let (bw, step, d0, d1, d5) = (
            self.frf(kind, freqs).map(|frf| bandwidth(&frf)),
            self.step_response(kind).map(|(_, m)| m),
            self.backdrive(kind, 1.0, 0.0).map(|r| r.1),
            self.backdrive(kind, 1.0, 10.0).map(|r| r.1),
            self.backdrive(kind, 5.0, 10.0).map(|r| r.1),
        );
        if let Ok(m) = &step {
            if !m.reliable {
                notes.push(format!("{kind} step: response did not settle, metrics unreliable"));
            }
        }
        let mut keep = |what: &str, r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                notes.push(format!("{kind} {what}: {e}"));
                None
            }
        };
        let bw = bw.and_then(|b| match b {
            Bandwidth::Found { hz, .. } => Ok(hz),
            Bandwidth::RangeExceeded { max_hz } => {
                Err(Error::Analysis(format!("no bandwidth crossing below {max_hz} Hz")))
            }
        });
        let rise = step
            .as_ref()
            .map(|m| m.rise_time_63_ms)
            .map_err(|e| Error::Analysis(e.to_string()));
        let os = step.map(|m| m.overshoot_pct);
        let m = Metrics {
            bandwidth_hz: keep("bandwidth", bw),
            rise_time_ms: keep("rise time", rise),
            overshoot_pct: keep("overshoot", os),
            dev_1hz_0nm: keep("1 Hz / 0 N·m", d0),
            dev_1hz_10nm: keep("1 Hz / 10 N·m", d1),
            dev_5hz_10nm: keep("5 Hz / 10 N·m", d5),
        };
        (m, notes)
    }

    /// Full experiment matrix for `kinds`, controllers in parallel.
    pub fn comparison(&self, kinds: &[ControllerKind], freqs: &[f64]) -> (ComparisonReport, Vec<String>) {
        let rows: Vec<_> = kinds.par_iter().map(|&k| (k, self.metrics(k, freqs))).collect();
        let notes = rows.iter().flat_map(|(_, (_, n))| n.clone()).collect();
        let table: Vec<_> = rows.into_iter().map(|(k, (m, _))| (k, Some(m))).collect();
        (comparison_report(&table), notes)
    }
}

/// Baseline deviation targeted by the amplitude calibration (N·m).
pub const BASELINE_DEVIATION_NM: f64 = 0.60;

/// Backdrive amplitude that makes the open-loop baseline deviate by
/// [`BASELINE_DEVIATION_NM`] at 1 Hz under a 0 N·m command.
pub fn calibrate_backdrive_amplitude(bench: &Bench) -> Result<f64> {
    let dev = |a: f64| -> Result<f64> {
        let b = Bench {
            backdrive_amplitude_m: a,
            ..bench.clone()
        };
        Ok(b.backdrive(ControllerKind::OpenLoop, 1.0, 0.0)?.1 - BASELINE_DEVIATION_NM)
    };
    let (mut lo, mut hi) = (1e-4, 5e-3);
    let (mut f_lo, f_hi) = (dev(lo)?, dev(hi)?);
    if f_lo * f_hi > 0.0 {
        return Err(Error::Analysis("baseline deviation does not bracket the target".into()));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let f = dev(mid)?;
        if f * f_lo > 0.0 {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-8 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Slow-backdrive friction identification run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionIdSetup {
    pub frequency_hz: f64,
    /// Peak piston speed (m/s).
    pub peak_speed: f64,
    pub cycles: u32,
    /// Joint torque ramp from/to (N·m).
    pub torque_from_nm: f64,
    pub torque_to_nm: f64,
    /// Samples slower than this fraction of the peak speed are discarded.
    pub speed_fraction: f64,
}

impl Default for FrictionIdSetup {
    fn default() -> Self {
        Self {
            frequency_hz: 1.0,
            peak_speed: 5e-3,
            cycles: 10,
            torque_from_nm: 1.0,
            torque_to_nm: 20.0,
            speed_fraction: 0.5,
        }
    }
}

/// Backdrives the open-loop baseline slowly while ramping clutch torque and
/// fits the friction coefficient from master pressure.
///
/// The friction-free master pressure is the realized clutch force over the
/// master area.
pub fn friction_id_experiment(params: &PlantParams, setup: &FrictionIdSetup) -> Result<(SimTrace, FrictionFit)> {
    let duration = setup.cycles as f64 / setup.frequency_hz;
    let amplitude = setup.peak_speed / (2.0 * std::f64::consts::PI * setup.frequency_hz);
    let mut sc = Scenario::backdrive(ControllerKind::OpenLoop, setup.frequency_hz, 0.0, amplitude);
    sc.friction_mode = None;
    sc.duration_s = duration;
    if let Some(b) = sc.backdrive.as_mut() {
        b.cycles = setup.cycles;
    }
    sc.reference = Reference::Ramp {
        from_nm: setup.torque_from_nm,
        to_nm: setup.torque_to_nm,
        t_start_s: 0.0,
        t_end_s: duration,
    };
    let mut controller = OpenLoop::new(OpenLoopConfig::baseline(), *params, sc.control_dt)?;
    let trace = run_scenario(&sc, params, &mut controller)?;
    let k0 = trace.window_start(1.0 / setup.frequency_hz);
    let pm: Vec<f64> = trace.meas[k0..].iter().map(|m| m.p_master).collect();
    let pn: Vec<f64> = trace.state[k0..]
        .iter()
        .map(|x| x[F_MR] / params.geometry.area_master)
        .collect();
    let v: Vec<f64> = trace.meas[k0..].iter().map(|m| m.v1).collect();
    let fit = identify_friction(&pm, &pn, &v, setup.speed_fraction)?;
    Ok((trace, fit))
}

/// Reversal band on ball-nut speed used for the jump measure (m/s).
pub const REVERSAL_BAND: f64 = 0.5e-3;
/// Nominal line pressure of the dither study (Pa).
pub const DITHER_STUDY_PRESSURE: f64 = 1310e3;

/// Outcome of the dither on/off comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DitherEffect {
    /// Largest smoothed master-pressure step near reversal without dither (Pa).
    pub jump_without: f64,
    pub jump_with: f64,
    /// `1 − jump_with / jump_without`.
    pub reduction: f64,
    /// Dither-frequency ripple amplitudes with dither on (Pa).
    pub ripple_master: f64,
    pub ripple_slave: f64,
    pub ripple_ratio: f64,
}

/// 1 Hz stick-slip backdrive at 1310 kPa under the open-loop command, with
/// and without dither.
///
/// Smoothing uses a window of three dither periods so the dither tone and its
/// harmonics vanish from the jump measure.
pub fn dither_experiment(bench: &Bench) -> Result<(SimTrace, SimTrace, DitherEffect)> {
    let dither = bench.settings.friction_compensation.dither;
    let torque = crate::plant::pressure_to_torque(DITHER_STUDY_PRESSURE, &bench.params.geometry);
    let run = |d: DitherConfig| -> Result<SimTrace> {
        let mut b = bench.clone();
        b.settings.open_loop = OpenLoopConfig {
            friction_compensation: false,
            dither: d,
            ..OpenLoopConfig::baseline()
        };
        let mut sc = Scenario::backdrive(ControllerKind::OpenLoop, 1.0, torque, bench.backdrive_amplitude_m);
        sc.friction_mode = Some(FrictionMode::StickSlipSign);
        Ok(b.run(&sc)?)
    };
    let off = run(DitherConfig::disabled())?;
    let on = run(DitherConfig {
        enabled: true,
        ..dither
    })?;
    let window = (3.0 / dither.frequency_hz / bench.control_dt).round() as usize;
    let jump = |tr: &SimTrace| {
        let k0 = tr.window_start(1.0);
        reversal_jump(&tr.p_master[k0..], &tr.state_series(V1)[k0..], REVERSAL_BAND, window)
    };
    let jump_without = jump(&off)?;
    let jump_with = jump(&on)?;
    let k0 = on.window_start(1.0);
    let ripple_master = ripple_amplitude(&on.time[k0..], &on.p_master[k0..], dither.frequency_hz, window)?;
    let ripple_slave = ripple_amplitude(&on.time[k0..], &on.p_slave[k0..], dither.frequency_hz, window)?;
    let effect = DitherEffect {
        jump_without,
        jump_with,
        reduction: 1.0 - jump_with / jump_without,
        ripple_master,
        ripple_slave,
        ripple_ratio: ripple_slave / ripple_master,
    };
    Ok((off, on, effect))
}

/// Master-pressure against ball-nut speed, for plotting the friction loop.
pub fn pressure_speed_curve(trace: &SimTrace) -> (Vec<f64>, Vec<f64>) {
    (trace.state_series(V1), trace.p_master.clone())
}

/// Short file-name label of a scenario.
pub fn scenario_label(sc: &Scenario) -> String {
    match (sc.kind, sc.backdrive) {
        (ScenarioKind::Backdrive, Some(b)) => format!("backdrive_{}hz_{}nm", b.frequency_hz, sc.reference.torque(0.0)),
        (k, _) => k.as_str().to_string(),
    }
}
