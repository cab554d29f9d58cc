//! Fixed-step nonlinear simulation of scenarios and the experiment matrix.

pub mod engine;
pub mod experiments;
pub mod scenario;
pub mod trace;

pub use engine::{run_backdrive, run_batch, run_scenario, simulate, SimAbort};
pub use experiments::{
    calibrate_backdrive_amplitude, dither_experiment, friction_id_experiment, pressure_speed_curve, scenario_label,
    Bench, DitherEffect, FrictionIdSetup, BASELINE_DEVIATION_NM, DITHER_STUDY_PRESSURE, REVERSAL_BAND,
};
pub use scenario::{
    dwell_settle_s, BackdriveProfile, Reference, Scenario, ScenarioKind, CONTROL_DT, DWELL_AMPLITUDE_NM,
    DWELL_FIT_CYCLES, DWELL_OFFSET_NM, PLANT_DT, STEP_TORQUE_NM,
};
pub use trace::SimTrace;

/// Joint displacement amplitude at the slave piston for backdrive runs (m),
/// calibrated so the open-loop baseline deviates by 0.60 N·m at 1 Hz under a
/// 0 N·m command.
pub const BACKDRIVE_AMPLITUDE_M: f64 = 1.1242e-3;
