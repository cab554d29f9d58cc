//! Physical parameters and the nonlinear actuator model.

pub mod clutch;
pub mod convert;
pub mod dynamics;
pub mod friction;
pub mod linear;
pub mod params;

pub use clutch::{current_from_torque, mr_torque_from_current, Saturation};
pub use convert::{
    clutch_torque_to_force, force_to_clutch_torque, pressure_to_torque, torque_to_pressure, PressureTarget,
};
pub use dynamics::{
    equilibrium, equilibrium_at, joint_torque, mechanical_energy, p_master, p_slave, plant_derivative, DelayLine,
    OutputCondition, Plant, PrescribedMotion, StateVec, N_STATES,
};
pub use friction::friction_pressure;
pub use linear::{build_state_space, StateSpace};
pub use params::{FrictionMode, FrictionParams, GeometryParams, MrClutchParams, PlantParams, TransmissionParams};

/// Clutch force (N) actually transmitted at coil current `i` (A).
///
/// Currents outside the drive range are clipped first.
pub fn force_from_current(i: f64, p: &PlantParams) -> f64 {
    let i = i.clamp(0.0, p.clutch.current_max);
    let t = p.clutch.poly(i).clamp(0.0, p.clutch.torque_max);
    clutch_torque_to_force(t, &p.geometry)
}

/// Current (A) for a desired clutch force (N), with saturation flag.
pub fn current_from_force(f: f64, p: &PlantParams) -> (f64, Saturation) {
    current_from_torque(force_to_clutch_torque(f, &p.geometry), &p.clutch)
}
