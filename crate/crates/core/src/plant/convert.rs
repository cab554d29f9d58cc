//! Unit conversions between joint torque, line pressure and clutch force.

use serde::{Deserialize, Serialize};

use super::params::GeometryParams;

/// Slave-pressure target for a joint-torque request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureTarget {
    /// Absolute slave pressure (Pa).
    pub pressure: f64,
    /// False when the request would need a negative line pressure.
    pub feasible: bool,
}

/// Desired slave pressure (Pa) for joint torque `t` (N·m), pretension included.
pub fn torque_to_pressure(t: f64, g: &GeometryParams) -> PressureTarget {
    let pressure = t / g.torque_per_pressure() + g.p_dc;
    PressureTarget {
        pressure,
        feasible: pressure >= 0.0,
    }
}

/// Joint torque (N·m) delivered at slave pressure `p` (Pa).
pub fn pressure_to_torque(p: f64, g: &GeometryParams) -> f64 {
    (p - g.p_dc) * g.torque_per_pressure()
}

/// Linear screw force (N) for clutch torque `t` (N·m).
pub fn clutch_torque_to_force(t: f64, g: &GeometryParams) -> f64 {
    t * g.force_per_torque()
}

/// Clutch torque (N·m) needed for linear screw force `f` (N).
pub fn force_to_clutch_torque(f: f64, g: &GeometryParams) -> f64 {
    f / g.force_per_torque()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::params::{JOINT_TORQUE_MAX, PRESSURE_MAX};

    #[test]
    fn pinned_operating_points() {
        let g = GeometryParams::default();
        let top = torque_to_pressure(JOINT_TORQUE_MAX, &g);
        assert!((top.pressure - (PRESSURE_MAX + g.p_dc)).abs() < 1.0);
        assert_eq!(torque_to_pressure(0.0, &g).pressure, 205e3);
        let mid = torque_to_pressure(14.5, &g).pressure;
        assert!((mid - (0.5 * PRESSURE_MAX + g.p_dc)).abs() < 1.0);
    }

    #[test]
    fn infeasible_below_zero_gauge() {
        let g = GeometryParams::default();
        assert!(!torque_to_pressure(-5.0, &g).feasible);
        assert!(torque_to_pressure(-2.0, &g).feasible);
    }

    #[test]
    fn inverse_pairs() {
        let g = GeometryParams::default();
        for t in [-2.0, 0.0, 3.3, 10.0, 29.0] {
            let p = torque_to_pressure(t, &g).pressure;
            assert!((pressure_to_torque(p, &g) - t).abs() < 1e-9);
        }
        let f = clutch_torque_to_force(2.0, &g);
        assert!((f - 1570.796).abs() < 1e-3);
        assert!((force_to_clutch_torque(f, &g) - 2.0).abs() < 1e-12);
    }
}
