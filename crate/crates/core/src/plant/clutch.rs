//! Static torque curve of the MR clutch and its inverse.

use serde::{Deserialize, Serialize};

use super::params::MrClutchParams;
use crate::error::{Error, Result};

/// Which side of the drive range a command was clipped to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    #[default]
    None,
    Low,
    High,
}

impl Saturation {
    pub fn is_saturated(self) -> bool {
        self != Saturation::None
    }
}

/// Clutch torque (N·m) transmitted at coil current `i` (A).
pub fn mr_torque_from_current(i: f64, p: &MrClutchParams) -> Result<f64> {
    if !(0.0..=p.current_max).contains(&i) {
        return Err(Error::CurrentOutOfRange {
            current: i,
            max: p.current_max,
        });
    }
    Ok(p.poly(i).clamp(0.0, p.torque_max))
}

/// Current (A) producing torque `t` (N·m) on the increasing branch.
///
/// Torques below the zero-current torque map to 0 A and torques beyond the
/// reachable maximum map to `current_max`; both cases are flagged.
pub fn current_from_torque(t: f64, p: &MrClutchParams) -> (f64, Saturation) {
    const SLACK: f64 = 1e-12;
    let t_lo = p.poly(0.0).clamp(0.0, p.torque_max);
    let t_hi = p.poly(p.current_max).min(p.torque_max);
    if t.is_nan() || t < t_lo - SLACK {
        return (0.0, Saturation::Low);
    }
    if t <= t_lo {
        return (0.0, Saturation::None);
    }
    if t > t_hi + SLACK {
        return (p.current_max, Saturation::High);
    }
    if t >= t_hi {
        return (p.current_max, Saturation::None);
    }
    let (mut lo, mut hi) = (0.0, p.current_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p.poly(mid) < t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    (0.5 * (lo + hi), Saturation::None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn oracle(i: f64) -> f64 {
        -0.015 * i.powi(3) + 0.104 * i.powi(2) + 0.225 * i + 0.044
    }

    #[test]
    fn polynomial_points() {
        let p = MrClutchParams::default();
        assert_abs_diff_eq!(mr_torque_from_current(0.0, &p).unwrap(), 0.044, epsilon = 1e-15);
        assert_abs_diff_eq!(mr_torque_from_current(1.0, &p).unwrap(), 0.358, epsilon = 1e-12);
        assert_abs_diff_eq!(mr_torque_from_current(2.5, &p).unwrap(), oracle(2.5), epsilon = 1e-12);
        assert_abs_diff_eq!(oracle(2.5), 1.022125, epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_current_is_an_error() {
        let p = MrClutchParams::default();
        assert!(mr_torque_from_current(-0.1, &p).is_err());
        assert!(mr_torque_from_current(3.01, &p).is_err());
    }

    #[test]
    fn inverse_examples() {
        let p = MrClutchParams::default();
        assert_eq!(current_from_torque(0.044, &p), (0.0, Saturation::None));
        let (i, sat) = current_from_torque(oracle(2.5), &p);
        assert_eq!(sat, Saturation::None);
        assert_abs_diff_eq!(i, 2.5, epsilon = 1e-9);
        assert_eq!(current_from_torque(2.5, &p), (3.0, Saturation::High));
        assert_eq!(current_from_torque(0.0, &p), (0.0, Saturation::Low));
    }

    #[test]
    fn round_trip_on_dense_grid() {
        let p = MrClutchParams::default();
        let (lo, hi) = (p.poly(0.0), p.poly(p.current_max));
        for k in 0..1000 {
            let t = lo + (hi - lo) * k as f64 / 999.0;
            let (i, _) = current_from_torque(t, &p);
            let back = mr_torque_from_current(i, &p).unwrap();
            assert!((back - t).abs() <= 1e-6, "t = {t}, back = {back}");
        }
    }
}
