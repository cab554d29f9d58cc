//! Load-dependent Coulomb friction of the ball screw, expressed as pressure.

use super::params::{FrictionMode, FrictionParams};

/// Friction pressure (Pa) for master pressure `p_master` and screw speed `v1`.
///
/// The sign follows `v1`; the plant applies it against the motion.
pub fn friction_pressure(p_master: f64, v1: f64, params: &FrictionParams) -> f64 {
    match params.mode {
        FrictionMode::SmoothTanh => params.mu * p_master * (params.n_steepness * v1).tanh(),
        FrictionMode::StickSlipSign => params.mu * p_master * sign(v1),
        FrictionMode::Off => 0.0,
    }
}

/// Three-valued sign with `sign(0) = 0`.
pub fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_speed_gives_zero() {
        for mode in [FrictionMode::SmoothTanh, FrictionMode::StickSlipSign, FrictionMode::Off] {
            let p = FrictionParams {
                mode,
                ..Default::default()
            };
            assert_eq!(friction_pressure(1.0e6, 0.0, &p), 0.0);
        }
    }

    #[test]
    fn saturates_at_mu_times_load() {
        let p = FrictionParams::default();
        assert!((friction_pressure(1.0e6, 1.0, &p) - 1.4e5).abs() < 1e-6);
        assert!((friction_pressure(1.0e6, -1.0, &p) + 1.4e5).abs() < 1e-6);
        let s = FrictionParams {
            mode: FrictionMode::StickSlipSign,
            ..p
        };
        assert_eq!(friction_pressure(1.0e6, 1e-9, &s), 1.4e5);
        let off = FrictionParams {
            mode: FrictionMode::Off,
            ..p
        };
        assert_eq!(friction_pressure(1.0e6, 1.0, &off), 0.0);
    }
}
