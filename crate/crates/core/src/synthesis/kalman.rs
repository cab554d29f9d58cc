//! Steady-state Kalman estimator gain from the dual Riccati equation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::care::{solve_care, CareSolution};
use crate::error::{invalid, Result, SynthesisError};
use crate::linalg::max_real_part;
use crate::plant::StateSpace;

/// Sensor and process noise model of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseCovariances {
    /// Diagonal of the measurement covariance for x1, v1, x3 and master pressure.
    pub r_l: [f64; 4],
    /// Model-trust scalar multiplying `d`.
    pub rho_l: f64,
    /// Diagonal shape of the process-noise covariance.
    pub d: [f64; 7],
}

impl Default for NoiseCovariances {
    fn default() -> Self {
        Self {
            r_l: [3.6e-9, 1e-6, 2.5e-11, 5.6e5],
            rho_l: 3e-5,
            d: [1.0, 1e5, 1.0, 1.0, 1.0, 1e6, 1.0],
        }
    }
}

impl NoiseCovariances {
    pub fn validate(&self) -> Result<()> {
        if self.r_l.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("r_l", "measurement variances must be positive"));
        }
        if !(self.rho_l > 0.0 && self.rho_l.is_finite()) {
            return Err(invalid("rho_l", "must be strictly positive"));
        }
        if self.d.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("d", "process-noise shape must be non-negative"));
        }
        Ok(())
    }

    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.r_l))
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.d)) * self.rho_l
    }
}

/// Estimator gain and its certificate.
#[derive(Debug, Clone)]
pub struct KalmanGain {
    /// `n × p` gain.
    pub l: DMatrix<f64>,
    pub care: CareSolution,
    /// Largest real part of `A − L C`.
    pub error_max_re: f64,
}

/// Dual-Riccati gain for an arbitrary `(A, C, Q, R)` with diagonal `R`.
pub fn kalman_gain_raw(a: &DMatrix<f64>, c: &DMatrix<f64>, q: &DMatrix<f64>, r_diag: &[f64]) -> Result<KalmanGain> {
    if r_diag.len() != c.nrows() {
        return Err(SynthesisError::Dimension(format!("{} variances for {} outputs", r_diag.len(), c.nrows())).into());
    }
    if r_diag.iter().any(|v| !(*v > 0.0)) {
        return Err(SynthesisError::IndefiniteR.into());
    }
    // Whitened outputs share unit variance; the Riccati equation is unchanged.
    let inv_sd: Vec<f64> = r_diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(inv_sd));
    let c_w = &w * c;
    let p = c.nrows();
    let care = solve_care(&a.transpose(), &c_w.transpose(), q, &DMatrix::identity(p, p))?;
    let l = &care.p * c_w.transpose() * &w;
    let error_max_re = max_real_part(&(a - &l * c));
    if !(error_max_re < 0.0) {
        return Err(SynthesisError::NotHurwitz { max_re: error_max_re }.into());
    }
    Ok(KalmanGain { l, care, error_max_re })
}

/// Kalman gain `L = P_f Cᵀ R_L⁻¹` for the measurement model of `ss`.
pub fn kalman_gain(ss: &StateSpace, nc: &NoiseCovariances) -> Result<KalmanGain> {
    nc.validate()?;
    if ss.n_states() != nc.d.len() || ss.n_outputs() != nc.r_l.len() {
        return Err(SynthesisError::Dimension("noise model does not match state space".into()).into());
    }
    kalman_gain_raw(&ss.a, &ss.c, &nc.q_matrix(), &nc.r_l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{build_state_space, PlantParams};

    #[test]
    fn scalar_sanity() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let g = kalman_gain_raw(&(-&one), &one, &one, &[1.0]).unwrap();
        assert!((g.l[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn default_estimator_is_stable() {
        let ss = build_state_space(&PlantParams::default());
        let g = kalman_gain(&ss, &NoiseCovariances::default()).unwrap();
        assert_eq!(g.l.shape(), (7, 4));
        assert!(g.error_max_re < 0.0);
    }
}
