//! Linear-quadratic regulator augmented with the integral of the slave-pressure error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::care::{solve_care, CareSolution};
use crate::error::{invalid, Result, SynthesisError};
use crate::linalg::max_real_part;
use crate::plant::StateSpace;

/// Quadratic cost weights of the regulator.
///
/// Pressures enter the cost in units of `pressure_unit` (Pa), the input in N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    /// Input penalty on the clutch force.
    pub rho: f64,
    /// Penalty on the integral-error state.
    pub rho_i: f64,
    /// Pressure unit in which the cost is written (Pa).
    pub pressure_unit: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            rho: 1e-4,
            rho_i: 1000.0,
            pressure_unit: 1e5,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho", "must be strictly positive"));
        }
        if !(self.rho_i >= 0.0 && self.rho_i.is_finite()) {
            return Err(invalid("rho_i", "must be non-negative"));
        }
        if !(self.pressure_unit > 0.0 && self.pressure_unit.is_finite()) {
            return Err(invalid("pressure_unit", "must be strictly positive"));
        }
        Ok(())
    }
}

/// Regulator over `z = [x_i; x]` and the reference feedforward.
#[derive(Debug, Clone)]
pub struct LqiGains {
    /// Row gain `1 × (n + 1)`, integral entry first.
    pub k: DMatrix<f64>,
    pub k_ff: f64,
    pub care: CareSolution,
    /// Eigenvalues' largest real part of `A_aug − B_aug K`.
    pub closed_loop_max_re: f64,
}

impl LqiGains {
    pub fn k_i(&self) -> f64 {
        self.k[(0, 0)]
    }

    pub fn k_x(&self) -> DMatrix<f64> {
        self.k.columns(1, self.k.ncols() - 1).into_owned()
    }
}

/// Augmented pair with `ẋ_i = P_d − C_d x`.
pub fn augment(ss: &StateSpace) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = ss.n_states();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 1), (1, n)).copy_from(&(-&ss.c_d));
    a.view_mut((1, 1), (n, n)).copy_from(&ss.a);
    let mut b = DMatrix::zeros(n + 1, 1);
    b.view_mut((1, 0), (n, 1)).copy_from(&ss.b);
    (a, b)
}

/// Regulator and feedforward gains for the augmented system.
pub fn lqi_gains(ss: &StateSpace, w: &CostWeights) -> Result<LqiGains> {
    w.validate()?;
    let n = ss.n_states();
    let (a_aug, b_aug) = augment(ss);
    let u2 = w.pressure_unit * w.pressure_unit;
    let mut q = DMatrix::zeros(n + 1, n + 1);
    q[(0, 0)] = w.rho_i / u2;
    q.view_mut((1, 1), (n, n))
        .copy_from(&(ss.c_d.transpose() * &ss.c_d / u2));
    let r = DMatrix::from_element(1, 1, w.rho);
    let care = solve_care(&a_aug, &b_aug, &q, &r)?;
    let k = b_aug.transpose() * &care.p / w.rho;
    let closed_loop_max_re = max_real_part(&(&a_aug - &b_aug * &k));
    if !(closed_loop_max_re < 0.0) {
        return Err(SynthesisError::NotHurwitz {
            max_re: closed_loop_max_re,
        }
        .into());
    }
    let k_x = k.columns(1, n).into_owned();
    let a_cl = &ss.a - &ss.b * &k_x;
    let x = a_cl.lu().solve(&ss.b).ok_or(SynthesisError::Singular("A − B K_x"))?;
    let dc = (&ss.c_d * x)[(0, 0)];
    if dc == 0.0 || !dc.is_finite() {
        return Err(SynthesisError::Singular("feedforward DC gain").into());
    }
    Ok(LqiGains {
        k,
        k_ff: -1.0 / dc,
        care,
        closed_loop_max_re,
    })
}
