//! LQGI state feedback: Kalman estimate, integral of the estimated
//! slave-pressure error, and reference feedforward.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dither::{dither_signal, DitherConfig};
use super::{actuate, ControlInput, ControlOutput, Controller, Measurements};
use crate::error::{invalid, Error, Result};
use crate::linalg::zoh;
use crate::plant::{build_state_space, equilibrium_at, DelayLine, PlantParams, Saturation, StateSpace};
use crate::synthesis::GainSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqgiConfig {
    pub dither: DitherConfig,
    /// Delay applied to the force fed to the estimator (s); negative selects
    /// the plant's clutch delay.
    pub estimator_input_delay: f64,
    /// Estimate norm beyond which the controller declares a fault.
    pub estimate_guard: f64,
}

impl Default for LqgiConfig {
    fn default() -> Self {
        Self {
            dither: DitherConfig::default(),
            estimator_input_delay: -1.0,
            estimate_guard: 1e7,
        }
    }
}

impl LqgiConfig {
    pub fn validate(&self) -> Result<()> {
        self.dither.validate()?;
        if !(self.estimate_guard > 0.0) {
            return Err(invalid("estimate_guard", "must be positive"));
        }
        if !self.estimator_input_delay.is_finite() {
            return Err(invalid("estimator_input_delay", "must be finite"));
        }
        Ok(())
    }
}

/// Discrete LQGI runtime.
///
/// The estimator is the continuous observer `(A − LC, [B, L])` held over one
/// control period; it is driven by the force actually delivered by the clutch.
#[derive(Debug, Clone)]
pub struct Lqgi {
    cfg: LqgiConfig,
    params: PlantParams,
    ss: StateSpace,
    gains: GainSet,
    k_x: DMatrix<f64>,
    phi: DMatrix<f64>,
    gamma_u: DVector<f64>,
    gamma_y: DMatrix<f64>,
    dt: f64,
    x_hat: DVector<f64>,
    x_i: f64,
    x_i_limit: f64,
    history: DelayLine,
    last_saturation: Saturation,
}

impl Lqgi {
    pub fn new(cfg: LqgiConfig, params: PlantParams, gains: GainSet, dt: f64) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        if !(dt > 0.0) {
            return Err(invalid("dt", "control period must be positive"));
        }
        let ss = build_state_space(&params);
        let n = ss.n_states();
        let l = gains.l_matrix();
        if gains.k.len() != n + 1 || l.shape() != (n, ss.n_outputs()) {
            return Err(invalid("gains", "gain dimensions do not match the plant model"));
        }
        let a_obs = &ss.a - &l * &ss.c;
        let mut b_obs = DMatrix::zeros(n, 1 + ss.n_outputs());
        b_obs.view_mut((0, 0), (n, 1)).copy_from(&ss.b);
        b_obs.view_mut((0, 1), (n, ss.n_outputs())).copy_from(&l);
        let (phi, gamma) = zoh(&a_obs, &b_obs, dt);
        let gamma_u = gamma.column(0).into_owned();
        let gamma_y = gamma.columns(1, ss.n_outputs()).into_owned();
        let delay = if cfg.estimator_input_delay < 0.0 {
            params.clutch.tau_delay
        } else {
            cfg.estimator_input_delay
        };
        let x_i_limit = 2.0 * params.force_max() / gains.k_i().abs().max(f64::MIN_POSITIVE);
        Ok(Self {
            cfg,
            params,
            k_x: gains.k_x(),
            ss,
            gains,
            phi,
            gamma_u,
            gamma_y,
            dt,
            x_hat: DVector::zeros(n),
            x_i: 0.0,
            x_i_limit,
            history: DelayLine::for_delay(delay, dt, 0.0),
            last_saturation: Saturation::None,
        })
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.x_hat
    }

    pub fn integral_state(&self) -> f64 {
        self.x_i
    }

    pub fn x_i_limit(&self) -> f64 {
        self.x_i_limit
    }

    fn estimated_slave_pressure(&self) -> f64 {
        (&self.ss.c_d * &self.x_hat)[(0, 0)]
    }

    fn regulator(&self, p_desired: f64) -> f64 {
        -self.gains.k_i() * self.x_i - (&self.k_x * &self.x_hat)[(0, 0)] + self.gains.k_ff * p_desired
    }
}

impl Controller for Lqgi {
    fn name(&self) -> &'static str {
        "lqgi"
    }

    fn reset(&mut self, p_desired: f64, meas: &Measurements) {
        let f0 = p_desired * self.params.geometry.area_slave;
        let x = equilibrium_at(&self.params, f0, meas.x3);
        self.x_hat = DVector::from_row_slice(&x);
        let k_i = self.gains.k_i();
        self.x_i = if k_i != 0.0 {
            (self.gains.k_ff * p_desired - (&self.k_x * &self.x_hat)[(0, 0)] - f0) / k_i
        } else {
            0.0
        };
        self.history.fill(f0);
        self.last_saturation = Saturation::None;
    }

    fn step(&mut self, input: &ControlInput) -> Result<ControlOutput> {
        let err = input.p_desired - self.estimated_slave_pressure();
        let winding = match self.last_saturation {
            Saturation::High => err > 0.0,
            Saturation::Low => err < 0.0,
            Saturation::None => false,
        };
        if !winding {
            self.x_i = (self.x_i + self.dt * err).clamp(-self.x_i_limit, self.x_i_limit);
        }
        let u = self.regulator(input.p_desired);
        let dither = dither_signal(input.t, input.p_desired, &self.cfg.dither) * self.params.geometry.area_master;
        let mut out = actuate(u + dither, &self.params);
        self.last_saturation = out.saturation;

        let applied = self.history.push(out.force);
        let y = DVector::from_row_slice(&input.meas.y());
        self.x_hat = &self.phi * &self.x_hat + &self.gamma_u * applied + &self.gamma_y * y;
        let norm = self.x_hat.norm();
        if !norm.is_finite() || norm > self.cfg.estimate_guard {
            return Err(Error::ControllerFault {
                t: input.t,
                reason: format!("state estimate diverged (norm {norm:.3e})"),
            });
        }
        let mut internal = [0.0; 8];
        internal[..7].copy_from_slice(self.x_hat.as_slice());
        internal[7] = self.x_i;
        out.internal = Some(internal);
        Ok(out)
    }
}
