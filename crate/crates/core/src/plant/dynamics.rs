//! Nonlinear three-mass transmission driven by a delayed, lagged MR clutch.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::friction::friction_pressure;
use super::params::{FrictionMode, PlantParams};
use crate::error::{invalid, Error, Result};

pub const N_STATES: usize = 7;

/// `[x1, v1, x2, v2, x3, v3, f_mr]` in m, m/s and N.
pub type StateVec = [f64; N_STATES];

pub const X1: usize = 0;
pub const V1: usize = 1;
pub const X2: usize = 2;
pub const V2: usize = 3;
pub const X3: usize = 4;
pub const V3: usize = 5;
pub const F_MR: usize = 6;

/// Sinusoidal motion imposed on the output mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrescribedMotion {
    /// Displacement amplitude at the slave piston (m).
    pub amplitude_m: f64,
    pub frequency_hz: f64,
    /// Mean position (m).
    pub offset_m: f64,
}

impl PrescribedMotion {
    /// Position, velocity and acceleration at time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let w = 2.0 * PI * self.frequency_hz;
        let (s, c) = (w * t).sin_cos();
        (
            self.offset_m + self.amplitude_m * s,
            self.amplitude_m * w * c,
            -self.amplitude_m * w * w * s,
        )
    }
}

/// Boundary condition on the output mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutputCondition {
    /// Output mass obeys its own spring-damper equation.
    Blocked,
    /// Output mass follows a kinematic trajectory.
    Prescribed(PrescribedMotion),
}

/// Master-cylinder pressure (Pa).
pub fn p_master(p: &PlantParams, x: &StateVec) -> f64 {
    p.transmission.k1 * (x[X1] - x[X2]) / p.geometry.area_master
}

/// Slave-cylinder pressure (Pa).
pub fn p_slave(p: &PlantParams, x: &StateVec) -> f64 {
    p.transmission.k2 * (x[X2] - x[X3]) / p.geometry.area_slave
}

/// Joint torque (N·m) computed from slave pressure.
pub fn joint_torque(p: &PlantParams, x: &StateVec) -> f64 {
    super::convert::pressure_to_torque(p_slave(p, x), &p.geometry)
}

/// Kinetic plus spring energy of the mechanical chain (J).
pub fn mechanical_energy(p: &PlantParams, x: &StateVec) -> f64 {
    let t = &p.transmission;
    0.5 * (t.m1 * x[V1].powi(2) + t.m2 * x[V2].powi(2) + t.m3 * x[V3].powi(2))
        + 0.5 * t.k1 * (x[X1] - x[X2]).powi(2)
        + 0.5 * t.k2 * (x[X2] - x[X3]).powi(2)
        + 0.5 * t.k3 * x[X3].powi(2)
}

/// Static state holding clutch force `force` with the output mass at `x3`.
pub fn equilibrium_at(p: &PlantParams, force: f64, x3: f64) -> StateVec {
    let t = &p.transmission;
    let x2 = x3 + force / t.k2;
    let x1 = x2 + force / t.k1;
    [x1, 0.0, x2, 0.0, x3, 0.0, force]
}

/// Static state of the free chain under clutch force `force`.
pub fn equilibrium(p: &PlantParams, force: f64) -> StateVec {
    equilibrium_at(p, force, force / p.transmission.k3)
}

/// Time derivative of the plant state.
///
/// `f_cmd_delayed` is the steady-state clutch force command after the pure
/// delay. Under [`OutputCondition::Prescribed`] the output rows return the
/// imposed velocity and acceleration.
pub fn plant_derivative(
    p: &PlantParams,
    x: &StateVec,
    f_cmd_delayed: f64,
    cond: &OutputCondition,
    t: f64,
) -> Result<StateVec> {
    derivative(p, x, f_cmd_delayed, cond, t, None)
}

/// Right-hand side with the friction direction optionally fixed to `slip`.
fn derivative(
    p: &PlantParams,
    x: &StateVec,
    f_cmd_delayed: f64,
    cond: &OutputCondition,
    t: f64,
    slip: Option<f64>,
) -> Result<StateVec> {
    if x.iter().any(|v| !v.is_finite()) || !f_cmd_delayed.is_finite() {
        return Err(Error::NonFinite { t });
    }
    let tr = &p.transmission;
    let pm = p_master(p, x).max(0.0);
    let f_fric = match slip {
        Some(dir) => -p.friction.mu * pm * dir * p.geometry.area_master,
        None => -friction_pressure(pm, x[V1], &p.friction) * p.geometry.area_master,
    };
    let mut dx = [0.0; N_STATES];
    dx[X1] = x[V1];
    dx[V1] = (-tr.k1 * x[X1] - tr.b1 * x[V1] + tr.k1 * x[X2] + x[F_MR] + f_fric) / tr.m1;
    dx[X2] = x[V2];
    dx[V2] = (tr.k1 * x[X1] - (tr.k1 + tr.k2) * x[X2] - tr.b2 * x[V2] + tr.k2 * x[X3]) / tr.m2;
    match cond {
        OutputCondition::Blocked => {
            dx[X3] = x[V3];
            dx[V3] = (tr.k2 * x[X2] - (tr.k2 + tr.k3) * x[X3] - tr.b3 * x[V3]) / tr.m3;
        }
        OutputCondition::Prescribed(m) => {
            let (_, v, a) = m.eval(t);
            dx[X3] = v;
            dx[V3] = a;
        }
    }
    dx[F_MR] = p.clutch.omega_c * (f_cmd_delayed - x[F_MR]);
    Ok(dx)
}

/// Fixed-length FIFO realizing a pure transport delay.
#[derive(Debug, Clone)]
pub struct DelayLine {
    buf: Vec<f64>,
    head: usize,
}

impl DelayLine {
    /// Delay of `samples` steps, pre-filled with `init`.
    pub fn new(samples: usize, init: f64) -> Self {
        Self {
            buf: vec![init; samples],
            head: 0,
        }
    }

    /// Delay line covering `tau` seconds at step `dt`.
    pub fn for_delay(tau: f64, dt: f64, init: f64) -> Self {
        Self::new((tau / dt).round() as usize, init)
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Inserts the newest sample and returns the one from `len()` steps ago.
    pub fn push(&mut self, value: f64) -> f64 {
        if self.buf.is_empty() {
            return value;
        }
        let out = std::mem::replace(&mut self.buf[self.head], value);
        self.head = (self.head + 1) % self.buf.len();
        out
    }

    pub fn fill(&mut self, value: f64) {
        self.buf.iter_mut().for_each(|v| *v = value);
    }
}

/// Plant integrated with classical fixed-step RK4.
#[derive(Debug, Clone)]
pub struct Plant {
    params: PlantParams,
    dt: f64,
    steps: u64,
    x: StateVec,
    delay: DelayLine,
    cond: OutputCondition,
    last_delayed: f64,
    stuck: bool,
}

/// Net non-friction force on the ball nut at rest (N).
fn nut_force_at_rest(p: &PlantParams, x: &StateVec) -> f64 {
    p.transmission.k1 * (x[X2] - x[X1]) + x[F_MR]
}

/// Coulomb bound on the ball nut (N).
fn coulomb_bound(p: &PlantParams, x: &StateVec) -> f64 {
    p.friction.mu * p_master(p, x).max(0.0) * p.geometry.area_master
}

impl Plant {
    /// Plant at rest under a held clutch force `initial_force`.
    pub fn new(params: PlantParams, dt: f64, cond: OutputCondition, initial_force: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", "integration step must be positive"));
        }
        let f0 = initial_force.clamp(0.0, params.force_max());
        let x = match cond {
            OutputCondition::Blocked => equilibrium(&params, f0),
            OutputCondition::Prescribed(m) => {
                let (x3, v3, _) = m.eval(0.0);
                let mut x = equilibrium_at(&params, f0, x3);
                x[V3] = v3;
                x
            }
        };
        let stuck = params.friction.mode == FrictionMode::StickSlipSign
            && x[V1] == 0.0
            && nut_force_at_rest(&params, &x).abs() <= coulomb_bound(&params, &x);
        Ok(Self {
            params,
            dt,
            steps: 0,
            x,
            delay: DelayLine::for_delay(params.clutch.tau_delay, dt, f0),
            cond,
            last_delayed: f0,
            stuck,
        })
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn state(&self) -> &StateVec {
        &self.x
    }

    pub fn set_state(&mut self, x: StateVec) {
        self.x = x;
        self.stuck = false;
    }

    /// True while the ball nut is held by static friction.
    pub fn is_stuck(&self) -> bool {
        self.stuck
    }

    pub fn condition(&self) -> &OutputCondition {
        &self.cond
    }

    /// Command that reached the lag stage during the last step (N).
    pub fn delayed_command(&self) -> f64 {
        self.last_delayed
    }

    pub fn p_master(&self) -> f64 {
        p_master(&self.params, &self.x)
    }

    pub fn p_slave(&self) -> f64 {
        p_slave(&self.params, &self.x)
    }

    pub fn joint_torque(&self) -> f64 {
        joint_torque(&self.params, &self.x)
    }

    /// One RK4 step of length `h` from `(x, t)`; a stuck nut keeps its position.
    fn rk4(&self, x: &StateVec, t: f64, h: f64, fd: f64, stuck: bool) -> Result<StateVec> {
        let (p, c) = (&self.params, &self.cond);
        let slip = (p.friction.mode == FrictionMode::StickSlipSign && !stuck).then(|| {
            if x[V1] != 0.0 {
                x[V1].signum()
            } else {
                nut_force_at_rest(p, x).signum()
            }
        });
        let deriv = |x: &StateVec, t: f64| -> Result<StateVec> {
            let mut dx = derivative(p, x, fd, c, t, slip)?;
            if stuck {
                dx[X1] = 0.0;
                dx[V1] = 0.0;
            }
            Ok(dx)
        };
        let add = |k: &StateVec, s: f64| -> StateVec { std::array::from_fn(|i| x[i] + s * k[i]) };
        let k1 = deriv(x, t)?;
        let k2 = deriv(&add(&k1, 0.5 * h), t + 0.5 * h)?;
        let k3 = deriv(&add(&k2, 0.5 * h), t + 0.5 * h)?;
        let k4 = deriv(&add(&k3, h), t + h)?;
        let mut next: StateVec = std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if let OutputCondition::Prescribed(m) = c {
            let (x3, v3, _) = m.eval(t + h);
            next[X3] = x3;
            next[V3] = v3;
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: t + h });
        }
        Ok(next)
    }

    /// Advances one step under steady-state clutch force command `f_cmd` (N).
    ///
    /// The command is clipped to what one line can push before it enters the
    /// delay line. In stick-slip mode the ball nut locks when its speed
    /// reverses while the net force lies inside the Coulomb bound and is
    /// released when the bound is exceeded; both events are located inside
    /// the step by linear interpolation.
    pub fn step(&mut self, f_cmd: f64) -> Result<()> {
        if !f_cmd.is_finite() {
            return Err(Error::NonFinite { t: self.time() });
        }
        let f = f_cmd.clamp(0.0, self.params.force_max());
        let fd = self.delay.push(f);
        self.last_delayed = fd;
        let (p, h, t) = (&self.params, self.dt, self.time());
        let stick_slip = p.friction.mode == FrictionMode::StickSlipSign;
        let slack = |x: &StateVec| nut_force_at_rest(p, x).abs() - coulomb_bound(p, x);
        if self.stuck && slack(&self.x) > 0.0 {
            self.stuck = false;
        }
        let mut next = self.rk4(&self.x, t, h, fd, self.stuck)?;
        if stick_slip && !self.stuck && self.x[V1] * next[V1] < 0.0 {
            // Speed reversal inside the step: locate it and test for sticking.
            let theta = self.x[V1] / (self.x[V1] - next[V1]);
            let mut mid = self.rk4(&self.x, t, theta * h, fd, false)?;
            mid[V1] = 0.0;
            if slack(&mid) <= 0.0 {
                self.stuck = true;
                next = self.rk4(&mid, t + theta * h, (1.0 - theta) * h, fd, true)?;
            }
        } else if self.stuck {
            let (g0, g1) = (slack(&self.x), slack(&next));
            if g1 > 0.0 {
                // Breakaway inside the step.
                let theta = (g0 / (g0 - g1)).clamp(0.0, 1.0);
                let mid = self.rk4(&self.x, t, theta * h, fd, true)?;
                self.stuck = false;
                next = self.rk4(&mid, t + theta * h, (1.0 - theta) * h, fd, false)?;
            }
        }
        self.steps += 1;
        if let OutputCondition::Prescribed(m) = self.cond {
            let (x3, v3, _) = m.eval(self.time());
            next[X3] = x3;
            next[V3] = v3;
        }
        self.x = next;
        Ok(())
    }
}
