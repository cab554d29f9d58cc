//! Offline gain computation: Riccati solver, regulator, feedforward and estimator.

pub mod care;
pub mod gains;
pub mod kalman;
pub mod lqi;

pub use care::{care_residual, solve_care, CareSolution, RESIDUAL_BOUND};
pub use gains::{closed_loop, hash_of, synthesize, GainSet, LinearLoop, Provenance, SynthesisReport};
pub use kalman::{kalman_gain, kalman_gain_raw, KalmanGain, NoiseCovariances};
pub use lqi::{augment, lqi_gains, CostWeights, LqiGains};
