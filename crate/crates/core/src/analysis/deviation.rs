//! Peak torque deviation under backdriving.

use crate::error::{Error, Result};

/// Largest `|torque − t_command|` over samples at or after `t_from`.
///
/// Callers pass the end of the first backdrive cycle as `t_from` so the
/// start-up transient is excluded.
pub fn torque_deviation(t: &[f64], torque: &[f64], t_command: f64, t_from: f64) -> Result<f64> {
    if t.len() != torque.len() {
        return Err(Error::Analysis("time and torque lengths differ".into()));
    }
    t.iter()
        .zip(torque)
        .filter(|(ti, _)| **ti >= t_from)
        .map(|(_, q)| (q - t_command).abs())
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))))
        .ok_or_else(|| Error::Analysis("no samples after the excluded transient".into()))
}
