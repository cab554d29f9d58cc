//! Friction coefficient identification from a slow backdrive record.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear fit `P_f = μ·P_M + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrictionFit {
    pub mu: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Identifies μ from master pressure, nominal pressure and screw speed.
///
/// Only samples with `|v1|` above `speed_fraction` of the peak speed are
/// used, so stick phases around reversal do not bias the fit. The friction
/// pressure is the signed gap between nominal and measured master pressure.
pub fn identify_friction(p_master: &[f64], p_nominal: &[f64], v1: &[f64], speed_fraction: f64) -> Result<FrictionFit> {
    if p_master.len() != p_nominal.len() || p_master.len() != v1.len() {
        return Err(Error::Analysis("friction-ID series lengths differ".into()));
    }
    let v_peak = v1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thr = speed_fraction * v_peak;
    let (xs, ys): (Vec<f64>, Vec<f64>) = p_master
        .iter()
        .zip(p_nominal)
        .zip(v1)
        .filter(|(_, v)| v.abs() > thr)
        .map(|((pm, pn), v)| (*pm, v.signum() * (pn - pm)))
        .unzip();
    let n = xs.len();
    if n < 3 {
        return Err(Error::Analysis("too few moving samples for the friction fit".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Analysis("degenerate friction-ID data".into()));
    }
    let mu = sxy / sxx;
    Ok(FrictionFit {
        mu,
        intercept: my - mu * mx,
        r_squared: sxy * sxy / (sxx * syy),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_data_gives_exact_fit() {
        let n = 500;
        let pm: Vec<f64> = (0..n).map(|k| 2e5 + 1e3 * k as f64).collect();
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * 0.1).sin() * 5e-3).collect();
        let pn: Vec<f64> = pm.iter().zip(&v).map(|(p, v)| p + 0.14 * p * v.signum()).collect();
        let fit = identify_friction(&pm, &pn, &v, 0.5).unwrap();
        assert!((fit.mu - 0.14).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
