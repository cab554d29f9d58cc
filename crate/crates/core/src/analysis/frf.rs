//! Frequency response from sine dwells, phase unwrapping and bandwidth.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of a measured or computed frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrfPoint {
    pub frequency_hz: f64,
    pub magnitude_db: f64,
    /// Unwrapped phase (deg).
    pub phase_deg: f64,
    /// Set when the sinusoid fit did not converge.
    pub flagged: bool,
}

/// Least-squares fit of `offset + amplitude·sin(ωt + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineFit {
    pub amplitude: f64,
    /// Phase (rad).
    pub phase: f64,
    pub offset: f64,
    /// RMS of the fit residual.
    pub residual_rms: f64,
}

/// Fits a sinusoid of known frequency to samples `(t, y)`.
pub fn fit_sinusoid(t: &[f64], y: &[f64], frequency_hz: f64) -> Result<SineFit> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::Analysis("sine fit needs at least three paired samples".into()));
    }
    let w = 2.0 * std::f64::consts::PI * frequency_hz;
    let n = t.len();
    let mut m = DMatrix::zeros(n, 3);
    for (i, &ti) in t.iter().enumerate() {
        let (s, c) = (w * ti).sin_cos();
        m[(i, 0)] = s;
        m[(i, 1)] = c;
        m[(i, 2)] = 1.0;
    }
    let rhs = DVector::from_column_slice(y);
    let mt = m.transpose();
    let coef = (&mt * &m)
        .cholesky()
        .map(|ch| ch.solve(&(&mt * &rhs)))
        .ok_or_else(|| Error::Analysis("degenerate sine-fit design".into()))?;
    let resid = &rhs - &m * &coef;
    Ok(SineFit {
        amplitude: coef[0].hypot(coef[1]),
        phase: coef[1].atan2(coef[0]),
        offset: coef[2],
        residual_rms: (resid.norm_squared() / n as f64).sqrt(),
    })
}

/// Unwraps a phase sequence in degrees so that neighbours differ by at most 180°.
pub fn unwrap_phase_deg(phase: &mut [f64]) {
    for i in 1..phase.len() {
        let mut d = phase[i] - phase[i - 1];
        while d > 180.0 {
            phase[i] -= 360.0;
            d -= 360.0;
        }
        while d < -180.0 {
            phase[i] += 360.0;
            d += 360.0;
        }
    }
}

/// Which bandwidth test fired first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthCriterion {
    Magnitude,
    Phase,
}

/// Result of the bandwidth search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    Found {
        hz: f64,
        criterion: BandwidthCriterion,
    },
    /// Neither criterion crossed below `max_hz`.
    RangeExceeded {
        max_hz: f64,
    },
}

impl Bandwidth {
    pub fn hz(&self) -> Option<f64> {
        match self {
            Bandwidth::Found { hz, .. } => Some(*hz),
            Bandwidth::RangeExceeded { .. } => None,
        }
    }
}

fn first_crossing(f: &[f64], v: &[f64], level: f64) -> Option<f64> {
    if v.first().is_some_and(|&x| x <= level) {
        return f.first().copied();
    }
    v.windows(2).zip(f.windows(2)).find_map(|(vw, fw)| {
        (vw[1] <= level).then(|| {
            let w = (vw[0] - level) / (vw[0] - vw[1]);
            fw[0] + w * (fw[1] - fw[0])
        })
    })
}

/// Lowest frequency where magnitude drops 3 dB below the first point or the
/// unwrapped phase reaches −135°, linearly interpolated.
pub fn bandwidth(frf: &[FrfPoint]) -> Bandwidth {
    let Some(first) = frf.first() else {
        return Bandwidth::RangeExceeded { max_hz: 0.0 };
    };
    let f: Vec<f64> = frf.iter().map(|p| p.frequency_hz).collect();
    let mag: Vec<f64> = frf.iter().map(|p| p.magnitude_db - first.magnitude_db).collect();
    let ph: Vec<f64> = frf.iter().map(|p| p.phase_deg).collect();
    let by_mag = first_crossing(&f, &mag, -3.0);
    let by_phase = first_crossing(&f, &ph, -135.0);
    match (by_mag, by_phase) {
        (Some(m), Some(p)) if p < m => Bandwidth::Found {
            hz: p,
            criterion: BandwidthCriterion::Phase,
        },
        (Some(m), _) => Bandwidth::Found {
            hz: m,
            criterion: BandwidthCriterion::Magnitude,
        },
        (None, Some(p)) => Bandwidth::Found {
            hz: p,
            criterion: BandwidthCriterion::Phase,
        },
        (None, None) => Bandwidth::RangeExceeded {
            max_hz: *f.last().unwrap_or(&0.0),
        },
    }
}

/// Samples of one dwell handed back by a runner.
#[derive(Debug, Clone, Default)]
pub struct DwellRecord {
    pub t: Vec<f64>,
    pub reference: Vec<f64>,
    pub output: Vec<f64>,
}

/// Relative fit residual above which a dwell point is flagged.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.10;

/// Frequency response from per-frequency sine dwells.
///
/// `runner(f)` returns the steady-state window of the dwell at `f` Hz; the
/// gain and phase of output against reference come from sinusoid fits.
/// Frequencies run concurrently.
pub fn frf_from_sine_dwell<F>(runner: F, freqs: &[f64]) -> Result<Vec<FrfPoint>>
where
    F: Fn(f64) -> Result<DwellRecord> + Sync,
{
    if freqs.iter().any(|&f| !(f > 0.0 && f <= 200.0)) {
        return Err(Error::Analysis("dwell frequencies must lie in (0, 200] Hz".into()));
    }
    let mut pts = freqs
        .par_iter()
        .map(|&f| {
            let rec = runner(f)?;
            let r = fit_sinusoid(&rec.t, &rec.reference, f)?;
            let y = fit_sinusoid(&rec.t, &rec.output, f)?;
            let gain = y.amplitude / r.amplitude;
            let flagged =
                y.residual_rms > FIT_RESIDUAL_LIMIT * y.amplitude || r.residual_rms > FIT_RESIDUAL_LIMIT * r.amplitude;
            Ok(FrfPoint {
                frequency_hz: f,
                magnitude_db: 20.0 * gain.log10(),
                phase_deg: (y.phase - r.phase).to_degrees(),
                flagged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    pts.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    // Wrap each raw difference to (−180°, 180°] before unwrapping the sequence.
    let mut ph: Vec<f64> = pts
        .iter()
        .map(|p| {
            let mut v = p.phase_deg % 360.0;
            if v > 180.0 {
                v -= 360.0;
            }
            if v <= -180.0 {
                v += 360.0;
            }
            v
        })
        .collect();
    unwrap_phase_deg(&mut ph);
    for (p, v) in pts.iter_mut().zip(ph) {
        p.phase_deg = v;
    }
    Ok(pts)
}

/// Default dwell grid: 1 Hz steps to 60 Hz, then coarser up to 200 Hz.
pub fn default_dwell_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (1..=60).map(f64::from).collect();
    g.extend((31..=50).map(|k| f64::from(2 * k)));
    g.extend((21..=40).map(|k| f64::from(5 * k)));
    g
}
