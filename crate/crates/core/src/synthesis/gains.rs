//! Complete LQGI gain set, its provenance and the linear closed loop it yields.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::kalman::{kalman_gain, NoiseCovariances};
use super::lqi::{lqi_gains, CostWeights};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, max_real_part, C64};
use crate::plant::{build_state_space, PlantParams, StateSpace};

/// Hashes of the inputs that produced a gain set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub plant_hash: String,
    pub weights_hash: String,
    pub regulator_residual: f64,
    pub estimator_residual: f64,
}

/// Regulator, feedforward and estimator gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    /// Regulator over `[x_i, x1, v1, x2, v2, x3, v3, f_mr]`.
    pub k: Vec<f64>,
    pub k_ff: f64,
    /// Estimator gain, one row per state.
    pub l: Vec<Vec<f64>>,
    pub weights: CostWeights,
    pub noise: NoiseCovariances,
    pub provenance: Provenance,
}

impl GainSet {
    pub fn k_i(&self) -> f64 {
        self.k[0]
    }

    /// State partition of the regulator as a row matrix.
    pub fn k_x(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, self.k.len() - 1, &self.k[1..])
    }

    pub fn l_matrix(&self) -> DMatrix<f64> {
        let rows = self.l.len();
        let cols = self.l.first().map_or(0, Vec::len);
        DMatrix::from_fn(rows, cols, |i, j| self.l[i][j])
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// True when the gains were computed for exactly these inputs.
    pub fn matches(&self, plant: &PlantParams, weights: &CostWeights, noise: &NoiseCovariances) -> bool {
        self.provenance.plant_hash == hash_of(plant) && self.provenance.weights_hash == weights_hash(weights, noise)
    }
}

/// SHA-256 of the TOML form of any serializable value.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let text = toml::to_string(value).unwrap_or_default();
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn weights_hash(weights: &CostWeights, noise: &NoiseCovariances) -> String {
    #[derive(Serialize)]
    struct Pair<'a> {
        weights: &'a CostWeights,
        noise: &'a NoiseCovariances,
    }
    hash_of(&Pair { weights, noise })
}

/// Linear interconnection of plant, estimator and integrator.
///
/// State order is `[x (n), x̂ (n), x_i]`; input is `P_d`, output is `P_s`.
#[derive(Debug, Clone)]
pub struct LinearLoop {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

impl LinearLoop {
    pub fn max_real_part(&self) -> f64 {
        max_real_part(&self.a)
    }

    /// `P_s/P_d` at complex frequency `s`.
    pub fn response(&self, s: C64) -> C64 {
        crate::linalg::transfer(&self.a, &self.b, &self.c, 0.0, s)
    }

    pub fn dc_gain(&self) -> f64 {
        self.response(C64::new(0.0, 0.0)).re
    }
}

/// Builds the full-order LQGI closed loop on the linear model.
pub fn closed_loop(ss: &StateSpace, gains: &GainSet) -> LinearLoop {
    let n = ss.n_states();
    let k_x = gains.k_x();
    let k_i = gains.k_i();
    let l = gains.l_matrix();
    let bk = &ss.b * &k_x;
    let dim = 2 * n + 1;
    let mut a = DMatrix::zeros(dim, dim);
    a.view_mut((0, 0), (n, n)).copy_from(&ss.a);
    a.view_mut((0, n), (n, n)).copy_from(&(-&bk));
    a.view_mut((0, 2 * n), (n, 1)).copy_from(&(-&ss.b * k_i));
    a.view_mut((n, 0), (n, n)).copy_from(&(&l * &ss.c));
    a.view_mut((n, n), (n, n)).copy_from(&(&ss.a - &bk - &l * &ss.c));
    a.view_mut((n, 2 * n), (n, 1)).copy_from(&(-&ss.b * k_i));
    a.view_mut((2 * n, n), (1, n)).copy_from(&(-&ss.c_d));
    let mut b = DVector::zeros(dim);
    for i in 0..n {
        b[i] = ss.b[(i, 0)] * gains.k_ff;
        b[n + i] = ss.b[(i, 0)] * gains.k_ff;
    }
    b[2 * n] = 1.0;
    let mut c = DVector::zeros(dim);
    for i in 0..n {
        c[i] = ss.c_d[(0, i)];
    }
    LinearLoop { a, b, c }
}

/// Diagnostics gathered during synthesis.
#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub regulator_eigs: Vec<C64>,
    pub estimator_eigs: Vec<C64>,
    pub loop_eigs: Vec<C64>,
    pub regulator_residual: f64,
    pub estimator_residual: f64,
    pub loop_max_re: f64,
    pub dc_gain: f64,
    pub k_norm: f64,
    pub l_norm: f64,
}

impl SynthesisReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "regulator CARE relative residual: {:.3e}", self.regulator_residual);
        let _ = writeln!(s, "estimator CARE relative residual: {:.3e}", self.estimator_residual);
        let _ = writeln!(s, "|K| = {:.6e}", self.k_norm);
        let _ = writeln!(s, "|L| = {:.6e}", self.l_norm);
        let _ = writeln!(s, "closed-loop DC gain P_s/P_d = {:.9}", self.dc_gain);
        let _ = writeln!(s, "15-state loop max real part = {:.6e} rad/s", self.loop_max_re);
        for (title, eigs) in [
            ("regulator eigenvalues (A_aug - B_aug K)", &self.regulator_eigs),
            ("estimator eigenvalues (A - L C)", &self.estimator_eigs),
            ("loop eigenvalues", &self.loop_eigs),
        ] {
            let _ = writeln!(s, "{title}:");
            let mut sorted = eigs.clone();
            sorted.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
            for z in sorted {
                let _ = writeln!(s, "  {:>14.6e} {:>+14.6e}i", z.re, z.im);
            }
        }
        s
    }
}

/// Runs regulator and estimator synthesis for `plant`.
pub fn synthesize(
    plant: &PlantParams,
    weights: &CostWeights,
    noise: &NoiseCovariances,
) -> Result<(GainSet, SynthesisReport)> {
    plant.validate()?;
    let ss = build_state_space(plant);
    let reg = lqi_gains(&ss, weights)?;
    let est = kalman_gain(&ss, noise)?;
    let l = &est.l;
    let gains = GainSet {
        k: reg.k.iter().copied().collect(),
        k_ff: reg.k_ff,
        l: (0..l.nrows()).map(|i| l.row(i).iter().copied().collect()).collect(),
        weights: *weights,
        noise: *noise,
        provenance: Provenance {
            plant_hash: hash_of(plant),
            weights_hash: weights_hash(weights, noise),
            regulator_residual: reg.care.residual,
            estimator_residual: est.care.residual,
        },
    };
    let (a_aug, b_aug) = super::lqi::augment(&ss);
    let lp = closed_loop(&ss, &gains);
    let report = SynthesisReport {
        regulator_eigs: eigenvalues(&(&a_aug - &b_aug * &reg.k)),
        estimator_eigs: eigenvalues(&(&ss.a - l * &ss.c)),
        loop_eigs: eigenvalues(&lp.a),
        regulator_residual: reg.care.residual,
        estimator_residual: est.care.residual,
        loop_max_re: lp.max_real_part(),
        dc_gain: lp.dc_gain(),
        k_norm: reg.k.norm(),
        l_norm: l.norm(),
    };
    Ok((gains, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_preserves_gains() {
        let p = PlantParams::default();
        let (g, _) = synthesize(&p, &CostWeights::default(), &NoiseCovariances::default()).unwrap();
        let text = g.to_toml().unwrap();
        let back = GainSet::from_toml(&text).unwrap();
        assert_eq!(back, g);
        assert!(back.matches(&p, &CostWeights::default(), &NoiseCovariances::default()));
        let mut other = p;
        other.transmission.m1 = 12.0;
        assert!(!back.matches(&other, &CostWeights::default(), &NoiseCovariances::default()));
    }
}
