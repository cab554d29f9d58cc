//! Linear design model: friction and transport delay removed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dynamics::{F_MR, N_STATES, V1, V2, V3, X1, X2, X3};
use super::params::PlantParams;

/// `ẋ = A x + B u`, measurements `y = C x`, tracked output `y_d = C_d x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    /// Input column (n × 1), input is the steady-state clutch force (N).
    pub b: DMatrix<f64>,
    /// Measured outputs x1, v1, x3 and master pressure (4 × n).
    pub c: DMatrix<f64>,
    /// Slave pressure row (1 × n).
    pub c_d: DMatrix<f64>,
}

impl StateSpace {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn b_vec(&self) -> DVector<f64> {
        self.b.column(0).into_owned()
    }

    pub fn c_d_vec(&self) -> DVector<f64> {
        self.c_d.row(0).transpose()
    }
}

/// Index of the master-pressure row in `C`.
pub const Y_P_MASTER: usize = 3;

/// Builds the linear design model from plant parameters.
pub fn build_state_space(p: &PlantParams) -> StateSpace {
    let t = &p.transmission;
    let g = &p.geometry;
    let n = N_STATES;
    let mut a = DMatrix::zeros(n, n);
    a[(X1, V1)] = 1.0;
    a[(X2, V2)] = 1.0;
    a[(X3, V3)] = 1.0;

    a[(V1, X1)] = -t.k1 / t.m1;
    a[(V1, V1)] = -t.b1 / t.m1;
    a[(V1, X2)] = t.k1 / t.m1;
    a[(V1, F_MR)] = 1.0 / t.m1;

    a[(V2, X1)] = t.k1 / t.m2;
    a[(V2, X2)] = -(t.k1 + t.k2) / t.m2;
    a[(V2, V2)] = -t.b2 / t.m2;
    a[(V2, X3)] = t.k2 / t.m2;

    a[(V3, X2)] = t.k2 / t.m3;
    a[(V3, X3)] = -(t.k2 + t.k3) / t.m3;
    a[(V3, V3)] = -t.b3 / t.m3;

    a[(F_MR, F_MR)] = -p.clutch.omega_c;

    let mut b = DMatrix::zeros(n, 1);
    b[(F_MR, 0)] = p.clutch.omega_c;

    let mut c = DMatrix::zeros(4, n);
    c[(0, X1)] = 1.0;
    c[(1, V1)] = 1.0;
    c[(2, X3)] = 1.0;
    c[(Y_P_MASTER, X1)] = t.k1 / g.area_master;
    c[(Y_P_MASTER, X2)] = -t.k1 / g.area_master;

    let mut c_d = DMatrix::zeros(1, n);
    c_d[(0, X2)] = t.k2 / g.area_slave;
    c_d[(0, X3)] = -t.k2 / g.area_slave;

    StateSpace { a, b, c, c_d }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_entries() {
        let p = PlantParams::default();
        let ss = build_state_space(&p);
        assert_eq!(
            ss.a.row(0).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(ss.a[(6, 6)], -p.clutch.omega_c);
        assert_eq!(ss.b[(6, 0)], p.clutch.omega_c);
        assert_eq!(ss.c.shape(), (4, 7));
        assert_eq!(ss.c_d.shape(), (1, 7));
        assert_eq!(ss.c_d[(0, 2)], -ss.c_d[(0, 4)]);
    }
}
