//! Continuous-time algebraic Riccati equation
//! `AᵀP + PA − P B R⁻¹ Bᵀ P + Q = 0`.
//!
//! The stabilizing solution comes from the matrix sign function of the
//! balanced Hamiltonian, followed by Newton defect correction. Every returned
//! solution carries a certified relative residual.

use nalgebra::{Complex, DMatrix};

use crate::error::SynthesisError;
use crate::linalg::{eigenvalues, fro, max_real_part, solve_lyapunov, symmetrize};

/// Bound on `‖residual‖_F / ‖P‖_F` for an accepted solution.
pub const RESIDUAL_BOUND: f64 = 1e-8;

const SIGN_MAX_ITER: usize = 100;
const NEWTON_MAX_ITER: usize = 30;

/// Stabilizing Riccati solution with its certificate.
#[derive(Debug, Clone)]
pub struct CareSolution {
    pub p: DMatrix<f64>,
    /// Relative Frobenius residual on the original data.
    pub residual: f64,
    /// Sign-function iterations plus Newton corrections.
    pub iterations: usize,
}

/// Riccati residual `AᵀP + PA − P B R⁻¹ Bᵀ P + Q`.
///
/// The quadratic term is formed as `(PG)(PG)ᵀ` with `G Gᵀ = B R⁻¹ Bᵀ`, which
/// keeps the rounding error proportional to `‖PB‖` rather than `‖P‖²`.
/// Returns `None` if `R` is not positive definite.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    Some(residual_factored(a, &input_factor(b, r)?, q, p))
}

/// `G = B L⁻ᵀ` for `R = L Lᵀ`, so that `G Gᵀ = B R⁻¹ Bᵀ`.
fn input_factor(b: &DMatrix<f64>, r: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let l = r.clone().cholesky()?.l();
    let gt = l.solve_lower_triangular(&b.transpose())?;
    Some(gt.transpose())
}

fn residual_factored(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let pg = p * g;
    a.transpose() * p + p * a - &pg * pg.transpose() + q
}

fn relative(res: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let np = fro(p);
    if np > 0.0 {
        fro(res) / np
    } else {
        fro(res)
    }
}

/// Solves the CARE for the stabilizing solution.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<CareSolution, SynthesisError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(SynthesisError::Dimension(format!(
            "A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let r_scale = fro(r).max(f64::MIN_POSITIVE);
    if fro(&(r - r.transpose())) > 1e-12 * r_scale {
        return Err(SynthesisError::IndefiniteR);
    }
    let g = input_factor(b, r).ok_or(SynthesisError::IndefiniteR)?;
    let s = symmetrize(&(&g * g.transpose()));
    let q = symmetrize(q);

    if fro(&q) == 0.0 && max_real_part(a) < 0.0 {
        return Ok(CareSolution {
            p: DMatrix::zeros(n, n),
            residual: 0.0,
            iterations: 0,
        });
    }

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let d = balance_hamiltonian(&mut h, n);

    let a_t = h.view((0, 0), (n, n)).into_owned();
    let g_t = DMatrix::from_fn(n, g.ncols(), |i, j| g[(i, j)] / d[i]);
    let q_t = -h.view((n, 0), (n, n)).into_owned();
    check_stabilizable(&a_t, &g_t)?;

    let (w, mut iterations) = matrix_sign(&h)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let mut lhs = DMatrix::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w.view((0, n), (n, n)));
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w.view((n, n), (n, n)) + &eye));
    let mut rhs = DMatrix::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n))
        .copy_from(&(-(w.view((0, 0), (n, n)) + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w.view((n, 0), (n, n))));
    let p_t = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| SynthesisError::Singular("stable invariant subspace"))?;
    let mut p_t = symmetrize(&p_t);

    iterations += newton_refine(&a_t, &g_t, &q_t, &mut p_t);

    let d_inv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
    let mut p = symmetrize(&(&d_inv * &p_t * &d_inv));
    let mut res = relative(&residual_factored(a, &g, &q, &p), &p);
    if res > RESIDUAL_BOUND {
        let mut candidate = p.clone();
        iterations += newton_refine(a, &g, &q, &mut candidate);
        let cand_res = relative(&residual_factored(a, &g, &q, &candidate), &candidate);
        if cand_res < res {
            p = candidate;
            res = cand_res;
        }
    }

    let closed = a - &g * (g.transpose() * &p);
    let max_re = max_real_part(&closed);
    if !(max_re < 0.0) {
        return Err(SynthesisError::NotHurwitz { max_re });
    }
    if !(res <= RESIDUAL_BOUND) {
        return Err(SynthesisError::ResidualNotCertified {
            residual: res,
            bound: RESIDUAL_BOUND,
        });
    }
    Ok(CareSolution {
        p,
        residual: res,
        iterations,
    })
}

/// PBH test: every eigenvalue with non-negative real part must be reachable.
///
/// `b` may be any matrix with the input range, here the input factor of the
/// balanced problem. Rows are equilibrated before the rank decision.
fn check_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(), SynthesisError> {
    let n = a.nrows();
    let m = b.ncols();
    let a_scale = fro(a).max(f64::MIN_POSITIVE);
    for lam in eigenvalues(a) {
        if lam.re < -1e-9 * a_scale {
            continue;
        }
        let mut pbh = DMatrix::<Complex<f64>>::zeros(n, n + m);
        for i in 0..n {
            for j in 0..n {
                pbh[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pbh[(i, i)] -= lam;
            for j in 0..m {
                pbh[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        for i in 0..n {
            let norm = pbh.row(i).norm();
            if norm > 0.0 {
                pbh.row_mut(i).unscale_mut(norm);
            }
        }
        let sv = pbh.singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if smin <= 1e-10 {
            return Err(SynthesisError::NotStabilizable { re: lam.re, im: lam.im });
        }
    }
    Ok(())
}

/// Symplectic diagonal balancing of a Hamiltonian in place.
///
/// Returns the state scaling `d` so that the balanced data are
/// `D⁻¹AD`, `D⁻¹SD⁻¹` and `DQD`.
fn balance_hamiltonian(h: &mut DMatrix<f64>, n: usize) -> nalgebra::DVector<f64> {
    let mut d = nalgebra::DVector::from_element(n, 1.0);
    for _ in 0..40 {
        let mut changed = false;
        for i in 0..n {
            let (top, bot) = (i, n + i);
            let off = |k: usize, j: usize| j != top && j != bot && j != k;
            let r_top: f64 = (0..2 * n).filter(|&j| off(top, j)).map(|j| h[(top, j)].powi(2)).sum();
            let c_top: f64 = (0..2 * n).filter(|&j| off(top, j)).map(|j| h[(j, top)].powi(2)).sum();
            let r_bot: f64 = (0..2 * n).filter(|&j| off(bot, j)).map(|j| h[(bot, j)].powi(2)).sum();
            let c_bot: f64 = (0..2 * n).filter(|&j| off(bot, j)).map(|j| h[(j, bot)].powi(2)).sum();
            let num = r_top + c_bot;
            let den = c_top + r_bot;
            if !(num > 0.0 && den > 0.0) {
                continue;
            }
            let f = 2f64.powf((0.25 * (num / den).log2()).round());
            if f == 1.0 {
                continue;
            }
            changed = true;
            d[i] *= f;
            for j in 0..2 * n {
                h[(top, j)] /= f;
                h[(bot, j)] *= f;
            }
            for j in 0..2 * n {
                h[(j, top)] *= f;
                h[(j, bot)] /= f;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Newton iteration for the matrix sign function with determinant scaling.
fn matrix_sign(h: &DMatrix<f64>) -> Result<(DMatrix<f64>, usize), SynthesisError> {
    let dim = h.nrows();
    let mut z = h.clone();
    let mut scaling = true;
    for it in 1..=SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let z_inv = lu.try_inverse().ok_or(SynthesisError::ImaginaryAxisEigenvalues)?;
        let c = if scaling {
            let lu = z.clone().lu();
            let u = lu.u();
            let logdet: f64 = (0..dim).map(|i| u[(i, i)].abs().ln()).sum();
            let c = (logdet / dim as f64).exp();
            if c.is_finite() && c > 0.0 {
                c
            } else {
                1.0
            }
        } else {
            1.0
        };
        let next = (&z / c + &z_inv * c) * 0.5;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SynthesisError::ImaginaryAxisEigenvalues);
        }
        let change = (&next - &z).abs().row_sum().max() / next.abs().row_sum().max().max(f64::MIN_POSITIVE);
        z = next;
        if change < 1e-2 {
            scaling = false;
        }
        if change < 1e-13 {
            return Ok((z, it));
        }
    }
    // Accept a slowly converged iterate only if it squares to the identity.
    let sq = &z * &z - DMatrix::<f64>::identity(dim, dim);
    if fro(&sq) < 1e-8 * dim as f64 {
        Ok((z, SIGN_MAX_ITER))
    } else {
        Err(SynthesisError::ImaginaryAxisEigenvalues)
    }
}

/// Defect-correction Newton steps, kept only while they reduce the residual.
fn newton_refine(a: &DMatrix<f64>, g: &DMatrix<f64>, q: &DMatrix<f64>, p: &mut DMatrix<f64>) -> usize {
    let mut res = residual_factored(a, g, q, p);
    let mut norm = relative(&res, p);
    let mut steps = 0;
    for _ in 0..NEWTON_MAX_ITER {
        if norm < 1e-15 {
            break;
        }
        let f = a - g * (g.transpose() * &*p);
        let Ok(delta) = solve_lyapunov(&f, &res) else {
            break;
        };
        let cand = symmetrize(&(&*p + delta));
        let cand_res = residual_factored(a, g, q, &cand);
        let cand_norm = relative(&cand_res, &cand);
        if !(cand_norm < norm) {
            break;
        }
        steps += 1;
        let improvement = norm / cand_norm;
        *p = cand;
        res = cand_res;
        norm = cand_norm;
        if improvement < 1.5 {
            break;
        }
    }
    steps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn scalar_quadratic_formula() {
        let sol = solve_care(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0])).unwrap();
        assert!((sol.p[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn zero_weight_on_stable_plant() {
        let a = m(2, 2, &[-1.0, 0.3, 0.0, -2.0]);
        let sol = solve_care(&a, &m(2, 1, &[0.0, 1.0]), &DMatrix::zeros(2, 2), &m(1, 1, &[1.0])).unwrap();
        assert_eq!(sol.p, DMatrix::zeros(2, 2));
    }

    #[test]
    fn double_integrator() {
        // Closed form: P = [[√3, 1], [1, √3]] for Q = I, R = 1.
        let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = m(2, 1, &[0.0, 1.0]);
        let sol = solve_care(&a, &b, &DMatrix::identity(2, 2), &m(1, 1, &[1.0])).unwrap();
        let s3 = 3f64.sqrt();
        let expect = m(2, 2, &[s3, 1.0, 1.0, s3]);
        assert!((sol.p - expect).norm() < 1e-10);
    }

    #[test]
    fn rejects_indefinite_r() {
        let err = solve_care(&m(1, 1, &[-1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[1.0]), &m(1, 1, &[-1.0]));
        assert_eq!(err.unwrap_err(), SynthesisError::IndefiniteR);
    }

    #[test]
    fn rejects_unreachable_unstable_mode() {
        let a = m(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b = m(2, 1, &[0.0, 1.0]);
        let err = solve_care(&a, &b, &DMatrix::identity(2, 2), &m(1, 1, &[1.0])).unwrap_err();
        assert!(matches!(err, SynthesisError::NotStabilizable { .. }));
    }
}
