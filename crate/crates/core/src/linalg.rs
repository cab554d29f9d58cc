//! Dense linear-algebra helpers shared by synthesis, controllers and analysis.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::SynthesisError;

pub type C64 = Complex<f64>;

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Largest real part among the eigenvalues of `a`.
pub fn max_real_part(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_hurwitz(a: &DMatrix<f64>) -> bool {
    max_real_part(a) < 0.0
}

/// Zero-order-hold discretization of `(a, b)` over `dt`.
///
/// Uses the exponential of the block matrix `[[a, b], [0, 0]]·dt`.
pub fn zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let m = b.ncols();
    let mut big = DMatrix::zeros(n + m, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    big.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = big.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}

/// Solves `fᵀ X + X f + q = 0` by vectorization.
///
/// Sized for the small systems in this crate (n ≤ 20).
pub fn solve_lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, SynthesisError> {
    let n = f.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let ft = f.transpose();
    // vec(FᵀX + XF) = (I ⊗ Fᵀ + Fᵀ ⊗ I) vec(X) for column-major vec.
    let op = eye.kronecker(&ft) + ft.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, q.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or(SynthesisError::Singular("Lyapunov operator"))?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Complex transfer value `c (sI − a)⁻¹ b + d` for a single-input single-output system.
pub fn transfer(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, d: f64, s: C64) -> C64 {
    let n = a.nrows();
    let mut m = DMatrix::<C64>::from_fn(n, n, |i, j| C64::new(-a[(i, j)], 0.0));
    for i in 0..n {
        m[(i, i)] += s;
    }
    let rhs = DVector::<C64>::from_fn(n, |i, _| C64::new(b[i], 0.0));
    match m.lu().solve(&rhs) {
        Some(x) => x.iter().zip(c.iter()).map(|(xi, ci)| xi * *ci).sum::<C64>() + d,
        None => C64::new(f64::INFINITY, 0.0),
    }
}

/// Frobenius norm.
pub fn fro(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}
