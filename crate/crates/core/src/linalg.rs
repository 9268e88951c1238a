//! Small dense helpers on top of nalgebra. Everything here works on N×N
//! matrices with N in the single digits, so clarity wins over blocking.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub fn complexify(m: &RMat) -> CMat {
    m.map(|v| C64::new(v, 0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &RMat) -> f64 {
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// max |m - m^H|
pub fn hermitian_deviation(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn symmetric_part(m: &RMat) -> RMat {
    (m + m.transpose()).scale(0.5)
}

/// Ratio of extreme singular values; `f64::INFINITY` for an exactly singular matrix.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn real_condition_number(m: &RMat) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

pub fn real_inverse(m: &RMat) -> Option<RMat> {
    m.clone().try_inverse()
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn symmetric_eigenvalues(m: &RMat) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetric_part(m).symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Lower-triangular L with L L^T = m, or `None` when m is not positive definite.
pub fn cholesky_lower(m: &RMat) -> Option<RMat> {
    nalgebra::Cholesky::new(symmetric_part(m)).map(|c| c.l())
}

/// Solves A X + X B = C for square A (n×n), B (n×n) through the Kronecker form.
pub fn solve_sylvester(a: &RMat, b: &RMat, c: &RMat) -> Option<RMat> {
    let n = a.nrows();
    let nn = n * n;
    // vec(A X) = (I ⊗ A) vec X, vec(X B) = (B^T ⊗ I) vec X, column-major vec.
    let mut k = RMat::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            for l in 0..n {
                k[(row, j * n + l)] += a[(i, l)];
                k[(row, l * n + i)] += b[(l, j)];
            }
        }
    }
    let rhs = DVector::from_iterator(nn, c.iter().cloned());
    let sol = k.lu().solve(&rhs)?;
    Some(RMat::from_column_slice(n, n, sol.as_slice()))
}

/// Diagonal matrix from the diagonal of `m`, each entry mapped by `f`.
pub fn diag_map(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    RMat::from_diagonal(&m.diagonal().map(f))
}
