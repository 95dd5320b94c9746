//! Small complex linear-algebra helpers shared by the other modules.
//!
//! All matrices in this crate are dense [`nalgebra`] matrices over
//! [`Complex64`]. Everything here operates on tiny sizes (2x2 up to 256x256),
//! so clarity wins over asymptotics throughout.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<Complex64>;

/// Complex number from real and imaginary parts.
#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real number as a complex scalar.
#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `n x n` identity matrix.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Builds an `n x n` matrix from a row-major slice of entries.
pub fn from_rows(n: usize, entries: &[Complex64]) -> CMatrix {
    assert_eq!(entries.len(), n * n, "entry count must be n*n");
    CMatrix::from_row_slice(n, n, entries)
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Conjugate transpose.
pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Trace of a square matrix.
pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest absolute deviation from Hermitian symmetry, `max |A - A^H|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &dagger(m))
}

/// Checks that `m` is square and returns its dimension.
pub fn square_dim(m: &CMatrix, expected: &'static str) -> Result<usize> {
    let (r, cdim) = m.shape();
    if r != cdim {
        return Err(Error::BadShape {
            expected,
            rows: r,
            cols: cdim,
        });
    }
    Ok(r)
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order with the matching orthonormal
/// eigenvectors as columns, so that `m = V diag(w) V^H`. Fails if the input
/// deviates from Hermitian symmetry by more than `tol`.
pub fn hermitian_eigen(m: &CMatrix, tol: f64) -> Result<(Vec<f64>, CMatrix)> {
    square_dim(m, "square Hermitian")?;
    let dev = hermitian_deviation(m);
    if dev > tol {
        return Err(Error::NotHermitian { deviation: dev });
    }
    // Work on the exactly Hermitian average so round-off in the input cannot
    // leak into complex eigenvalues.
    let h = (m + dagger(m)).scale(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues are finite")
    });
    let n = order.len();
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Singular values of an arbitrary complex matrix, ascending.
///
/// Computed as the square roots of the eigenvalues of `M^H M`, which is
/// plenty accurate for the well-conditioned 4x4 transfer matrices used here.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let gram = dagger(m) * m;
    let (vals, _) = hermitian_eigen(&gram, 1e-9).expect("Gram matrix is Hermitian");
    vals.iter().map(|v| v.max(0.0).sqrt()).collect()
}

/// Solves the dense linear system `A x = b` by LU decomposition.
pub fn solve(a: &CMatrix, b: &CVector, context: &'static str) -> Result<CVector> {
    let lu = a.clone().lu();
    lu.solve(b).ok_or(Error::SingularSystem { context })
}

/// Sum of square roots of eigenvalues, treating values below a relative
/// threshold as exact zeros so rank-deficient matrices do not pick up
/// `sqrt(round-off)` noise.
pub fn sqrt_eigenvalue_sum(values: &[f64]) -> f64 {
    let scale = values.iter().cloned().fold(0.0, f64::max);
    let cutoff = scale * 1e-13;
    values
        .iter()
        .filter(|&&w| w > cutoff)
        .map(|w| w.sqrt())
        .sum()
}

/// Reassembles `V diag(w) V^H` from an eigensystem, applying `f` to each
/// eigenvalue first.
pub fn rebuild_hermitian(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = values.len();
    let mut diag = CMatrix::zeros(n, n);
    for (i, &w) in values.iter().enumerate() {
        diag[(i, i)] = cr(f(w));
    }
    vectors * diag * dagger(vectors)
}
