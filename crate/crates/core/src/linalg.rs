//! Small dense linear-algebra helpers shared by the simulation modules.
//!
//! Everything here works on `nalgebra` dynamic matrices. Matrices in this
//! crate are at most a few dozen rows, so nothing is tuned for size.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &identity(n))
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and the
/// matrix of (column) eigenvectors.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let h = hermitian_part(m);
    let eig = h.symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// `V f(Λ) V†` for a Hermitian `m`.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let diag = CMatrix::from_diagonal(&vals.map(|x| c(f(x), 0.0)));
    &vecs * diag * vecs.adjoint()
}

/// Eigenvalues below this fraction of the largest are rounding noise for
/// square-root purposes (`√1e-16` would otherwise surface as `1e-8`).
pub const PSD_EIG_FLOOR: f64 = 1e-14;

/// Square roots of the eigenvalues of a positive semidefinite Hermitian
/// matrix, with noise-level eigenvalues set to zero.
pub fn sqrt_eigenvalues(m: &CMatrix) -> DVector<f64> {
    let vals = eigh(m).0;
    let floor = PSD_EIG_FLOOR * vals.amax();
    vals.map(|x| if x > floor { x.sqrt() } else { 0.0 })
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Negative and noise-level eigenvalues are treated as zero.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let floor = PSD_EIG_FLOOR * vals.amax();
    let diag = CMatrix::from_diagonal(&vals.map(|x| c(if x > floor { x.sqrt() } else { 0.0 }, 0.0)));
    &vecs * diag * vecs.adjoint()
}

/// The four Pauli operators in the order I, X, Y, Z.
pub fn paulis() -> [CMatrix; 4] {
    [
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    ]
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Row-major nested `[re, im]` pairs, the JSON matrix layout.
pub fn to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect()).collect()
}

/// Inverse of [`to_pairs`]. Returns `None` on ragged input.
pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Option<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return None;
    }
    Some(CMatrix::from_fn(n, m, |r, k| c(rows[r][k][0], rows[r][k][1])))
}
