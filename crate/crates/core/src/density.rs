//! Polarization density matrices (one or two qubits).

use serde::{Deserialize, Serialize};

use crate::error::{PstError, Result};
use crate::linalg::{self, c, CMatrix, CVector};

/// Tolerance on Hermiticity, trace and eigenvalue sign.
pub const STATE_TOL: f64 = 1e-9;

/// A Hermitian, unit-trace operator on a 2- or 4-dimensional polarization
/// space. Basis order is `H, V` for one qubit and `HH, HV, VH, VV` for two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixDoc", into = "DensityMatrixDoc")]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace. Does not demand positivity;
    /// see [`DensityMatrix::is_physical`].
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() || !(dim == 2 || dim == 4) {
            return Err(PstError::InvalidState(format!(
                "density matrix must be 2x2 or 4x4, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !linalg::is_hermitian(&matrix, STATE_TOL) {
            return Err(PstError::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = linalg::trace(&matrix);
        if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(PstError::InvalidState(format!("trace is {tr}, not 1")));
        }
        Ok(Self { matrix: linalg::hermitian_part(&matrix) })
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(PstError::InvalidState(format!("state norm is {norm}, not 1")));
        }
        Self::new(linalg::outer(psi, psi))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim).unscale(dim as f64))
    }

    /// Nearest physical state in the clip-and-renormalize sense: Hermitian
    /// part, negative eigenvalues set to zero, trace rescaled to one.
    pub fn project_physical(m: &CMatrix) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(m);
        let clipped = vals.map(|x| x.max(0.0));
        let total: f64 = clipped.sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(PstError::InvalidState("matrix has no positive spectrum to normalize".into()));
        }
        let diag = CMatrix::from_diagonal(&clipped.map(|x| c(x / total, 0.0)));
        Self::new(&vecs * diag * vecs.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = linalg::eigh(&self.matrix).0.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn is_physical(&self, tol: f64) -> bool {
        self.eigenvalues().first().is_some_and(|&e| e >= -tol)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn basis_labels(&self) -> Vec<String> {
        basis_labels(self.dim())
    }
}

pub fn basis_labels(dim: usize) -> Vec<String> {
    match dim {
        2 => vec!["H".into(), "V".into()],
        _ => ["HH", "HV", "VH", "VV"].iter().map(|s| s.to_string()).collect(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityMatrixDoc {
    rho: Vec<Vec<[f64; 2]>>,
    basis: Vec<String>,
}

impl From<DensityMatrix> for DensityMatrixDoc {
    fn from(d: DensityMatrix) -> Self {
        Self { rho: linalg::to_pairs(&d.matrix), basis: d.basis_labels() }
    }
}

impl TryFrom<DensityMatrixDoc> for DensityMatrix {
    type Error = PstError;

    fn try_from(doc: DensityMatrixDoc) -> Result<Self> {
        let m = linalg::from_pairs(&doc.rho).ok_or_else(|| PstError::InvalidState("ragged rho rows".into()))?;
        let d = DensityMatrix::new(m)?;
        if doc.basis != d.basis_labels() {
            return Err(PstError::InvalidState(format!("unexpected basis labels {:?}", doc.basis)));
        }
        Ok(d)
    }
}
