//! Fidelity, similarity, purity and entanglement measures.

use crate::density::DensityMatrix;
use crate::error::{PstError, Result};
use crate::linalg::{self, CMatrix};

use super::reconstruct::ChiMatrix;

fn clamp_unit(x: f64, what: &str) -> f64 {
    if !(-1e-9..=1.0 + 1e-9).contains(&x) {
        log::warn!("{what} {x} outside [0, 1]; clamping");
    }
    x.clamp(0.0, 1.0)
}

/// Squared Bhattacharyya coefficient `(Σ √(p_n q_n))²` after normalizing
/// each vector to unit sum.
pub fn distribution_fidelity(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(PstError::InvalidArgument(format!("length mismatch: {} vs {}", p.len(), q.len())));
    }
    let norm = |v: &[f64]| -> Result<f64> {
        if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(PstError::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            Ok(s)
        } else {
            Err(PstError::InvalidArgument("probability vector is all zero".into()))
        }
    };
    let (sp, sq) = (norm(p)?, norm(q)?);
    let bc: f64 = p.iter().zip(q).map(|(a, b)| (a / sp * (b / sq)).sqrt()).sum();
    Ok(clamp_unit(bc * bc, "distribution fidelity"))
}

/// `Re Tr(χ_a χ_b)`.
pub fn process_fidelity(a: &ChiMatrix, b: &ChiMatrix) -> f64 {
    let f = linalg::trace(&(a.matrix() * b.matrix())).re;
    clamp_unit(f, "process fidelity")
}

/// Uhlmann fidelity `(Tr √(√ρ₁ ρ₂ √ρ₁))²`.
pub fn state_fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(PstError::InvalidArgument(format!("dimension mismatch: {} vs {}", rho1.dim(), rho2.dim())));
    }
    let s = linalg::sqrt_psd(rho1.matrix());
    let tr: f64 = linalg::sqrt_eigenvalues(&(&s * rho2.matrix() * &s)).sum();
    Ok(clamp_unit(tr * tr, "state fidelity"))
}

/// Uhlmann fidelity between a measured state and a model prediction.
pub fn similarity(measured: &DensityMatrix, predicted: &DensityMatrix) -> Result<f64> {
    state_fidelity(measured, predicted)
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Wootters concurrence of a two-qubit state.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(PstError::InvalidArgument("concurrence needs a two-qubit state".into()));
    }
    let y = &linalg::paulis()[2];
    let yy: CMatrix = linalg::kron(y, y);
    let tilde = &yy * rho.matrix().map(|z| z.conj()) * &yy;
    let s = linalg::sqrt_psd(rho.matrix());
    let mut l: Vec<f64> = linalg::sqrt_eigenvalues(&(&s * tilde * &s)).iter().copied().collect();
    l.sort_by(|a, b| b.total_cmp(a));
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}
