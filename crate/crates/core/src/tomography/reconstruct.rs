//! Linear-inversion state and process tomography.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{PstError, Result};
use crate::linalg::{self, c, CMatrix};

use super::measurement::{tomography_settings, MeasurementRecord, Outcome};

/// Smallest singular value accepted for the QPT input-state matrix.
const RANK_TOL: f64 = 1e-9;

/// Density matrix from a complete `{H,V,D,R}^⊗n` record set (4 settings for
/// one qubit, 16 for two) by linear inversion, followed by projection onto
/// the physical states (negative eigenvalues clipped, trace renormalized).
///
/// Records may hold raw counts or exact probabilities but not a mix; counts
/// fix the overall scale only through the final trace normalization.
pub fn reconstruct_state(records: &[MeasurementRecord], dim: usize) -> Result<DensityMatrix> {
    let n_qubits = match dim {
        2 => 1,
        4 => 2,
        _ => return Err(PstError::InvalidArgument(format!("state dimension must be 2 or 4, got {dim}"))),
    };
    let settings = tomography_settings(n_qubits)?;

    let mut by_label: BTreeMap<&str, Outcome> = BTreeMap::new();
    for r in records {
        if by_label.insert(r.setting.as_str(), r.outcome).is_some() {
            return Err(PstError::InvalidRecord(format!("duplicate setting {}", r.setting)));
        }
    }
    if by_label.len() != settings.len() {
        return Err(PstError::InvalidRecord(format!(
            "expected {} settings for dimension {dim}, got {}",
            settings.len(),
            by_label.len()
        )));
    }
    let mixed_kinds = {
        let counts = by_label.values().filter(|o| matches!(o, Outcome::Counts(_))).count();
        counts != 0 && counts != by_label.len()
    };
    if mixed_kinds {
        return Err(PstError::InvalidRecord("records mix counts and probabilities".into()));
    }

    let n = dim * dim;
    let mut a = CMatrix::zeros(n, n);
    let mut y = linalg::CVector::zeros(n);
    for (row, s) in settings.iter().enumerate() {
        let outcome = by_label
            .get(s.label.as_str())
            .ok_or_else(|| PstError::InvalidRecord(format!("missing setting {}", s.label)))?;
        // Tr(Pρ) = Σ_ij conj(P_ij) ρ_ij for Hermitian P
        for i in 0..dim {
            for j in 0..dim {
                a[(row, i * dim + j)] = s.projector[(i, j)].conj();
            }
        }
        let v = outcome.value();
        if !(v >= 0.0 && v.is_finite()) {
            return Err(PstError::InvalidRecord(format!("setting {} has value {v}", s.label)));
        }
        y[row] = c(v, 0.0);
    }
    let x = a
        .lu()
        .solve(&y)
        .ok_or_else(|| PstError::InvalidRecord("measurement set is not informationally complete".into()))?;
    let raw = CMatrix::from_fn(dim, dim, |i, j| x[i * dim + j]);
    let tr = linalg::trace(&raw).re;
    if !(tr > 0.0) {
        return Err(PstError::InvalidRecord("records carry no signal (zero total)".into()));
    }
    DensityMatrix::project_physical(&linalg::hermitian_part(&raw).unscale(tr))
}

/// Single-qubit process in the Pauli operator basis `I, X, Y, Z`:
/// `E(ρ) = Σ_mn χ_mn P_m ρ P_n`. The identity process has `χ₀₀ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChiDoc", into = "ChiDoc")]
pub struct ChiMatrix {
    matrix: CMatrix,
}

impl ChiMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.shape() != (4, 4) {
            return Err(PstError::InvalidState("chi matrix must be 4x4".into()));
        }
        if !linalg::is_hermitian(&matrix, 1e-9) {
            return Err(PstError::InvalidState("chi matrix is not Hermitian".into()));
        }
        Ok(Self { matrix: linalg::hermitian_part(&matrix) })
    }

    pub fn identity() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        Self { matrix: m }
    }

    /// χ of `ρ → UρU†`.
    pub fn from_unitary(u: &CMatrix) -> Self {
        let a = pauli_coefficients(u);
        Self { matrix: CMatrix::from_fn(4, 4, |m, n| a[m] * a[n].conj()) }
    }

    /// χ of the phase-damping channel that scales H/V coherences by `gamma`.
    pub fn dephasing(gamma: f64) -> Self {
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = c((1.0 + gamma) / 2.0, 0.0);
        m[(3, 3)] = c((1.0 - gamma) / 2.0, 0.0);
        Self { matrix: m }
    }

    /// χ of an arbitrary linear map on 2×2 operators.
    pub fn from_map(map: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let mut s = CMatrix::zeros(4, 4);
        for j in 0..2 {
            for k in 0..2 {
                let mut e = CMatrix::zeros(2, 2);
                e[(j, k)] = c(1.0, 0.0);
                let out = map(&e);
                for r in 0..2 {
                    for q in 0..2 {
                        s[(r * 2 + q, j * 2 + k)] = out[(r, q)];
                    }
                }
            }
        }
        Self { matrix: chi_from_superoperator(&s) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let p = linalg::paulis();
        let mut out = CMatrix::zeros(2, 2);
        for m in 0..4 {
            for n in 0..4 {
                let w = self.matrix[(m, n)];
                if w != c(0.0, 0.0) {
                    out += (&p[m] * rho * &p[n]) * w;
                }
            }
        }
        out
    }

    /// χ of the composite "first `u`, then this process".
    pub fn after_unitary(&self, u: &CMatrix) -> Self {
        let p = linalg::paulis();
        // P_m·U = Σ_k a[m][k] P_k with a[m][k] = Tr(P_k P_m U)/2
        let a: Vec<[Complex64; 4]> = (0..4).map(|m| pauli_coefficients(&(&p[m] * u))).collect();
        let matrix = CMatrix::from_fn(4, 4, |k, l| {
            let mut acc = c(0.0, 0.0);
            for m in 0..4 {
                for n in 0..4 {
                    acc += a[m][k] * self.matrix[(m, n)] * a[n][l].conj();
                }
            }
            acc
        });
        Self { matrix }
    }

    /// Clip negative eigenvalues and renormalize to unit trace.
    pub fn project_physical(&self) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(&self.matrix);
        let clipped = vals.map(|x| x.max(0.0));
        let total = clipped.sum();
        if !(total > 0.0) {
            return Err(PstError::InvalidState("chi matrix has no positive spectrum".into()));
        }
        let d = CMatrix::from_diagonal(&clipped.map(|x| c(x / total, 0.0)));
        Ok(Self { matrix: linalg::hermitian_part(&(&vecs * d * vecs.adjoint())) })
    }
}

/// Coefficients of `A = Σ_k a_k P_k` in the Pauli basis.
pub fn pauli_coefficients(a: &CMatrix) -> [Complex64; 4] {
    let p = linalg::paulis();
    std::array::from_fn(|k| linalg::trace(&(&p[k] * a)) * 0.5)
}

/// χ from the row-major superoperator `S` with `vec(E(ρ)) = S·vec(ρ)`:
/// `χ_mn = Tr(B_mn† S)/4` where `B_mn = P_m ⊗ conj(P_n)`.
fn chi_from_superoperator(s: &CMatrix) -> CMatrix {
    let p = linalg::paulis();
    let conj: Vec<CMatrix> = p.iter().map(|x| x.map(|z| z.conj())).collect();
    let mut chi = CMatrix::zeros(4, 4);
    for m in 0..4 {
        for n in 0..4 {
            let b = linalg::kron(&p[m], &conj[n]);
            chi[(m, n)] = linalg::trace(&(b.adjoint() * s)) * 0.25;
        }
    }
    chi
}

fn vec_row_major(m: &CMatrix) -> linalg::CVector {
    linalg::CVector::from_fn(4, |i, _| m[(i / 2, i % 2)])
}

/// χ by linear inversion from four tomographically complete inputs and the
/// reconstructed outputs, projected onto physical processes.
pub fn reconstruct_process(inputs: &[DensityMatrix], outputs: &[DensityMatrix]) -> Result<ChiMatrix> {
    if inputs.len() != 4 || outputs.len() != 4 {
        return Err(PstError::InvalidRecord(format!(
            "process tomography needs 4 inputs and 4 outputs, got {} and {}",
            inputs.len(),
            outputs.len()
        )));
    }
    if inputs.iter().chain(outputs).any(|d| d.dim() != 2) {
        return Err(PstError::InvalidRecord("process tomography is single-qubit".into()));
    }
    let rin = CMatrix::from_columns(&inputs.iter().map(|d| vec_row_major(d.matrix())).collect::<Vec<_>>());
    let rout = CMatrix::from_columns(&outputs.iter().map(|d| vec_row_major(d.matrix())).collect::<Vec<_>>());
    let sv = rin.clone().svd(false, false).singular_values;
    if sv.min() < RANK_TOL {
        return Err(PstError::InvalidRecord("input states are not linearly independent".into()));
    }
    let inv =
        rin.try_inverse().ok_or_else(|| PstError::InvalidRecord("input states are not linearly independent".into()))?;
    let s = rout * inv;
    ChiMatrix::new(linalg::hermitian_part(&chi_from_superoperator(&s)))?.project_physical()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChiDoc {
    chi: Vec<Vec<[f64; 2]>>,
    basis: Vec<String>,
}

impl From<ChiMatrix> for ChiDoc {
    fn from(c: ChiMatrix) -> Self {
        Self { chi: linalg::to_pairs(&c.matrix), basis: ["I", "X", "Y", "Z"].map(String::from).to_vec() }
    }
}

impl TryFrom<ChiDoc> for ChiMatrix {
    type Error = PstError;

    fn try_from(doc: ChiDoc) -> Result<Self> {
        if doc.basis != ["I", "X", "Y", "Z"] {
            return Err(PstError::InvalidState(format!("unexpected basis {:?}", doc.basis)));
        }
        ChiMatrix::new(linalg::from_pairs(&doc.chi).ok_or_else(|| PstError::InvalidState("ragged chi rows".into()))?)
    }
}

/// Real 4×4 helper used by tests and reports: `|χ_mn|`.
pub fn chi_magnitudes(chi: &ChiMatrix) -> DMatrix<f64> {
    chi.matrix.map(|z| z.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonics::{jones_matrix, JonesElement};
    use crate::tomography::measurement::{simulate_counts, PolarizationBasis};

    fn probe_inputs() -> Vec<DensityMatrix> {
        PolarizationBasis::ALL.iter().map(|b| DensityMatrix::from_pure(&b.ket()).unwrap()).collect()
    }

    #[test]
    fn reconstructs_h_exactly() {
        let rho = DensityMatrix::from_pure(&PolarizationBasis::H.ket()).unwrap();
        let rec = simulate_counts(&rho, &tomography_settings(1).unwrap(), 0, 0, 0.0).unwrap();
        let out = reconstruct_state(&rec, 2).unwrap();
        assert!(linalg::max_abs_diff(out.matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn rejects_incomplete_and_duplicate_records() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let mut rec = simulate_counts(&rho, &tomography_settings(1).unwrap(), 0, 0, 0.0).unwrap();
        assert!(matches!(reconstruct_state(&rec[..3], 2), Err(PstError::InvalidRecord(_))));
        rec[3] = rec[0].clone();
        assert!(matches!(reconstruct_state(&rec, 2), Err(PstError::InvalidRecord(_))));
        let rec4 = simulate_counts(&rho, &tomography_settings(1).unwrap(), 0, 0, 0.0).unwrap();
        assert!(reconstruct_state(&rec4, 4).is_err());
    }

    #[test]
    fn rejects_mixed_outcome_kinds() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let mut rec = simulate_counts(&rho, &tomography_settings(1).unwrap(), 0, 0, 0.0).unwrap();
        rec[0].outcome = Outcome::Counts(10);
        assert!(reconstruct_state(&rec, 2).is_err());
    }

    #[test]
    fn identity_process_chi() {
        let outs = probe_inputs();
        let chi = reconstruct_process(&probe_inputs(), &outs).unwrap();
        assert!(linalg::max_abs_diff(chi.matrix(), ChiMatrix::identity().matrix()) < 1e-12);
    }

    #[test]
    fn quarter_phase_chi_lives_on_i_z() {
        let u = jones_matrix(JonesElement::Phase(std::f64::consts::FRAC_PI_2));
        let outs: Vec<DensityMatrix> =
            probe_inputs().iter().map(|d| DensityMatrix::new(&u * d.matrix() * u.adjoint()).unwrap()).collect();
        let chi = reconstruct_process(&probe_inputs(), &outs).unwrap();
        let mag = chi_magnitudes(&chi);
        assert!((mag[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((mag[(3, 3)] - 0.5).abs() < 1e-12);
        assert!((mag[(0, 3)] - 0.5).abs() < 1e-12);
        for (m, n) in [(1, 1), (2, 2), (0, 1), (0, 2), (1, 2), (1, 3), (2, 3)] {
            assert!(mag[(m, n)] < 1e-12, "chi[{m}][{n}] = {}", mag[(m, n)]);
        }
        assert!(linalg::max_abs_diff(chi.matrix(), ChiMatrix::from_unitary(&u).matrix()) < 1e-12);
    }

    #[test]
    fn full_dephasing_chi() {
        let outs: Vec<DensityMatrix> = probe_inputs()
            .iter()
            .map(|d| {
                let mut m = d.matrix().clone();
                m[(0, 1)] = c(0.0, 0.0);
                m[(1, 0)] = c(0.0, 0.0);
                DensityMatrix::new(m).unwrap()
            })
            .collect();
        let chi = reconstruct_process(&probe_inputs(), &outs).unwrap();
        let mut want = CMatrix::zeros(4, 4);
        want[(0, 0)] = c(0.5, 0.0);
        want[(3, 3)] = c(0.5, 0.0);
        assert!(linalg::max_abs_diff(chi.matrix(), &want) < 1e-12);
        assert!(linalg::max_abs_diff(ChiMatrix::dephasing(0.0).matrix(), &want) < 1e-15);
    }

    #[test]
    fn dependent_inputs_rejected() {
        let mut ins = probe_inputs();
        ins[3] = ins[2].clone();
        assert!(matches!(reconstruct_process(&ins, &probe_inputs()), Err(PstError::InvalidRecord(_))));
    }

    #[test]
    fn composition_matches_direct_chi() {
        let a = jones_matrix(JonesElement::Hwp(0.3));
        let b = jones_matrix(JonesElement::Phase(1.1));
        let composed = ChiMatrix::from_unitary(&b).after_unitary(&a);
        let direct = ChiMatrix::from_unitary(&(&b * &a));
        assert!(linalg::max_abs_diff(composed.matrix(), direct.matrix()) < 1e-12);
    }

    #[test]
    fn from_map_matches_apply() {
        let chi = ChiMatrix::dephasing(0.3);
        let via_map = ChiMatrix::from_map(|r| chi.apply(r));
        assert!(linalg::max_abs_diff(via_map.matrix(), chi.matrix()) < 1e-15);
    }

    #[test]
    fn chi_json_layout() {
        let v = serde_json::to_value(ChiMatrix::identity()).unwrap();
        assert_eq!(v["basis"], serde_json::json!(["I", "X", "Y", "Z"]));
        assert_eq!(v["chi"][0][0], serde_json::json!([1.0, 0.0]));
        let back: ChiMatrix = serde_json::from_value(v).unwrap();
        assert_eq!(back, ChiMatrix::identity());
    }
}
