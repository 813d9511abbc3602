//! Polarization optics and the two-photon transfer pipeline.
//!
//! Jones convention used throughout (angles in radians):
//!
//! * `HWP(θ) = [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]`, so `HWP(22.5°)|H⟩ = |D⟩`
//!   and `HWP(0)|V⟩ = −|V⟩`.
//! * `QWP(θ) = R(θ)·diag(1, i)·R(−θ)` with `R` the rotation matrix.
//! * `Phase(φ) = diag(1, e^{iφ})`.
//! * `Projector(θ) = |θ⟩⟨θ|` with `|θ⟩ = cos θ|H⟩ + sin θ|V⟩`.
//!
//! Photon 1 lives on the waveguide array and carries a polarization qubit.
//! Photon 2 (the "partner") stays in fibre and carries only polarization; it
//! may be absent, in which case the state describes a single photon.

use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{PstError, Result};
use crate::linalg::{self, c, CMatrix, CVector, ONE, ZERO};

/// Post-selection probabilities below this are treated as no detection.
pub const MIN_POSTSELECTION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JonesElement {
    Hwp(f64),
    Qwp(f64),
    Phase(f64),
    Projector(f64),
}

pub fn jones_matrix(element: JonesElement) -> CMatrix {
    match element {
        JonesElement::Hwp(theta) => {
            let (s, co) = (2.0 * theta).sin_cos();
            CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0)])
        }
        JonesElement::Qwp(theta) => {
            let (s, co) = theta.sin_cos();
            let i = c(0.0, 1.0);
            let sc = c(s * co, 0.0);
            CMatrix::from_row_slice(
                2,
                2,
                &[c(co * co, 0.0) + i * (s * s), sc - i * sc, sc - i * sc, c(s * s, 0.0) + i * (co * co)],
            )
        }
        JonesElement::Phase(phi) => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::from_polar(1.0, phi)]),
        JonesElement::Projector(theta) => {
            let (s, co) = theta.sin_cos();
            CMatrix::from_row_slice(2, 2, &[c(co * co, 0.0), c(s * co, 0.0), c(s * co, 0.0), c(s * s, 0.0)])
        }
    }
}

/// Product of elements in the order light meets them (first element acts
/// first).
pub fn jones_chain(elements: &[JonesElement]) -> CMatrix {
    elements.iter().fold(linalg::identity(2), |acc, &e| jones_matrix(e) * acc)
}

/// Variable phase stage of the source: QWP(45°), HWP(θ), QWP(45°). Its
/// relative V/H phase advances by 4θ as the HWP turns.
pub fn source_phase_stage(hwp_theta: f64) -> CMatrix {
    let q = JonesElement::Qwp(std::f64::consts::FRAC_PI_4);
    jones_chain(&[q, JonesElement::Hwp(hwp_theta), q])
}

/// Single-qubit polarization kets.
pub mod kets {
    use super::*;

    fn ket(a: Complex64, b: Complex64) -> CVector {
        CVector::from_vec(vec![a, b])
    }

    pub fn h() -> CVector {
        ket(ONE, ZERO)
    }
    pub fn v() -> CVector {
        ket(ZERO, ONE)
    }
    /// `(|H⟩ + |V⟩)/√2`
    pub fn d() -> CVector {
        ket(ONE, ONE).unscale(2f64.sqrt())
    }
    /// `(|H⟩ + i|V⟩)/√2`
    pub fn r() -> CVector {
        ket(ONE, c(0.0, 1.0)).unscale(2f64.sqrt())
    }
}

/// Which photon of the pair an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Photon {
    /// The photon routed through the waveguide array.
    Array,
    /// The partner photon kept in fibre.
    Partner,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

/// State over `(photon-1 site ⊗ photon-1 polarization ⊗ photon-2
/// polarization)`, stored as amplitudes while pure and as a density matrix
/// once mixed. Basis index: `((site − 1)·2 + p₁)·partner_dim + p₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    n_sites: usize,
    partner_dim: usize,
    repr: Repr,
}

impl TwoPhotonState {
    /// Pure state from amplitudes; `partner_dim` is 2 for a pair, 1 for a
    /// lone photon.
    pub fn pure(n_sites: usize, partner_dim: usize, amplitudes: CVector) -> Result<Self> {
        check_layout(n_sites, partner_dim, amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(PstError::InvalidState(format!("state norm is {norm}, not 1")));
        }
        Ok(Self { n_sites, partner_dim, repr: Repr::Pure(amplitudes) })
    }

    pub fn mixed(n_sites: usize, partner_dim: usize, rho: CMatrix) -> Result<Self> {
        check_layout(n_sites, partner_dim, rho.nrows())?;
        if !linalg::is_hermitian(&rho, 1e-9) {
            return Err(PstError::InvalidState("density operator is not Hermitian".into()));
        }
        let tr = linalg::trace(&rho);
        if (tr - ONE).norm() > 1e-10 {
            return Err(PstError::InvalidState(format!("trace is {tr}, not 1")));
        }
        Ok(Self { n_sites, partner_dim, repr: Repr::Mixed(rho) })
    }

    /// Polarization-only pair state (photon 1 not yet on the array), basis
    /// `HH, HV, VH, VV`.
    pub fn pair(amplitudes: CVector) -> Result<Self> {
        Self::pure(1, 2, amplitudes)
    }

    /// Lone photon with polarization `alpha|H⟩ + beta|V⟩` in `site`.
    pub fn single_photon(n_sites: usize, site: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::pure(1, 1, CVector::from_vec(vec![alpha, beta]))?.inject(site, n_sites)
    }

    pub fn from_polarization_density(rho: &DensityMatrix) -> Result<Self> {
        let partner_dim = rho.dim() / 2;
        Self::mixed(1, partner_dim, rho.matrix().clone())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn partner_dim(&self) -> usize {
        self.partner_dim
    }

    pub fn dim(&self) -> usize {
        self.n_sites * 2 * self.partner_dim
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(v) => linalg::outer(v, v),
            Repr::Mixed(m) => m.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.norm_squared(),
            Repr::Mixed(m) => linalg::trace(m).re,
        }
    }

    /// `Tr ρ²` of the full state.
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.norm_squared().powi(2),
            Repr::Mixed(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    fn index(&self, site: usize, p1: usize, p2: usize) -> usize {
        ((site - 1) * 2 + p1) * self.partner_dim + p2
    }

    /// Places a state whose photon 1 sits on a single site into `site` of an
    /// `n_sites` array.
    pub fn inject(&self, site: usize, n_sites: usize) -> Result<Self> {
        if self.n_sites != 1 {
            return Err(PstError::InvalidArgument("only a single-site state can be injected".into()));
        }
        if site == 0 || site > n_sites {
            return Err(PstError::InvalidArgument(format!("site {site} out of range 1..={n_sites}")));
        }
        let local = 2 * self.partner_dim;
        let offset = (site - 1) * local;
        let dim = n_sites * local;
        let repr = match &self.repr {
            Repr::Pure(v) => {
                let mut out = CVector::zeros(dim);
                out.rows_mut(offset, local).copy_from(v);
                Repr::Pure(out)
            }
            Repr::Mixed(m) => {
                let mut out = CMatrix::zeros(dim, dim);
                out.view_mut((offset, offset), (local, local)).copy_from(m);
                Repr::Mixed(out)
            }
        };
        Ok(Self { n_sites, partner_dim: self.partner_dim, repr })
    }

    /// Applies `op` to the full state space (`ρ → AρA†`).
    fn conjugate(&self, op: &CMatrix) -> Self {
        let repr = match &self.repr {
            Repr::Pure(v) => Repr::Pure(op * v),
            Repr::Mixed(m) => Repr::Mixed(op * m * op.adjoint()),
        };
        Self { n_sites: self.n_sites, partner_dim: self.partner_dim, repr }
    }

    fn local_operator(&self, u2: &CMatrix, which: Photon) -> Result<CMatrix> {
        if u2.shape() != (2, 2) {
            return Err(PstError::InvalidArgument("polarization operator must be 2x2".into()));
        }
        let sites = linalg::identity(self.n_sites);
        Ok(match which {
            Photon::Array => linalg::kron(&linalg::kron(&sites, u2), &linalg::identity(self.partner_dim)),
            Photon::Partner => {
                if self.partner_dim != 2 {
                    return Err(PstError::InvalidArgument("state has no partner photon".into()));
                }
                linalg::kron(&linalg::kron(&sites, &linalg::identity(2)), u2)
            }
        })
    }

    /// Applies a 2×2 polarization operator to one photon, on every site.
    pub fn apply_polarization(&self, u2: &CMatrix, which: Photon) -> Result<Self> {
        Ok(self.conjugate(&self.local_operator(u2, which)?))
    }

    /// Scales coherences between the H and V components of one photon by
    /// `gamma` (pure dephasing). Always returns the density form.
    pub fn dephase(&self, gamma: f64, which: Photon) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(PstError::InvalidArgument(format!("coherence factor must lie in [0, 1], got {gamma}")));
        }
        if which == Photon::Partner && self.partner_dim != 2 {
            return Err(PstError::InvalidArgument("state has no partner photon".into()));
        }
        let pd = self.partner_dim;
        let pol_of = |idx: usize| match which {
            Photon::Array => (idx / pd) % 2,
            Photon::Partner => idx % pd,
        };
        let mut rho = self.density();
        for r in 0..rho.nrows() {
            for k in 0..rho.ncols() {
                if pol_of(r) != pol_of(k) {
                    rho[(r, k)] *= gamma;
                }
            }
        }
        Ok(Self { n_sites: self.n_sites, partner_dim: pd, repr: Repr::Mixed(rho) })
    }

    /// Reduced 2×2 polarization state of the partner photon.
    pub fn partner_reduced(&self) -> Result<CMatrix> {
        if self.partner_dim != 2 {
            return Err(PstError::InvalidArgument("state has no partner photon".into()));
        }
        let rho = self.density();
        let mut out = CMatrix::zeros(2, 2);
        for site in 1..=self.n_sites {
            for p1 in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        out[(a, b)] += rho[(self.index(site, p1, a), self.index(site, p1, b))];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Probability of finding photon 1 on each site.
    pub fn site_populations(&self) -> Vec<f64> {
        let rho = self.density();
        let local = 2 * self.partner_dim;
        (0..self.n_sites).map(|s| (0..local).map(|j| rho[(s * local + j, s * local + j)].re).sum()).collect()
    }
}

fn check_layout(n_sites: usize, partner_dim: usize, len: usize) -> Result<()> {
    if n_sites == 0 || !(partner_dim == 1 || partner_dim == 2) {
        return Err(PstError::InvalidState(format!("bad layout: {n_sites} sites, partner dimension {partner_dim}")));
    }
    if len != n_sites * 2 * partner_dim {
        return Err(PstError::InvalidState(format!(
            "dimension {len} does not match {n_sites} sites x 2 x {partner_dim}"
        )));
    }
    Ok(())
}

/// Coincidence-post-selected source state
/// `(|H₁V₂⟩ + e^{iφ}|V₁H₂⟩)/√2` with `φ = 4(θ + ε)`.
pub fn prepare_bell(residual_phase: f64, hwp_theta: f64) -> TwoPhotonState {
    let phi = 4.0 * (hwp_theta + residual_phase);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = CVector::from_vec(vec![ZERO, c(s, 0.0), Complex64::from_polar(s, phi), ZERO]);
    TwoPhotonState::pair(amps).expect("normalized by construction")
}

/// Gaussian wavepacket pair with the V component delayed by `delay_um` of
/// path length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavepacket {
    pub coherence_length_um: f64,
    pub delay_um: f64,
}

impl Wavepacket {
    pub fn new(coherence_length_um: f64, delay_um: f64) -> Result<Self> {
        if !(coherence_length_um > 0.0 && coherence_length_um.is_finite()) {
            return Err(PstError::InvalidArgument(format!(
                "coherence length must be positive, got {coherence_length_um}"
            )));
        }
        if !delay_um.is_finite() {
            return Err(PstError::InvalidArgument("delay must be finite".into()));
        }
        Ok(Self { coherence_length_um, delay_um })
    }
}

/// Normalized overlap of two identical Gaussian envelopes offset by the
/// delay: `exp(−τ²/(2L_c²))`.
pub fn wavepacket_overlap(w: &Wavepacket) -> f64 {
    let x = w.delay_um / w.coherence_length_um;
    (-0.5 * x * x).exp()
}

/// Dephases the delayed photon's polarization by the wavepacket overlap.
pub fn apply_delay_decoherence(state: &TwoPhotonState, w: &Wavepacket, which: Photon) -> Result<TwoPhotonState> {
    state.dephase(wavepacket_overlap(w), which)
}

/// Applies `U ⊗ I`: `u_array` acts on photon 1's (site, polarization)
/// modes, given in the dual-polarization Hamiltonian order
/// `pol·N + (site − 1)`.
pub fn evolve_two_photon(state: &TwoPhotonState, u_array: &CMatrix) -> Result<TwoPhotonState> {
    let n = state.n_sites;
    if u_array.shape() != (2 * n, 2 * n) {
        return Err(PstError::InvalidArgument(format!(
            "array unitary is {}x{}, expected {}x{}",
            u_array.nrows(),
            u_array.ncols(),
            2 * n,
            2 * n
        )));
    }
    // reorder from polarization-major to the state's site-major layout
    let site_major = |j: usize| (j % 2) * n + j / 2;
    let u1 = CMatrix::from_fn(2 * n, 2 * n, |r, k| u_array[(site_major(r), site_major(k))]);
    let op = linalg::kron(&u1, &linalg::identity(state.partner_dim));
    Ok(state.conjugate(&op))
}

/// Conditions on photon 1 being detected in `site`; returns the
/// renormalized polarization state (2×2 or 4×4) and the detection
/// probability.
pub fn postselect_site(state: &TwoPhotonState, site: usize) -> Result<(DensityMatrix, f64)> {
    if site == 0 || site > state.n_sites {
        return Err(PstError::InvalidArgument(format!("site {site} out of range 1..={}", state.n_sites)));
    }
    let local = 2 * state.partner_dim;
    let offset = (site - 1) * local;
    let block = match &state.repr {
        Repr::Pure(v) => {
            let part = v.rows(offset, local).into_owned();
            linalg::outer(&part, &part)
        }
        Repr::Mixed(m) => m.view((offset, offset), (local, local)).into_owned(),
    };
    let p = linalg::trace(&block).re;
    if !(p >= MIN_POSTSELECTION) {
        return Err(PstError::EmptyPostselection { probability: p.max(0.0) });
    }
    let rho = DensityMatrix::new(linalg::hermitian_part(&block).unscale(p))?;
    Ok((rho, p))
}
