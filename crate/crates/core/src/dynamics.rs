//! Tight-binding Hamiltonians over (site, polarization) modes and their
//! propagators.
//!
//! Propagation length `z` (mm) plays the role of time: a coupling of
//! `C` mm⁻¹ accumulates a phase `C·z`. Mode index layout is
//! polarization-major, `index = pol·N + (site − 1)`, so each polarization
//! occupies one diagonal block of the matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PstError, Result};
use crate::lattice::{z_pst, ArrayDesign, CouplingSpectrum, DecayLaw};
use crate::linalg::{c, CMatrix, CVector};

/// Hermiticity tolerance accepted when wrapping a raw matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Local maxima of a transfer probability below this value are rounding
/// ripple, not peaks.
pub const PEAK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::H, Polarization::V];

    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Polarization::H => "H",
            Polarization::V => "V",
        }
    }
}

/// One optical mode: a waveguide (1-based) in one polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mode {
    pub site: usize,
    pub pol: Polarization,
}

impl Mode {
    pub fn new(site: usize, pol: Polarization) -> Self {
        Self { site, pol }
    }
}

/// Coupling matrix over `(site, polarization)` modes, stored as one real
/// symmetric block per polarization. There are no on-site terms and no
/// coupling between polarizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_sites: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl Hamiltonian {
    /// Wraps a dense matrix of size `n_sites·p` (p = 1 or 2), validating
    /// symmetry, zero diagonal and the absence of cross-polarization terms.
    pub fn from_matrix(m: &DMatrix<f64>, n_sites: usize) -> Result<Self> {
        if n_sites == 0 || !m.is_square() || !m.nrows().is_multiple_of(n_sites) {
            return Err(PstError::InvalidHamiltonian(format!(
                "{}x{} matrix does not tile {} sites",
                m.nrows(),
                m.ncols(),
                n_sites
            )));
        }
        let pols = m.nrows() / n_sites;
        if pols != 1 && pols != 2 {
            return Err(PstError::InvalidHamiltonian(format!("{pols} polarizations; expected 1 or 2")));
        }
        let scale = m.amax().max(1.0);
        for r in 0..m.nrows() {
            if m[(r, r)].abs() > HERMITIAN_TOL * scale {
                return Err(PstError::InvalidHamiltonian(format!("non-zero on-site term at {r}")));
            }
            for k in 0..r {
                if (m[(r, k)] - m[(k, r)]).abs() > HERMITIAN_TOL * scale {
                    return Err(PstError::InvalidHamiltonian(format!(
                        "not Hermitian: H[{r}][{k}] = {} but H[{k}][{r}] = {}",
                        m[(r, k)],
                        m[(k, r)]
                    )));
                }
                if r / n_sites != k / n_sites && m[(r, k)] != 0.0 {
                    return Err(PstError::InvalidHamiltonian(format!(
                        "cross-polarization coupling between modes {k} and {r}"
                    )));
                }
            }
        }
        let blocks = (0..pols)
            .map(|p| {
                let o = p * n_sites;
                let b = m.view((o, o), (n_sites, n_sites)).into_owned();
                (&b + b.transpose()).scale(0.5)
            })
            .collect();
        Ok(Self { n_sites, blocks })
    }

    fn from_blocks(n_sites: usize, blocks: Vec<DMatrix<f64>>) -> Self {
        debug_assert!(blocks.iter().all(|b| b.nrows() == n_sites && b.ncols() == n_sites));
        Self { n_sites, blocks }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn polarizations(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.n_sites * self.blocks.len()
    }

    /// Site block for one polarization. A single-polarization Hamiltonian
    /// serves both.
    pub fn block(&self, pol: Polarization) -> &DMatrix<f64> {
        &self.blocks[pol.index().min(self.blocks.len() - 1)]
    }

    pub fn mode_index(&self, mode: Mode) -> Result<usize> {
        self.check_site(mode.site)?;
        let p = mode.pol.index();
        if p >= self.blocks.len() {
            return Err(PstError::InvalidArgument(format!(
                "polarization {} not present in a single-polarization Hamiltonian",
                mode.pol.label()
            )));
        }
        Ok(p * self.n_sites + mode.site - 1)
    }

    pub fn basis_labels(&self) -> Vec<Mode> {
        Polarization::BOTH[..self.blocks.len()]
            .iter()
            .flat_map(|&pol| (1..=self.n_sites).map(move |site| Mode { site, pol }))
            .collect()
    }

    /// Full block-diagonal matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n_sites;
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (p, b) in self.blocks.iter().enumerate() {
            m.view_mut((p * n, p * n), (n, n)).copy_from(b);
        }
        m
    }

    /// Largest coupling magnitude over all blocks.
    pub fn c_max(&self) -> f64 {
        self.blocks.iter().map(|b| b.amax()).fold(0.0, f64::max)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site == 0 || site > self.n_sites {
            return Err(PstError::InvalidArgument(format!("site {site} out of range 1..={}", self.n_sites)));
        }
        Ok(())
    }
}

/// Tridiagonal Hamiltonian from nearest-neighbour couplings, repeated for
/// each polarization.
pub fn build_nn_hamiltonian(spectrum: &CouplingSpectrum, polarizations: usize) -> Result<Hamiltonian> {
    check_polarizations(polarizations)?;
    let block = tridiagonal(spectrum.couplings());
    Ok(Hamiltonian::from_blocks(spectrum.n_sites(), vec![block; polarizations]))
}

fn tridiagonal(couplings: &[f64]) -> DMatrix<f64> {
    let n = couplings.len() + 1;
    let mut m = DMatrix::zeros(n, n);
    for (k, &cpl) in couplings.iter().enumerate() {
        m[(k, k + 1)] = cpl;
        m[(k + 1, k)] = cpl;
    }
    m
}

fn check_polarizations(p: usize) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(PstError::InvalidArgument(format!("polarizations must be 1 or 2, got {p}")))
    }
}

/// Distinct coupling laws for the two polarizations, as in a birefringent
/// planar array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirefringenceOverride {
    pub h: DecayLaw,
    pub v: DecayLaw,
}

impl BirefringenceOverride {
    pub fn law(&self, pol: Polarization) -> DecayLaw {
        match pol {
            Polarization::H => self.h,
            Polarization::V => self.v,
        }
    }
}

/// Which waveguide pairs are coupled when building from a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingModel {
    /// Adjacent waveguides only.
    #[serde(rename = "nn")]
    NearestNeighbor,
    /// Every pair, through the exponential distance law.
    Full,
}

/// All-pairs Hamiltonian `H[n][m] = C(|x_n − x_m|)` from the design geometry.
pub fn build_full_hamiltonian(
    design: &ArrayDesign,
    polarizations: usize,
    birefringence: Option<&BirefringenceOverride>,
) -> Result<Hamiltonian> {
    build_design_hamiltonian(design, CouplingModel::Full, polarizations, birefringence)
}

/// Hamiltonian of a design under either coupling model.
pub fn build_design_hamiltonian(
    design: &ArrayDesign,
    model: CouplingModel,
    polarizations: usize,
    birefringence: Option<&BirefringenceOverride>,
) -> Result<Hamiltonian> {
    check_polarizations(polarizations)?;
    let pos = design.positions_um();
    let n = design.n_sites();
    let blocks = Polarization::BOTH[..polarizations]
        .iter()
        .map(|&pol| {
            let law = birefringence.map_or(design.decay(), |b| b.law(pol));
            DMatrix::from_fn(n, n, |r, k| {
                let coupled = match model {
                    CouplingModel::NearestNeighbor => r.abs_diff(k) == 1,
                    CouplingModel::Full => r != k,
                };
                if coupled {
                    law.a_per_mm * (-law.b_per_um * (pos[r] - pos[k]).abs()).exp()
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok(Hamiltonian::from_blocks(n, blocks))
}

/// Eigen-decomposition of each polarization block, reusable across `z`.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    n_sites: usize,
    blocks: Vec<(DVector<f64>, DMatrix<f64>)>,
}

impl SpectralPropagator {
    pub fn new(h: &Hamiltonian) -> Self {
        let blocks = h
            .blocks
            .iter()
            .map(|b| {
                let eig = b.clone().symmetric_eigen();
                (eig.eigenvalues, eig.eigenvectors)
            })
            .collect();
        Self { n_sites: h.n_sites, blocks }
    }

    fn block_of(&self, pol: Polarization) -> &(DVector<f64>, DMatrix<f64>) {
        &self.blocks[pol.index().min(self.blocks.len() - 1)]
    }

    /// `exp(−i·B·z)` for one polarization block.
    pub fn block_unitary(&self, pol: Polarization, z: f64) -> CMatrix {
        let (vals, vecs) = self.block_of(pol);
        let n = self.n_sites;
        let phases: Vec<Complex64> = vals.iter().map(|&e| Complex64::from_polar(1.0, -e * z)).collect();
        CMatrix::from_fn(n, n, |r, k| {
            let mut acc = c(0.0, 0.0);
            for (j, ph) in phases.iter().enumerate() {
                acc += ph * (vecs[(r, j)] * vecs[(k, j)]);
            }
            acc
        })
    }

    /// Full block-diagonal `exp(−i·H·z)`.
    pub fn unitary(&self, z: f64) -> CMatrix {
        let n = self.n_sites;
        let dim = n * self.blocks.len();
        let mut u = CMatrix::zeros(dim, dim);
        for (p, pol) in Polarization::BOTH[..self.blocks.len()].iter().enumerate() {
            u.view_mut((p * n, p * n), (n, n)).copy_from(&self.block_unitary(*pol, z));
        }
        u
    }

    /// `⟨to|exp(−iBz)|from⟩` within one polarization block (sites 1-based).
    pub fn amplitude(&self, pol: Polarization, from_site: usize, to_site: usize, z: f64) -> Complex64 {
        let (vals, vecs) = self.block_of(pol);
        let (f, t) = (from_site - 1, to_site - 1);
        vals.iter().enumerate().map(|(j, &e)| Complex64::from_polar(vecs[(t, j)] * vecs[(f, j)], -e * z)).sum()
    }

    /// Evolves a site-amplitude vector of one polarization.
    pub fn evolve_block(&self, pol: Polarization, psi0: &CVector, z: f64) -> CVector {
        let (vals, vecs) = self.block_of(pol);
        let vc = vecs.map(|x| c(x, 0.0));
        let coeffs = vc.transpose() * psi0;
        let rotated = CVector::from_fn(coeffs.len(), |j, _| coeffs[j] * Complex64::from_polar(1.0, -vals[j] * z));
        vc * rotated
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(z >= 0.0 && z.is_finite()) {
        return Err(PstError::InvalidArgument(format!("propagation length must be non-negative, got {z}")));
    }
    Ok(())
}

/// `U = exp(−i·H·z)` via spectral decomposition, in the Hamiltonian's mode
/// order.
pub fn propagator(h: &Hamiltonian, z: f64) -> Result<CMatrix> {
    check_z(z)?;
    Ok(SpectralPropagator::new(h).unitary(z))
}

/// Propagator of a raw real matrix, which must be symmetric.
pub fn propagator_from_matrix(m: &DMatrix<f64>, n_sites: usize, z: f64) -> Result<CMatrix> {
    propagator(&Hamiltonian::from_matrix(m, n_sites)?, z)
}

/// `|U[to][from]|²` at length `z` within polarization `pol`.
pub fn transfer_probability(
    h: &Hamiltonian,
    z: f64,
    from_site: usize,
    to_site: usize,
    pol: Polarization,
) -> Result<f64> {
    check_z(z)?;
    h.check_site(from_site)?;
    h.check_site(to_site)?;
    Ok(SpectralPropagator::new(h).amplitude(pol, from_site, to_site, z).norm_sqr())
}

/// Uniform propagation loss. `gamma_per_mm` is the power attenuation rate,
/// so the amplitude decays as `exp(−γz/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    pub gamma_per_mm: f64,
}

impl LossModel {
    pub fn from_db_per_cm(db_per_cm: f64) -> Result<Self> {
        if !(db_per_cm >= 0.0 && db_per_cm.is_finite()) {
            return Err(PstError::InvalidArgument(format!("loss must be non-negative, got {db_per_cm} dB/cm")));
        }
        // dB/cm -> dB/mm -> natural-log power rate
        Ok(Self { gamma_per_mm: db_per_cm / 10.0 * std::f64::consts::LN_10 / 10.0 })
    }

    pub fn power_factor(&self, z: f64) -> f64 {
        (-self.gamma_per_mm * z).exp()
    }

    pub fn amplitude_factor(&self, z: f64) -> f64 {
        (-0.5 * self.gamma_per_mm * z).exp()
    }
}

/// Site-resolved intensity along the array.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationProfile {
    pub z_grid: Vec<f64>,
    /// `intensities[i][site − 1]`, summed over polarization.
    pub intensities: Vec<Vec<f64>>,
}

impl PropagationProfile {
    pub fn n_sites(&self) -> usize {
        self.intensities.first().map_or(0, Vec::len)
    }

    /// CSV with header `z_mm,site_1,...,site_N`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z_mm");
        for s in 1..=self.n_sites() {
            out.push_str(&format!(",site_{s}"));
        }
        out.push('\n');
        for (z, row) in self.z_grid.iter().zip(&self.intensities) {
            out.push_str(&format!("{z:.16e}"));
            for p in row {
                out.push_str(&format!(",{p:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Intensity on each site for `n_steps` evenly spaced lengths in
/// `[0, z_max]` (endpoints included) after injecting into `input`.
pub fn propagation_profile(
    h: &Hamiltonian,
    z_max: f64,
    n_steps: usize,
    input: Mode,
    loss: Option<LossModel>,
) -> Result<PropagationProfile> {
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(PstError::InvalidArgument(format!("z_max must be positive, got {z_max}")));
    }
    if n_steps < 2 {
        return Err(PstError::InvalidArgument(format!("n_steps must be at least 2, got {n_steps}")));
    }
    h.mode_index(input)?;
    let prop = SpectralPropagator::new(h);
    let n = h.n_sites();
    let mut psi0 = CVector::zeros(n);
    psi0[input.site - 1] = c(1.0, 0.0);

    let z_grid: Vec<f64> =
        (0..n_steps).map(|i| if i + 1 == n_steps { z_max } else { z_max * i as f64 / (n_steps - 1) as f64 }).collect();
    let intensities = z_grid
        .iter()
        .map(|&z| {
            let psi = prop.evolve_block(input.pol, &psi0, z);
            let scale = loss.map_or(1.0, |l| l.power_factor(z));
            psi.iter().map(|a| a.norm_sqr() * scale).collect()
        })
        .collect();
    Ok(PropagationProfile { z_grid, intensities })
}

/// Length and value of the first local maximum of `P(from → to)` in the
/// H-polarization block.
///
/// The scan starts just above zero with step `10⁻³/C_max`, stops at ten
/// times the reference transfer length `π√(N²−1)/(4·C_max)`, and refines the
/// bracketing interval by golden-section search down to `10⁻⁶/C_max`.
pub fn first_peak_max(h: &Hamiltonian, from_site: usize, to_site: usize) -> Result<(f64, f64)> {
    h.check_site(from_site)?;
    h.check_site(to_site)?;
    let c_max = h.block(Polarization::H).amax();
    if c_max <= 0.0 {
        return Err(PstError::SearchFailure("Hamiltonian has no couplings".into()));
    }
    let prop = SpectralPropagator::new(h);
    let p = |z: f64| prop.amplitude(Polarization::H, from_site, to_site, z).norm_sqr();

    let window = 10.0 * z_pst(h.n_sites().max(2), c_max)?;
    let step = 1e-3 / c_max;
    let n_grid = (window / step).ceil() as usize;

    let mut prev = p(0.0);
    let mut cur = p(step);
    for i in 1..n_grid {
        let next = p((i + 1) as f64 * step);
        if cur > prev && cur >= next && cur >= PEAK_FLOOR {
            let (lo, hi) = ((i - 1) as f64 * step, (i + 1) as f64 * step);
            let z = golden_section_max(&p, lo, hi, 1e-6 / c_max);
            let pz = p(z);
            // the refined point can never be worse than the grid point
            return Ok(if pz >= cur { (z, pz) } else { (i as f64 * step, cur) });
        }
        prev = cur;
        cur = next;
    }
    Err(PstError::SearchFailure(format!("no local maximum of P({from_site} -> {to_site}) within z <= {window:.6} mm")))
}

fn golden_section_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Site-reversal permutation `R|n⟩ = |N+1−n⟩`.
pub fn mirror_permutation(n_sites: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_sites, n_sites, |r, k| if r + k + 1 == n_sites { 1.0 } else { 0.0 })
}

/// Global phase of the transfer propagator on a `C₀√(n(N−n))` chain:
/// `exp(−iHz_PST) = (−i)^(N−1)·R`.
pub fn pst_global_phase(n_sites: usize) -> Complex64 {
    match (n_sites - 1) % 4 {
        0 => c(1.0, 0.0),
        1 => c(0.0, -1.0),
        2 => c(-1.0, 0.0),
        _ => c(0.0, 1.0),
    }
}
