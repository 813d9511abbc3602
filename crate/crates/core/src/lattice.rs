//! Coupling spectra and waveguide spacings for perfect-state-transfer arrays.
//!
//! Units follow the fabrication convention: waveguide spacings and positions
//! are in micrometres, coupling rates in mm⁻¹ and the propagation length
//! (which plays the role of time) in millimetres. The decay constant `b` is in
//! μm⁻¹ so that `b·d` is dimensionless.

use serde::{Deserialize, Serialize};

use crate::error::{PstError, Result};

/// Absolute slack allowed on lengths when checking design invariants (μm).
pub const LENGTH_TOL_UM: f64 = 1e-9;
/// Relative slack allowed on the coupling round trip `C(d_n)` vs the target.
pub const ROUND_TRIP_RTOL: f64 = 1e-12;

pub const ARRAY_DESIGN_SCHEMA_VERSION: u32 = 1;

/// Exponential evanescent-coupling law `C(d) = a·exp(−b·d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayLaw {
    pub a_per_mm: f64,
    pub b_per_um: f64,
}

impl DecayLaw {
    pub fn new(a_per_mm: f64, b_per_um: f64) -> Result<Self> {
        if !(a_per_mm > 0.0 && a_per_mm.is_finite()) || !(b_per_um > 0.0 && b_per_um.is_finite()) {
            return Err(PstError::InvalidDesign(format!(
                "decay constants must be positive and finite (a = {a_per_mm}, b = {b_per_um})"
            )));
        }
        Ok(Self { a_per_mm, b_per_um })
    }

    pub fn coupling(&self, d_um: f64) -> Result<f64> {
        coupling_from_distance(d_um, self.a_per_mm, self.b_per_um)
    }
}

/// Nearest-neighbour couplings of a chain together with the constant `C₀`
/// they were generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpectrum {
    c0: f64,
    couplings: Vec<f64>,
    c_max: f64,
}

impl CouplingSpectrum {
    /// Builds a spectrum from explicit couplings. `c0` is informational and
    /// set to NaN for spectra that do not follow the transfer law.
    pub fn from_couplings(couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(PstError::InvalidDesign("a chain needs at least two sites".into()));
        }
        if couplings.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(PstError::InvalidDesign("couplings must be positive and finite".into()));
        }
        let c_max = couplings.iter().copied().fold(f64::MIN, f64::max);
        Ok(Self { c0: f64::NAN, couplings, c_max })
    }

    /// `n_sites` sites joined by identical couplings `c`.
    pub fn uniform(n_sites: usize, c: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(PstError::InvalidDesign(format!("n_sites = {n_sites}; need at least 2")));
        }
        Self::from_couplings(vec![c; n_sites - 1])
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `C_{n,n+1}` for n = 1..N−1, stored zero-based.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn n_sites(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn is_mirror_symmetric(&self, rtol: f64) -> bool {
        let c = &self.couplings;
        (0..c.len()).all(|k| {
            let m = c[c.len() - 1 - k];
            (c[k] - m).abs() <= rtol * c[k].abs().max(m.abs())
        })
    }
}

/// Couplings `C_{n,n+1} = c0·√(n(N−n))` that give perfect transfer from site
/// `n` to site `N−n+1`.
pub fn pst_coupling_spectrum(n_sites: usize, c0: f64) -> Result<CouplingSpectrum> {
    if n_sites < 2 {
        return Err(PstError::InvalidDesign(format!("n_sites = {n_sites}; need at least 2")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(PstError::InvalidDesign(format!("c0 must be positive, got {c0}")));
    }
    let n_total = n_sites as f64;
    let couplings: Vec<f64> = (1..n_sites)
        .map(|n| {
            let n = n as f64;
            c0 * (n * (n_total - n)).sqrt()
        })
        .collect();
    let c_max = couplings.iter().copied().fold(f64::MIN, f64::max);
    Ok(CouplingSpectrum { c0, couplings, c_max })
}

/// Transfer length `π/(2·c0)` in the units reciprocal to `c0`.
pub fn pst_time(c0: f64) -> Result<f64> {
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(PstError::InvalidDesign(format!("c0 must be positive, got {c0}")));
    }
    Ok(std::f64::consts::PI / (2.0 * c0))
}

/// Coupling at separation `d_um` under `C(d) = a·exp(−b·d)`.
pub fn coupling_from_distance(d_um: f64, decay_a: f64, decay_b: f64) -> Result<f64> {
    if !(d_um >= 0.0) {
        return Err(PstError::InvalidArgument(format!("distance must be non-negative, got {d_um}")));
    }
    Ok(decay_a * (-decay_b * d_um).exp())
}

/// Separation of gap `n` (1-based, between sites n and n+1) that realises the
/// transfer coupling law when the central gap sits at `d_min`. Odd `N` only.
pub fn spacing_from_coupling(n: usize, n_sites: usize, d_min: f64, decay_b: f64) -> Result<f64> {
    if n_sites < 2 {
        return Err(PstError::InvalidDesign(format!("n_sites = {n_sites}; need at least 2")));
    }
    if n_sites.is_multiple_of(2) {
        return Err(PstError::UnsupportedParametrization(format!(
            "odd N required for the spacing parametrization (got N = {n_sites})"
        )));
    }
    if n == 0 || n >= n_sites {
        return Err(PstError::InvalidArgument(format!("gap index {n} out of range 1..={}", n_sites - 1)));
    }
    if !(decay_b > 0.0 && decay_b.is_finite()) {
        return Err(PstError::InvalidDesign(format!("decay_b must be positive, got {decay_b}")));
    }
    let big_n = n_sites as f64;
    let nf = n as f64;
    let ratio = (big_n * big_n - 1.0) / (nf * (big_n - nf));
    Ok(d_min + (0.5 * ratio.sqrt()).ln() / decay_b)
}

/// Transfer length `π√(N²−1)/(4·C_max)`.
pub fn z_pst(n_sites: usize, c_max: f64) -> Result<f64> {
    if n_sites < 2 {
        return Err(PstError::InvalidDesign(format!("n_sites = {n_sites}; need at least 2")));
    }
    if !(c_max > 0.0 && c_max.is_finite()) {
        return Err(PstError::InvalidDesign(format!("c_max must be positive, got {c_max}")));
    }
    let n = n_sites as f64;
    Ok(std::f64::consts::PI * (n * n - 1.0).sqrt() / (4.0 * c_max))
}

/// `C₀` of the transfer law whose largest coupling is `c_max`.
pub fn c0_from_c_max(n_sites: usize, c_max: f64) -> f64 {
    let n = n_sites as f64;
    // max over n of √(n(N−n)) is √(N²−1)/2 for odd N and N/2 for even N
    let peak = if n_sites % 2 == 1 { (n * n - 1.0).sqrt() / 2.0 } else { n / 2.0 };
    c_max / peak
}

/// A one-dimensional waveguide array: site count, fabrication constants and
/// the gap between each pair of neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrayDesignDoc", into = "ArrayDesignDoc")]
pub struct ArrayDesign {
    n_sites: usize,
    d_min_um: f64,
    decay: DecayLaw,
    spacings_um: Vec<f64>,
    positions_um: Vec<f64>,
}

impl ArrayDesign {
    /// Wraps explicit gaps, checking the design invariants (minimum gap,
    /// mirror symmetry).
    pub fn from_spacings(d_min_um: f64, decay: DecayLaw, spacings_um: Vec<f64>) -> Result<Self> {
        let n_sites = spacings_um.len() + 1;
        if n_sites < 2 {
            return Err(PstError::InvalidDesign("a design needs at least two sites".into()));
        }
        if !(d_min_um > 0.0 && d_min_um.is_finite()) {
            return Err(PstError::InvalidDesign(format!("d_min must be positive, got {d_min_um}")));
        }
        DecayLaw::new(decay.a_per_mm, decay.b_per_um)?;
        for (k, &d) in spacings_um.iter().enumerate() {
            if !d.is_finite() || d < d_min_um - LENGTH_TOL_UM {
                return Err(PstError::InvalidDesign(format!("gap {} = {d} μm is below d_min = {d_min_um} μm", k + 1)));
            }
            let mirror = spacings_um[spacings_um.len() - 1 - k];
            if (d - mirror).abs() > LENGTH_TOL_UM {
                return Err(PstError::InvalidDesign(format!(
                    "gaps are not mirror symmetric: d_{} = {d}, d_{} = {mirror}",
                    k + 1,
                    spacings_um.len() - k
                )));
            }
        }
        let positions_um = std::iter::once(0.0)
            .chain(spacings_um.iter().scan(0.0, |acc, d| {
                *acc += d;
                Some(*acc)
            }))
            .collect();
        Ok(Self { n_sites, d_min_um, decay, spacings_um, positions_um })
    }

    /// Equally spaced array with every gap at `d_min`.
    pub fn uniform(n_sites: usize, d_min_um: f64, decay: DecayLaw) -> Result<Self> {
        if n_sites < 2 {
            return Err(PstError::InvalidDesign(format!("n_sites = {n_sites}; need at least 2")));
        }
        Self::from_spacings(d_min_um, decay, vec![d_min_um; n_sites - 1])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn d_min_um(&self) -> f64 {
        self.d_min_um
    }

    pub fn decay(&self) -> DecayLaw {
        self.decay
    }

    pub fn spacings_um(&self) -> &[f64] {
        &self.spacings_um
    }

    pub fn positions_um(&self) -> &[f64] {
        &self.positions_um
    }

    /// Nearest-neighbour couplings implied by the gaps under `law`.
    pub fn couplings_with(&self, law: &DecayLaw) -> Vec<f64> {
        self.spacings_um.iter().map(|&d| law.a_per_mm * (-law.b_per_um * d).exp()).collect()
    }

    pub fn coupling_spectrum(&self) -> CouplingSpectrum {
        let couplings = self.couplings_with(&self.decay);
        let c_max = couplings.iter().copied().fold(f64::MIN, f64::max);
        CouplingSpectrum { c0: c0_from_c_max(self.n_sites, c_max), couplings, c_max }
    }

    /// Largest nearest-neighbour coupling, i.e. `C(min gap)`.
    pub fn c_max(&self) -> f64 {
        self.coupling_spectrum().c_max
    }

    /// Transfer length of the design, in mm.
    pub fn z_pst(&self) -> Result<f64> {
        z_pst(self.n_sites, self.c_max())
    }
}

/// Builds the transfer array for `n_sites` (odd) sites with central gap
/// `d_min`.
pub fn design_array(n_sites: usize, d_min: f64, decay_a: f64, decay_b: f64) -> Result<ArrayDesign> {
    let decay = DecayLaw::new(decay_a, decay_b)?;
    if !(d_min > 0.0 && d_min.is_finite()) {
        return Err(PstError::InvalidDesign(format!("d_min must be positive, got {d_min}")));
    }
    if n_sites < 2 {
        return Err(PstError::InvalidDesign(format!("n_sites = {n_sites}; need at least 2")));
    }
    let spacings =
        (1..n_sites).map(|n| spacing_from_coupling(n, n_sites, d_min, decay_b)).collect::<Result<Vec<_>>>()?;
    let design = ArrayDesign::from_spacings(d_min, decay, spacings)?;

    let c_max = decay.coupling(d_min)?;
    let target = pst_coupling_spectrum(n_sites, c0_from_c_max(n_sites, c_max))?;
    for (k, (&got, &want)) in design.couplings_with(&decay).iter().zip(target.couplings()).enumerate() {
        if (got - want).abs() > ROUND_TRIP_RTOL * want {
            return Err(PstError::InvalidDesign(format!("gap {} reproduces coupling {got} instead of {want}", k + 1)));
        }
    }
    Ok(design)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayDesignDoc {
    n_sites: usize,
    d_min_um: f64,
    decay_a_per_mm: f64,
    decay_b_per_um: f64,
    spacings_um: Vec<f64>,
    positions_um: Vec<f64>,
    schema_version: u32,
}

impl From<ArrayDesign> for ArrayDesignDoc {
    fn from(d: ArrayDesign) -> Self {
        Self {
            n_sites: d.n_sites,
            d_min_um: d.d_min_um,
            decay_a_per_mm: d.decay.a_per_mm,
            decay_b_per_um: d.decay.b_per_um,
            spacings_um: d.spacings_um,
            positions_um: d.positions_um,
            schema_version: ARRAY_DESIGN_SCHEMA_VERSION,
        }
    }
}

impl TryFrom<ArrayDesignDoc> for ArrayDesign {
    type Error = PstError;

    fn try_from(doc: ArrayDesignDoc) -> Result<Self> {
        if doc.schema_version != ARRAY_DESIGN_SCHEMA_VERSION {
            return Err(PstError::InvalidDesign(format!("unsupported schema_version {}", doc.schema_version)));
        }
        if doc.spacings_um.len() + 1 != doc.n_sites {
            return Err(PstError::InvalidDesign(format!(
                "n_sites = {} but {} spacings given",
                doc.n_sites,
                doc.spacings_um.len()
            )));
        }
        let decay = DecayLaw::new(doc.decay_a_per_mm, doc.decay_b_per_um)?;
        let design = ArrayDesign::from_spacings(doc.d_min_um, decay, doc.spacings_um)?;
        let consistent = doc.positions_um.len() == design.positions_um.len()
            && doc
                .positions_um
                .iter()
                .zip(&design.positions_um)
                .all(|(a, b)| (a - b).abs() <= LENGTH_TOL_UM * (1.0 + b.abs()));
        if !consistent {
            return Err(PstError::InvalidDesign("positions_um are not the cumulative sums of spacings_um".into()));
        }
        Ok(design)
    }
}
