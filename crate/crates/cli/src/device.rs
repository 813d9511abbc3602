//! The simulated chip: a designed array under a coupling model, cut to a
//! length, plus the optional polarization errors seen after it.

use pstlab::density::DensityMatrix;
use pstlab::dynamics::{build_design_hamiltonian, Hamiltonian, LossModel, SpectralPropagator};
use pstlab::lattice::{design_array, ArrayDesign};
use pstlab::linalg::CMatrix;
use pstlab::photonics::{evolve_two_photon, jones_matrix, postselect_site, JonesElement, Photon, TwoPhotonState};
use pstlab::Result;

use crate::config::ScenarioConfig;

pub struct Device {
    pub design: ArrayDesign,
    pub hamiltonian: Hamiltonian,
    pub length_mm: f64,
    pub loss: Option<LossModel>,
    phase_rad: f64,
    dephasing: f64,
    unitary: CMatrix,
}

impl Device {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let d = &cfg.design;
        let design = design_array(d.n_sites, d.d_min_um, d.decay_a_per_mm, d.decay_b_per_um)?;
        let m = &cfg.model;
        let hamiltonian = build_design_hamiltonian(&design, m.coupling, 2, m.birefringence.as_ref())?;
        let length_mm = match m.length_mm {
            Some(l) => l,
            None => design.z_pst()?,
        };
        let loss = if m.loss_enabled { Some(LossModel::from_db_per_cm(m.loss_db_per_cm)?) } else { None };
        let unitary = SpectralPropagator::new(&hamiltonian).unitary(length_mm);
        Ok(Self {
            design,
            hamiltonian,
            length_mm,
            loss,
            phase_rad: m.device_phase_deg.to_radians(),
            dephasing: m.device_dephasing,
            unitary,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.design.n_sites()
    }

    /// Output waveguide a transfer from `input` is designed to reach.
    pub fn mirror(&self, input: usize) -> usize {
        self.n_sites() + 1 - input
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Fraction of light surviving propagation loss.
    pub fn transmission(&self) -> f64 {
        self.loss.map_or(1.0, |l| l.power_factor(self.length_mm))
    }

    /// Sends photon 1 of a single-site state through the array from
    /// `input`, post-selects it at the mirror waveguide and applies the
    /// device's polarization errors. Returns the polarization state and the
    /// lossless detection probability.
    pub fn transfer(&self, state: &TwoPhotonState, input: usize) -> Result<(DensityMatrix, f64)> {
        let injected = state.inject(input, self.n_sites())?;
        let out = evolve_two_photon(&injected, &self.unitary)?;
        let (rho, p) = postselect_site(&out, self.mirror(input))?;
        Ok((self.polarization_errors(&rho)?, p))
    }

    fn polarization_errors(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.phase_rad == 0.0 && self.dephasing == 1.0 {
            return Ok(rho.clone());
        }
        let s = TwoPhotonState::from_polarization_density(rho)?
            .apply_polarization(&jones_matrix(JonesElement::Phase(self.phase_rad)), Photon::Array)?
            .dephase(self.dephasing, Photon::Array)?;
        DensityMatrix::new(s.density())
    }
}
