//! Design, simulation and characterisation of perfect-state-transfer
//! waveguide arrays.
//!
//! * [`lattice`]: transfer coupling spectra and the waveguide spacings that
//!   realise them.
//! * [`dynamics`]: tight-binding Hamiltonians over (site, polarization) modes
//!   and their propagators.
//! * [`photonics`]: polarization optics, entangled-pair sources, delay
//!   decoherence and post-selection on an output waveguide.
//! * [`tomography`]: simulated projective measurements, state and process
//!   reconstruction, compensation fitting and fidelity measures.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod photonics;
pub mod tomography;

pub use density::DensityMatrix;
pub use error::{PstError, Result};
