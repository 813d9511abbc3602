//! Simulated polarization tomography and the figures of merit built on it.

pub mod bootstrap;
pub mod compensation;
pub mod fidelity;
pub mod measurement;
pub mod reconstruct;

pub use bootstrap::bootstrap_std;
pub use compensation::{compensation_unitary, fit_compensation, CompensationSetting};
pub use fidelity::{concurrence, distribution_fidelity, process_fidelity, purity, similarity, state_fidelity};
pub use measurement::{
    projector_set_single, records_from_csv, records_to_csv, simulate_counts, tomography_settings, MeasurementRecord,
    MeasurementSetting, Outcome, PolarizationBasis,
};
pub use reconstruct::{reconstruct_process, reconstruct_state, ChiMatrix};
