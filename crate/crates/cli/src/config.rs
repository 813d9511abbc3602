//! Scenario configuration. Every physical default lives here.

use std::path::{Path, PathBuf};

use pstlab::dynamics::{BirefringenceOverride, CouplingModel, Polarization};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub design: DesignParams,
    pub model: ModelParams,
    pub source: SourceParams,
    pub measurement: MeasurementParams,
    pub propagation: PropagationParams,
    /// Input waveguides for the transfer experiments.
    pub inputs: Vec<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignParams {
    pub n_sites: usize,
    pub d_min_um: f64,
    pub decay_a_per_mm: f64,
    pub decay_b_per_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub coupling: CouplingModel,
    pub birefringence: Option<BirefringenceOverride>,
    pub loss_enabled: bool,
    pub loss_db_per_cm: f64,
    /// Device length; the design transfer length when absent.
    pub length_mm: Option<f64>,
    /// Extra relative V phase picked up by photon 1 after the array.
    pub device_phase_deg: f64,
    /// Coherence factor applied to photon 1's polarization after the array
    /// (1 = no dephasing).
    pub device_dephasing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceParams {
    pub residual_phase_deg: f64,
    pub hwp_theta_deg: f64,
    pub coherence_length_um: f64,
    pub delays_um: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementParams {
    /// Pairs per tomography setting; 0 gives exact probabilities.
    pub shots: u64,
    pub seed: u64,
    pub dark_rate: f64,
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationParams {
    pub input_site: usize,
    pub polarization: Polarization,
    /// Profile length; the design transfer length when absent.
    pub z_max_mm: Option<f64>,
    pub steps: usize,
    pub heatmap: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: "custom".into(),
            design: DesignParams::default(),
            model: ModelParams::default(),
            source: SourceParams::default(),
            measurement: MeasurementParams::default(),
            propagation: PropagationParams::default(),
            inputs: vec![1, 6, 10],
            output_dir: None,
        }
    }
}

impl Default for DesignParams {
    fn default() -> Self {
        Self { n_sites: 11, d_min_um: 12.0, decay_a_per_mm: 3.6, decay_b_per_um: 0.19 }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            coupling: CouplingModel::NearestNeighbor,
            birefringence: None,
            loss_enabled: false,
            loss_db_per_cm: 0.8,
            length_mm: None,
            device_phase_deg: 0.0,
            device_dephasing: 1.0,
        }
    }
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            residual_phase_deg: 0.0,
            hwp_theta_deg: 0.0,
            coherence_length_um: 90.0,
            delays_um: vec![0.0, 50.0, 100.0, 150.0],
        }
    }
}

impl Default for MeasurementParams {
    fn default() -> Self {
        Self { shots: 0, seed: 0, dark_rate: 0.0, bootstrap_resamples: 100 }
    }
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self { input_site: 1, polarization: Polarization::H, z_max_mm: None, steps: 401, heatmap: false }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks only the `design` section.
    pub fn validate_design(&self) -> CliResult<()> {
        let d = &self.design;
        if d.n_sites < 3 || d.n_sites.is_multiple_of(2) {
            return Err(usage(format!("design.n_sites = {}: odd N required (N >= 3)", d.n_sites)));
        }
        for (name, v) in [
            ("design.d_min_um", d.d_min_um),
            ("design.decay_a_per_mm", d.decay_a_per_mm),
            ("design.decay_b_per_um", d.decay_b_per_um),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Range checks that the type system does not express.
    pub fn validate(&self) -> CliResult<()> {
        self.validate_design()?;
        let d = &self.design;
        let lc = self.source.coherence_length_um;
        if !(lc > 0.0 && lc.is_finite()) {
            return Err(usage(format!("source.coherence_length_um must be positive, got {lc}")));
        }
        let m = &self.model;
        if !(m.loss_db_per_cm >= 0.0 && m.loss_db_per_cm.is_finite()) {
            return Err(usage(format!("model.loss_db_per_cm must be non-negative, got {}", m.loss_db_per_cm)));
        }
        if let Some(l) = m.length_mm {
            if !(l > 0.0 && l.is_finite()) {
                return Err(usage(format!("model.length_mm must be positive, got {l}")));
            }
        }
        if !(0.0..=1.0).contains(&m.device_dephasing) {
            return Err(usage(format!("model.device_dephasing must lie in [0, 1], got {}", m.device_dephasing)));
        }
        if !m.device_phase_deg.is_finite()
            || !self.source.residual_phase_deg.is_finite()
            || !self.source.hwp_theta_deg.is_finite()
        {
            return Err(usage("phases must be finite"));
        }
        if self.source.delays_um.iter().any(|t| !t.is_finite()) {
            return Err(usage("source.delays_um must be finite"));
        }
        if !(self.measurement.dark_rate >= 0.0 && self.measurement.dark_rate.is_finite()) {
            return Err(usage(format!(
                "measurement.dark_rate must be non-negative, got {}",
                self.measurement.dark_rate
            )));
        }
        if self.measurement.bootstrap_resamples < pstlab::tomography::bootstrap::MIN_RESAMPLES {
            return Err(usage(format!(
                "measurement.bootstrap_resamples must be at least {}",
                pstlab::tomography::bootstrap::MIN_RESAMPLES
            )));
        }
        if self.inputs.is_empty() {
            return Err(usage("inputs must not be empty"));
        }
        for &s in self.inputs.iter().chain([&self.propagation.input_site]) {
            if s == 0 || s > d.n_sites {
                return Err(usage(format!("input site {s} out of range 1..={}", d.n_sites)));
            }
        }
        let p = &self.propagation;
        if let Some(z) = p.z_max_mm {
            if !(z > 0.0 && z.is_finite()) {
                return Err(usage(format!("propagation.z_max_mm must be positive, got {z}")));
            }
        }
        if p.steps < 2 {
            return Err(usage(format!("propagation.steps must be at least 2, got {}", p.steps)));
        }
        Ok(())
    }
}
