//! The named experiments, built from the core modules. Each returns a
//! serializable report; writing files is left to the caller.

use pstlab::density::DensityMatrix;
use pstlab::dynamics::{
    build_design_hamiltonian, build_nn_hamiltonian, first_peak_max, propagation_profile, CouplingModel, Hamiltonian,
    LossModel, Mode, Polarization, PropagationProfile, SpectralPropagator,
};
use pstlab::lattice::{c0_from_c_max, design_array, z_pst, ArrayDesign, CouplingSpectrum, DecayLaw};
use pstlab::photonics::{
    apply_delay_decoherence, prepare_bell, wavepacket_overlap, Photon, TwoPhotonState, Wavepacket,
};
use pstlab::tomography::{
    bootstrap_std, compensation_unitary, concurrence, distribution_fidelity, fit_compensation, process_fidelity,
    reconstruct_process, reconstruct_state, simulate_counts, state_fidelity, tomography_settings, ChiMatrix,
    CompensationSetting, MeasurementRecord, MeasurementSetting, PolarizationBasis,
};
use pstlab::{PstError, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::device::Device;
use crate::output::{Metric, Quantity};

/// Independent, reproducible seed for one measurement stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

fn stream_id(experiment: u64, a: u64, b: u64, c: u64) -> u64 {
    ((experiment * 1_000 + a) * 1_000 + b) * 1_000 + c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Bootstrap standard deviation; 0 for exact probabilities.
    pub std: f64,
}

// ---------------------------------------------------------------- design

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub n_sites: usize,
    pub z_pst_mm: f64,
    pub c_max_per_mm: f64,
    pub c0_per_mm: f64,
    pub couplings_per_mm: Vec<f64>,
    pub spacings_um: Vec<f64>,
}

pub fn design(cfg: &ScenarioConfig) -> Result<(ArrayDesign, DesignReport)> {
    let d = &cfg.design;
    let design = design_array(d.n_sites, d.d_min_um, d.decay_a_per_mm, d.decay_b_per_um)?;
    let c_max = design.c_max();
    let report = DesignReport {
        n_sites: design.n_sites(),
        z_pst_mm: design.z_pst()?,
        c_max_per_mm: c_max,
        c0_per_mm: c0_from_c_max(design.n_sites(), c_max),
        couplings_per_mm: design.coupling_spectrum().couplings().to_vec(),
        spacings_um: design.spacings_um().to_vec(),
    };
    Ok((design, report))
}

impl DesignReport {
    pub fn summary(&self) -> Vec<Quantity> {
        vec![
            Quantity::new("z_pst", self.z_pst_mm, "mm"),
            Quantity::new("c_max", self.c_max_per_mm, "1/mm"),
            Quantity::new("c0", self.c0_per_mm, "1/mm"),
        ]
    }
}

// ------------------------------------------------------------- propagate

/// Pinned propagation set-ups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PropagationScenario {
    /// Every coupling equal to the largest transfer coupling.
    Fig2a,
    /// The designed transfer couplings.
    Fig2b,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub z_mm: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagateReport {
    pub scenario: String,
    pub model: CouplingModel,
    pub input_site: usize,
    pub output_site: usize,
    pub polarization: Polarization,
    pub z_max_mm: f64,
    pub steps: usize,
    pub loss_enabled: bool,
    pub couplings_per_mm: Vec<f64>,
    /// First local maximum of the transfer probability to the mirror site.
    pub first_peak: Peak,
    pub final_distribution: Vec<f64>,
    pub final_output_probability: f64,
}

/// Where the array geometry comes from.
pub enum ArraySource {
    Scenario(PropagationScenario),
    /// A design loaded from disk.
    Design(ArrayDesign),
    /// Designed from the config.
    Config,
}

pub fn propagate(cfg: &ScenarioConfig, source: ArraySource) -> Result<(PropagationProfile, PropagateReport)> {
    let d = &cfg.design;
    let law = DecayLaw::new(d.decay_a_per_mm, d.decay_b_per_um)?;
    let model = cfg.model.coupling;
    let biref = cfg.model.birefringence.as_ref();
    let (label, h): (String, Hamiltonian) = match source {
        ArraySource::Scenario(PropagationScenario::Fig2a) => {
            let h = match model {
                CouplingModel::NearestNeighbor => {
                    build_nn_hamiltonian(&CouplingSpectrum::uniform(d.n_sites, law.coupling(d.d_min_um)?)?, 2)?
                }
                CouplingModel::Full => {
                    build_design_hamiltonian(&ArrayDesign::uniform(d.n_sites, d.d_min_um, law)?, model, 2, biref)?
                }
            };
            ("fig2a".into(), h)
        }
        ArraySource::Scenario(PropagationScenario::Fig2b) | ArraySource::Config => {
            let design = design_array(d.n_sites, d.d_min_um, d.decay_a_per_mm, d.decay_b_per_um)?;
            let label = if matches!(source, ArraySource::Config) { "design" } else { "fig2b" };
            (label.into(), build_design_hamiltonian(&design, model, 2, biref)?)
        }
        ArraySource::Design(design) => ("design-file".into(), build_design_hamiltonian(&design, model, 2, biref)?),
    };
    let n = h.n_sites();
    let p = &cfg.propagation;
    if p.input_site == 0 || p.input_site > n {
        return Err(PstError::InvalidArgument(format!("input site {} out of range 1..={n}", p.input_site)));
    }
    let c_max = h.c_max();
    let z_max = match p.z_max_mm {
        Some(z) => z,
        None => z_pst(n, c_max)?,
    };
    let loss = if cfg.model.loss_enabled { Some(LossModel::from_db_per_cm(cfg.model.loss_db_per_cm)?) } else { None };
    let profile = propagation_profile(&h, z_max, p.steps, Mode::new(p.input_site, p.polarization), loss)?;
    let output_site = n + 1 - p.input_site;
    let (z_peak, p_peak) = first_peak_max(&h, p.input_site, output_site)?;
    let final_distribution = profile.intensities.last().cloned().unwrap_or_default();
    let couplings = (1..n).map(|k| h.block(p.polarization)[(k - 1, k)]).collect();
    let report = PropagateReport {
        scenario: label,
        model,
        input_site: p.input_site,
        output_site,
        polarization: p.polarization,
        z_max_mm: z_max,
        steps: p.steps,
        loss_enabled: loss.is_some(),
        couplings_per_mm: couplings,
        first_peak: Peak { z_mm: z_peak, probability: p_peak },
        final_output_probability: final_distribution[output_site - 1],
        final_distribution,
    };
    Ok((profile, report))
}

impl PropagateReport {
    pub fn metrics(&self) -> Vec<Metric> {
        vec![
            Metric::exact("first_peak_probability", self.first_peak.probability),
            Metric::exact("final_output_probability", self.final_output_probability),
        ]
    }

    pub fn summary(&self) -> Vec<Quantity> {
        vec![Quantity::new("first_peak_z", self.first_peak.z_mm, "mm"), Quantity::new("z_max", self.z_max_mm, "mm")]
    }
}

// -------------------------------------------------------- transfer table

#[derive(Debug, Clone, Serialize)]
pub struct TransferRow {
    pub input: usize,
    pub designed_output: usize,
    pub distribution_h: Vec<f64>,
    pub distribution_v: Vec<f64>,
    pub distribution_fidelity: f64,
    pub designed_output_probability_h: f64,
    pub designed_output_probability_v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferTable {
    pub model: CouplingModel,
    pub birefringence: bool,
    pub length_mm: f64,
    pub transmission: f64,
    pub rows: Vec<TransferRow>,
}

pub fn transfer_table(cfg: &ScenarioConfig) -> Result<TransferTable> {
    let dev = Device::from_config(cfg)?;
    let prop = SpectralPropagator::new(&dev.hamiltonian);
    let n = dev.n_sites();
    let rows = cfg
        .inputs
        .iter()
        .map(|&input| {
            let dist = |pol| -> Vec<f64> {
                (1..=n).map(|to| prop.amplitude(pol, input, to, dev.length_mm).norm_sqr()).collect()
            };
            let (h, v) = (dist(Polarization::H), dist(Polarization::V));
            let out = dev.mirror(input);
            Ok(TransferRow {
                input,
                designed_output: out,
                distribution_fidelity: distribution_fidelity(&h, &v)?,
                designed_output_probability_h: h[out - 1],
                designed_output_probability_v: v[out - 1],
                distribution_h: h,
                distribution_v: v,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransferTable {
        model: cfg.model.coupling,
        birefringence: cfg.model.birefringence.is_some(),
        length_mm: dev.length_mm,
        transmission: dev.transmission(),
        rows,
    })
}

impl TransferTable {
    pub fn metrics(&self) -> Vec<Metric> {
        let mut m = vec![Metric::exact("transmission", self.transmission)];
        for r in &self.rows {
            m.push(Metric::exact(format!("input_{}.distribution_fidelity", r.input), r.distribution_fidelity));
            m.push(Metric::exact(
                format!("input_{}.designed_output_probability_h", r.input),
                r.designed_output_probability_h,
            ));
            m.push(Metric::exact(
                format!("input_{}.designed_output_probability_v", r.input),
                r.designed_output_probability_v,
            ));
        }
        m
    }
}

// ------------------------------------------------------------ tomography

/// Simulated tomography with the configured shot budget.
struct Tomographer {
    settings1: Vec<MeasurementSetting>,
    settings2: Vec<MeasurementSetting>,
    shots: u64,
    seed: u64,
    dark_rate: f64,
    resamples: usize,
}

impl Tomographer {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let m = &cfg.measurement;
        Ok(Self {
            settings1: tomography_settings(1)?,
            settings2: tomography_settings(2)?,
            shots: m.shots,
            seed: m.seed,
            dark_rate: m.dark_rate,
            resamples: m.bootstrap_resamples,
        })
    }

    fn measure(&self, rho: &DensityMatrix, stream: u64) -> Result<(Vec<MeasurementRecord>, DensityMatrix)> {
        let settings = if rho.dim() == 2 { &self.settings1 } else { &self.settings2 };
        let records = simulate_counts(rho, settings, self.shots, derive_seed(self.seed, stream), self.dark_rate)?;
        let est = reconstruct_state(&records, rho.dim())?;
        Ok((records, est))
    }

    fn bootstrap(
        &self,
        records: &[MeasurementRecord],
        stream: u64,
        statistic: impl Fn(&[MeasurementRecord]) -> Result<f64>,
    ) -> Result<f64> {
        bootstrap_std(records, self.resamples, derive_seed(self.seed, stream), statistic)
    }
}

/// Measured records for one transfer, kept for CSV export.
#[derive(Debug, Clone)]
pub struct RecordSet {
    pub name: String,
    pub records: Vec<MeasurementRecord>,
}

// ------------------------------------------------------------------- qpt

#[derive(Debug, Clone, Serialize)]
pub struct QptRow {
    pub input: usize,
    pub output_site: usize,
    /// Mean post-selection probability over the four probe states.
    pub postselection_probability: f64,
    pub chi: ChiMatrix,
    pub fidelity_uncompensated: Estimate,
    pub compensation: CompensationSetting,
    pub chi_compensated: ChiMatrix,
    pub fidelity_compensated: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct QptReport {
    pub shots: u64,
    pub rows: Vec<QptRow>,
}

const QPT: u64 = 1;
const BELL: u64 = 2;
const DECOHERE: u64 = 3;

fn chi_from_records(inputs: &[DensityMatrix], all: &[MeasurementRecord]) -> Result<ChiMatrix> {
    let outputs = all.chunks(4).map(|c| reconstruct_state(c, 2)).collect::<Result<Vec<_>>>()?;
    reconstruct_process(inputs, &outputs)
}

pub fn qpt(cfg: &ScenarioConfig) -> Result<(QptReport, Vec<RecordSet>)> {
    let dev = Device::from_config(cfg)?;
    let tomo = Tomographer::new(cfg)?;
    let probes: Vec<DensityMatrix> =
        PolarizationBasis::ALL.iter().map(|b| DensityMatrix::from_pure(&b.ket())).collect::<Result<_>>()?;
    let identity = ChiMatrix::identity();
    let mut rows = Vec::new();
    let mut sets = Vec::new();
    for (i, &input) in cfg.inputs.iter().enumerate() {
        let mut all = Vec::new();
        let mut p_sum = 0.0;
        for (k, b) in PolarizationBasis::ALL.iter().enumerate() {
            let photon = TwoPhotonState::pure(1, 1, b.ket())?;
            let (rho, p) = dev.transfer(&photon, input)?;
            p_sum += p;
            let (records, _) = tomo.measure(&rho, stream_id(QPT, i as u64, k as u64, 0))?;
            sets.push(RecordSet {
                name: format!("qpt_input{input}_{}_counts.csv", b.label()),
                records: records.clone(),
            });
            all.extend(records);
        }
        let chi = chi_from_records(&probes, &all)?;
        let f_unc = process_fidelity(&identity, &chi);
        let (setting, f_comp) = fit_compensation(&chi);
        let comp = compensation_unitary(setting);
        let chi_comp = chi.after_unitary(&comp);
        // the compensator stays at its fitted setting while the counts are resampled
        let std_unc = tomo.bootstrap(&all, stream_id(QPT, i as u64, 9, 1), |r| {
            Ok(process_fidelity(&identity, &chi_from_records(&probes, r)?))
        })?;
        let std_comp = tomo.bootstrap(&all, stream_id(QPT, i as u64, 9, 2), |r| {
            Ok(process_fidelity(&identity, &chi_from_records(&probes, r)?.after_unitary(&comp)))
        })?;
        rows.push(QptRow {
            input,
            output_site: dev.mirror(input),
            postselection_probability: p_sum / 4.0,
            chi,
            fidelity_uncompensated: Estimate { value: f_unc, std: std_unc },
            compensation: setting,
            chi_compensated: chi_comp,
            fidelity_compensated: Estimate { value: f_comp, std: std_comp },
        });
    }
    Ok((QptReport { shots: tomo.shots, rows }, sets))
}

impl QptReport {
    pub fn metrics(&self) -> Vec<Metric> {
        let mut m = Vec::new();
        for r in &self.rows {
            let f = r.fidelity_uncompensated;
            m.push(Metric::estimated(format!("input_{}.process_fidelity_uncompensated", r.input), f.value, f.std));
            let f = r.fidelity_compensated;
            m.push(Metric::estimated(format!("input_{}.process_fidelity_compensated", r.input), f.value, f.std));
        }
        m
    }
}

// ------------------------------------------------------- bell / decohere

#[derive(Debug, Clone, Serialize)]
pub struct PairTransfer {
    pub input: usize,
    pub output_site: usize,
    pub postselection_probability: f64,
    /// Reconstructed state after the array.
    pub measured: DensityMatrix,
    /// Reconstructed state after a straight reference waveguide.
    pub reference: DensityMatrix,
    /// Noise-free model output.
    pub predicted: DensityMatrix,
    pub fidelity: Estimate,
    pub similarity: Estimate,
    pub purity: f64,
    pub concurrence: f64,
}

fn pair_transfer(
    dev: &Device,
    tomo: &Tomographer,
    source: &TwoPhotonState,
    input: usize,
    stream: impl Fn(u64) -> u64,
) -> Result<(PairTransfer, Vec<MeasurementRecord>, Vec<MeasurementRecord>)> {
    let (predicted, p) = dev.transfer(source, input)?;
    let reference_exact = DensityMatrix::new(source.density())?;
    let (out_rec, measured) = tomo.measure(&predicted, stream(0))?;
    let (ref_rec, reference) = tomo.measure(&reference_exact, stream(1))?;

    let n_out = out_rec.len();
    let both: Vec<MeasurementRecord> = out_rec.iter().chain(&ref_rec).cloned().collect();
    let fid_std = tomo.bootstrap(&both, stream(2), |r| {
        state_fidelity(&reconstruct_state(&r[..n_out], 4)?, &reconstruct_state(&r[n_out..], 4)?)
    })?;
    let sim_std = tomo.bootstrap(&out_rec, stream(3), |r| state_fidelity(&reconstruct_state(r, 4)?, &predicted))?;

    let row = PairTransfer {
        input,
        output_site: dev.mirror(input),
        postselection_probability: p,
        fidelity: Estimate { value: state_fidelity(&measured, &reference)?, std: fid_std },
        similarity: Estimate { value: state_fidelity(&measured, &predicted)?, std: sim_std },
        purity: measured.purity().clamp(0.0, 1.0),
        concurrence: concurrence(&measured)?,
        measured,
        reference,
        predicted,
    };
    Ok((row, out_rec, ref_rec))
}

fn source_state(cfg: &ScenarioConfig) -> TwoPhotonState {
    prepare_bell(cfg.source.residual_phase_deg.to_radians(), cfg.source.hwp_theta_deg.to_radians())
}

#[derive(Debug, Clone, Serialize)]
pub struct BellReport {
    pub shots: u64,
    pub rows: Vec<PairTransfer>,
}

pub fn bell(cfg: &ScenarioConfig) -> Result<(BellReport, Vec<RecordSet>)> {
    let dev = Device::from_config(cfg)?;
    let tomo = Tomographer::new(cfg)?;
    let source = source_state(cfg);
    let mut rows = Vec::new();
    let mut sets = Vec::new();
    for (i, &input) in cfg.inputs.iter().enumerate() {
        let (row, out_rec, ref_rec) = pair_transfer(&dev, &tomo, &source, input, |k| stream_id(BELL, i as u64, 0, k))?;
        sets.push(RecordSet { name: format!("bell_input{input}_counts.csv"), records: out_rec });
        sets.push(RecordSet { name: format!("bell_input{input}_reference_counts.csv"), records: ref_rec });
        rows.push(row);
    }
    Ok((BellReport { shots: tomo.shots, rows }, sets))
}

fn pair_metrics(prefix: &str, r: &PairTransfer) -> Vec<Metric> {
    vec![
        Metric::estimated(format!("{prefix}.fidelity"), r.fidelity.value, r.fidelity.std),
        Metric::estimated(format!("{prefix}.similarity"), r.similarity.value, r.similarity.std),
        Metric::exact(format!("{prefix}.purity"), r.purity),
        Metric::exact(format!("{prefix}.concurrence"), r.concurrence),
        Metric::exact(format!("{prefix}.postselection_probability"), r.postselection_probability),
    ]
}

impl BellReport {
    pub fn metrics(&self) -> Vec<Metric> {
        self.rows.iter().flat_map(|r| pair_metrics(&format!("input_{}", r.input), r)).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DelayPoint {
    pub delay_um: f64,
    pub coherence_factor: f64,
    pub transfers: Vec<PairTransfer>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecohereReport {
    pub coherence_length_um: f64,
    pub shots: u64,
    pub points: Vec<DelayPoint>,
}

pub fn decohere(cfg: &ScenarioConfig) -> Result<(DecohereReport, Vec<RecordSet>)> {
    let dev = Device::from_config(cfg)?;
    let tomo = Tomographer::new(cfg)?;
    let lc = cfg.source.coherence_length_um;
    let mut points = Vec::new();
    let mut sets = Vec::new();
    for (t, &tau) in cfg.source.delays_um.iter().enumerate() {
        let w = Wavepacket::new(lc, tau)?;
        let source = apply_delay_decoherence(&source_state(cfg), &w, Photon::Array)?;
        let mut transfers = Vec::new();
        for (i, &input) in cfg.inputs.iter().enumerate() {
            let (row, out_rec, _) =
                pair_transfer(&dev, &tomo, &source, input, |k| stream_id(DECOHERE, t as u64, i as u64, k))?;
            sets.push(RecordSet { name: format!("decohere_delay{t}_input{input}_counts.csv"), records: out_rec });
            transfers.push(row);
        }
        points.push(DelayPoint { delay_um: tau, coherence_factor: wavepacket_overlap(&w), transfers });
    }
    Ok((DecohereReport { coherence_length_um: lc, shots: tomo.shots, points }, sets))
}

impl DecohereReport {
    pub fn metrics(&self) -> Vec<Metric> {
        let mut m = Vec::new();
        for (t, p) in self.points.iter().enumerate() {
            m.push(Metric::exact(format!("delay_{t}.coherence_factor"), p.coherence_factor));
            for r in &p.transfers {
                m.extend(pair_metrics(&format!("delay_{t}.input_{}", r.input), r));
            }
        }
        m
    }
}
