use pstlab::dynamics::{BirefringenceOverride, CouplingModel};
use pstlab::lattice::DecayLaw;
use pstlab_cli::config::ScenarioConfig;
use pstlab_cli::experiments::{bell, decohere, qpt, transfer_table};

fn birefringent(cfg: &mut ScenarioConfig) {
    cfg.model.birefringence =
        Some(BirefringenceOverride { h: DecayLaw::new(3.6, 0.19).unwrap(), v: DecayLaw::new(3.3, 0.185).unwrap() });
}

#[test]
fn injected_phase_is_compensated() {
    let mut cfg = ScenarioConfig::default();
    cfg.model.device_phase_deg = 30.0;
    let (report, _) = qpt(&cfg).unwrap();
    for r in &report.rows {
        assert!(r.fidelity_uncompensated.value < 0.95, "{}", r.fidelity_uncompensated.value);
        assert!(r.fidelity_compensated.value >= r.fidelity_uncompensated.value);
        assert!((r.fidelity_compensated.value - 1.0).abs() < 1e-6, "{}", r.fidelity_compensated.value);
        assert!((r.compensation.phase_deg + 30.0).abs() < 0.1, "{:?}", r.compensation);
    }
}

#[test]
fn injected_dephasing_cannot_be_compensated() {
    let mut cfg = ScenarioConfig::default();
    cfg.model.device_dephasing = 0.9;
    let (report, _) = qpt(&cfg).unwrap();
    for r in &report.rows {
        assert!(r.fidelity_compensated.value < 1.0 - 1e-3, "{}", r.fidelity_compensated.value);
        assert!((r.fidelity_compensated.value - 0.95).abs() < 1e-6);
    }
}

#[test]
fn noisy_qpt_reports_bootstrap_errors() {
    let mut cfg = ScenarioConfig::default();
    cfg.measurement.shots = 5000;
    cfg.measurement.seed = 4;
    let (report, sets) = qpt(&cfg).unwrap();
    assert_eq!(sets.len(), 12);
    for r in &report.rows {
        assert!(r.fidelity_compensated.std > 0.0 && r.fidelity_compensated.std < 0.05);
        assert!(r.fidelity_compensated.value > 0.95);
    }
}

#[test]
fn birefringent_full_coupling_degrades_bell_fidelity() {
    let mut cfg = ScenarioConfig::default();
    cfg.model.coupling = CouplingModel::Full;
    birefringent(&mut cfg);
    let (report, _) = bell(&cfg).unwrap();
    for r in &report.rows {
        assert!(r.fidelity.value < 1.0 - 1e-6, "input {}: {}", r.input, r.fidelity.value);
        assert!((r.similarity.value - 1.0).abs() < 1e-6);
        assert_eq!(r.fidelity.std, 0.0);
    }
}

#[test]
fn decoherence_lowers_purity_but_not_similarity() {
    let cfg = ScenarioConfig::default();
    let (report, sets) = decohere(&cfg).unwrap();
    assert_eq!(sets.len(), 12);
    let purities: Vec<f64> = report.points.iter().map(|p| p.transfers[0].purity).collect();
    assert!(purities[0] >= 0.999);
    assert!(purities.windows(2).all(|w| w[1] < w[0]), "{purities:?}");
    for p in &report.points {
        assert!((p.coherence_factor.powi(2) + 1.0) / 2.0 - p.transfers[0].purity < 1e-9);
        for t in &p.transfers {
            assert!((t.similarity.value - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn transfer_table_orders_inputs_by_leakage() {
    let cfg = ScenarioConfig::default();
    let ideal = transfer_table(&cfg).unwrap();
    for r in &ideal.rows {
        assert!((r.distribution_fidelity - 1.0).abs() < 1e-12);
        assert!((r.designed_output_probability_h - 1.0).abs() < 1e-9);
    }

    let mut full = cfg.clone();
    full.model.coupling = CouplingModel::Full;
    let t = transfer_table(&full).unwrap();
    let p = |input: usize| t.rows.iter().find(|r| r.input == input).unwrap().designed_output_probability_h;
    assert!(p(6) < p(1), "{} vs {}", p(6), p(1));
    for r in &t.rows {
        assert!((r.distribution_fidelity - 1.0).abs() < 1e-12);
    }

    birefringent(&mut full);
    let b = transfer_table(&full).unwrap();
    assert!(b.rows.iter().all(|r| r.distribution_fidelity < 1.0 - 1e-6));
}

#[test]
fn loss_scales_transmission_only() {
    let mut cfg = ScenarioConfig::default();
    cfg.model.loss_enabled = true;
    let t = transfer_table(&cfg).unwrap();
    let expected = 10f64.powf(-0.8 * t.length_mm / 100.0);
    assert!((t.transmission - expected).abs() < 1e-9, "{} vs {expected}", t.transmission);
    assert!(t.rows.iter().all(|r| (r.distribution_fidelity - 1.0).abs() < 1e-12));
}
