//! Projective polarization measurements and their simulated counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::density::DensityMatrix;
use crate::error::{PstError, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::photonics::kets;

/// Single-qubit measurement (and QPT input) states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolarizationBasis {
    H,
    V,
    D,
    R,
}

impl PolarizationBasis {
    pub const ALL: [PolarizationBasis; 4] = [Self::H, Self::V, Self::D, Self::R];

    pub fn ket(self) -> CVector {
        match self {
            Self::H => kets::h(),
            Self::V => kets::v(),
            Self::D => kets::d(),
            Self::R => kets::r(),
        }
    }

    pub fn projector(self) -> CMatrix {
        let k = self.ket();
        linalg::outer(&k, &k)
    }

    pub fn label(self) -> char {
        match self {
            Self::H => 'H',
            Self::V => 'V',
            Self::D => 'D',
            Self::R => 'R',
        }
    }

    pub fn from_label(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label() == c)
    }
}

/// The four rank-1 projectors `P_H, P_V, P_D, P_R`.
pub fn projector_set_single() -> [CMatrix; 4] {
    PolarizationBasis::ALL.map(PolarizationBasis::projector)
}

/// A labelled projector. Labels concatenate one letter per qubit, photon 1
/// first (`"HV"` projects photon 1 on H and photon 2 on V).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    pub label: String,
    pub projector: CMatrix,
}

impl MeasurementSetting {
    pub fn from_label(label: &str) -> Result<Self> {
        let mut projector: Option<CMatrix> = None;
        for ch in label.chars() {
            let b = PolarizationBasis::from_label(ch)
                .ok_or_else(|| PstError::InvalidRecord(format!("unknown setting label {label:?}")))?;
            let p = b.projector();
            projector = Some(match projector {
                None => p,
                Some(acc) => linalg::kron(&acc, &p),
            });
        }
        let projector = projector.ok_or_else(|| PstError::InvalidRecord("empty setting label".into()))?;
        if projector.nrows() > 4 {
            return Err(PstError::InvalidRecord(format!("setting {label:?} has more than two qubits")));
        }
        Ok(Self { label: label.to_string(), projector })
    }
}

/// Full tomographic set `{H,V,D,R}^⊗n` for one or two qubits, in
/// lexicographic `H, V, D, R` order.
pub fn tomography_settings(n_qubits: usize) -> Result<Vec<MeasurementSetting>> {
    let labels: Vec<String> = match n_qubits {
        1 => PolarizationBasis::ALL.iter().map(|b| b.label().to_string()).collect(),
        2 => PolarizationBasis::ALL
            .iter()
            .flat_map(|a| PolarizationBasis::ALL.iter().map(move |b| format!("{}{}", a.label(), b.label())))
            .collect(),
        _ => return Err(PstError::InvalidArgument(format!("tomography supports 1 or 2 qubits, not {n_qubits}"))),
    };
    labels.iter().map(|l| MeasurementSetting::from_label(l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Counts(u64),
    Probability(f64),
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Counts(n) => n as f64,
            Outcome::Probability(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub setting: String,
    pub outcome: Outcome,
}

/// Born-rule probabilities (`shots == 0`) or Poisson counts with mean
/// `shots·(Tr(Pρ) + dark_rate)` for each setting, in order.
pub fn simulate_counts(
    state: &DensityMatrix,
    settings: &[MeasurementSetting],
    shots: u64,
    seed: u64,
    dark_rate: f64,
) -> Result<Vec<MeasurementRecord>> {
    if !(dark_rate >= 0.0 && dark_rate.is_finite()) {
        return Err(PstError::InvalidArgument(format!("dark_rate must be non-negative, got {dark_rate}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    settings
        .iter()
        .map(|s| {
            if s.projector.shape() != state.matrix().shape() {
                return Err(PstError::InvalidArgument(format!(
                    "setting {} does not match a {}-dimensional state",
                    s.label,
                    state.dim()
                )));
            }
            let p = born_probability(state, &s.projector);
            let outcome = if shots == 0 {
                Outcome::Probability(p)
            } else {
                Outcome::Counts(poisson(&mut rng, shots as f64 * (p + dark_rate)))
            };
            Ok(MeasurementRecord { setting: s.label.clone(), outcome })
        })
        .collect()
}

/// `Tr(Pρ)` clamped to `[0, 1]`.
pub fn born_probability(state: &DensityMatrix, projector: &CMatrix) -> f64 {
    let p = linalg::trace(&(projector * state.matrix())).re;
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        log::warn!("Born probability {p} outside [0, 1]; clamping");
    }
    p.clamp(0.0, 1.0)
}

pub(crate) fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

/// `setting,counts` CSV. Exact probabilities are written in scientific
/// notation so they never parse as counts.
pub fn records_to_csv(records: &[MeasurementRecord]) -> String {
    let mut out = String::from("setting,counts\n");
    for r in records {
        match r.outcome {
            Outcome::Counts(n) => out.push_str(&format!("{},{n}\n", r.setting)),
            Outcome::Probability(p) => out.push_str(&format!("{},{p:.16e}\n", r.setting)),
        }
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<MeasurementRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "setting,counts" => {}
        other => return Err(PstError::InvalidRecord(format!("bad header {other:?}"))),
    }
    lines
        .map(|line| {
            let (setting, value) =
                line.split_once(',').ok_or_else(|| PstError::InvalidRecord(format!("malformed row {line:?}")))?;
            let value = value.trim();
            let outcome = if value.chars().all(|c| c.is_ascii_digit()) {
                Outcome::Counts(value.parse().map_err(|_| PstError::InvalidRecord(format!("bad count {value:?}")))?)
            } else {
                let p: f64 = value.parse().map_err(|_| PstError::InvalidRecord(format!("bad value {value:?}")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(PstError::InvalidRecord(format!("probability {p} outside [0, 1]")));
                }
                Outcome::Probability(p)
            };
            Ok(MeasurementRecord { setting: setting.trim().to_string(), outcome })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::photonics::prepare_bell;

    fn bell() -> DensityMatrix {
        DensityMatrix::from_pure(prepare_bell(0.0, 0.0).amplitudes().unwrap()).unwrap()
    }

    #[test]
    fn projector_expectations() {
        let [ph, _, pd, pr] = projector_set_single();
        let h = kets::h();
        let v = kets::v();
        assert!(((h.adjoint() * &ph * &h)[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(((v.adjoint() * &pd * &v)[0] - c(0.5, 0.0)).norm() < 1e-15);
        let r = kets::r();
        assert!((&pr * &r - &r).norm() < 1e-15);
    }

    #[test]
    fn born_probability_of_bell() {
        let settings = tomography_settings(2).unwrap();
        assert_eq!(settings.len(), 16);
        let rec = simulate_counts(&bell(), &settings, 0, 0, 0.0).unwrap();
        let hv = rec.iter().find(|r| r.setting == "HV").unwrap();
        match hv.outcome {
            Outcome::Probability(p) => assert!((p - 0.5).abs() < 1e-15, "{p}"),
            other => panic!("expected an exact probability, got {other:?}"),
        }
    }

    #[test]
    fn seeded_counts_are_reproducible() {
        let settings = tomography_settings(2).unwrap();
        let a = simulate_counts(&bell(), &settings, 10_000, 42, 0.001).unwrap();
        let b = simulate_counts(&bell(), &settings, 10_000, 42, 0.001).unwrap();
        assert_eq!(a, b);
        let c = simulate_counts(&bell(), &settings, 10_000, 43, 0.001).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn counts_average_to_born_value() {
        let settings = tomography_settings(2).unwrap();
        let shots = 1000u64;
        let reps = 100;
        let hv_idx = settings.iter().position(|s| s.label == "HV").unwrap();
        let mean: f64 = (0..reps)
            .map(|seed| simulate_counts(&bell(), &settings, shots, seed, 0.0).unwrap()[hv_idx].outcome.value())
            .sum::<f64>()
            / reps as f64;
        let expected = 500.0;
        let sigma_of_mean = (expected / reps as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * sigma_of_mean, "mean {mean}");
    }

    #[test]
    fn csv_round_trip() {
        let settings = tomography_settings(1).unwrap();
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        for shots in [0, 500] {
            let rec = simulate_counts(&rho, &settings, shots, 7, 0.0).unwrap();
            assert_eq!(records_from_csv(&records_to_csv(&rec)).unwrap(), rec);
        }
        assert!(records_from_csv("a,b\nH,1\n").is_err());
        assert!(records_from_csv("setting,counts\nH,1.5\n").is_err());
    }

    #[test]
    fn labels() {
        assert!(MeasurementSetting::from_label("HX").is_err());
        assert!(MeasurementSetting::from_label("").is_err());
        assert!(MeasurementSetting::from_label("HVH").is_err());
        assert_eq!(MeasurementSetting::from_label("HV").unwrap().projector[(1, 1)], c(1.0, 0.0));
    }
}
