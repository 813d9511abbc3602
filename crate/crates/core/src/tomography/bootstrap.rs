//! Parametric bootstrap error bars for count-based statistics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PstError, Result};

use super::measurement::{poisson, MeasurementRecord, Outcome};

pub const MIN_RESAMPLES: usize = 100;

/// One-standard-deviation spread of `statistic` over `n_resamples`
/// Poisson re-draws of the observed counts. Resample `k` uses seed
/// `seed + k`. Exact-probability records carry no shot noise and give 0.
pub fn bootstrap_std<F>(records: &[MeasurementRecord], n_resamples: usize, seed: u64, statistic: F) -> Result<f64>
where
    F: Fn(&[MeasurementRecord]) -> Result<f64>,
{
    if n_resamples < MIN_RESAMPLES {
        return Err(PstError::InvalidArgument(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples, got {n_resamples}"
        )));
    }
    if records.iter().all(|r| matches!(r.outcome, Outcome::Probability(_))) {
        return Ok(0.0);
    }
    let values = (0..n_resamples)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let resampled: Vec<MeasurementRecord> = records
                .iter()
                .map(|r| MeasurementRecord {
                    setting: r.setting.clone(),
                    outcome: match r.outcome {
                        Outcome::Counts(n) => Outcome::Counts(poisson(&mut rng, n as f64)),
                        p => p,
                    },
                })
                .collect();
            statistic(&resampled)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}
