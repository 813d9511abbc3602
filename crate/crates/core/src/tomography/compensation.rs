//! Waveplate compensation of a measured polarization process.
//!
//! The compensator is a half-wave plate at `θ` behind a fixed half-wave
//! plate at 0 (together a rotation by `2θ`) followed by a relative phase
//! `φ` on V: `C(θ, φ) = Phase(φ)·HWP(θ)·HWP(0)`. It acts before the
//! measured process, so the compensated channel is `E ∘ C`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMatrix};
use crate::photonics::{jones_chain, JonesElement};

use super::fidelity::process_fidelity;
use super::reconstruct::ChiMatrix;

/// Grid resolution of the coarse search, degrees.
pub const GRID_STEP_DEG: f64 = 0.1;
/// Scores within this margin count as ties.
const TIE_TOL: f64 = 1e-12;
/// Pattern search stops once the step falls below this, degrees.
const REFINE_MIN_STEP_DEG: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompensationSetting {
    pub hwp_angle_deg: f64,
    pub phase_deg: f64,
}

impl CompensationSetting {
    /// Identity compensator.
    pub const NONE: CompensationSetting = CompensationSetting { hwp_angle_deg: 0.0, phase_deg: 0.0 };

    /// Wraps `θ` into (−45°, 45°] (a 90° turn only flips the overall sign)
    /// and `φ` into (−180°, 180°].
    pub fn normalized(self) -> Self {
        Self { hwp_angle_deg: wrap(self.hwp_angle_deg, 90.0), phase_deg: wrap(self.phase_deg, 360.0) }
    }
}

/// `x` wrapped into `(−period/2, period/2]`.
fn wrap(x: f64, period: f64) -> f64 {
    let half = period / 2.0;
    let mut y = (x + half).rem_euclid(period) - half;
    if y <= -half {
        y += period;
    }
    if y == 0.0 {
        0.0
    } else {
        y
    }
}

pub fn compensation_unitary(s: CompensationSetting) -> CMatrix {
    jones_chain(&[
        JonesElement::Hwp(0.0),
        JonesElement::Hwp(s.hwp_angle_deg.to_radians()),
        JonesElement::Phase(s.phase_deg.to_radians()),
    ])
}

/// Closed-form `χ'₀₀` of `E ∘ C(θ, φ)`. The Pauli coefficients of `C` are
/// `u + e^{iφ}w` with `u = (c, −s, −is, c)/2`, `w = (c, s, −is, −c)/2`,
/// `c = cos 2θ`, `s = sin 2θ`, so the score is `A(θ) + 2 Re(e^{iφ} K(θ))`.
struct Objective {
    chi: [[Complex64; 4]; 4],
}

impl Objective {
    fn new(chi: &ChiMatrix) -> Self {
        let m = chi.matrix();
        Self { chi: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])) }
    }

    fn bilinear(&self, x: &[Complex64; 4], y: &[Complex64; 4]) -> Complex64 {
        let mut acc = c(0.0, 0.0);
        for m in 0..4 {
            for n in 0..4 {
                acc += x[m] * self.chi[m][n] * y[n].conj();
            }
        }
        acc
    }

    /// `(A, K)` for a given HWP angle.
    fn theta_terms(&self, theta_deg: f64) -> (f64, Complex64) {
        let (s, co) = (2.0 * theta_deg.to_radians()).sin_cos();
        let u = [c(co / 2.0, 0.0), c(-s / 2.0, 0.0), c(0.0, -s / 2.0), c(co / 2.0, 0.0)];
        let w = [c(co / 2.0, 0.0), c(s / 2.0, 0.0), c(0.0, -s / 2.0), c(-co / 2.0, 0.0)];
        let a = self.bilinear(&u, &u).re + self.bilinear(&w, &w).re;
        (a, self.bilinear(&w, &u))
    }

    fn score(&self, theta_deg: f64, phi_deg: f64) -> f64 {
        let (a, k) = self.theta_terms(theta_deg);
        a + 2.0 * (Complex64::from_polar(1.0, phi_deg.to_radians()) * k).re
    }
}

/// True when `(θ, φ)` scoring `f` should replace the incumbent.
fn better(f: f64, theta: f64, phi: f64, best: (f64, f64, f64)) -> bool {
    let (bf, bt, bp) = best;
    if f > bf + TIE_TOL {
        return true;
    }
    if f < bf - TIE_TOL {
        return false;
    }
    match theta.abs().total_cmp(&bt.abs()) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => phi.abs() < bp.abs(),
    }
}

/// Compensation maximizing the process fidelity of `E ∘ C` to the
/// identity: a 0.1° grid over θ ∈ (−45°, 45°], φ ∈ (−180°, 180°], then a
/// compass search that only accepts strict improvements. Returns the
/// setting and the achieved fidelity.
pub fn fit_compensation(chi: &ChiMatrix) -> (CompensationSetting, f64) {
    let obj = Objective::new(chi);
    let n_theta = (90.0 / GRID_STEP_DEG).round() as i64;
    let n_phi = (360.0 / GRID_STEP_DEG).round() as i64;
    let phasors: Vec<(f64, Complex64)> = (0..n_phi)
        .map(|j| {
            let phi = (j - (n_phi / 2 - 1)) as f64 * GRID_STEP_DEG;
            (phi, Complex64::from_polar(1.0, phi.to_radians()))
        })
        .collect();

    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..n_theta {
        let theta = (i - (n_theta / 2 - 1)) as f64 * GRID_STEP_DEG;
        let (a, k) = obj.theta_terms(theta);
        for &(phi, e) in &phasors {
            let f = a + 2.0 * (e * k).re;
            if better(f, theta, phi, best) {
                best = (f, theta, phi);
            }
        }
    }

    let (mut f, mut theta, mut phi) = best;
    let mut step = GRID_STEP_DEG / 2.0;
    while step > REFINE_MIN_STEP_DEG {
        let mut moved = false;
        for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let cand = CompensationSetting { hwp_angle_deg: theta + dt, phase_deg: phi + dp }.normalized();
            let g = obj.score(cand.hwp_angle_deg, cand.phase_deg);
            if g > f {
                (f, theta, phi) = (g, cand.hwp_angle_deg, cand.phase_deg);
                moved = true;
                break;
            }
        }
        if !moved {
            step /= 2.0;
        }
    }

    let setting = CompensationSetting { hwp_angle_deg: theta, phase_deg: phi }.normalized();
    let achieved = process_fidelity(&ChiMatrix::identity(), &chi.after_unitary(&compensation_unitary(setting)));
    (setting, achieved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::photonics::jones_matrix;

    #[test]
    fn compensator_is_rotation_then_phase() {
        let u = compensation_unitary(CompensationSetting { hwp_angle_deg: 10.0, phase_deg: 30.0 });
        let (s, co) = 20f64.to_radians().sin_cos();
        let e = Complex64::from_polar(1.0, 30f64.to_radians());
        let want = CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), e * s, e * co]);
        assert!(linalg::max_abs_diff(&u, &want) < 1e-14);
        assert!(linalg::max_abs_diff(&compensation_unitary(CompensationSetting::NONE), &linalg::identity(2)) < 1e-15);
    }

    #[test]
    fn closed_form_score_matches_composition() {
        let chi = ChiMatrix::from_unitary(&jones_matrix(JonesElement::Qwp(0.4)))
            .after_unitary(&jones_matrix(JonesElement::Phase(0.7)));
        let obj = Objective::new(&chi);
        for (t, p) in [(0.0, 0.0), (12.3, -77.0), (-44.9, 179.9), (30.0, 45.0)] {
            let s = CompensationSetting { hwp_angle_deg: t, phase_deg: p };
            let direct =
                linalg::trace(&(ChiMatrix::identity().matrix() * chi.after_unitary(&compensation_unitary(s)).matrix()))
                    .re;
            assert!((obj.score(t, p) - direct).abs() < 1e-12, "{t} {p}");
        }
    }

    #[test]
    fn identity_needs_no_compensation() {
        let (s, f) = fit_compensation(&ChiMatrix::identity());
        assert_eq!(s, CompensationSetting::NONE);
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_phase_is_inverted() {
        for phi0 in [-150.0f64, -68.5, 12.34, 90.0, 179.0] {
            let chi = ChiMatrix::from_unitary(&jones_matrix(JonesElement::Phase(phi0.to_radians())));
            let (s, f) = fit_compensation(&chi);
            let err = wrap(s.phase_deg + phi0, 360.0).abs();
            assert!(err < 0.1, "phi0 {phi0}: got {s:?}");
            assert!(s.hwp_angle_deg.abs() < 0.1, "phi0 {phi0}: got {s:?}");
            assert!((f - 1.0).abs() < 1e-6, "phi0 {phi0}: fidelity {f}");
        }
    }

    #[test]
    fn rotation_is_inverted() {
        let chi =
            ChiMatrix::from_unitary(&compensation_unitary(CompensationSetting { hwp_angle_deg: 17.0, phase_deg: 0.0 }));
        let (s, f) = fit_compensation(&chi);
        assert!((s.hwp_angle_deg + 17.0).abs() < 1e-6, "{s:?}");
        assert!((f - 1.0).abs() < 1e-6, "{f}");
    }

    #[test]
    fn dephasing_cannot_be_undone() {
        let chi = ChiMatrix::dephasing(0.9).after_unitary(&jones_matrix(JonesElement::Phase(0.5)));
        let (_, f) = fit_compensation(&chi);
        assert!(f < 1.0 - 1e-3, "{f}");
        assert!((f - 0.95).abs() < 1e-6, "{f}");
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap(180.0, 360.0), 180.0);
        assert_eq!(wrap(-180.0, 360.0), 180.0);
        assert_eq!(wrap(45.0, 90.0), 45.0);
        assert_eq!(wrap(-45.0, 90.0), 45.0);
        assert!((wrap(50.0, 90.0) + 40.0).abs() < 1e-12);
    }
}
