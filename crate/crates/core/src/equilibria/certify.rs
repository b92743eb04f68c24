use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::cyclic::{aux_letters, cyclic_positions, CyclicParams};
use super::EquilibriumClass;
use crate::clifford::killing_velocity;
use crate::dynamics::{interaction_accelerations, theta_min, theta_raw, SystemState};
use crate::error::{Error, Result};
use crate::flows::flow_acceleration;
use crate::geometry::{geodesic_term, CurvatureRadius};

/// Radii drawn uniformly for certificate samples.
pub const SAMPLE_RADII: [f64; 3] = [0.5, 1.0, 2.0];
/// Masses and ordinates are log-uniform on `[LOG_RANGE.0, LOG_RANGE.1]`.
pub const LOG_RANGE: (f64, f64) = (0.1, 10.0);
const MAX_REDRAWS: usize = 1000;

/// One axis configuration and the two sides of the sign identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSample {
    pub radius: f64,
    pub masses: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Body whose equation carries the identity.
    pub pivot: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Topmost body, whose orbit needs an upward interaction.
    pub top: usize,
    /// `Im` of the interaction acceleration the orbit needs at `top`.
    pub required_im: f64,
    /// `Im` of the interaction acceleration the dynamics deliver at `top`.
    pub gravitational_im: f64,
}

impl CertificateSample {
    pub fn witnesses(&self) -> bool {
        self.lhs > 0.0 && self.rhs < 0.0
    }

    pub fn direct_witnesses(&self) -> bool {
        self.required_im > 0.0 && self.gravitational_im < 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceCertificate {
    pub class: EquilibriumClass,
    pub n: usize,
    pub seed: u64,
    pub samples: Vec<CertificateSample>,
    /// Degenerate draws rejected and replaced.
    pub redraws: usize,
    /// Every sample has `lhs > 0` and `rhs < 0`.
    pub verdict: bool,
    /// Every sample's top body needs an upward interaction but is pulled down.
    pub direct_verdict: bool,
}

/// `(R/(64 β_k²), -Σ_{j≠k} m_j β_j² / (4 (β_j² - β_k²)²))` for bodies `iβ_j`.
pub fn contradiction_parabolic(beta: &[f64], masses: &[f64], radius: f64, k: usize) -> Result<(f64, f64)> {
    if k >= beta.len() || masses.len() != beta.len() {
        return Err(Error::invalid("pivot or mass count does not match the configuration"));
    }
    let bk2 = beta[k] * beta[k];
    let mut rhs = 0.0;
    for j in (0..beta.len()).filter(|&j| j != k) {
        let gap = beta[j] * beta[j] - bk2;
        if gap == 0.0 {
            return Err(Error::Singularity { pair: (k.min(j), k.max(j)), theta: 0.0, t: 0.0 });
        }
        rhs -= masses[j] * beta[j] * beta[j] / (4.0 * gap * gap);
    }
    Ok((radius / (64.0 * bk2), rhs))
}

/// The `s = 0` imaginary identity of the hyperbolic cyclic family:
/// `(α_k - β_k)(1 + β_k²) + 8(1 + α_k²)(1 + β_k²)/(α_k - β_k)` against
/// `-(2 (α_k - β_k)³ / R) Σ_{j≠k} (α_j - β_j)² m_j (D_k² - D_j²) / Θ^{3/2}`.
pub fn contradiction_hyperbolic(
    alpha: &[f64],
    beta: &[f64],
    masses: &[f64],
    radius: f64,
    k: usize,
) -> Result<(f64, f64)> {
    if k >= alpha.len() || masses.len() != alpha.len() {
        return Err(Error::invalid("pivot or mass count does not match the configuration"));
    }
    let p = CyclicParams::new(alpha.to_vec(), beta.to_vec(), 0.0)?;
    let d = aux_letters(&p)?.d;
    let w = cyclic_positions(EquilibriumClass::HyperbolicCyclic, &p)?;
    let (ak, bk) = (alpha[k], beta[k]);
    let diff = ak - bk;
    if diff == 0.0 {
        return Err(Error::domain(format!("alpha_{k} = beta_{k} puts body {k} on the real axis")));
    }
    let lhs = diff * (1.0 + bk * bk) + 8.0 * (1.0 + ak * ak) * (1.0 + bk * bk) / diff;
    let mut sum = 0.0;
    for j in (0..alpha.len()).filter(|&j| j != k) {
        let th = theta_raw(w[k], w[j]);
        if !(th > 0.0) {
            return Err(Error::Singularity { pair: (k.min(j), k.max(j)), theta: th, t: 0.0 });
        }
        let dj = alpha[j] - beta[j];
        sum += dj * dj * masses[j] * (d[k] * d[k] - d[j] * d[j]) / th.powf(1.5);
    }
    Ok((lhs, -2.0 * diff.powi(3) / radius * sum))
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = (LOG_RANGE.0.ln(), LOG_RANGE.1.ln());
    rng.random_range(lo..hi).exp()
}

/// Admissible when every pair of ordinates is distinct and off the guard.
fn admissible(w: &[Complex64]) -> bool {
    let guard = theta_min(w);
    let mut ys: Vec<f64> = w.iter().map(|w| w.im).collect();
    ys.sort_by(f64::total_cmp);
    ys.windows(2).all(|p| p[1] - p[0] > 1e-9 * p[1])
        && (0..w.len()).all(|k| (k + 1..w.len()).all(|j| theta_raw(w[k], w[j]) > guard))
}

fn draw(class: EquilibriumClass, n: usize, seed: u64, index: usize) -> Result<(CertificateSample, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    for redraws in 0..MAX_REDRAWS {
        let radius = SAMPLE_RADII[rng.random_range(0..SAMPLE_RADII.len())];
        let masses: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng)).collect();
        let heights: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng)).collect();
        let w: Vec<Complex64> = heights.iter().map(|&v| Complex64::new(0.0, v)).collect();
        if !admissible(&w) {
            continue;
        }
        let (alpha, beta, pivot, (lhs, rhs)) = match class {
            EquilibriumClass::ParabolicCyclic => {
                let pivot = argmin(&heights);
                let sides = contradiction_parabolic(&heights, &masses, radius, pivot)?;
                (vec![0.0; n], heights.clone(), pivot, sides)
            }
            EquilibriumClass::HyperbolicCyclic => {
                let alpha = heights.clone();
                let beta: Vec<f64> = heights.iter().map(|v| -v).collect();
                let pivot = argmax(&heights);
                let sides = contradiction_hyperbolic(&alpha, &beta, &masses, radius, pivot)?;
                (alpha, beta, pivot, sides)
            }
            other => return Err(Error::invalid(format!("{other} has no non-existence certificate"))),
        };
        let top = argmax(&heights);
        let kind = class.field();
        let wt = w[top];
        let required = flow_acceleration(kind, wt) - geodesic_term(wt, killing_velocity(kind, wt));
        let state = SystemState::at_rest(&w, &masses, CurvatureRadius::new(radius)?)?;
        let gravitational = interaction_accelerations(&state)?[top];
        let sample = CertificateSample {
            radius,
            masses,
            alpha,
            beta,
            pivot,
            lhs,
            rhs,
            top,
            required_im: required.im,
            gravitational_im: gravitational.im,
        };
        return Ok((sample, redraws));
    }
    Err(Error::invalid(format!("sample {index} stayed degenerate after {MAX_REDRAWS} draws")))
}

fn argmin(x: &[f64]) -> usize {
    (0..x.len()).min_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap_or(0)
}

fn argmax(x: &[f64]) -> usize {
    (0..x.len()).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap_or(0)
}

/// Draws `samples` axis configurations of `n` bodies and evaluates the sign
/// identity of `class` on each.
///
/// Sample `i` uses the ChaCha8 stream `i` of `seed`, so the certificate is
/// independent of thread scheduling.
pub fn certify_nonexistence(
    class: EquilibriumClass,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<NonexistenceCertificate> {
    if !matches!(class, EquilibriumClass::ParabolicCyclic | EquilibriumClass::HyperbolicCyclic) {
        return Err(Error::invalid(format!("{class} has no non-existence certificate")));
    }
    if n < 2 {
        return Err(Error::invalid(format!("certificates need at least two bodies, got {n}")));
    }
    if samples == 0 {
        return Err(Error::invalid("certificates need at least one sample"));
    }
    let drawn: Vec<(CertificateSample, usize)> = (0..samples)
        .into_par_iter()
        .map(|i| draw(class, n, seed, i))
        .collect::<Result<_>>()?;
    let redraws = drawn.iter().map(|(_, r)| r).sum();
    let samples: Vec<CertificateSample> = drawn.into_iter().map(|(s, _)| s).collect();
    let verdict = samples.iter().all(CertificateSample::witnesses);
    let direct_verdict = samples.iter().all(CertificateSample::direct_witnesses);
    Ok(NonexistenceCertificate { class, n, seed, samples, redraws, verdict, direct_verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabolic_hand_values() {
        let (lhs, rhs) = contradiction_parabolic(&[1.0, 2.0], &[1.0, 1.0], 1.0, 0).unwrap();
        assert_eq!(lhs, 1.0 / 64.0);
        assert!((rhs + 1.0 / 9.0).abs() < 1e-16);
    }

    #[test]
    fn hyperbolic_axis_signs() {
        let (lhs, rhs) = contradiction_hyperbolic(&[2.0, 1.0], &[-2.0, -1.0], &[1.0, 1.0], 1.0, 0).unwrap();
        assert!(lhs > 0.0 && rhs < 0.0);
    }

    #[test]
    fn certificates_hold_and_are_deterministic() {
        for class in [EquilibriumClass::ParabolicCyclic, EquilibriumClass::HyperbolicCyclic] {
            let a = certify_nonexistence(class, 3, 50, 7).unwrap();
            assert!(a.verdict && a.direct_verdict, "{class}");
            assert_eq!(a, certify_nonexistence(class, 3, 50, 7).unwrap());
            assert_ne!(a.samples, certify_nonexistence(class, 3, 50, 8).unwrap().samples);
        }
    }

    #[test]
    fn prefix_is_stable_under_sample_count() {
        let short = certify_nonexistence(EquilibriumClass::ParabolicCyclic, 2, 5, 3).unwrap();
        let long = certify_nonexistence(EquilibriumClass::ParabolicCyclic, 2, 20, 3).unwrap();
        assert_eq!(short.samples[..], long.samples[..5]);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(certify_nonexistence(EquilibriumClass::ParabolicCyclic, 2, 0, 1).is_err());
        assert!(certify_nonexistence(EquilibriumClass::ParabolicCyclic, 1, 5, 1).is_err());
        assert!(certify_nonexistence(EquilibriumClass::EllipticCyclic, 2, 5, 1).is_err());
        assert!(contradiction_parabolic(&[1.0, 1.0], &[1.0, 1.0], 1.0, 0).is_err());
    }
}
