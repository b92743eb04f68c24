use num_complex::Complex64;
use serde::Serialize;

use super::SystemState;
use crate::error::{Error, Result};
use crate::geometry::{geodesic_term, HalfPlanePoint};

/// Sign relating the closed-form interaction acceleration to the metric
/// gradient of the cotangent potential:
/// `a_k = GRADIENT_SIGN · (2R² / m_k) · (2/μ(w_k)) · ∂V_R/∂w̄_k`.
///
/// Resolved by [`gradient_consistency`] and frozen here.
pub const GRADIENT_SIGN: f64 = -1.0;

/// Magnitude `2R²` of the coupling between the closed-form accelerations
/// and the potential as written in coordinates.
pub fn potential_coupling(radius: f64) -> f64 {
    2.0 * radius * radius
}

/// The singular-set function of a pair.
///
/// Evaluated through the factorisation `Θ = 4 |w_k - w_j|² |w_k - w̄_j|²`,
/// which is symmetric in `(k, j)` bit for bit and free of cancellation
/// near collisions.
pub fn theta(wk: HalfPlanePoint, wj: HalfPlanePoint) -> f64 {
    theta_raw(wk.w(), wj.w())
}

#[inline]
pub(crate) fn theta_raw(wk: Complex64, wj: Complex64) -> f64 {
    let dx = wk.re - wj.re;
    let dv = wk.im - wj.im;
    let sv = wk.im + wj.im;
    let dx2 = dx * dx;
    4.0 * (dx2 + dv * dv) * (dx2 + sv * sv)
}

/// Singularity guard `1e-12 · scale⁴` with `scale = max(1, max_k |w_k|)`.
pub fn theta_min(positions: &[Complex64]) -> f64 {
    let scale = positions.iter().map(|w| w.norm()).fold(1.0, f64::max);
    1e-12 * scale.powi(4)
}

/// `V_R = (1/R) Σ_{k<j} m_k m_j [(w̄_k+w_k)(w̄_j+w_j) - 2(|w_k|²+|w_j|²)] / sqrt(Θ_kj)`.
pub fn cotangent_potential(s: &SystemState) -> Result<f64> {
    potential_raw(&s.coords(), s.masses(), s.radius().get())
}

pub(crate) fn potential_raw(w: &[Complex64], m: &[f64], radius: f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..w.len() {
        for j in k + 1..w.len() {
            let th = theta_raw(w[k], w[j]);
            if !(th > 0.0) {
                return Err(Error::Singularity { pair: (k, j), theta: th, t: f64::NAN });
            }
            let num = 4.0 * w[k].re * w[j].re - 2.0 * (w[k].norm_sqr() + w[j].norm_sqr());
            total += m[k] * m[j] * num / th.sqrt();
        }
    }
    Ok(total / radius)
}

/// `S_k = Σ_{j≠k} m_j (w̄_j - w_j)² (w_k - w_j)(w̄_j - w_k) / Θ_kj^{3/2}`,
/// the interaction sum shared by the equations of motion and every
/// equilibrium condition.
pub fn interaction_sum(s: &SystemState, k: usize) -> Result<Complex64> {
    let w = s.coords();
    interaction_sum_raw(&w, s.masses(), k, theta_min(&w), s.t)
}

fn interaction_sum_raw(
    w: &[Complex64],
    m: &[f64],
    k: usize,
    guard: f64,
    t: f64,
) -> Result<Complex64> {
    let wk = w[k];
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, &wj) in w.iter().enumerate() {
        if j == k {
            continue;
        }
        let th = theta_raw(wk, wj);
        if !(th > guard) {
            return Err(Error::Singularity { pair: (k.min(j), k.max(j)), theta: th, t });
        }
        let dj = wj.conj() - wj;
        sum += m[j] * dj * dj * (wk - wj) * (wj.conj() - wk) / (th * th.sqrt());
    }
    Ok(sum)
}

/// Interaction part `-(2 (w_k - w̄_k)³ / R) S_k` of each acceleration.
pub fn interaction_accelerations(s: &SystemState) -> Result<Vec<Complex64>> {
    let w = s.coords();
    let guard = theta_min(&w);
    (0..w.len())
        .map(|k| interaction_term(&w, s.masses(), s.radius().get(), k, guard, s.t))
        .collect()
}

fn interaction_term(
    w: &[Complex64],
    m: &[f64],
    radius: f64,
    k: usize,
    guard: f64,
    t: f64,
) -> Result<Complex64> {
    let dk = w[k] - w[k].conj();
    let sum = interaction_sum_raw(w, m, k, guard, t)?;
    Ok(-2.0 * dk * dk * dk / radius * sum)
}

/// Coordinate accelerations `ẅ_k` from the closed-form equations of motion.
pub fn eom_rhs(s: &SystemState) -> Result<Vec<Complex64>> {
    accelerations_raw(&s.coords(), s.velocities(), s.masses(), s.radius().get(), s.t)
}

pub(crate) fn accelerations_raw(
    w: &[Complex64],
    v: &[Complex64],
    m: &[f64],
    radius: f64,
    t: f64,
) -> Result<Vec<Complex64>> {
    if let Some(k) = w.iter().position(|w| !(w.im > 0.0)) {
        return Err(Error::domain(format!("body {k} left the half-plane (Im = {})", w[k].im)));
    }
    let guard = theta_min(w);
    (0..w.len())
        .map(|k| Ok(geodesic_term(w[k], v[k]) + interaction_term(w, m, radius, k, guard, t)?))
        .collect()
}

/// Outcome of comparing the closed-form interaction with the finite-difference
/// metric gradient of the potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientReport {
    /// The sign that best aligns the two routes; `None` when both vanish.
    pub sign: Option<f64>,
    /// Relative error `max_k |a_k - c g_k| / max_k |a_k|` at the resolved sign.
    pub relative_error: f64,
    pub error_plus: f64,
    pub error_minus: f64,
    pub step: f64,
}

/// Compares `eom_rhs` minus its geodesic part with
/// `c · (2R²/m_k) · (2/μ(w_k)) · ∂V_R/∂w̄_k`, the Wirtinger derivative taken by
/// central differences in the real and imaginary directions.
pub fn gradient_consistency(s: &SystemState) -> Result<GradientReport> {
    let w = s.coords();
    let m = s.masses();
    let radius = s.radius().get();
    let h = 1e-6 * s.scale();

    let closed = interaction_accelerations(s)?;
    let mut fd = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        let v = w[k].im;
        if v - h <= 0.0 || w[k].re + h == w[k].re || v + h == v {
            return Err(Error::invalid(format!("finite-difference step {h:e} unusable at body {k}")));
        }
        let mut shifted = w.clone();
        let mut eval = |dw: Complex64| -> Result<f64> {
            shifted[k] = w[k] + dw;
            potential_raw(&shifted, m, radius)
        };
        let dx = (eval(Complex64::new(h, 0.0))? - eval(Complex64::new(-h, 0.0))?) / (2.0 * h);
        let dy = (eval(Complex64::new(0.0, h))? - eval(Complex64::new(0.0, -h))?) / (2.0 * h);
        // (2/μ) ∂/∂w̄ = (v²/R²)(∂x + i ∂y); the 2R²/m_k coupling cancels the R².
        fd.push(2.0 * v * v / m[k] * Complex64::new(dx, dy));
    }

    let scale = closed.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let fd_scale = fd.iter().map(|g| g.norm()).fold(0.0, f64::max);
    if scale == 0.0 && fd_scale == 0.0 {
        return Ok(GradientReport {
            sign: None,
            relative_error: 0.0,
            error_plus: 0.0,
            error_minus: 0.0,
            step: h,
        });
    }
    let error = |c: f64| {
        closed
            .iter()
            .zip(&fd)
            .map(|(a, g)| (a - c * g).norm())
            .fold(0.0, f64::max)
            / scale.max(fd_scale)
    };
    let (error_plus, error_minus) = (error(1.0), error(-1.0));
    let (sign, relative_error) =
        if error_plus <= error_minus { (1.0, error_plus) } else { (-1.0, error_minus) };
    Ok(GradientReport { sign: Some(sign), relative_error, error_plus, error_minus, step: h })
}
