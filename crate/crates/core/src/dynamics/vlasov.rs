use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};

/// Smooth test functions `φ(t, x, v)` on time × position × velocity, with
/// `x, v` identified with points of `R²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeakTestFunction {
    Constant,
    PositionRe,
    PositionIm,
    SpeedSquared,
    /// `Re(x - c) · exp(-|x - c|² / 2σ²)`.
    GaussianPosition { center: Complex64, width: f64 },
    /// `Im(v) · exp(-|v|² / 2σ²)`.
    GaussianVelocity { width: f64 },
    /// `cos(ω t) · Re(x) · Im(v)`.
    TimeModulated { frequency: f64 },
}

/// Value and partial derivatives; gradients are packed as `∂_re + i ∂_im`.
struct Jet {
    value: f64,
    dt: f64,
    dx: Complex64,
    dv: Complex64,
}

impl WeakTestFunction {
    /// The fixed library used by the weak-form check.
    pub fn library() -> Vec<WeakTestFunction> {
        vec![
            WeakTestFunction::Constant,
            WeakTestFunction::PositionRe,
            WeakTestFunction::PositionIm,
            WeakTestFunction::SpeedSquared,
            WeakTestFunction::GaussianPosition { center: Complex64::new(0.0, 1.0), width: 1.0 },
            WeakTestFunction::GaussianVelocity { width: 1.0 },
            WeakTestFunction::TimeModulated { frequency: 1.0 },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeakTestFunction::Constant => "constant",
            WeakTestFunction::PositionRe => "position_re",
            WeakTestFunction::PositionIm => "position_im",
            WeakTestFunction::SpeedSquared => "speed_squared",
            WeakTestFunction::GaussianPosition { .. } => "gaussian_position",
            WeakTestFunction::GaussianVelocity { .. } => "gaussian_velocity",
            WeakTestFunction::TimeModulated { .. } => "time_modulated",
        }
    }

    fn jet(&self, t: f64, x: Complex64, v: Complex64) -> Jet {
        let zero = Complex64::new(0.0, 0.0);
        match *self {
            WeakTestFunction::Constant => Jet { value: 1.0, dt: 0.0, dx: zero, dv: zero },
            WeakTestFunction::PositionRe => {
                Jet { value: x.re, dt: 0.0, dx: Complex64::new(1.0, 0.0), dv: zero }
            }
            WeakTestFunction::PositionIm => {
                Jet { value: x.im, dt: 0.0, dx: Complex64::new(0.0, 1.0), dv: zero }
            }
            WeakTestFunction::SpeedSquared => Jet { value: v.norm_sqr(), dt: 0.0, dx: zero, dv: 2.0 * v },
            WeakTestFunction::GaussianPosition { center, width } => {
                let y = x - center;
                let s2 = width * width;
                let g = (-y.norm_sqr() / (2.0 * s2)).exp();
                let dx = Complex64::new(g * (1.0 - y.re * y.re / s2), -g * y.re * y.im / s2);
                Jet { value: y.re * g, dt: 0.0, dx, dv: zero }
            }
            WeakTestFunction::GaussianVelocity { width } => {
                let s2 = width * width;
                let g = (-v.norm_sqr() / (2.0 * s2)).exp();
                let dv = Complex64::new(-g * v.im * v.re / s2, g * (1.0 - v.im * v.im / s2));
                Jet { value: v.im * g, dt: 0.0, dx: zero, dv }
            }
            WeakTestFunction::TimeModulated { frequency } => {
                let (s, c) = (frequency * t).sin_cos();
                Jet {
                    value: c * x.re * v.im,
                    dt: -frequency * s * x.re * v.im,
                    dx: Complex64::new(c * v.im, 0.0),
                    dv: Complex64::new(0.0, c * x.re),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakResidual {
    pub function: WeakTestFunction,
    /// Mean of `|r(t)|` over interior samples.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VlasovReport {
    pub per_function: Vec<WeakResidual>,
    pub max: f64,
}

/// Euclidean pairing of two packed `R²` vectors.
fn dot(a: Complex64, b: Complex64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// Weak form of the kinetic equation for the Dirac ansatz
/// `F = Σ m_i δ(v - V_i) δ(x - X_i)`:
/// `r(t) = d/dt Σ m_i φ(t, X_i, V_i) - Σ m_i [∂_t φ + ⟨V_i, ∇_x φ⟩ + ⟨a_i, ∇_v φ⟩]`,
/// with `a_i` the accelerations stored on the trajectory.
///
/// The trajectory must be sampled on a uniform grid with at least five
/// points; `d/dt` uses the five-point central stencil.
pub fn vlasov_weak_residual(traj: &Trajectory, tests: &[WeakTestFunction]) -> Result<VlasovReport> {
    let samples = traj.samples();
    if samples.len() < 5 {
        return Err(Error::invalid("the weak-form check needs at least five samples"));
    }
    let dt = samples[1].t - samples[0].t;
    if samples.windows(2).any(|p| ((p[1].t - p[0].t) - dt).abs() > 1e-9 * dt.abs().max(1.0)) {
        return Err(Error::invalid("the weak-form check needs a uniform sample grid"));
    }
    let masses = samples[0].masses();
    let mut per_function = Vec::with_capacity(tests.len());
    for phi in tests {
        let mut moment = Vec::with_capacity(samples.len());
        let mut transport = Vec::with_capacity(samples.len());
        for (s, acc) in samples.iter().zip(traj.accelerations()) {
            let (mut g, mut d) = (0.0, 0.0);
            for k in 0..s.n() {
                let v = s.velocities()[k];
                let jet = phi.jet(s.t, s.w(k), v);
                g += masses[k] * jet.value;
                d += masses[k] * (jet.dt + dot(v, jet.dx) + dot(acc[k], jet.dv));
            }
            moment.push(g);
            transport.push(d);
        }
        let interior = 2..samples.len() - 2;
        let count = interior.len() as f64;
        let total: f64 = interior
            .map(|i| {
                let deriv = (moment[i - 2] - 8.0 * moment[i - 1] + 8.0 * moment[i + 1]
                    - moment[i + 2])
                    / (12.0 * dt);
                (deriv - transport[i]).abs()
            })
            .sum();
        per_function.push(WeakResidual { function: *phi, residual: total / count });
    }
    let max = per_function.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(VlasovReport { per_function, max })
}
