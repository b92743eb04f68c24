//! The n-body problem on the half-plane: state, forces, integration and
//! diagnostics.

mod conserved;
mod integrate;
mod potential;
mod vlasov;

pub use conserved::{conserved, ConservedQuantities};
pub use integrate::{
    integrate, ConservationDrift, IntegrateOptions, IntegratorStats, Trajectory, TrajectorySidecar,
};
pub use potential::{
    cotangent_potential, eom_rhs, gradient_consistency, interaction_accelerations,
    interaction_sum, potential_coupling, theta, theta_min, GradientReport, GRADIENT_SIGN,
};
pub use vlasov::{vlasov_weak_residual, VlasovReport, WeakResidual, WeakTestFunction};

pub(crate) use potential::{accelerations_raw, theta_raw};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CurvatureRadius, HalfPlanePoint};

/// Positions, velocities and masses of `n ≥ 1` bodies at time `t`.
///
/// Construction checks that every mass is positive and that no pair of
/// bodies sits on the singular set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemState {
    pub t: f64,
    positions: Vec<HalfPlanePoint>,
    velocities: Vec<Complex64>,
    masses: Vec<f64>,
    radius: CurvatureRadius,
}

impl SystemState {
    pub fn new(
        t: f64,
        positions: Vec<HalfPlanePoint>,
        velocities: Vec<Complex64>,
        masses: Vec<f64>,
        radius: CurvatureRadius,
    ) -> Result<Self> {
        let n = positions.len();
        if n == 0 {
            return Err(Error::invalid("a system needs at least one body"));
        }
        if velocities.len() != n || masses.len() != n {
            return Err(Error::invalid(format!(
                "length mismatch: {n} positions, {} velocities, {} masses",
                velocities.len(),
                masses.len()
            )));
        }
        if let Some(k) = masses.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::invalid(format!("mass {k} must be positive, got {}", masses[k])));
        }
        if let Some(k) = velocities.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid(format!("velocity {k} is not finite")));
        }
        if !t.is_finite() {
            return Err(Error::invalid("time must be finite"));
        }
        for k in 0..n {
            for j in k + 1..n {
                let th = theta(positions[k], positions[j]);
                if !(th > 0.0) {
                    return Err(Error::Singularity { pair: (k, j), theta: th, t });
                }
            }
        }
        Ok(Self { t, positions, velocities, masses, radius })
    }

    /// A state built from raw coordinates, checking every invariant.
    pub fn from_coords(
        t: f64,
        positions: &[Complex64],
        velocities: &[Complex64],
        masses: &[f64],
        radius: CurvatureRadius,
    ) -> Result<Self> {
        let points = positions
            .iter()
            .map(|&w| HalfPlanePoint::new(w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(t, points, velocities.to_vec(), masses.to_vec(), radius)
    }

    /// All bodies at rest.
    pub fn at_rest(positions: &[Complex64], masses: &[f64], radius: CurvatureRadius) -> Result<Self> {
        let zeros = vec![Complex64::new(0.0, 0.0); positions.len()];
        Self::from_coords(0.0, positions, &zeros, masses, radius)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[HalfPlanePoint] {
        &self.positions
    }

    pub fn coords(&self) -> Vec<Complex64> {
        self.positions.iter().map(|p| p.w()).collect()
    }

    pub fn w(&self, k: usize) -> Complex64 {
        self.positions[k].w()
    }

    pub fn velocities(&self) -> &[Complex64] {
        &self.velocities
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn radius(&self) -> CurvatureRadius {
        self.radius
    }

    pub fn with_velocities(&self, velocities: Vec<Complex64>) -> Result<Self> {
        Self::new(self.t, self.positions.clone(), velocities, self.masses.clone(), self.radius)
    }

    pub fn with_radius(&self, radius: CurvatureRadius) -> Self {
        Self { radius, ..self.clone() }
    }

    /// `max(1, max_k |w_k|)`, the length scale used by numeric guards.
    pub fn scale(&self) -> f64 {
        self.positions.iter().map(|p| p.w().norm()).fold(1.0, f64::max)
    }
}
