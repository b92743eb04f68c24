use num_complex::Complex64;
use serde::Serialize;

use super::potential::{potential_coupling, potential_raw, GRADIENT_SIGN};
use super::SystemState;
use crate::geometry::conformal_factor;

/// Energy and the three Noether momenta of the isometric action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservedQuantities {
    pub energy: f64,
    pub kinetic: f64,
    /// `V_R` as written in coordinates.
    pub potential: f64,
    /// `J_ξ` for `ξ(w) = w, 1, 1 + w²`, in that order.
    pub momenta: [f64; 3],
    /// `Σ_k m_k μ_k |ẇ_k| |ξ(w_k)|`, the size of the individual terms of each `J_ξ`.
    pub momentum_scale: [f64; 3],
}

impl ConservedQuantities {
    /// `max(|T|, |c V_R|)`, the size of the terms of the energy.
    pub fn energy_scale(&self) -> f64 {
        let potential_term = self.energy - self.kinetic;
        self.kinetic.abs().max(potential_term.abs())
    }
}

/// Killing fields of the isometric subgroups, `w`, `1`, `1 + w²`.
fn isometry_fields(w: Complex64) -> [Complex64; 3] {
    [w, Complex64::new(1.0, 0.0), 1.0 + w * w]
}

/// `E = Σ (m_k/2) μ(w_k) |ẇ_k|² + c V_R` with `c = -GRADIENT_SIGN · 2R²`,
/// and `J_ξ = Σ m_k μ(w_k) Re(ẇ_k conj ξ(w_k))`.
///
/// Off the singular set by construction of [`SystemState`], so the potential
/// is always finite here.
pub fn conserved(s: &SystemState) -> ConservedQuantities {
    let radius = s.radius();
    let mut kinetic = 0.0;
    let mut momenta = [0.0; 3];
    let mut momentum_scale = [0.0; 3];
    for ((p, v), m) in s.positions().iter().zip(s.velocities()).zip(s.masses()) {
        let mu = conformal_factor(*p, radius);
        kinetic += 0.5 * m * mu * v.norm_sqr();
        for (i, xi) in isometry_fields(p.w()).into_iter().enumerate() {
            momenta[i] += m * mu * (v * xi.conj()).re;
            momentum_scale[i] += m * mu * v.norm() * xi.norm();
        }
    }
    let potential = potential_raw(&s.coords(), s.masses(), radius.get()).unwrap_or(f64::NAN);
    let energy = kinetic - GRADIENT_SIGN * potential_coupling(radius.get()) * potential;
    ConservedQuantities { energy, kinetic, potential, momenta, momentum_scale }
}
