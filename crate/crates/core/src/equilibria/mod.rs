//! Möbius solutions: trajectories that stay solutions, and coincide with
//! their own orbit, under a one-parameter subgroup.
//!
//! Each class pairs a Killing field with an algebraic condition on the
//! configuration. The homothetic (`A`) and elliptic (`K`, σ = -1) classes have
//! solutions, found here by Levenberg–Marquardt; the nilpotent class and the
//! two cyclic classes of the degenerate geometries have none, and the
//! certifiers sample the sign identities that rule them out.

mod certify;
mod cyclic;
mod solve;

pub use certify::{
    certify_nonexistence, contradiction_hyperbolic, contradiction_parabolic, CertificateSample,
    NonexistenceCertificate,
};
pub use cyclic::{
    aux_letters, cyclic_positions, residual_hyperbolic_cyclic, residual_parabolic_cyclic,
    AuxLetters, CyclicParams, CyclicResidual, Sides,
};
pub use solve::{
    find_equilibrium, find_equilibrium_any, two_body_elliptic, EquilibriumSolution, SolveOptions,
    Symmetry, TwoBodyElliptic,
};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{killing_velocity, KillingFieldKind, Sigma};
use crate::dynamics::{accelerations_raw, interaction_sum, SystemState};
use crate::error::{Error, Result};
use crate::flows::flow_acceleration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumClass {
    HyperbolicNormal,
    ParabolicNilpotent,
    EllipticCyclic,
    ParabolicCyclic,
    HyperbolicCyclic,
}

impl EquilibriumClass {
    pub const ALL: [EquilibriumClass; 5] = [
        EquilibriumClass::HyperbolicNormal,
        EquilibriumClass::ParabolicNilpotent,
        EquilibriumClass::EllipticCyclic,
        EquilibriumClass::ParabolicCyclic,
        EquilibriumClass::HyperbolicCyclic,
    ];

    /// The Killing field whose subgroup defines the class.
    pub fn field(self) -> KillingFieldKind {
        match self {
            EquilibriumClass::HyperbolicNormal => KillingFieldKind::NormalA,
            EquilibriumClass::ParabolicNilpotent => KillingFieldKind::NilpotentN,
            EquilibriumClass::EllipticCyclic => KillingFieldKind::RotationK(Sigma::Elliptic),
            EquilibriumClass::ParabolicCyclic => KillingFieldKind::RotationK(Sigma::Parabolic),
            EquilibriumClass::HyperbolicCyclic => KillingFieldKind::RotationK(Sigma::Hyperbolic),
        }
    }

    /// Group-time rate `ω` at which a configuration satisfying the class
    /// condition moves: `ẇ_k = ω ξ(w_k)`. `None` for the classes whose
    /// condition admits no consistent rate.
    pub fn rate(self) -> Option<f64> {
        match self {
            EquilibriumClass::HyperbolicNormal => Some(0.5),
            EquilibriumClass::EllipticCyclic => Some(1.0),
            _ => None,
        }
    }

    /// Whether solutions of the class exist.
    pub fn is_solvable(self) -> bool {
        self.rate().is_some()
    }

    /// Why the class has no solutions, for the classes without any.
    pub fn nonexistence_reason(self) -> &'static str {
        match self {
            EquilibriumClass::ParabolicNilpotent => {
                "nonexistent class: there are no parabolic nilpotent solutions"
            }
            EquilibriumClass::ParabolicCyclic => {
                "nonexistent class: there are no parabolic cyclic solutions"
            }
            EquilibriumClass::HyperbolicCyclic => {
                "nonexistent class: there are no hyperbolic cyclic solutions"
            }
            _ => "class has solutions",
        }
    }
}

impl fmt::Display for EquilibriumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumClass::HyperbolicNormal => "hyperbolic_normal",
            EquilibriumClass::ParabolicNilpotent => "parabolic_nilpotent",
            EquilibriumClass::EllipticCyclic => "elliptic_cyclic",
            EquilibriumClass::ParabolicCyclic => "parabolic_cyclic",
            EquilibriumClass::HyperbolicCyclic => "hyperbolic_cyclic",
        })
    }
}

impl FromStr for EquilibriumClass {
    type Err = Error;

    /// Accepts snake, kebab or camel case, ignoring ASCII case.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        EquilibriumClass::ALL
            .into_iter()
            .find(|c| c.to_string().replace('_', "") == key)
            .ok_or_else(|| Error::invalid(format!("unknown equilibrium class '{s}'")))
    }
}

/// LHS − RHS of a condition `lhs(w_k) = S_k` for every body.
fn per_body(s: &SystemState, lhs: impl Fn(Complex64) -> Complex64) -> Result<Vec<Complex64>> {
    (0..s.n()).map(|k| Ok(lhs(s.w(k)) - interaction_sum(s, k)?)).collect()
}

/// `R (w_k + w̄_k) w_k / [8 (w_k - w̄_k)⁴] - S_k`.
pub fn residual_hyperbolic_normal(s: &SystemState) -> Result<Vec<Complex64>> {
    let r = s.radius().get();
    per_body(s, |w| {
        let d = w - w.conj();
        r * (w + w.conj()) * w / (8.0 * d * d * d * d)
    })
}

/// `-R / [4 (w_k - w̄_k)⁴] - S_k`, with the undefined `Θ̃` read as `Θ`.
pub fn residual_parabolic_nilpotent(s: &SystemState) -> Result<Vec<Complex64>> {
    let r = s.radius().get();
    per_body(s, |w| {
        let d = w - w.conj();
        -r / (4.0 * d * d * d * d)
    })
}

/// `R (1 + w_k²)(1 + |w_k|²) / (w_k - w̄_k)⁴ - S_k`.
pub fn residual_elliptic_cyclic(s: &SystemState) -> Result<Vec<Complex64>> {
    let r = s.radius().get();
    per_body(s, |w| {
        let d = w - w.conj();
        r * (1.0 + w * w) * (1.0 + w.norm_sqr()) / (d * d * d * d)
    })
}

/// The stated conditions for configurations of the two cyclic classes of
/// the degenerate geometries; they are not consistent with the equations of
/// motion (see [`motion_defect`]).
pub fn residual_cyclic_condition(class: EquilibriumClass, s: &SystemState) -> Result<Vec<Complex64>> {
    let r = s.radius().get();
    match class {
        EquilibriumClass::ParabolicCyclic => per_body(s, |w| {
            let wb = w.conj();
            let d = w - wb;
            let n2 = w.norm_sqr();
            -r * (d * d * (8.0 - w * w + 6.0 * n2 + 3.0 * wb * wb) - 16.0 * (1.0 + w * w) * (1.0 + n2))
                / (16.0 * d * d * d * d)
        }),
        EquilibriumClass::HyperbolicCyclic => per_body(s, |w| {
            let wb = w.conj();
            let n2 = w.norm_sqr();
            let num = w * w + 10.0 * n2 + 2.0 * w * n2 + 2.0 * n2 * wb * wb - 2.0 * wb.powu(4)
                + 2.0 * w.powu(4)
                - 3.0 * wb * wb
                + 4.0;
            -num / (2.0 * (w - wb))
        }),
        other => Err(Error::invalid(format!("{other} has no cyclic condition"))),
    }
}

/// The condition of any class evaluated on a configuration.
pub fn residual(class: EquilibriumClass, s: &SystemState) -> Result<Vec<Complex64>> {
    match class {
        EquilibriumClass::HyperbolicNormal => residual_hyperbolic_normal(s),
        EquilibriumClass::ParabolicNilpotent => residual_parabolic_nilpotent(s),
        EquilibriumClass::EllipticCyclic => residual_elliptic_cyclic(s),
        EquilibriumClass::ParabolicCyclic | EquilibriumClass::HyperbolicCyclic => {
            residual_cyclic_condition(class, s)
        }
    }
}

/// How far a configuration is from moving along `kind` at rate `ω`:
/// `ω² ẅ_flow(w_k) - eom_rhs(w, ω ξ(w))_k`, the acceleration the orbit needs
/// minus the one the equations of motion deliver.
pub fn motion_defect(kind: KillingFieldKind, s: &SystemState, rate: f64) -> Result<Vec<Complex64>> {
    let w = s.coords();
    let v: Vec<Complex64> = w.iter().map(|&w| rate * killing_velocity(kind, w)).collect();
    let a = accelerations_raw(&w, &v, s.masses(), s.radius().get(), s.t)?;
    Ok(w.iter().zip(a).map(|(&w, a)| rate * rate * flow_acceleration(kind, w) - a).collect())
}

/// The state at a configuration moving along the class's subgroup at rate `ω`.
pub fn with_orbit_velocities(s: &SystemState, kind: KillingFieldKind, rate: f64) -> Result<SystemState> {
    let v = s.coords().iter().map(|&w| rate * killing_velocity(kind, w)).collect();
    s.with_velocities(v)
}

pub(crate) fn inf_norm(r: &[Complex64]) -> f64 {
    r.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurvatureRadius;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rest(w: &[Complex64], m: &[f64], r: f64) -> SystemState {
        SystemState::at_rest(w, m, CurvatureRadius::new(r).unwrap()).unwrap()
    }

    #[test]
    fn class_names_round_trip() {
        for class in EquilibriumClass::ALL {
            assert_eq!(class.to_string().parse::<EquilibriumClass>().unwrap(), class);
        }
        assert_eq!("ParabolicCyclic".parse::<EquilibriumClass>().unwrap(), EquilibriumClass::ParabolicCyclic);
        assert_eq!("elliptic-cyclic".parse::<EquilibriumClass>().unwrap(), EquilibriumClass::EllipticCyclic);
        assert!("loxodromic".parse::<EquilibriumClass>().is_err());
    }

    #[test]
    fn imaginary_axis_has_zero_normal_lhs() {
        let s = rest(&[c(0.0, 1.0), c(0.0, 2.0)], &[1.0, 1.0], 1.0);
        let r = residual_hyperbolic_normal(&s).unwrap();
        for k in 0..2 {
            assert_eq!(r[k], -interaction_sum(&s, k).unwrap());
        }
    }

    #[test]
    fn single_body_residuals_are_pure_lhs() {
        let s = rest(&[c(0.3, 0.7)], &[1.0], 1.0);
        let w = c(0.3, 0.7);
        let d = w - w.conj();
        assert_eq!(residual_hyperbolic_normal(&s).unwrap()[0], (w + w.conj()) * w / (8.0 * d.powu(4)));
        assert!(residual_parabolic_nilpotent(&s).unwrap()[0].norm() > 0.0);
    }

    #[test]
    fn nilpotent_lhs_is_negative() {
        let s = rest(&[c(0.0, 1.0), c(0.0, 2.0)], &[1.0, 1.0], 1.0);
        let r = residual_parabolic_nilpotent(&s).unwrap();
        let lhs = r[0] + interaction_sum(&s, 0).unwrap();
        assert!((lhs - c(-1.0 / 64.0, 0.0)).norm() < 1e-16);
        for w in [c(0.4, 0.2), c(-3.0, 5.0)] {
            let s = rest(&[w], &[1.0], 2.0);
            assert!(residual_parabolic_nilpotent(&s).unwrap()[0].re < 0.0);
        }
    }

    #[test]
    fn elliptic_fixed_point_has_zero_lhs() {
        let s = rest(&[c(0.0, 1.0), c(0.0, 3.0)], &[1.0, 1.0], 1.0);
        let r = residual_elliptic_cyclic(&s).unwrap();
        assert_eq!(r[0], -interaction_sum(&s, 0).unwrap());
    }

    #[test]
    fn conditions_match_motion_at_their_rates() {
        // The conditions of the existing classes are the motion
        // defects rescaled by a per-body factor, so they vanish together.
        let s = rest(&[c(0.3, 0.9), c(-0.8, 1.7), c(1.2, 0.6)], &[1.0, 2.0, 0.5], 1.5);
        for class in [EquilibriumClass::HyperbolicNormal, EquilibriumClass::EllipticCyclic] {
            let cond = residual(class, &s).unwrap();
            let defect = motion_defect(class.field(), &s, class.rate().unwrap()).unwrap();
            for k in 0..3 {
                let w = s.w(k);
                let d = w - w.conj();
                // defect = -(2 d³ / R) · cond
                let expected = -2.0 * d * d * d / 1.5 * cond[k];
                assert!((defect[k] - expected).norm() < 1e-12 * expected.norm().max(1.0), "{class} {k}");
            }
        }
    }

    #[test]
    fn residuals_permute_with_bodies() {
        let w = [c(0.3, 0.9), c(-0.8, 1.7), c(1.2, 0.6)];
        let m = [1.0, 2.0, 0.5];
        let s = rest(&w, &m, 1.0);
        let perm = [2, 0, 1];
        let ws: Vec<_> = perm.iter().map(|&i| w[i]).collect();
        let ms: Vec<_> = perm.iter().map(|&i| m[i]).collect();
        let sp = rest(&ws, &ms, 1.0);
        for class in EquilibriumClass::ALL {
            let a = residual(class, &s).unwrap();
            let b = residual(class, &sp).unwrap();
            for (i, &p) in perm.iter().enumerate() {
                assert!((a[p] - b[i]).norm() <= 1e-14 * a[p].norm().max(1.0), "{class}");
            }
        }
    }
}
