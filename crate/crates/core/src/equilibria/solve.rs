use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{inf_norm, residual, with_orbit_velocities, EquilibriumClass};
use crate::dynamics::{interaction_sum, SystemState};
use crate::error::{Error, Result};
use crate::geometry::CurvatureRadius;

/// Constraints that reduce the unknowns of the root finder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Every coordinate is free.
    #[default]
    None,
    /// Bodies stay on the imaginary axis; unknowns are the ordinates.
    ImaginaryAxis,
    /// Two bodies mirrored in the imaginary axis, `w_2 = -w̄_1`.
    MirrorPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Target `∞`-norm of the stacked residual.
    pub tol: f64,
    pub max_iterations: usize,
    pub symmetry: Symmetry,
    pub initial_damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iterations: 200, symmetry: Symmetry::None, initial_damping: 1e-3 }
    }
}

/// A configuration satisfying the condition of its class, with the orbit
/// velocities of the subgroup at the class's rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSolution {
    pub class: EquilibriumClass,
    pub state: SystemState,
    pub rate: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    /// Ratio of extreme singular values of the final Jacobian (`inf` when it
    /// is rank deficient, as for scale-invariant classes).
    pub condition: f64,
}

fn unknowns(symmetry: Symmetry, w: &[Complex64]) -> Result<Vec<f64>> {
    match symmetry {
        Symmetry::None => Ok(w.iter().flat_map(|w| [w.re, w.im]).collect()),
        Symmetry::ImaginaryAxis => Ok(w.iter().map(|w| w.im).collect()),
        Symmetry::MirrorPair => {
            if w.len() != 2 {
                return Err(Error::invalid("the mirror-pair symmetry needs exactly two bodies"));
            }
            Ok(vec![w[0].re, w[0].im])
        }
    }
}

fn positions(symmetry: Symmetry, x: &[f64]) -> Vec<Complex64> {
    match symmetry {
        Symmetry::None => x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        Symmetry::ImaginaryAxis => x.iter().map(|&y| Complex64::new(0.0, y)).collect(),
        Symmetry::MirrorPair => {
            let w = Complex64::new(x[0], x[1]);
            vec![w, -w.conj()]
        }
    }
}

/// Steps longer than `MAX_STEP · max(1, |x|∞)` are rejected like steps that
/// raise the cost.
const MAX_STEP: f64 = 0.5;

fn scale(x: &[f64]) -> f64 {
    x.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

struct Problem<'a> {
    class: EquilibriumClass,
    masses: &'a [f64],
    radius: CurvatureRadius,
    symmetry: Symmetry,
    /// `|w_0|` of the ansatz, pinned for classes invariant under dilation.
    gauge: Option<f64>,
}

impl Problem<'_> {
    fn state(&self, x: &[f64]) -> Result<SystemState> {
        SystemState::at_rest(&positions(self.symmetry, x), self.masses, self.radius)
    }

    fn residual(&self, x: &[f64]) -> Result<DVector<f64>> {
        let state = self.state(x)?;
        let r = residual(self.class, &state)?;
        let pinned = self.gauge.map(|g| state.w(0).norm() / g - 1.0);
        Ok(DVector::from_iterator(
            2 * r.len() + pinned.is_some() as usize,
            r.iter().flat_map(|z| [z.re, z.im]).chain(pinned),
        ))
    }

    /// Central-difference Jacobian with step `1e-7 · max(1, |x|∞)`.
    fn jacobian(&self, x: &[f64], rows: usize) -> Result<DMatrix<f64>> {
        let h = 1e-7 * scale(x);
        let mut jac = DMatrix::zeros(rows, x.len());
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let plus = self.residual(&probe)?;
            probe[i] = x[i] - h;
            let minus = self.residual(&probe)?;
            probe[i] = x[i];
            jac.set_column(i, &((plus - minus) / (2.0 * h)));
        }
        Ok(jac)
    }
}

fn condition_estimate(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 { max / min } else { f64::INFINITY }
}

/// Levenberg–Marquardt on the stacked real/imaginary residual of the class's
/// condition, started from the ansatz positions.
///
/// The hyperbolic-normal condition is invariant under `w ↦ λw`, so `|w_0|` is
/// held at its ansatz value by one extra residual row.
///
/// Only the classes with solutions are accepted.
pub fn find_equilibrium(
    class: EquilibriumClass,
    masses: &[f64],
    radius: CurvatureRadius,
    ansatz: &SystemState,
    opts: &SolveOptions,
) -> Result<EquilibriumSolution> {
    let Some(rate) = class.rate() else {
        return Err(Error::ClassNotSolvable { class, reason: class.nonexistence_reason() });
    };
    if masses.len() != ansatz.n() {
        return Err(Error::invalid(format!("{} masses for {} bodies", masses.len(), ansatz.n())));
    }
    if !(opts.tol > 0.0) || opts.initial_damping <= 0.0 {
        return Err(Error::invalid("tolerance and damping must be positive"));
    }
    let gauge = (class == EquilibriumClass::HyperbolicNormal).then(|| ansatz.w(0).norm());
    let problem = Problem { class, masses, radius, symmetry: opts.symmetry, gauge };
    let mut x = unknowns(opts.symmetry, &ansatz.coords())?;
    let mut r = problem.residual(&x)?;
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut condition = f64::NAN;

    while r.amax() >= opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::NoConvergence { iterations, residual: r.amax() });
        }
        iterations += 1;
        let jac = problem.jacobian(&x, r.len())?;
        condition = condition_estimate(&jac);
        if !jac.iter().all(|v| v.is_finite()) || jac.amax() == 0.0 {
            return Err(Error::SingularJacobian { condition });
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let floor = 1e-12 * jtj.diagonal().amax();
        loop {
            let mut damped = jtj.clone();
            for i in 0..x.len() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(floor);
            }
            let step = damped.lu().solve(&(-&grad)).filter(|d| d.amax() <= MAX_STEP * scale(&x));
            let trial = step.map(|d| x.iter().zip(d.iter()).map(|(a, b)| a + b).collect::<Vec<_>>());
            let accepted = trial.and_then(|xn| {
                let rn = problem.residual(&xn).ok()?;
                let cn = rn.norm_squared();
                (cn < cost).then_some((xn, rn, cn))
            });
            match accepted {
                Some((xn, rn, cn)) => {
                    x = xn;
                    r = rn;
                    cost = cn;
                    lambda = (lambda / 10.0).max(1e-15);
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        return Err(Error::NoConvergence { iterations, residual: r.amax() });
                    }
                }
            }
        }
    }

    let state = with_orbit_velocities(&problem.state(&x)?, class.field(), rate)?;
    let residual_inf = inf_norm(&residual(class, &state)?);
    Ok(EquilibriumSolution { class, state, rate, residual_inf, iterations, condition })
}

/// Runs [`find_equilibrium`] from several ansätze in parallel and keeps the
/// converged solution with the smallest residual (ties go to the earliest).
pub fn find_equilibrium_any(
    class: EquilibriumClass,
    masses: &[f64],
    radius: CurvatureRadius,
    ansatze: &[SystemState],
    opts: &SolveOptions,
) -> Result<EquilibriumSolution> {
    if ansatze.is_empty() {
        return Err(Error::invalid("no ansatz given"));
    }
    let results: Vec<Result<EquilibriumSolution>> = ansatze
        .par_iter()
        .map(|a| find_equilibrium(class, masses, radius, a, opts))
        .collect();
    let mut best: Option<EquilibriumSolution> = None;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(sol) if best.as_ref().map_or(true, |b| sol.residual_inf < b.residual_inf) => best = Some(sol),
            Ok(_) => {}
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_error.expect("at least one ansatz ran"))
}

/// The two-body elliptic configuration of the circle parameters `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoBodyElliptic {
    pub alpha: f64,
    pub beta: f64,
    /// Angular rate `ω` of the rotation about `i`.
    pub rate: f64,
    pub radius: f64,
}

impl TwoBodyElliptic {
    /// Body 1 at `iα`, body 2 at `i/β`, on opposite sides of `i` along the
    /// imaginary axis.
    pub fn positions(&self) -> [Complex64; 2] {
        [Complex64::new(0.0, self.alpha), Complex64::new(0.0, 1.0 / self.beta)]
    }

    /// The radius at which the elliptic condition, written for unit
    /// rate, holds for this configuration: `R ω²`.
    pub fn condition_radius(&self) -> f64 {
        self.radius * self.rate * self.rate
    }

    /// The moving state at the axis crossing.
    pub fn state(&self, m1: f64, m2: f64) -> Result<SystemState> {
        let radius = CurvatureRadius::new(self.radius)?;
        let rest = SystemState::at_rest(&self.positions(), &[m1, m2], radius)?;
        with_orbit_velocities(&rest, EquilibriumClass::EllipticCyclic.field(), self.rate)
    }
}

/// `S_k / L_k` with `L_k = (1 + w²)(1 + |w|²)/(w - w̄)⁴`: the value `R ω²`
/// body `k` would need.
fn required_radius_rate(m1: f64, m2: f64, alpha: f64, beta: f64) -> Result<[f64; 2]> {
    let w = [Complex64::new(0.0, alpha), Complex64::new(0.0, 1.0 / beta)];
    let s = SystemState::at_rest(&w, &[m1, m2], CurvatureRadius::UNIT)?;
    let mut out = [0.0; 2];
    for k in 0..2 {
        let v = w[k].im;
        let lhs = (1.0 - v * v) * (1.0 + v * v) / (16.0 * v.powi(4));
        out[k] = interaction_sum(&s, k)?.re / lhs;
    }
    Ok(out)
}

/// For body 1 of mass `m1` on the elliptic circle through `iα` (`α > 1`),
/// the unique `β > 1` placing body 2 of mass `m2` on the circle through
/// `i/β` so that both rotate rigidly about `i` at one common rate.
pub fn two_body_elliptic(m1: f64, m2: f64, alpha: f64, radius: CurvatureRadius) -> Result<TwoBodyElliptic> {
    if !(m1 > 0.0 && m2 > 0.0 && m1.is_finite() && m2.is_finite()) {
        return Err(Error::invalid("masses must be positive"));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must exceed 1, got {alpha}")));
    }
    let g = |log_beta: f64| -> Result<f64> {
        let [a, b] = required_radius_rate(m1, m2, alpha, log_beta.exp())?;
        Ok(a - b)
    };
    // g → -∞ as β → 1⁺ and g > 0 for large β.
    let mut lo = 1e-12f64;
    let mut hi = 2.0 * alpha.ln() + 0.5;
    let mut expansions = 0;
    while g(hi)? <= 0.0 {
        if g(hi)? < 0.0 {
            lo = hi;
        }
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::NoConvergence { iterations: expansions, residual: g(hi)? });
        }
    }
    if g(lo)? >= 0.0 {
        return Err(Error::NoConvergence { iterations: 0, residual: g(lo)? });
    }
    let mut iterations = 0;
    while hi - lo > 1e-15 * hi.max(1.0) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let beta = (0.5 * (lo + hi)).exp();
    let [rr, _] = required_radius_rate(m1, m2, alpha, beta)?;
    if !(rr > 0.0) {
        return Err(Error::NoConvergence { iterations, residual: rr });
    }
    Ok(TwoBodyElliptic { alpha, beta, rate: (rr / radius.get()).sqrt(), radius: radius.get() })
}
