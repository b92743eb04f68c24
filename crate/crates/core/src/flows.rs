//! Closed-form flows of the five Killing fields and transport of solutions
//! along them.
//!
//! The fields `w`, `1` and `1 + w²` generate half-plane isometries and flow
//! by Möbius maps. The rotational fields of the parabolic and hyperbolic
//! algebras are not isometries of the half-plane; their flows are the explicit
//! solutions of the real systems
//!
//! * `σ = 0`: `u̇ = 1 + u²`, `v̇ = 2uv`, solved by
//!   `u = (α + s)/(1 - αs)`, `v = β(1 + s²)/(1 - αs)²` with `s = tan t`;
//! * `σ = +1`: `u̇ = 1 + u² + v²`, `v̇ = 2uv`, solved through `u ± v`, each of
//!   which obeys `ṗ = 1 + p²`.
//!
//! Along the tan reparametrisation `ds/dt = 1 + s²`, so
//! `ẇ = (1 + s²) w'` and `ẅ = (1 + s²)² w'' + 2s(1 + s²) w'`.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::clifford::{exp_subgroup, killing_velocity, KillingFieldKind, MobiusElement, Sigma};
use crate::dynamics::{accelerations_raw, Trajectory};
use crate::error::{Error, Result};

/// Closed forms are rejected once `|1 - α tan t|` falls below this.
pub const POLE_GUARD: f64 = 1e-8;

/// Positions of a set of bodies along a flow at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    /// `tan t` for the rotational fields, absent otherwise.
    pub s: Option<f64>,
    pub w: Vec<Complex64>,
}

fn check_point(w0: Complex64) -> Result<()> {
    if !(w0.re.is_finite() && w0.im.is_finite() && w0.im > 0.0) {
        return Err(Error::domain(format!("flow start {w0} is not in the upper half-plane")));
    }
    Ok(())
}

/// First pole of `s ↦ (c + s)/(1 - c s)` reached from `t = 0`, by direction.
fn pole_times(c: f64) -> (f64, f64) {
    let t = FRAC_PI_2 - c.atan();
    (t - std::f64::consts::PI, t)
}

/// The open interval of `t` around 0 on which the closed form of `kind`
/// started at `w0` is defined.
pub fn admissible_interval(kind: KillingFieldKind, w0: Complex64) -> (f64, f64) {
    let clip = |(lo, hi): (f64, f64)| (lo.max(-FRAC_PI_2), hi.min(FRAC_PI_2));
    match kind {
        KillingFieldKind::NormalA | KillingFieldKind::NilpotentN => (f64::NEG_INFINITY, f64::INFINITY),
        KillingFieldKind::RotationK(Sigma::Elliptic) => (f64::NEG_INFINITY, f64::INFINITY),
        KillingFieldKind::RotationK(Sigma::Parabolic) => clip(pole_times(w0.re)),
        KillingFieldKind::RotationK(Sigma::Hyperbolic) => {
            let (a_lo, a_hi) = pole_times(w0.re + w0.im);
            let (b_lo, b_hi) = pole_times(w0.re - w0.im);
            clip((a_lo.max(b_lo), a_hi.min(b_hi)))
        }
    }
}

fn guarded_denominator(c: f64, s: f64, t: f64, w0: Complex64, kind: KillingFieldKind) -> Result<f64> {
    let den = 1.0 - c * s;
    if den.abs() <= POLE_GUARD {
        let (lo, hi) = admissible_interval(kind, w0);
        return Err(Error::Pole { t: if t >= 0.0 { hi } else { lo } });
    }
    Ok(den)
}

/// Image of `w0` under the flow of `kind` at time `t`.
pub fn flow(kind: KillingFieldKind, w0: Complex64, t: f64) -> Result<Complex64> {
    check_point(w0)?;
    if !t.is_finite() {
        return Err(Error::invalid("flow time must be finite"));
    }
    match kind {
        KillingFieldKind::NormalA => Ok(t.exp() * w0),
        KillingFieldKind::NilpotentN => Ok(w0 + t),
        KillingFieldKind::RotationK(Sigma::Elliptic) => exp_subgroup(kind, t)
            .act(w0)
            .ok_or_else(|| Error::domain("rotation image is undefined")),
        KillingFieldKind::RotationK(sigma) => {
            let (lo, hi) = admissible_interval(kind, w0);
            if !(t > lo && t < hi) {
                return Err(Error::Pole { t: if t >= 0.0 { hi } else { lo } });
            }
            let s = t.tan();
            if sigma == Sigma::Parabolic {
                let (alpha, beta) = (w0.re, w0.im);
                let den = guarded_denominator(alpha, s, t, w0, kind)?;
                Ok(Complex64::new((alpha + s) / den, beta * (1.0 + s * s) / (den * den)))
            } else {
                let (alpha, beta) = (w0.re + w0.im, w0.re - w0.im);
                let a = (alpha + s) / (2.0 * guarded_denominator(alpha, s, t, w0, kind)?);
                let b = (beta + s) / (2.0 * guarded_denominator(beta, s, t, w0, kind)?);
                Ok(Complex64::new(a + b, a - b))
            }
        }
    }
}

/// Acceleration `ẅ = ξ_w ξ + ξ_w̄ ξ̄` of a point moving along the flow.
pub fn flow_acceleration(kind: KillingFieldKind, w: Complex64) -> Complex64 {
    let xi = killing_velocity(kind, w);
    let dw = w - w.conj();
    let (xi_w, xi_wbar) = match kind {
        KillingFieldKind::NormalA => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        KillingFieldKind::NilpotentN => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        KillingFieldKind::RotationK(sigma) => {
            let c = match sigma {
                Sigma::Elliptic => 0.0,
                Sigma::Parabolic => 0.25,
                Sigma::Hyperbolic => 0.5,
            };
            (2.0 * w - 2.0 * c * dw, 2.0 * c * dw)
        }
    };
    xi_w * xi + xi_wbar * xi.conj()
}

/// Errors of the numeric derivative checks of a closed-form flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// Relative error between `d/dt flow` and the Killing field at `flow(t)`.
    pub velocity: f64,
    /// Relative error between `d/dt` and `(1 + s²) d/ds`.
    pub chain_rule_velocity: f64,
    /// Relative error between `d²/dt²`, the second chain-rule identity and
    /// [`flow_acceleration`].
    pub chain_rule_acceleration: f64,
}

impl DerivativeCheck {
    pub fn max(&self) -> f64 {
        self.velocity.max(self.chain_rule_velocity).max(self.chain_rule_acceleration)
    }
}

fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// Five-point first and second derivatives of `f` at `x`.
fn stencil(f: impl Fn(f64) -> Result<Complex64>, x: f64, h: f64) -> Result<(Complex64, Complex64)> {
    let (m2, m1, c0, p1, p2) = (f(x - 2.0 * h)?, f(x - h)?, f(x)?, f(x + h)?, f(x + 2.0 * h)?);
    let first = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let second = (-m2 + 16.0 * m1 - 30.0 * c0 + 16.0 * p1 - p2) / (12.0 * h * h);
    Ok((first, second))
}

/// Compares finite differences of `flow(kind, w0, ·)` at `t` (step `h`) with
/// the Killing field and with the tan-reparametrised chain rule.
pub fn flow_derivative_check(kind: KillingFieldKind, w0: Complex64, t: f64, h: f64) -> Result<DerivativeCheck> {
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let w = flow(kind, w0, t)?;
    let (dt1, dt2) = stencil(|x| flow(kind, w0, x), t, h)?;
    let velocity = rel_err(dt1, killing_velocity(kind, w));

    let s = t.tan();
    let hs = h * (1.0 + s * s);
    let (ds1, ds2) = stencil(|x| flow(kind, w0, x.atan()), s, hs)?;
    let q = 1.0 + s * s;
    let chain_v = q * ds1;
    let chain_a = q * q * ds2 + 2.0 * s * q * ds1;
    let analytic_a = flow_acceleration(kind, w);
    Ok(DerivativeCheck {
        velocity,
        chain_rule_velocity: rel_err(chain_v, dt1),
        chain_rule_acceleration: rel_err(chain_a, dt2).max(rel_err(analytic_a, dt2)),
    })
}

/// Flow samples of several starting points on a time grid.
pub fn flow_samples(kind: KillingFieldKind, w0: &[Complex64], times: &[f64]) -> Result<Vec<FlowSample>> {
    let rotational = matches!(kind, KillingFieldKind::RotationK(_));
    times
        .iter()
        .map(|&t| {
            let w = w0.iter().map(|&w| flow(kind, w, t)).collect::<Result<Vec<_>>>()?;
            Ok(FlowSample { t, s: rotational.then(|| t.tan()), w })
        })
        .collect()
}

/// CSV with header `t,s,k,re,im`; `s` is empty for non-rotational fields.
pub fn write_flow_csv<W: Write>(samples: &[FlowSample], mut out: W) -> io::Result<()> {
    writeln!(out, "t,s,k,re,im")?;
    for sample in samples {
        let s = sample.s.map(|s| format!("{s:.16e}")).unwrap_or_default();
        for (k, w) in sample.w.iter().enumerate() {
            writeln!(out, "{:.16e},{s},{k},{:.16e},{:.16e}", sample.t, w.re, w.im)?;
        }
    }
    Ok(())
}

/// A map carrying solutions to candidate solutions.
#[derive(Debug, Clone, PartialEq)]
pub enum Transport {
    /// The flow of one field for a fixed group time.
    Subgroup { kind: KillingFieldKind, time: f64 },
    /// Flows applied right to left, as in `exp(t₁X₁)·exp(t₂X₂)`.
    Composite(Vec<(KillingFieldKind, f64)>),
    Mobius(MobiusElement),
}

/// Position, velocity and acceleration of one body.
type Jet = (Complex64, Complex64, Complex64);

fn transport_mobius(m: &MobiusElement, (w, v, a): Jet) -> Result<Jet> {
    let z = m.act(w).ok_or_else(|| Error::domain("Möbius image is undefined"))?;
    let (d1, d2) = m.derivatives(w);
    Ok((z, d1 * v, d2 * v * v + d1 * a))
}

/// Transport through a non-holomorphic flow map: the spatial differential by
/// central differences of step `1e-6`, the second differential along the
/// velocity with step `1e-4`, both scaled by `max(1, |w|)`.
fn transport_flow(kind: KillingFieldKind, time: f64, (w, v, a): Jet) -> Result<Jet> {
    let phi = |p: Complex64| flow(kind, p, time);
    let z = phi(w)?;
    let scale = w.norm().max(1.0);
    let h = 1e-6 * scale;
    let dx = (phi(w + h)? - phi(w - h)?) / (2.0 * h);
    let ih = Complex64::new(0.0, h);
    let dy = (phi(w + ih)? - phi(w - ih)?) / (2.0 * h);
    let jac = |d: Complex64| dx * d.re + dy * d.im;
    let speed = v.norm();
    let second = if speed == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let eps = 1e-4 * scale / speed;
        (phi(w + eps * v)? - 2.0 * z + phi(w - eps * v)?) / (eps * eps)
    };
    Ok((z, jac(v), second + jac(a)))
}

impl Transport {
    fn steps(&self) -> Vec<(KillingFieldKind, f64)> {
        match self {
            Transport::Subgroup { kind, time } => vec![(*kind, *time)],
            Transport::Composite(parts) => parts.clone(),
            Transport::Mobius(_) => Vec::new(),
        }
    }

    /// The single Möbius map realising the transport, when every factor is
    /// an isometry.
    pub fn as_mobius(&self) -> Option<MobiusElement> {
        if let Transport::Mobius(m) = self {
            return Some(*m);
        }
        let steps = self.steps();
        if steps.iter().any(|(k, _)| !k.is_isometric()) {
            return None;
        }
        Some(steps.iter().fold(MobiusElement::IDENTITY, |acc, &(k, t)| acc * exp_subgroup(k, t)))
    }

    fn apply_jet(&self, jet: Jet) -> Result<Jet> {
        if let Some(m) = self.as_mobius() {
            return transport_mobius(&m, jet);
        }
        self.steps().iter().rev().try_fold(jet, |j, &(kind, time)| {
            if kind.is_isometric() {
                transport_mobius(&exp_subgroup(kind, time), j)
            } else {
                transport_flow(kind, time, j)
            }
        })
    }

    /// Image of a single point.
    pub fn apply(&self, w: Complex64) -> Result<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        Ok(self.apply_jet((w, zero, zero))?.0)
    }
}

/// Largest equations-of-motion defect along a transported trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst_time: f64,
    pub worst_body: usize,
    pub samples: usize,
}

/// [`verify_invariance_with`] for the flow of `kind` at `group_time`.
pub fn verify_invariance(traj: &Trajectory, kind: KillingFieldKind, group_time: f64) -> Result<ResidualReport> {
    verify_invariance_with(traj, &Transport::Subgroup { kind, time: group_time })
}

/// Transports every sample of `traj` (positions, velocities and the stored
/// accelerations, by the chain rule) and measures `|z̈_k - eom_rhs(z, ż)_k|`.
pub fn verify_invariance_with(traj: &Trajectory, transport: &Transport) -> Result<ResidualReport> {
    let mut report = ResidualReport {
        max_residual: 0.0,
        mean_residual: 0.0,
        worst_time: traj.initial().t,
        worst_body: 0,
        samples: traj.len(),
    };
    let mut total = 0.0;
    for (s, acc) in traj.samples().iter().zip(traj.accelerations()) {
        let n = s.n();
        let mut z = Vec::with_capacity(n);
        let mut zdot = Vec::with_capacity(n);
        let mut zddot = Vec::with_capacity(n);
        for k in 0..n {
            let (p, v, a) = transport.apply_jet((s.w(k), s.velocities()[k], acc[k]))?;
            z.push(p);
            zdot.push(v);
            zddot.push(a);
        }
        let rhs = accelerations_raw(&z, &zdot, s.masses(), s.radius().get(), s.t)?;
        for k in 0..n {
            let r = (zddot[k] - rhs[k]).norm();
            total += r;
            if r > report.max_residual {
                report.max_residual = r;
                report.worst_time = s.t;
                report.worst_body = k;
            }
        }
    }
    report.mean_residual = total / (traj.len() * traj.initial().n()) as f64;
    Ok(report)
}

/// Largest distance `|w_k(t) - flow(kind, w_k(t₀), rate·(t - t₀))|` over the
/// samples: zero exactly when the trajectory is the orbit of its initial
/// configuration under the subgroup.
pub fn relative_equilibrium_defect(traj: &Trajectory, kind: KillingFieldKind, rate: f64) -> Result<f64> {
    let s0 = traj.initial();
    let mut worst = 0.0f64;
    for s in traj.samples() {
        for k in 0..s.n() {
            let expected = flow(kind, s0.w(k), rate * (s.t - s0.t))?;
            worst = worst.max((s.w(k) - expected).norm());
        }
    }
    Ok(worst)
}
