//! The upper half-plane model `Im(w) > 0` with metric `ds² = R² |dw|² / Im(w)²`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::MobiusElement;
use crate::error::{Error, Result};

/// A point of the open upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HalfPlanePoint(Complex64);

impl HalfPlanePoint {
    pub fn new(w: Complex64) -> Result<Self> {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return Err(Error::domain(format!("non-finite point {w}")));
        }
        if !(w.im > 0.0) {
            return Err(Error::domain(format!("Im(w) must be > 0, got {}", w.im)));
        }
        Ok(Self(w))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    #[inline]
    pub fn w(self) -> Complex64 {
        self.0
    }

    #[inline]
    pub fn re(self) -> f64 {
        self.0.re
    }

    #[inline]
    pub fn im(self) -> f64 {
        self.0.im
    }
}

impl From<HalfPlanePoint> for Complex64 {
    fn from(p: HalfPlanePoint) -> Self {
        p.0
    }
}

/// The length scale `R > 0` of the model.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CurvatureRadius(f64);

impl CurvatureRadius {
    pub const UNIT: CurvatureRadius = CurvatureRadius(1.0);

    pub fn new(r: f64) -> Result<Self> {
        if r.is_finite() && r > 0.0 {
            Ok(Self(r))
        } else {
            Err(Error::invalid(format!("curvature radius must be positive, got {r}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for CurvatureRadius {
    type Error = Error;

    fn try_from(r: f64) -> Result<Self> {
        Self::new(r)
    }
}

impl From<CurvatureRadius> for f64 {
    fn from(r: CurvatureRadius) -> f64 {
        r.0
    }
}

/// A complete geodesic: a vertical half-line or a half-circle centred on the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeodesicArc {
    VerticalLine { x0: f64 },
    Circle { center: f64, radius: f64 },
}

impl GeodesicArc {
    /// Euclidean distance from `w` to the curve.
    pub fn deviation(&self, w: Complex64) -> f64 {
        match *self {
            GeodesicArc::VerticalLine { x0 } => (w.re - x0).abs(),
            GeodesicArc::Circle { center, radius } => {
                ((w - Complex64::new(center, 0.0)).norm() - radius).abs()
            }
        }
    }
}

/// The metric coefficient `R² / Im(w)²`.
pub fn conformal_factor(w: HalfPlanePoint, r: CurvatureRadius) -> f64 {
    let v = w.im();
    r.get() * r.get() / (v * v)
}

/// `R · arccosh(1 + |w1 - w2|² / (2 v1 v2))`, evaluated through the
/// equivalent half-angle form `2R · asinh(|w1 - w2| / (2 sqrt(v1 v2)))`.
pub fn hyperbolic_distance(w1: HalfPlanePoint, w2: HalfPlanePoint, r: CurvatureRadius) -> f64 {
    let chord = (w1.w() - w2.w()).norm();
    2.0 * r.get() * (chord / (2.0 * (w1.im() * w2.im()).sqrt())).asinh()
}

/// `ẅ - 2ẇ² / (w - w̄)`; vanishes exactly on geodesic jets.
pub fn geodesic_residual(w: Complex64, wdot: Complex64, wddot: Complex64) -> Result<Complex64> {
    if !(w.im > 0.0) {
        return Err(Error::domain(format!("Im(w) must be > 0, got {}", w.im)));
    }
    Ok(wddot - geodesic_term(w, wdot))
}

/// The Christoffel term `2ẇ² / (w - w̄)`.
#[inline]
pub(crate) fn geodesic_term(w: Complex64, wdot: Complex64) -> Complex64 {
    2.0 * wdot * wdot / Complex64::new(0.0, 2.0 * w.im)
}

pub fn apply_mobius(m: &MobiusElement, w: HalfPlanePoint) -> HalfPlanePoint {
    let z = m
        .act(w.w())
        .expect("cw + d cannot vanish for a real unimodular matrix and Im(w) > 0");
    // Im f(w) = Im(w) / |cw + d|² > 0; only underflow could break this.
    HalfPlanePoint::new(z).expect("Möbius image stays in the half-plane")
}

/// Isometry onto the disk of radius `R`: `z = (-Rw + iR²) / (w + iR)`.
pub fn to_disk(w: HalfPlanePoint, r: CurvatureRadius) -> Complex64 {
    let r = r.get();
    let ir = Complex64::new(0.0, r);
    (-r * w.w() + ir * r) / (w.w() + ir)
}

/// Inverse of [`to_disk`]: `w = iR (R - z) / (R + z)`.
pub fn from_disk(z: Complex64, r: CurvatureRadius) -> Result<HalfPlanePoint> {
    let rr = r.get();
    if !(z.norm() < rr) {
        return Err(Error::domain(format!("|z| = {} must be < R = {rr}", z.norm())));
    }
    let w = Complex64::new(0.0, rr) * (rr - z) / (rr + z);
    HalfPlanePoint::new(w)
}

/// The geodesic through two distinct points.
pub fn geodesic_through(w1: HalfPlanePoint, w2: HalfPlanePoint) -> Result<GeodesicArc> {
    if w1 == w2 {
        return Err(Error::invalid("a geodesic needs two distinct points"));
    }
    let scale = 1f64.max(w1.w().norm()).max(w2.w().norm());
    let dx = w2.re() - w1.re();
    if dx.abs() < 1e-12 * scale {
        return Ok(GeodesicArc::VerticalLine { x0: 0.5 * (w1.re() + w2.re()) });
    }
    let center = (w2.w().norm_sqr() - w1.w().norm_sqr()) / (2.0 * dx);
    let radius = (w1.w() - Complex64::new(center, 0.0)).norm();
    Ok(GeodesicArc::Circle { center, radius })
}

/// The geodesic leaving `w` with tangent `v`.
pub fn geodesic_from_tangent(w: HalfPlanePoint, v: Complex64) -> Result<GeodesicArc> {
    if v.norm() == 0.0 {
        return Err(Error::invalid("tangent vector must be non-zero"));
    }
    if v.re.abs() < 1e-12 * v.norm() {
        return Ok(GeodesicArc::VerticalLine { x0: w.re() });
    }
    // The centre c satisfies (w - c) ⟂ v.
    let center = w.re() + w.im() * v.im / v.re;
    let radius = (w.w() - Complex64::new(center, 0.0)).norm();
    Ok(GeodesicArc::Circle { center, radius })
}
