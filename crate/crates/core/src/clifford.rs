//! Clifford algebras `Cl(σ)`, the `SL(2,R)` group in its matrix and Clifford
//! views, Iwasawa `ANK` factorisation, and the one-parameter subgroups with
//! their Killing vector fields.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `ad - bc = 1` when constructing a [`MobiusElement`].
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// Which of the three four-dimensional Clifford algebras, by the square of `e1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma {
    /// `e1² = -1`
    Elliptic,
    /// `e1² = 0`
    Parabolic,
    /// `e1² = +1`
    Hyperbolic,
}

impl Sigma {
    pub const ALL: [Sigma; 3] = [Sigma::Elliptic, Sigma::Parabolic, Sigma::Hyperbolic];

    pub fn value(self) -> i8 {
        match self {
            Sigma::Elliptic => -1,
            Sigma::Parabolic => 0,
            Sigma::Hyperbolic => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<Sigma> {
        match v {
            -1 => Some(Sigma::Elliptic),
            0 => Some(Sigma::Parabolic),
            1 => Some(Sigma::Hyperbolic),
            _ => None,
        }
    }

    fn square(self) -> f64 {
        f64::from(self.value())
    }
}

/// An element `c1 + c_e0 e0 + c_e1 e1 + c_e01 e0e1` of `Cl(σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffordNumber {
    pub scalar: f64,
    pub e0: f64,
    pub e1: f64,
    pub e01: f64,
    pub sigma: Sigma,
}

impl CliffordNumber {
    pub fn new(scalar: f64, e0: f64, e1: f64, e01: f64, sigma: Sigma) -> Self {
        Self { scalar, e0, e1, e01, sigma }
    }

    pub fn scalar(x: f64, sigma: Sigma) -> Self {
        Self::new(x, 0.0, 0.0, 0.0, sigma)
    }

    pub fn zero(sigma: Sigma) -> Self {
        Self::scalar(0.0, sigma)
    }

    pub fn one(sigma: Sigma) -> Self {
        Self::scalar(1.0, sigma)
    }

    pub fn basis_e0(sigma: Sigma) -> Self {
        Self::new(0.0, 1.0, 0.0, 0.0, sigma)
    }

    pub fn basis_e1(sigma: Sigma) -> Self {
        Self::new(0.0, 0.0, 1.0, 0.0, sigma)
    }

    pub fn basis_e01(sigma: Sigma) -> Self {
        Self::new(0.0, 0.0, 0.0, 1.0, sigma)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.scalar, k * self.e0, k * self.e1, k * self.e01, self.sigma)
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.scalar, self.e0, self.e1, self.e01]
    }

    /// Largest absolute coefficient difference; `f64::INFINITY` across algebras.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.sigma != other.sigma {
            return f64::INFINITY;
        }
        self.coefficients()
            .iter()
            .zip(other.coefficients())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.sigma == other.sigma {
            Ok(())
        } else {
            Err(Error::SigmaMismatch { left: self.sigma.value(), right: other.sigma.value() })
        }
    }

    pub fn try_add(self, other: Self) -> Result<Self> {
        self.check(&other)?;
        Ok(Self::new(
            self.scalar + other.scalar,
            self.e0 + other.e0,
            self.e1 + other.e1,
            self.e01 + other.e01,
            self.sigma,
        ))
    }
}

/// The product of `Cl(σ)`: `e0² = -1`, `e1² = σ`, `e0 e1 = -e1 e0`.
///
/// With `E = e0 e1` the remaining products follow: `e0 E = -e1`, `E e0 = e1`,
/// `e1 E = -σ e0`, `E e1 = σ e0`, `E² = σ`.
pub fn clifford_mul(x: &CliffordNumber, y: &CliffordNumber) -> Result<CliffordNumber> {
    x.check(y)?;
    let s = x.sigma.square();
    let [a0, a1, a2, a3] = x.coefficients();
    let [b0, b1, b2, b3] = y.coefficients();
    Ok(CliffordNumber::new(
        a0 * b0 - a1 * b1 + s * a2 * b2 + s * a3 * b3,
        a0 * b1 + a1 * b0 - s * a2 * b3 + s * a3 * b2,
        a0 * b2 + a2 * b0 - a1 * b3 + a3 * b1,
        a0 * b3 + a3 * b0 + a1 * b2 - a2 * b1,
        x.sigma,
    ))
}

impl Mul for CliffordNumber {
    type Output = CliffordNumber;

    /// Panics when the operands belong to different algebras; use
    /// [`clifford_mul`] for the fallible form.
    fn mul(self, rhs: Self) -> Self {
        clifford_mul(&self, &rhs).expect("clifford operands must share sigma")
    }
}

impl Add for CliffordNumber {
    type Output = CliffordNumber;

    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs).expect("clifford operands must share sigma")
    }
}

impl Sub for CliffordNumber {
    type Output = CliffordNumber;

    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for CliffordNumber {
    type Output = CliffordNumber;

    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

/// A real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, k: f64) -> Mat2 {
        Mat2::new(k * self.a, k * self.b, k * self.c, k * self.d)
    }

    /// Inverse of a unimodular matrix (the adjugate).
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.a * r.a + self.b * r.c,
            self.a * r.b + self.b * r.d,
            self.c * r.a + self.d * r.c,
            self.c * r.b + self.d * r.d,
        )
    }
}

/// A unimodular real matrix acting on the half-plane by `w ↦ (aw+b)/(cw+d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MobiusElement(Mat2);

impl MobiusElement {
    pub const IDENTITY: MobiusElement = MobiusElement(Mat2::IDENTITY);

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::from_matrix(Mat2::new(a, b, c, d))
    }

    pub fn from_matrix(m: Mat2) -> Result<Self> {
        let entries = [m.a, m.b, m.c, m.d];
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        let det = m.det();
        if (det - 1.0).abs() > UNIMODULAR_TOL * m.norm_sqr().max(1.0) {
            return Err(Error::invalid(format!("determinant must be 1, got {det}")));
        }
        Ok(Self(m))
    }

    /// Rescales an invertible matrix with positive determinant onto `SL(2,R)`.
    pub fn normalized(m: Mat2) -> Result<Self> {
        let det = m.det();
        if !(det > 0.0) {
            return Err(Error::invalid(format!(
                "cannot normalise a matrix with determinant {det}"
            )));
        }
        Ok(Self(m.scale(1.0 / det.sqrt())))
    }

    pub fn matrix(&self) -> Mat2 {
        self.0
    }

    pub fn inverse(&self) -> MobiusElement {
        MobiusElement(self.0.adjugate())
    }

    /// The Clifford view `[[a, b e0], [-c e0, d]]`.
    pub fn clifford_view(&self, sigma: Sigma) -> [[CliffordNumber; 2]; 2] {
        let Mat2 { a, b, c, d } = self.0;
        let e0 = CliffordNumber::basis_e0(sigma);
        [
            [CliffordNumber::scalar(a, sigma), e0.scale(b)],
            [e0.scale(-c), CliffordNumber::scalar(d, sigma)],
        ]
    }

    /// Action on a complex point; `None` when `cw + d` vanishes.
    pub fn act(&self, w: Complex64) -> Option<Complex64> {
        let Mat2 { a, b, c, d } = self.0;
        let den = c * w + d;
        if den.norm_sqr() == 0.0 {
            return None;
        }
        Some((a * w + b) / den)
    }

    /// First and second complex derivatives of the action at `w`.
    pub fn derivatives(&self, w: Complex64) -> (Complex64, Complex64) {
        let Mat2 { c, d, .. } = self.0;
        let den = c * w + d;
        let first = (den * den).inv();
        let second = -2.0 * c * first / den;
        (first, second)
    }
}

impl Mul for MobiusElement {
    type Output = MobiusElement;

    fn mul(self, rhs: MobiusElement) -> MobiusElement {
        MobiusElement(self.0 * rhs.0)
    }
}

/// Product of 2×2 matrices of Clifford numbers.
pub fn clifford_matmul(
    x: &[[CliffordNumber; 2]; 2],
    y: &[[CliffordNumber; 2]; 2],
) -> Result<[[CliffordNumber; 2]; 2]> {
    let entry = |i: usize, j: usize| -> Result<CliffordNumber> {
        clifford_mul(&x[i][0], &y[0][j])?.try_add(clifford_mul(&x[i][1], &y[1][j])?)
    };
    Ok([[entry(0, 0)?, entry(0, 1)?], [entry(1, 0)?, entry(1, 1)?]])
}

/// Iwasawa coordinates of an element of `SL(2,R)/{±I}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IwasawaFactors {
    /// Diagonal factor, `1/sqrt(c² + d²)`.
    pub alpha: f64,
    /// Unipotent shift, `ac + bd`.
    pub nu: f64,
    /// Rotation angle in `(-π/2, π/2]`.
    pub phi: f64,
    /// Global sign: `iwasawa_reconstruct(f) == sign * A`.
    pub sign: f64,
    /// `d == 0`, so `phi` came from the limiting value `±π/2`.
    pub limiting: bool,
}

impl IwasawaFactors {
    pub fn new(alpha: f64, nu: f64, phi: f64) -> Self {
        Self { alpha, nu, phi, sign: 1.0, limiting: false }
    }
}

pub fn iwasawa_decompose(m: &MobiusElement) -> IwasawaFactors {
    let Mat2 { a, b, c, d } = m.matrix();
    let alpha = 1.0 / c.hypot(d);
    let nu = a * c + b * d;
    // atan2 gives (-π, π]; fold into (-π/2, π/2] and carry the sign.
    let mut phi = (-c).atan2(d);
    let mut sign = 1.0;
    if phi > FRAC_PI_2 {
        phi -= std::f64::consts::PI;
        sign = -1.0;
    } else if phi <= -FRAC_PI_2 {
        phi += std::f64::consts::PI;
        sign = -1.0;
    }
    IwasawaFactors { alpha, nu, phi, sign, limiting: d == 0.0 }
}

/// `diag(α, 1/α) · [[1, ν], [0, 1]] · rotation(φ)`.
pub fn iwasawa_reconstruct(f: &IwasawaFactors) -> MobiusElement {
    let a = Mat2::new(f.alpha, 0.0, 0.0, 1.0 / f.alpha);
    let n = Mat2::new(1.0, f.nu, 0.0, 1.0);
    let (sin, cos) = f.phi.sin_cos();
    let k = Mat2::new(cos, sin, -sin, cos);
    MobiusElement(a * n * k)
}

/// The generator of a one-parameter subgroup together with the geometry
/// selecting its rotational Killing field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "sigma", rename_all = "snake_case")]
pub enum KillingFieldKind {
    /// `ẇ = w`, the homothetic subgroup `A`.
    NormalA,
    /// `ẇ = 1`, the shift subgroup `N`.
    NilpotentN,
    /// The rotational field of `Cl(σ)`.
    RotationK(Sigma),
}

impl KillingFieldKind {
    pub const ALL: [KillingFieldKind; 5] = [
        KillingFieldKind::NormalA,
        KillingFieldKind::NilpotentN,
        KillingFieldKind::RotationK(Sigma::Elliptic),
        KillingFieldKind::RotationK(Sigma::Parabolic),
        KillingFieldKind::RotationK(Sigma::Hyperbolic),
    ];

    /// Whether the field generates half-plane isometries.
    pub fn is_isometric(self) -> bool {
        !matches!(self, KillingFieldKind::RotationK(Sigma::Parabolic | Sigma::Hyperbolic))
    }

    /// The traceless generator in the matrix model.
    pub fn generator(self) -> Mat2 {
        match self {
            KillingFieldKind::NormalA => Mat2::new(0.5, 0.0, 0.0, -0.5),
            KillingFieldKind::NilpotentN => Mat2::new(0.0, 1.0, 0.0, 0.0),
            KillingFieldKind::RotationK(_) => Mat2::new(0.0, 1.0, -1.0, 0.0),
        }
    }
}

impl fmt::Display for KillingFieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KillingFieldKind::NormalA => f.write_str("normal_a"),
            KillingFieldKind::NilpotentN => f.write_str("nilpotent_n"),
            KillingFieldKind::RotationK(s) => write!(f, "rotation_k(sigma={})", s.value()),
        }
    }
}

pub fn exp_subgroup(kind: KillingFieldKind, t: f64) -> MobiusElement {
    let m = match kind {
        KillingFieldKind::NormalA => Mat2::new((t / 2.0).exp(), 0.0, 0.0, (-t / 2.0).exp()),
        KillingFieldKind::NilpotentN => Mat2::new(1.0, t, 0.0, 1.0),
        KillingFieldKind::RotationK(_) => {
            let (s, c) = t.sin_cos();
            Mat2::new(c, s, -s, c)
        }
    };
    MobiusElement(m)
}

/// Value of the Killing vector field at `w`.
pub fn killing_velocity(kind: KillingFieldKind, w: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let dw = w - w.conj();
    match kind {
        KillingFieldKind::NormalA => w,
        KillingFieldKind::NilpotentN => one,
        KillingFieldKind::RotationK(Sigma::Elliptic) => one + w * w,
        KillingFieldKind::RotationK(Sigma::Parabolic) => one + w * w - dw * dw / 4.0,
        KillingFieldKind::RotationK(Sigma::Hyperbolic) => one + w * w - dw * dw / 2.0,
    }
}

/// Conjugacy class of a one-parameter subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupClass {
    AConjugate,
    NConjugate,
    KConjugate,
}

/// Classifies the subgroup `exp(tX)` by the sign of `det X`.
pub fn classify_subgroup(x: &Mat2) -> Result<SubgroupClass> {
    let norm = x.norm_sqr();
    if norm == 0.0 {
        return Err(Error::invalid("cannot classify the zero generator"));
    }
    let tr = x.trace();
    if tr.abs() > 1e-12 * norm.sqrt() {
        return Err(Error::invalid(format!("generator must be traceless, trace = {tr}")));
    }
    let det = x.det();
    let tol = 1e-12 * norm;
    Ok(if det < -tol {
        SubgroupClass::AConjugate
    } else if det > tol {
        SubgroupClass::KConjugate
    } else {
        SubgroupClass::NConjugate
    })
}
