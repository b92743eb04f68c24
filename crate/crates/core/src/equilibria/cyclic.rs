use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::EquilibriumClass;
use crate::dynamics::{theta_min, theta_raw};
use crate::error::{Error, Result};
use crate::flows::POLE_GUARD;

/// Initial data `(α, β)` of each body's cyclic orbit and the isometric
/// variable `s = tan t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub s: f64,
}

impl CyclicParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, s: f64) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::invalid(format!(
                "need matching non-empty alpha and beta, got {} and {}",
                alpha.len(),
                beta.len()
            )));
        }
        if !(s.is_finite() && alpha.iter().chain(&beta).all(|x| x.is_finite())) {
            return Err(Error::invalid("cyclic parameters must be finite"));
        }
        Ok(Self { alpha, beta, s })
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    fn check_poles(&self, both: bool) -> Result<()> {
        for (l, (&a, &b)) in self.alpha.iter().zip(&self.beta).enumerate() {
            let bad_a = (1.0 - a * self.s).abs() <= POLE_GUARD;
            let bad_b = both && (1.0 - b * self.s).abs() <= POLE_GUARD;
            if bad_a || bad_b {
                return Err(Error::domain(format!("body {l} sits on a pole of the reparametrisation at s = {}", self.s)));
            }
        }
        Ok(())
    }
}

/// The letters `A, B, C, D` per body and `Ξ` per pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxLetters {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    /// `Ξ_(k,j)`, symmetric.
    pub xi: Vec<Vec<f64>>,
}

/// `A_l = (α_l + s) / [2(1 - α_l s)]`, `B_l` likewise with `β_l`,
/// `C = A + B`, `D = A - B`, and
/// `Ξ_(k,j) = u_j² + u_k² + β_j²(1+s²)²/(1-α_j s)⁴ + β_k²(1+s²)²/(1-α_k s)⁴`
/// with `u_l = (α_l + s)/(1 - α_l s)`.
pub fn aux_letters(p: &CyclicParams) -> Result<AuxLetters> {
    p.check_poles(true)?;
    let s = p.s;
    let a: Vec<f64> = p.alpha.iter().map(|&x| (x + s) / (2.0 * (1.0 - x * s))).collect();
    let b: Vec<f64> = p.beta.iter().map(|&x| (x + s) / (2.0 * (1.0 - x * s))).collect();
    let c = a.iter().zip(&b).map(|(a, b)| a + b).collect();
    let d = a.iter().zip(&b).map(|(a, b)| a - b).collect();
    let q = 1.0 + s * s;
    let term: Vec<f64> = p
        .alpha
        .iter()
        .zip(&p.beta)
        .map(|(&al, &be)| {
            let u = (al + s) / (1.0 - al * s);
            u * u + be * be * q * q / (1.0 - al * s).powi(4)
        })
        .collect();
    let xi = (0..p.n()).map(|k| (0..p.n()).map(|j| term[k] + term[j]).collect()).collect();
    Ok(AuxLetters { a, b, c, d, xi })
}

/// Positions `w_k(s)` of the cyclic ansatz of `class`.
pub fn cyclic_positions(class: EquilibriumClass, p: &CyclicParams) -> Result<Vec<Complex64>> {
    let s = p.s;
    match class {
        EquilibriumClass::ParabolicCyclic => {
            p.check_poles(false)?;
            Ok(p.alpha
                .iter()
                .zip(&p.beta)
                .map(|(&a, &b)| {
                    let den = 1.0 - a * s;
                    Complex64::new((a + s) / den, b * (1.0 + s * s) / (den * den))
                })
                .collect())
        }
        EquilibriumClass::HyperbolicCyclic => {
            let l = aux_letters(p)?;
            Ok(l.c.iter().zip(&l.d).map(|(&c, &d)| Complex64::new(c, d)).collect())
        }
        other => Err(Error::invalid(format!("{other} has no cyclic ansatz"))),
    }
}

/// Both sides of one family of equations, one entry per body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sides {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Sides {
    fn with_capacity(n: usize) -> Self {
        Self { lhs: Vec::with_capacity(n), rhs: Vec::with_capacity(n) }
    }

    pub fn residual(&self) -> Vec<f64> {
        self.lhs.iter().zip(&self.rhs).map(|(l, r)| l - r).collect()
    }
}

/// The real-part and imaginary-part families of a cyclic class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclicResidual {
    pub real: Sides,
    pub imag: Sides,
}

impl CyclicResidual {
    pub fn real_residual(&self) -> Vec<f64> {
        self.real.residual()
    }

    pub fn imag_residual(&self) -> Vec<f64> {
        self.imag.residual()
    }
}

/// `Θ` of every pair of the ansatz positions, guarded like the dynamics.
fn pair_thetas(w: &[Complex64]) -> Result<Vec<Vec<f64>>> {
    let guard = theta_min(w);
    let n = w.len();
    let mut th = vec![vec![0.0; n]; n];
    for k in 0..n {
        for j in k + 1..n {
            let value = theta_raw(w[k], w[j]);
            if !(value > guard) {
                return Err(Error::Singularity { pair: (k, j), theta: value, t: f64::NAN });
            }
            th[k][j] = value;
            th[j][k] = value;
        }
    }
    Ok(th)
}

fn check_masses(p: &CyclicParams, masses: &[f64], radius: f64) -> Result<()> {
    if masses.len() != p.n() {
        return Err(Error::invalid(format!("{} masses for {} bodies", masses.len(), p.n())));
    }
    if masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::invalid("masses must be positive"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("curvature radius must be positive"));
    }
    Ok(())
}

/// The two families obtained by substituting the parabolic cyclic ansatz
/// `w_k(s) = u_k + i v_k`, `u = (α+s)/(1-αs)`, `v = β(1+s²)/(1-αs)²`.
///
/// The interaction side of the imaginary family carries the
/// `v_j² - v_k²` term with the sign that direct substitution produces.
pub fn residual_parabolic_cyclic(p: &CyclicParams, masses: &[f64], radius: f64) -> Result<CyclicResidual> {
    check_masses(p, masses, radius)?;
    if let Some(k) = p.beta.iter().position(|&b| b == 0.0) {
        return Err(Error::domain(format!("beta_{k} = 0 puts body {k} on the real axis")));
    }
    let w = cyclic_positions(EquilibriumClass::ParabolicCyclic, p)?;
    let th = pair_thetas(&w)?;
    let s = p.s;
    let q = 1.0 + s * s;
    let n = p.n();
    let (mut real, mut imag) = (Sides::with_capacity(n), Sides::with_capacity(n));
    for k in 0..n {
        let (ak, bk) = (p.alpha[k], p.beta[k]);
        let ek = 1.0 - ak * s;
        let uk = w[k].re;
        let one_a = 1.0 + ak * ak;
        real.lhs.push(radius * (ak + s) * one_a * ek * ek / (64.0 * bk * bk * q.powi(5)));
        imag.lhs.push(-radius * one_a * (one_a * ek * ek + 2.0) * ek * ek / (64.0 * bk * bk * q.powi(4)));
        let (mut re, mut im) = (0.0, 0.0);
        for j in (0..n).filter(|&j| j != k) {
            let (aj, bj) = (p.alpha[j], p.beta[j]);
            let ej = 1.0 - aj * s;
            let weight = masses[j] * bj * bj / (th[k][j].powf(1.5) * ej.powi(4));
            let du = w[j].re - uk;
            re += weight * du;
            im += weight * (du * du + q * (bj * bj / ej.powi(4) - bk * bk / ek.powi(4)));
        }
        real.rhs.push(re);
        imag.rhs.push(im);
    }
    Ok(CyclicResidual { real, imag })
}

/// The two families obtained by substituting the hyperbolic cyclic ansatz
/// `w_k(s) = C_k + i D_k`.
pub fn residual_hyperbolic_cyclic(p: &CyclicParams, masses: &[f64], radius: f64) -> Result<CyclicResidual> {
    check_masses(p, masses, radius)?;
    let letters = aux_letters(p)?;
    if let Some(k) = letters.d.iter().position(|&d| d == 0.0) {
        return Err(Error::domain(format!("alpha_{k} = beta_{k} puts body {k} on the real axis")));
    }
    let w = cyclic_positions(EquilibriumClass::HyperbolicCyclic, p)?;
    let th = pair_thetas(&w)?;
    let s = p.s;
    let q = 1.0 + s * s;
    let n = p.n();
    let (c, d) = (&letters.c, &letters.d);
    let (mut real, mut imag) = (Sides::with_capacity(n), Sides::with_capacity(n));
    for k in 0..n {
        let (ak, bk) = (p.alpha[k], p.beta[k]);
        let (ea, eb) = (1.0 - ak * s, 1.0 - bk * s);
        let (one_a, one_b) = (1.0 + ak * ak, 1.0 + bk * bk);
        let sum_ab = ak + bk;

        let re_lhs = q * q * (ak * one_a / ea.powi(3) + bk * one_b / eb.powi(3))
            + s * q * (one_a / ea.powi(2) + bk * one_b / eb.powi(2))
            - 4.0 * (sum_ab + 2.0 * (1.0 - sum_ab) * s - sum_ab * s * s) / (q * ea * eb)
                * (one_a / ea.powi(2) + one_b / eb.powi(2));
        let im_lhs = q * q * (ak * one_a / ea.powi(3) - bk * one_b / eb.powi(3))
            + s * q * (one_a / ea.powi(2) - bk * one_b / eb.powi(2))
            + 8.0 * one_a * one_b / ((ak - bk) * q * ea * eb);

        let diff3 = (ak - bk).powi(3);
        let (mut re, mut im) = (0.0, 0.0);
        for j in (0..n).filter(|&j| j != k) {
            let pq = (p.alpha[j] + s) / (1.0 - p.alpha[j] * s) - (p.beta[j] + s) / (1.0 - p.beta[j] * s);
            let weight = pq * pq * masses[j] / th[k][j].powf(1.5);
            let dc = c[j] - c[k];
            re += weight * d[k] * dc;
            im += weight * (d[k] * d[k] - d[j] * d[j] - dc * dc);
        }
        real.lhs.push(re_lhs);
        real.rhs.push(4.0 * q.powi(3) * diff3 / radius * re);
        imag.lhs.push(im_lhs);
        imag.rhs.push(-2.0 * q.powi(3) * diff3 / radius * im);
    }
    Ok(CyclicResidual { real, imag })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{interaction_accelerations, SystemState};
    use crate::geometry::CurvatureRadius;

    fn params(alpha: &[f64], beta: &[f64], s: f64) -> CyclicParams {
        CyclicParams::new(alpha.to_vec(), beta.to_vec(), s).unwrap()
    }

    #[test]
    fn letters_at_zero() {
        let l = aux_letters(&params(&[0.4, -1.0], &[-0.4, 3.0], 0.0)).unwrap();
        assert_eq!(l.a, vec![0.2, -0.5]);
        assert_eq!(l.b, vec![-0.2, 1.5]);
        assert_eq!(l.c[0], 0.0);
        assert_eq!(l.d[0], 0.4);
        let same = aux_letters(&params(&[0.7], &[0.7], 0.3)).unwrap();
        assert_eq!(same.d[0], 0.0);
        for k in 0..2 {
            assert_eq!(l.c[k], l.a[k] + l.b[k]);
            assert_eq!(l.d[k], l.a[k] - l.b[k]);
        }
    }

    #[test]
    fn xi_matches_positions() {
        let p = params(&[0.2, -0.3], &[1.1, 0.6], 0.4);
        let l = aux_letters(&p).unwrap();
        let w = cyclic_positions(EquilibriumClass::ParabolicCyclic, &p).unwrap();
        let expected = w[0].norm_sqr() + w[1].norm_sqr();
        assert!((l.xi[0][1] - expected).abs() < 1e-13);
        assert_eq!(l.xi[0][1], l.xi[1][0]);
    }

    #[test]
    fn poles_are_rejected() {
        assert!(aux_letters(&params(&[2.0], &[0.1], 0.5)).is_err());
        assert!(cyclic_positions(EquilibriumClass::ParabolicCyclic, &params(&[2.0], &[1.0], 0.5)).is_err());
    }

    #[test]
    fn parabolic_axis_real_part_vanishes() {
        let r = residual_parabolic_cyclic(&params(&[0.0; 3], &[1.0, 2.0, 0.5], 0.0), &[1.0, 2.0, 3.0], 1.0)
            .unwrap();
        assert_eq!(r.real_residual(), vec![0.0; 3]);
    }

    #[test]
    fn hyperbolic_axis_real_interaction_vanishes() {
        let r = residual_hyperbolic_cyclic(&params(&[1.0, 2.0], &[-1.0, -2.0], 0.0), &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(r.real.rhs, vec![0.0; 2]);
    }

    #[test]
    fn single_body_has_empty_sums() {
        let r = residual_parabolic_cyclic(&params(&[0.2], &[1.0], 0.1), &[1.0], 1.0).unwrap();
        assert_eq!((r.real.rhs[0], r.imag.rhs[0]), (0.0, 0.0));
        let r = residual_hyperbolic_cyclic(&params(&[0.5], &[-0.5], 0.1), &[1.0], 1.0).unwrap();
        assert_eq!((r.real.rhs[0], r.imag.rhs[0]), (0.0, 0.0));
    }

    /// Interaction accelerations of the dynamics at the `s = 0` positions.
    fn eom_interaction(w: &[Complex64], m: &[f64], r: f64) -> Vec<Complex64> {
        let s = SystemState::at_rest(w, m, CurvatureRadius::new(r).unwrap()).unwrap();
        interaction_accelerations(&s).unwrap()
    }

    #[test]
    fn families_agree_with_direct_substitution_at_zero() {
        let (m, r) = ([0.7, 1.9, 1.2], 1.3);
        let p = params(&[0.3, -0.6, 0.9], &[0.8, 1.7, 0.4], 0.0);
        let fam = residual_parabolic_cyclic(&p, &m, r).unwrap();
        let w = cyclic_positions(EquilibriumClass::ParabolicCyclic, &p).unwrap();
        let a = eom_interaction(&w, &m, r);
        for k in 0..3 {
            let v = p.beta[k];
            let re = a[k].re * r / (128.0 * v.powi(4));
            let im = a[k].im * r / (64.0 * v.powi(3));
            assert!((fam.real.rhs[k] - re).abs() < 1e-9 * re.abs(), "{k}");
            assert!((fam.imag.rhs[k] - im).abs() < 1e-9 * im.abs(), "{k}");
        }

        let p = params(&[0.9, 1.5, 0.2], &[-0.5, 0.3, -1.4], 0.0);
        let fam = residual_hyperbolic_cyclic(&p, &m, r).unwrap();
        let w = cyclic_positions(EquilibriumClass::HyperbolicCyclic, &p).unwrap();
        let a = eom_interaction(&w, &m, r);
        for k in 0..3 {
            assert!((fam.real.rhs[k] - a[k].re).abs() < 1e-9 * a[k].re.abs(), "{k}");
            assert!((fam.imag.rhs[k] - a[k].im).abs() < 1e-9 * a[k].im.abs(), "{k}");
        }
    }
}
