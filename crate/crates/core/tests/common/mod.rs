#![allow(dead_code)]

use hyperbolic_nbody::clifford::iwasawa_reconstruct;
use hyperbolic_nbody::{
    Complex64, CurvatureRadius, IwasawaFactors, MobiusElement, SystemState,
};
use proptest::prelude::*;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Every element of `PSL(2,R)` as `A N K` with bounded factors.
pub fn unimodular() -> impl Strategy<Value = MobiusElement> {
    (-1.5f64..1.5, -3.0f64..3.0, -1.5f64..1.5)
        .prop_map(|(la, nu, phi)| iwasawa_reconstruct(&IwasawaFactors::new(la.exp(), nu, phi)))
}

pub fn point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, 0.1f64..5.0).prop_map(|(x, y)| c(x, y))
}

pub fn velocity() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| c(x, y))
}

/// `n` bodies pairwise at least `min_sep` apart in the hyperbolic distance.
pub fn state(n: std::ops::RangeInclusive<usize>, min_sep: f64) -> impl Strategy<Value = SystemState> {
    n.prop_flat_map(|n| {
        (
            proptest::collection::vec(point(), n),
            proptest::collection::vec(velocity(), n),
            proptest::collection::vec(0.2f64..3.0, n),
            prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
        )
    })
    .prop_filter_map("bodies too close", move |(w, v, m, r)| {
        let radius = CurvatureRadius::new(r).ok()?;
        let s = SystemState::from_coords(0.0, &w, &v, &m, radius).ok()?;
        let separated = (0..w.len()).all(|k| {
            (k + 1..w.len()).all(|j| distance(w[k], w[j]) > min_sep)
        });
        separated.then_some(s)
    })
}

/// Unit-radius hyperbolic distance.
pub fn distance(a: Complex64, b: Complex64) -> f64 {
    (1.0 + (a - b).norm_sqr() / (2.0 * a.im * b.im)).acosh()
}

pub fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Proptest settings without on-disk regression files.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, failure_persistence: None, ..ProptestConfig::default() }
}
