//! Acceptance suite: one pass/fail line per criterion, tolerances pinned
//! below. Random inputs come from ChaCha8 streams of fixed seeds.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use hyperbolic_nbody::clifford::{
    classify_subgroup, clifford_mul, exp_subgroup, iwasawa_decompose, iwasawa_reconstruct,
};
use hyperbolic_nbody::dynamics::{eom_rhs, gradient_consistency, integrate, vlasov_weak_residual, WeakTestFunction};
use hyperbolic_nbody::equilibria::{
    certify_nonexistence, contradiction_parabolic, find_equilibrium, two_body_elliptic,
};
use hyperbolic_nbody::flows::{admissible_interval, flow, relative_equilibrium_defect, verify_invariance};
use hyperbolic_nbody::geometry::{apply_mobius, from_disk, geodesic_residual, hyperbolic_distance, to_disk};
use hyperbolic_nbody::{
    CliffordNumber, Complex64, CurvatureRadius, EquilibriumClass, HalfPlanePoint, IntegrateOptions,
    KillingFieldKind, Mat2, MobiusElement, Sigma, SolveOptions, SubgroupClass, Symmetry, SystemState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MOBIUS_SAMPLES: usize = 10_000;
const MOBIUS_TOL: f64 = 1e-12;
const DISTANCE_TOL: f64 = 1e-10;
const GEODESIC_TOL: f64 = 1e-10;
const DISK_TOL: f64 = 1e-12;
const GEOMETRY_BUDGET: Duration = Duration::from_secs(10);

const IWASAWA_SAMPLES: usize = 100_000;
const IWASAWA_TOL: f64 = 1e-9;
const CONJUGATIONS: usize = 1_000;

const GRADIENT_STATES: usize = 100;
const GRADIENT_TOL: f64 = 1e-5;
const REST_TOL: f64 = 1e-12;

const CONSERVATION_T: f64 = 10.0;
const CONSERVATION_INTEGRATOR_TOL: f64 = 1e-10;
const DRIFT_TOL: f64 = 1e-7;
const CONSERVATION_BUDGET: Duration = Duration::from_secs(60);

const VLASOV_TOL: f64 = 1e-6;

const CIRCLE_TOL: f64 = 1e-8;

const EXISTENCE_RESIDUAL_TOL: f64 = 1e-10;
const INVARIANCE_TOL: f64 = 1e-8;

const CERTIFY_SAMPLES: usize = 1_000;
const CERTIFY_SEED: u64 = 2024;

const FLOW_ODE_TOL: f64 = 1e-8;
const FLOW_GROUP_TOL: f64 = 1e-10;
const FLOW_SAMPLES: usize = 1_000;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// A unimodular matrix from raw entries in `[-2, 2]`, rescaled by
/// `sqrt(det)`; draws with `det < 0.1` are replaced.
fn unimodular(r: &mut ChaCha8Rng) -> MobiusElement {
    loop {
        let [a, b, cc, d]: [f64; 4] = std::array::from_fn(|_| r.random_range(-2.0..2.0));
        let det = a * d - b * cc;
        if det > 0.1 {
            let s = det.sqrt();
            return MobiusElement::new(a / s, b / s, cc / s, d / s).unwrap();
        }
    }
}

fn point(r: &mut ChaCha8Rng) -> Complex64 {
    c(r.random_range(-3.0..3.0), r.random_range(0.1..5.0))
}

fn hp(w: Complex64) -> HalfPlanePoint {
    HalfPlanePoint::new(w).unwrap()
}

fn geometry() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1, 0);
    let unit = CurvatureRadius::UNIT;
    let (mut compose, mut dist, mut below) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..MOBIUS_SAMPLES {
        let (a, b) = (unimodular(&mut r), unimodular(&mut r));
        let (w1, w2) = (hp(point(&mut r)), hp(point(&mut r)));
        let nested = apply_mobius(&a, apply_mobius(&b, w1)).w();
        let direct = apply_mobius(&(a * b), w1).w();
        below += usize::from(!(direct.im > 0.0 && nested.im > 0.0));
        compose = compose.max((nested - direct).norm() / direct.norm());
        let before = hyperbolic_distance(w1, w2, unit);
        let after = hyperbolic_distance(apply_mobius(&a, w1), apply_mobius(&a, w2), unit);
        dist = dist.max((after - before).abs());
    }
    // Unit-speed vertical lines and semicircles orthogonal to the real axis.
    let mut geodesic = 0.0f64;
    for _ in 0..1000 {
        let (x0, rad, t): (f64, f64, f64) = (r.random_range(-3.0..3.0), r.random_range(0.1..4.0), r.random_range(-3.0..3.0));
        let e = t.exp();
        let line = geodesic_residual(c(x0, e), c(0.0, e), c(0.0, e)).unwrap();
        let (th, sh) = (t.tanh(), 1.0 / t.cosh());
        let w = c(x0 + rad * th, rad * sh);
        let v = c(rad * sh * sh, -rad * sh * th);
        let a = c(-2.0 * rad * sh * sh * th, -rad * (sh * sh * sh - sh * th * th));
        let arc = geodesic_residual(w, v, a).unwrap();
        geodesic = geodesic.max(line.norm()).max(arc.norm());
    }
    let mut disk = 0.0f64;
    for _ in 0..MOBIUS_SAMPLES {
        let w = point(&mut r);
        let radius = CurvatureRadius::new(r.random_range(0.5..3.0)).unwrap();
        let back = from_disk(to_disk(hp(w), radius), radius).unwrap().w();
        disk = disk.max((back - w).norm() / w.norm().max(1.0));
    }
    let elapsed = start.elapsed();
    check(
        below == 0
            && compose < MOBIUS_TOL
            && dist < DISTANCE_TOL
            && geodesic < GEODESIC_TOL
            && disk < DISK_TOL
            && elapsed < GEOMETRY_BUDGET,
        format!(
            "compose {compose:.1e}, distance {dist:.1e}, geodesic {geodesic:.1e}, disk {disk:.1e}, left half-plane {below}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn clifford() -> Verdict {
    let mut relations = true;
    for sigma in Sigma::ALL {
        let mul = |x: &CliffordNumber, y: &CliffordNumber| clifford_mul(x, y).unwrap();
        let (e0, e1, e01) = (
            CliffordNumber::basis_e0(sigma),
            CliffordNumber::basis_e1(sigma),
            CliffordNumber::basis_e01(sigma),
        );
        let s = f64::from(sigma.value());
        relations &= mul(&e0, &e0) == CliffordNumber::scalar(-1.0, sigma)
            && mul(&e1, &e1) == CliffordNumber::scalar(s, sigma)
            && mul(&e0, &e1) == e01
            && mul(&e1, &e0) == e01.scale(-1.0)
            && mul(&e01, &e01) == CliffordNumber::scalar(s, sigma);
    }

    let mut r = rng(2, 0);
    let mut iwasawa = 0.0f64;
    for _ in 0..IWASAWA_SAMPLES {
        let m = unimodular(&mut r);
        let f = iwasawa_decompose(&m);
        iwasawa = iwasawa.max(iwasawa_reconstruct(&f).matrix().max_abs_diff(&m.matrix().scale(f.sign)));
    }

    let generators = [
        (Mat2::new(0.5, 0.0, 0.0, -0.5), SubgroupClass::AConjugate),
        (Mat2::new(0.0, 1.0, 0.0, 0.0), SubgroupClass::NConjugate),
        (Mat2::new(0.0, 0.5, -0.5, 0.0), SubgroupClass::KConjugate),
    ];
    let mut unstable = 0usize;
    for _ in 0..CONJUGATIONS {
        let m = unimodular(&mut r);
        for (x, class) in generators {
            let conj = m.matrix() * x * m.inverse().matrix();
            unstable += usize::from(classify_subgroup(&conj).ok() != Some(class));
        }
    }
    check(
        relations && iwasawa < IWASAWA_TOL && unstable == 0,
        format!("relations exact {relations}, Iwasawa max error {iwasawa:.1e}, unstable conjugations {unstable}"),
    )
}

fn random_state(r: &mut ChaCha8Rng) -> SystemState {
    loop {
        let n = r.random_range(2..=4);
        let w: Vec<Complex64> = (0..n).map(|_| point(r)).collect();
        let v: Vec<Complex64> = (0..n).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        let m: Vec<f64> = (0..n).map(|_| r.random_range(0.2..3.0)).collect();
        let radius = CurvatureRadius::new([0.5, 1.0, 2.0][r.random_range(0..3)]).unwrap();
        let separated = (0..n).all(|k| {
            (k + 1..n).all(|j| hyperbolic_distance(hp(w[k]), hp(w[j]), CurvatureRadius::UNIT) > 0.3)
        });
        if separated {
            return SystemState::from_coords(0.0, &w, &v, &m, radius).unwrap();
        }
    }
}

fn eom() -> Verdict {
    let mut r = rng(3, 0);
    let mut signs = Vec::with_capacity(GRADIENT_STATES);
    let mut worst = 0.0f64;
    for _ in 0..GRADIENT_STATES {
        let report = gradient_consistency(&random_state(&mut r)).unwrap();
        signs.push(report.sign);
        worst = worst.max(report.relative_error);
    }
    let global = signs[0].filter(|s| signs.iter().all(|t| *t == Some(*s)));
    let rest = SystemState::at_rest(&[c(0.0, 1.0), c(0.0, 2.0)], &[1.0, 1.0], CurvatureRadius::UNIT).unwrap();
    let a1 = eom_rhs(&rest).unwrap()[0];
    let rest_err = (a1 - c(0.0, 32.0 / 9.0)).norm();
    check(
        global.is_some() && worst < GRADIENT_TOL && rest_err < REST_TOL,
        format!("global sign {global:?}, gradient error {worst:.1e}, (i, 2i) rest error {rest_err:.1e}"),
    )
}

/// An elliptic pair spun 5% faster than its rigid rate, plus optionally a
/// light third body far away.
fn perturbed_pair(third: bool) -> SystemState {
    let s = two_body_elliptic(1.0, 0.6, 2.0, CurvatureRadius::UNIT).unwrap().state(1.0, 0.6).unwrap();
    let (mut w, mut v, mut m) = (s.coords(), s.velocities().to_vec(), s.masses().to_vec());
    v.iter_mut().for_each(|v| *v *= 1.05);
    if third {
        w.push(c(3.0, 4.0));
        v.push(c(-0.1, 0.05));
        m.push(0.3);
    }
    SystemState::from_coords(0.0, &w, &v, &m, s.radius()).unwrap()
}

fn conservation() -> Verdict {
    let start = Instant::now();
    let generic = SystemState::from_coords(
        0.0,
        &[c(-0.5, 1.0), c(0.5, 1.5)],
        &[c(0.1, 0.3), c(-0.2, 0.0)],
        &[1.0, 0.5],
        CurvatureRadius::UNIT,
    )
    .unwrap();
    let mut drifts = Vec::new();
    let mut min_theta = f64::INFINITY;
    for s0 in [perturbed_pair(false), generic, perturbed_pair(true)] {
        let opts = IntegrateOptions::sampled(CONSERVATION_INTEGRATOR_TOL, 0.05);
        let traj = integrate(&s0, CONSERVATION_T, &opts).unwrap();
        min_theta = min_theta.min(traj.stats().min_theta);
        drifts.push(traj.conservation_drift().max());
    }
    let worst = drifts.iter().copied().fold(0.0, f64::max);
    let elapsed = start.elapsed();
    check(
        worst < DRIFT_TOL && elapsed < CONSERVATION_BUDGET,
        format!(
            "drift 2-body {:.1e} / {:.1e}, 3-body {:.1e}, min theta {min_theta:.2e}, {:.2}s",
            drifts[0],
            drifts[1],
            drifts[2],
            elapsed.as_secs_f64()
        ),
    )
}

fn vlasov() -> Verdict {
    let s0 = SystemState::from_coords(
        0.0,
        &[c(0.0, 1.0), c(1.0, 3.0)],
        &[c(0.3, 0.0), c(-0.2, 0.1)],
        &[0.3, 0.2],
        CurvatureRadius::UNIT,
    )
    .unwrap();
    let traj = integrate(&s0, 1.0, &IntegrateOptions::sampled(1e-12, 0.01)).unwrap();
    let report = vlasov_weak_residual(&traj, &WeakTestFunction::library()).unwrap();
    check(report.max < VLASOV_TOL, format!("max weak residual {:.1e} over {} functions", report.max, report.per_function.len()))
}

fn elliptic_circles() -> Verdict {
    let mut equal = 0.0f64;
    let mut violations = 0usize;
    let grid = |i: usize| 0.2 * 25f64.powf(i as f64 / 9.0);
    for alpha in [1.2, 2.0, 5.0] {
        let beta = two_body_elliptic(1.3, 1.3, alpha, CurvatureRadius::UNIT).unwrap().beta;
        equal = equal.max((beta - alpha).abs());
        for i in 0..10 {
            let mut previous = 0.0;
            for j in (0..10).rev() {
                let (m1, m2) = (grid(i), grid(j));
                let beta = two_body_elliptic(m1, m2, alpha, CurvatureRadius::UNIT).unwrap().beta;
                let ordered = match m1.partial_cmp(&m2).unwrap() {
                    std::cmp::Ordering::Less => beta < alpha - CIRCLE_TOL,
                    std::cmp::Ordering::Greater => beta > alpha + CIRCLE_TOL,
                    std::cmp::Ordering::Equal => (beta - alpha).abs() < CIRCLE_TOL,
                };
                violations += usize::from(!ordered || beta <= previous);
                previous = beta;
            }
        }
    }
    check(
        equal < CIRCLE_TOL && violations == 0,
        format!("|beta - alpha| at equal masses {equal:.1e}, monotonicity violations {violations}/300"),
    )
}

fn existence() -> Verdict {
    let unit = CurvatureRadius::UNIT;
    let cases = [
        (EquilibriumClass::HyperbolicNormal, Symmetry::MirrorPair, [c(0.5, 1.0), c(-0.5, 1.0)]),
        (EquilibriumClass::EllipticCyclic, Symmetry::ImaginaryAxis, [c(0.0, 2.0), c(0.0, 0.5)]),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (class, symmetry, ansatz) in cases {
        let s = SystemState::at_rest(&ansatz, &[1.0, 1.0], unit).unwrap();
        let opts = SolveOptions { symmetry, ..Default::default() };
        let sol = match find_equilibrium(class, &[1.0, 1.0], unit, &s, &opts) {
            Ok(sol) => sol,
            Err(e) => return Err(format!("{class}: {e}")),
        };
        let kind = class.field();
        let traj = integrate(&sol.state, 2.0, &IntegrateOptions::sampled(1e-12, 1.0 / 32.0)).unwrap();
        let invariance = (0..10)
            .map(|j| verify_invariance(&traj, kind, -1.0 + 0.25 * j as f64).unwrap().max_residual)
            .fold(0.0, f64::max);
        let defect = relative_equilibrium_defect(&traj, kind, sol.rate).unwrap();
        pass &= sol.residual_inf < EXISTENCE_RESIDUAL_TOL && invariance < INVARIANCE_TOL && defect < INVARIANCE_TOL;
        details.push(format!(
            "{class}: residual {:.1e}, invariance {invariance:.1e}, orbit defect {defect:.1e}",
            sol.residual_inf
        ));
    }
    check(pass, details.join("; "))
}

fn nonexistence() -> Verdict {
    let mut failed = Vec::new();
    for class in [EquilibriumClass::ParabolicCyclic, EquilibriumClass::HyperbolicCyclic] {
        for n in 2..=4 {
            let cert = certify_nonexistence(class, n, CERTIFY_SAMPLES, CERTIFY_SEED).unwrap();
            if !(cert.verdict && cert.samples.len() == CERTIFY_SAMPLES) {
                failed.push(format!("{class}/n={n}"));
            }
        }
    }
    let (lhs, rhs) = contradiction_parabolic(&[1.0, 2.0], &[1.0, 1.0], 1.0, 0).unwrap();
    let hand = lhs == 1.0 / 64.0 && (rhs + 1.0 / 9.0).abs() < 1e-15;
    check(
        failed.is_empty() && hand,
        format!("6 x {CERTIFY_SAMPLES} samples, failing runs {failed:?}, hand values ({lhs}, {rhs:.16})"),
    )
}

fn flows() -> Verdict {
    let mut r = rng(9, 0);
    let (mut ode, mut group) = (0.0f64, 0.0f64);
    for i in 0..FLOW_SAMPLES {
        let hyperbolic = i % 2 == 1;
        let kind = KillingFieldKind::RotationK(if hyperbolic { Sigma::Hyperbolic } else { Sigma::Parabolic });
        let extra = if hyperbolic { 1.0 } else { 0.0 };
        let w0 = point(&mut r);
        let (lo, hi) = admissible_interval(kind, w0);
        let (lo, hi) = (lo.max(-1.2), hi.min(1.2));
        let t = lo + r.random_range(0.2..0.8) * (hi - lo);
        let h = 1e-3 * (t - lo).min(hi - t).min(1.0);
        let z = |x: f64| flow(kind, w0, x).unwrap();
        let d = (z(t - 2.0 * h) - 8.0 * z(t - h) + 8.0 * z(t + h) - z(t + 2.0 * h)) / (12.0 * h);
        let (u, v) = (z(t).re, z(t).im);
        let (du, dv) = (1.0 + u * u + extra * v * v, 2.0 * u * v);
        if du.abs().max(dv.abs()) < 1e6 {
            ode = ode.max((d.re - du).abs() / du.abs().max(1.0)).max((d.im - dv).abs() / dv.abs().max(1.0));
        }

        let kind = KillingFieldKind::ALL[i % KillingFieldKind::ALL.len()];
        let (lo, hi) = admissible_interval(kind, w0);
        let (lo, hi) = (lo.max(-2.0), hi.min(2.0));
        let s = lo + r.random_range(0.1..0.9) * (hi - lo);
        let t = r.random_range(-0.5..0.5) * (hi - lo);
        let w1 = flow(kind, w0, s).unwrap();
        if s + t > lo + 1e-3 && s + t < hi - 1e-3 {
            if let (Ok(composed), Ok(direct)) = (flow(kind, w1, t), flow(kind, w0, s + t)) {
                if direct.norm() < 1e3 {
                    group = group.max((composed - direct).norm() / direct.norm().max(1.0));
                }
            }
        }
    }
    // The isometric subgroups compose as matrices too.
    let mut matrix = 0.0f64;
    for kind in [KillingFieldKind::NormalA, KillingFieldKind::NilpotentN, KillingFieldKind::RotationK(Sigma::Elliptic)] {
        for (s, t) in [(0.3, 0.4), (-1.1, 2.5), (PI / 3.0, PI / 5.0)] {
            let lhs = (exp_subgroup(kind, s) * exp_subgroup(kind, t)).matrix();
            matrix = matrix.max(lhs.max_abs_diff(&exp_subgroup(kind, s + t).matrix()));
        }
    }
    check(
        ode < FLOW_ODE_TOL && group < FLOW_GROUP_TOL && matrix < FLOW_GROUP_TOL,
        format!("real ODE systems {ode:.1e}, flow group law {group:.1e}, matrix group law {matrix:.1e}"),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::TempDir::new().unwrap();
    let config = dir.path().join("run.json");
    let body = r#"{"seed": 99, "masses": [1, 0.5], "bodies": [{"re": -0.5, "im": 1, "vre": 0.1, "vim": 0.3}, {"re": 0.5, "im": 1.5, "vre": -0.2}],
                   "integrator": {"t_end": 2, "sample_dt": 0.1}, "certify": {"class": "hyperbolic_cyclic", "n": 3, "samples": 300}}"#;
    std::fs::write(&config, body).unwrap();
    let run = |args: &[&str], out: &str| {
        let out_dir = dir.path().join(out);
        let o = Command::new(env!("CARGO_BIN_EXE_hnbody"))
            .args(args)
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        let mut files: Vec<_> = std::fs::read_dir(&out_dir)
            .map(|d| d.map(|e| e.unwrap().path()).collect())
            .unwrap_or_default();
        files.sort();
        let contents: Vec<Vec<u8>> = files.iter().map(|p| std::fs::read(p).unwrap()).collect();
        (o.status.success(), o.stdout, contents)
    };
    let mut identical = 0;
    let commands: [&[&str]; 3] = [&["certify"], &["simulate"], &["vlasov"]];
    for (i, args) in commands.iter().enumerate() {
        let a = run(args, &format!("a{i}"));
        let b = run(args, &format!("b{i}"));
        if a.0 && a == b && !a.2.is_empty() {
            identical += 1;
        }
    }
    check(identical == commands.len(), format!("{identical}/{} commands byte-identical across runs (report and artifacts)", commands.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("geometry suite", geometry),
        ("clifford suite", clifford),
        ("EOM correctness", eom),
        ("conservation", conservation),
        ("weak kinetic form", vlasov),
        ("two-body elliptic circles", elliptic_circles),
        ("existence", existence),
        ("non-existence", nonexistence),
        ("flow fidelity", flows),
        ("determinism", determinism),
    ];
    let mut failures = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = run();
        let (tag, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {:>2}. {name}: {detail}", i + 1);
        if verdict.is_err() {
            failures.push(i + 1);
        }
    }
    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}
