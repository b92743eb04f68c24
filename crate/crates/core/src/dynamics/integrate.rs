use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use super::conserved::{conserved, ConservedQuantities};
use super::potential::{accelerations_raw, theta_min, theta_raw};
use super::SystemState;
use crate::error::{Error, Result};

/// Controls for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrateOptions {
    /// Mixed absolute/relative local error tolerance per real component.
    pub tol: f64,
    pub max_step: Option<f64>,
    /// When set, samples are recorded exactly on `t0 + k·dt` (and at `t_end`);
    /// otherwise every accepted step is recorded.
    pub sample_dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_step: None, sample_dt: None, max_steps: 5_000_000 }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn sampled(tol: f64, dt: f64) -> Self {
        Self { tol, sample_dt: Some(dt), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    /// Smallest pairwise Θ seen at an accepted step (`inf` for one body).
    pub min_theta: f64,
}

/// Sampled solution of the equations of motion.
///
/// Times are strictly increasing; each sample carries the acceleration the
/// equations of motion assign to it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub(crate) samples: Vec<SystemState>,
    pub(crate) accelerations: Vec<Vec<Complex64>>,
    pub(crate) stats: IntegratorStats,
}

impl Trajectory {
    pub fn samples(&self) -> &[SystemState] {
        &self.samples
    }

    pub fn accelerations(&self) -> &[Vec<Complex64>] {
        &self.accelerations
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn initial(&self) -> &SystemState {
        &self.samples[0]
    }

    pub fn last(&self) -> &SystemState {
        self.samples.last().expect("a trajectory holds at least its initial state")
    }

    pub fn conserved_series(&self) -> Vec<ConservedQuantities> {
        self.samples.iter().map(conserved).collect()
    }

    /// Largest drift of energy and momenta from their initial values, each
    /// relative to `max(|Q(0)|, max_t scale(Q))`, where the scale is the size
    /// of the individual terms summed into `Q`.
    pub fn conservation_drift(&self) -> ConservationDrift {
        let series = self.conserved_series();
        let q0 = series[0];
        let energy_ref = series.iter().map(|q| q.energy_scale()).fold(q0.energy.abs(), f64::max);
        let mut energy = 0.0f64;
        let mut momenta = [0.0f64; 3];
        let mut momenta_ref = [0.0f64; 3];
        for i in 0..3 {
            momenta_ref[i] = series.iter().map(|q| q.momentum_scale[i]).fold(q0.momenta[i].abs(), f64::max);
        }
        for q in &series {
            energy = energy.max((q.energy - q0.energy).abs());
            for i in 0..3 {
                momenta[i] = momenta[i].max((q.momenta[i] - q0.momenta[i]).abs());
            }
        }
        let rel = |d: f64, r: f64| if r > 0.0 { d / r } else { d };
        ConservationDrift {
            energy: rel(energy, energy_ref),
            momenta: [
                rel(momenta[0], momenta_ref[0]),
                rel(momenta[1], momenta_ref[1]),
                rel(momenta[2], momenta_ref[2]),
            ],
        }
    }

    /// Cubic Hermite dense output of positions (from velocities) and
    /// velocities (from accelerations) at `t`.
    pub fn interpolate(&self, t: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (t0, t1) = (self.samples[0].t, self.last().t);
        if !(t >= t0 && t <= t1) {
            return Err(Error::domain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let i = match self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(i) => return Ok((self.samples[i].coords(), self.samples[i].velocities().to_vec())),
            Err(i) => i - 1,
        };
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        let h = b.t - a.t;
        let x = (t - a.t) / h;
        let hermite = |y0: Complex64, d0: Complex64, y1: Complex64, d1: Complex64| {
            let x2 = x * x;
            let x3 = x2 * x;
            y0 * (2.0 * x3 - 3.0 * x2 + 1.0)
                + d0 * (h * (x3 - 2.0 * x2 + x))
                + y1 * (-2.0 * x3 + 3.0 * x2)
                + d1 * (h * (x3 - x2))
        };
        let n = a.n();
        let (acc_a, acc_b) = (&self.accelerations[i], &self.accelerations[i + 1]);
        let w = (0..n)
            .map(|k| hermite(a.w(k), a.velocities()[k], b.w(k), b.velocities()[k]))
            .collect();
        let v = (0..n)
            .map(|k| hermite(a.velocities()[k], acc_a[k], b.velocities()[k], acc_b[k]))
            .collect();
        Ok((w, v))
    }

    /// CSV with header `t,k,re,im,vre,vim`, one row per body and sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,k,re,im,vre,vim")?;
        for s in &self.samples {
            for (k, (p, v)) in s.positions().iter().zip(s.velocities()).enumerate() {
                writeln!(
                    out,
                    "{:.16e},{k},{:.16e},{:.16e},{:.16e},{:.16e}",
                    s.t,
                    p.re(),
                    p.im(),
                    v.re,
                    v.im
                )?;
            }
        }
        Ok(())
    }

    /// Metadata accompanying the CSV export.
    pub fn sidecar(&self) -> TrajectorySidecar {
        let s0 = self.initial();
        TrajectorySidecar {
            masses: s0.masses().to_vec(),
            radius: s0.radius().get(),
            times: self.times(),
            conserved: self.conserved_series(),
            drift: self.conservation_drift(),
            stats: self.stats,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationDrift {
    pub energy: f64,
    pub momenta: [f64; 3],
}

impl ConservationDrift {
    pub fn max(&self) -> f64 {
        self.momenta.iter().copied().fold(self.energy, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySidecar {
    pub masses: Vec<f64>,
    pub radius: f64,
    pub times: Vec<f64>,
    pub conserved: Vec<ConservedQuantities>,
    pub drift: ConservationDrift,
    pub stats: IntegratorStats,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

struct System<'a> {
    n: usize,
    masses: &'a [f64],
    radius: f64,
    evaluations: usize,
}

impl System<'_> {
    /// `y = (w_1..w_n, ẇ_1..ẇ_n)`; returns `(ẇ, ẅ)`.
    fn rhs(&mut self, t: f64, y: &[Complex64]) -> Result<Vec<Complex64>> {
        self.evaluations += 1;
        let (w, v) = y.split_at(self.n);
        let a = accelerations_raw(w, v, self.masses, self.radius, t)?;
        let mut out = Vec::with_capacity(2 * self.n);
        out.extend_from_slice(v);
        out.extend(a);
        Ok(out)
    }
}

fn min_pair_theta(w: &[Complex64]) -> f64 {
    let mut m = f64::INFINITY;
    for k in 0..w.len() {
        for j in k + 1..w.len() {
            m = m.min(theta_raw(w[k], w[j]));
        }
    }
    m
}

/// Integrates the equations of motion from `s0` to `t_end > s0.t` with an
/// adaptive Dormand–Prince 5(4) pair.
///
/// Stops with [`Error::Singularity`] when a pair's Θ drops below the guard and
/// no smaller step avoids it.
pub fn integrate(s0: &SystemState, t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if !(t_end > s0.t && t_end.is_finite()) {
        return Err(Error::invalid(format!("t_end = {t_end} must exceed t0 = {}", s0.t)));
    }
    if let Some(dt) = opts.sample_dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("sample spacing must be positive, got {dt}")));
        }
    }
    let max_step = opts.max_step.unwrap_or(f64::INFINITY);
    if !(max_step > 0.0) {
        return Err(Error::invalid("max_step must be positive"));
    }

    let n = s0.n();
    let masses = s0.masses();
    let radius = s0.radius();
    let mut sys = System { n, masses, radius: radius.get(), evaluations: 0 };

    let t0 = s0.t;
    let mut t = t0;
    let mut y: Vec<Complex64> = s0.coords();
    y.extend_from_slice(s0.velocities());
    let mut f = sys.rhs(t, &y)?;

    let mut samples = vec![s0.clone()];
    let mut accelerations = vec![f[n..].to_vec()];
    let mut stats = IntegratorStats {
        steps: 0,
        rejected: 0,
        rhs_evaluations: 0,
        min_theta: min_pair_theta(&y[..n]),
    };

    let span = t_end - t0;
    let mut h = (1e-3 * span).min(max_step);
    let mut next_sample = 1usize;
    let sample_time = |k: usize| opts.sample_dt.map(|dt| t0 + k as f64 * dt);

    let dim = 2 * n;
    let mut k: [Vec<Complex64>; 7] = Default::default();
    let mut stage = vec![Complex64::new(0.0, 0.0); dim];
    let mut last_stage_error: Option<Error> = None;

    while t < t_end {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps { max_steps: opts.max_steps, t });
        }
        let h_min = 1e-14 * t.abs().max(span).max(1.0);
        if h < h_min {
            return Err(match last_stage_error.take() {
                Some(e @ Error::Singularity { .. }) => e,
                _ => Error::StepUnderflow { t, h },
            });
        }

        // Clamp to the next sample time or the end point.
        let mut target = t_end;
        if let Some(ts) = sample_time(next_sample) {
            if ts < t_end {
                target = ts;
            }
        }
        let mut lands = false;
        let mut step = h.min(max_step);
        if t + step >= target - 1e-12 * step.max(h_min) {
            step = target - t;
            lands = true;
        }

        k[0] = f.clone();
        let mut failed = None;
        for i in 1..7 {
            for c in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(i) {
                    acc += A[i][j] * kj[c];
                }
                stage[c] = y[c] + step * acc;
            }
            match sys.rhs(t + C[i] * step, &stage) {
                Ok(v) => k[i] = v,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            stats.rejected += 1;
            last_stage_error = Some(e);
            h = 0.25 * step;
            continue;
        }
        // The last stage is evaluated at the fifth-order solution.
        let y_new = stage.clone();

        let mut err_sq = 0.0;
        for c in 0..dim {
            let mut e = Complex64::new(0.0, 0.0);
            for (i, ki) in k.iter().enumerate() {
                e += E[i] * ki[c];
            }
            e *= step;
            let sc_re = opts.tol * (1.0 + y[c].re.abs().max(y_new[c].re.abs()));
            let sc_im = opts.tol * (1.0 + y[c].im.abs().max(y_new[c].im.abs()));
            err_sq += (e.re / sc_re).powi(2) + (e.im / sc_im).powi(2);
        }
        let err = (err_sq / (2 * dim) as f64).sqrt();

        if !err.is_finite() || err > 1.0 {
            stats.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h = step * factor;
            continue;
        }
        last_stage_error = None;

        let w_new = &y_new[..n];
        let th = min_pair_theta(w_new);
        stats.min_theta = stats.min_theta.min(th);
        let t_new = if lands { target } else { t + step };
        if th < theta_min(w_new) {
            let pair = worst_pair(w_new);
            return Err(Error::Singularity { pair, theta: th, t: t_new });
        }

        stats.steps += 1;
        t = t_new;
        y = y_new;
        f = k[6].clone();

        let record = opts.sample_dt.is_none() || lands;
        if record {
            let state = SystemState::from_coords(t, &y[..n], &y[n..], masses, radius)?;
            samples.push(state);
            accelerations.push(f[n..].to_vec());
            if lands && target < t_end {
                next_sample += 1;
            }
        }

        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        // A step shortened to land on a sample does not shrink the next one.
        h = if lands { h.max(step * factor) } else { step * factor };
    }

    stats.rhs_evaluations = sys.evaluations;
    Ok(Trajectory { samples, accelerations, stats })
}

fn worst_pair(w: &[Complex64]) -> (usize, usize) {
    let mut best = (0, 1, f64::INFINITY);
    for k in 0..w.len() {
        for j in k + 1..w.len() {
            let th = theta_raw(w[k], w[j]);
            if th < best.2 {
                best = (k, j, th);
            }
        }
    }
    (best.0, best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{geodesic_from_tangent, CurvatureRadius, HalfPlanePoint};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_body_follows_geodesic() {
        let s0 = SystemState::from_coords(0.0, &[c(0.0, 1.0)], &[c(1.0, 0.0)], &[1.0], CurvatureRadius::UNIT)
            .unwrap();
        let traj = integrate(&s0, 1.0, &IntegrateOptions::with_tol(1e-12)).unwrap();
        let arc = geodesic_from_tangent(HalfPlanePoint::new(c(0.0, 1.0)).unwrap(), c(1.0, 0.0)).unwrap();
        for s in traj.samples() {
            assert!(arc.deviation(s.w(0)) < 1e-8);
        }
        assert_eq!(traj.last().t, 1.0);
    }

    #[test]
    fn sample_grid_is_hit_exactly() {
        let s0 = SystemState::at_rest(&[c(0.0, 1.0), c(1.0, 3.0)], &[0.3, 0.2], CurvatureRadius::UNIT).unwrap();
        let traj = integrate(&s0, 0.5, &IntegrateOptions::sampled(1e-10, 0.1)).unwrap();
        let times = traj.times();
        assert_eq!(times.len(), 6);
        for (k, t) in times.iter().enumerate() {
            assert!((t - 0.1 * k as f64).abs() < 1e-15);
        }
        assert!(times.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn time_reversal() {
        let s0 = SystemState::from_coords(
            0.0,
            &[c(0.0, 1.0), c(0.5, 2.5)],
            &[c(0.2, 0.1), c(-0.1, 0.0)],
            &[1.0, 0.5],
            CurvatureRadius::UNIT,
        )
        .unwrap();
        let fwd = integrate(&s0, 1.0, &IntegrateOptions::with_tol(1e-11)).unwrap();
        let end = fwd.last();
        let back_start = SystemState::from_coords(
            0.0,
            &end.coords(),
            &end.velocities().iter().map(|v| -v).collect::<Vec<_>>(),
            end.masses(),
            end.radius(),
        )
        .unwrap();
        let back = integrate(&back_start, 1.0, &IntegrateOptions::with_tol(1e-11)).unwrap();
        for k in 0..2 {
            assert!((back.last().w(k) - s0.w(k)).norm() < 1e-6);
            assert!((back.last().velocities()[k] + s0.velocities()[k]).norm() < 1e-6);
        }
    }

    #[test]
    fn collision_is_reported() {
        let s0 = SystemState::at_rest(&[c(0.0, 1.0), c(0.0, 1.2)], &[1.0, 1.0], CurvatureRadius::UNIT).unwrap();
        match integrate(&s0, 5.0, &IntegrateOptions::with_tol(1e-10)) {
            Err(Error::Singularity { pair, .. }) => assert_eq!(pair, (0, 1)),
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn hermite_dense_output_matches_samples() {
        let s0 = SystemState::from_coords(0.0, &[c(0.0, 1.0)], &[c(1.0, 0.0)], &[1.0], CurvatureRadius::UNIT)
            .unwrap();
        let coarse = integrate(&s0, 1.0, &IntegrateOptions::sampled(1e-12, 0.05)).unwrap();
        let fine = integrate(&s0, 1.0, &IntegrateOptions::sampled(1e-12, 0.025)).unwrap();
        for s in fine.samples() {
            let (w, v) = coarse.interpolate(s.t).unwrap();
            assert!((w[0] - s.w(0)).norm() < 1e-6);
            assert!((v[0] - s.velocities()[0]).norm() < 1e-5);
        }
    }

    #[test]
    fn rejects_bad_options() {
        let s0 = SystemState::at_rest(&[c(0.0, 1.0)], &[1.0], CurvatureRadius::UNIT).unwrap();
        assert!(integrate(&s0, 1.0, &IntegrateOptions::with_tol(0.0)).is_err());
        assert!(integrate(&s0, -1.0, &IntegrateOptions::default()).is_err());
    }
}
