//! One function per subcommand: configuration in, canonical report and
//! named artifact files out. Nothing here touches the filesystem.

use hyperbolic_nbody::dynamics::{integrate, vlasov_weak_residual, WeakTestFunction};
use hyperbolic_nbody::equilibria::{
    certify_nonexistence, find_equilibrium, residual, with_orbit_velocities,
};
use hyperbolic_nbody::flows::{
    admissible_interval, flow_derivative_check, flow_samples, relative_equilibrium_defect, verify_invariance_with,
    write_flow_csv,
};
use hyperbolic_nbody::geometry::{from_disk, geodesic_from_tangent, hyperbolic_distance, to_disk};
use hyperbolic_nbody::{
    Complex64, CurvatureRadius, EquilibriumClass, Error, HalfPlanePoint, Trajectory, Transport, I,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::to_canonical;

/// Step of the central differences behind the flow ODE residuals, relative
/// to the distance from the nearest pole.
const FLOW_FD_STEP: f64 = 1e-3;
/// Certificate sample count when neither flag nor config sets one.
pub const DEFAULT_SAMPLES: usize = 1000;
/// Certificate body count when neither flag nor config sets one.
pub const DEFAULT_CERTIFY_N: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    EquilibriaFind,
    EquilibriaCheck,
    Certify,
    Flow,
    Invariance,
    Map,
    Vlasov,
}

/// Command-line values that take precedence over the config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub class: Option<EquilibriumClass>,
    pub n: Option<usize>,
}

/// The canonical report plus files to place next to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report_name: &'static str,
    pub report: String,
    pub files: Vec<(&'static str, Vec<u8>)>,
}

impl Output {
    fn report(name: &'static str, value: &Value) -> Result<Self, CliError> {
        Ok(Self { report_name: name, report: to_canonical(value)?, files: Vec::new() })
    }
}

pub fn run(command: Command, cfg: &RunConfig, over: &Overrides) -> Result<Output, CliError> {
    match command {
        Command::Simulate => simulate(cfg),
        Command::EquilibriaFind => equilibria_find(cfg, over),
        Command::EquilibriaCheck => equilibria_check(cfg, over),
        Command::Certify => certify(cfg, over),
        Command::Flow => flow(cfg),
        Command::Invariance => invariance(cfg),
        Command::Map => map(cfg),
        Command::Vlasov => vlasov(cfg),
    }
}

fn run_trajectory(cfg: &RunConfig) -> Result<Trajectory, CliError> {
    let s0 = cfg.state()?;
    let opts = cfg.integrate_options()?;
    Ok(integrate(&s0, cfg.integrator.t_end, &opts)?)
}

fn csv(traj: &Trajectory) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(|e| CliError::io("trajectory.csv".as_ref(), e))?;
    Ok(buf)
}

fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let traj = run_trajectory(cfg)?;
    let s0 = traj.initial();
    // A lone body has no interaction, so it must trace the geodesic of its
    // initial tangent (a point when at rest).
    let geodesic_deviation = (s0.n() == 1).then(|| {
        let w0 = s0.positions()[0];
        let arc = geodesic_from_tangent(w0, s0.velocities()[0]).ok();
        traj.samples()
            .iter()
            .map(|s| match &arc {
                Some(arc) => arc.deviation(s.w(0)),
                None => (s.w(0) - w0.w()).norm(),
            })
            .fold(0.0, f64::max)
    });
    let last = traj.last();
    let report = json!({
        "command": "simulate",
        "n": s0.n(),
        "radius": s0.radius().get(),
        "t_end": last.t,
        "samples": traj.len(),
        "drift": traj.conservation_drift(),
        "stats": traj.stats(),
        "final": { "positions": last.coords(), "velocities": last.velocities() },
        "geodesic_deviation": geodesic_deviation,
    });
    let mut out = Output::report("report.json", &report)?;
    out.files.push(("trajectory.csv", csv(&traj)?));
    out.files.push(("trajectory.json", to_canonical(&traj.sidecar())?.into_bytes()));
    Ok(out)
}

fn class_of(over: &Overrides, fallback: Option<EquilibriumClass>) -> Result<EquilibriumClass, CliError> {
    over.class
        .or(fallback)
        .ok_or_else(|| CliError::validation("an equilibrium class is required (--class or config)").at("class"))
}

fn residual_rows(r: &[Complex64]) -> Vec<Value> {
    r.iter()
        .enumerate()
        .map(|(k, z)| json!({ "body": k, "re": z.re, "im": z.im, "norm": z.norm() }))
        .collect()
}

fn inf_norm(r: &[Complex64]) -> f64 {
    r.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
}

/// `exp d(i, w)`: the parameter of the circle about `i` through `w`.
fn circle_parameter(w: HalfPlanePoint) -> Result<f64, CliError> {
    let unit = CurvatureRadius::new(1.0)?;
    Ok(hyperbolic_distance(HalfPlanePoint::new(I)?, w, unit).exp())
}

fn equilibria_find(cfg: &RunConfig, over: &Overrides) -> Result<Output, CliError> {
    let class = class_of(over, cfg.equilibria.class)?;
    if !class.is_solvable() {
        return Err(Error::ClassNotSolvable { class, reason: class.nonexistence_reason() }.into());
    }
    let ansatz = cfg.state()?;
    let sol = find_equilibrium(class, ansatz.masses(), ansatz.radius(), &ansatz, &cfg.solve_options())?;
    let r = residual(class, &sol.state)?;
    let mut report = json!({
        "command": "equilibria_find",
        "class": class,
        "symmetry": cfg.equilibria.symmetry,
        "rate": sol.rate,
        "iterations": sol.iterations,
        "condition": sol.condition,
        "residual_inf": sol.residual_inf,
        "residuals": residual_rows(&r),
        "masses": sol.state.masses(),
        "positions": sol.state.coords(),
        "velocities": sol.state.velocities(),
    });
    if class == EquilibriumClass::EllipticCyclic {
        let params = sol.state.positions().iter().map(|&w| circle_parameter(w)).collect::<Result<Vec<_>, _>>()?;
        let (lo, hi) = params.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        report["circle_parameters"] = json!(params);
        report["circle_parameter_spread"] = json!((hi - lo) / hi);
    }
    Output::report("report.json", &report)
}

fn equilibria_check(cfg: &RunConfig, over: &Overrides) -> Result<Output, CliError> {
    let class = class_of(over, cfg.equilibria.class)?;
    let state = cfg.state()?;
    let r = residual(class, &state)?;
    let report = json!({
        "command": "equilibria_check",
        "class": class,
        "residual_inf": inf_norm(&r),
        "residuals": residual_rows(&r),
    });
    Output::report("report.json", &report)
}

fn certify(cfg: &RunConfig, over: &Overrides) -> Result<Output, CliError> {
    let class = class_of(over, cfg.certify.class)?;
    let n = over.n.or(cfg.certify.n).unwrap_or(DEFAULT_CERTIFY_N);
    let samples = over.samples.or(cfg.certify.samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = over.seed.or(cfg.seed).unwrap_or(0);
    let cert = certify_nonexistence(class, n, samples, seed)?;
    Ok(Output { report_name: "certificate.json", report: to_canonical(&cert)?, files: Vec::new() })
}

fn flow(cfg: &RunConfig) -> Result<Output, CliError> {
    let w0 = cfg.points()?;
    let kind = cfg.flow.field;
    let times = cfg.flow_times()?;
    let samples = flow_samples(kind, &w0, &times)?;
    let mut ode_residual = 0.0f64;
    for &w in &w0 {
        for &t in &times {
            let (lo, hi) = admissible_interval(kind, w);
            let h = FLOW_FD_STEP * (t - lo).min(hi - t).min(1.0);
            ode_residual = ode_residual.max(flow_derivative_check(kind, w, t, h)?.max());
        }
    }
    let report = json!({
        "command": "flow",
        "field": kind,
        "samples": samples,
        "ode_residual_max": ode_residual,
    });
    let mut buf = Vec::new();
    write_flow_csv(&samples, &mut buf).map_err(|e| CliError::io("flow.csv".as_ref(), e))?;
    let mut out = Output::report("report.json", &report)?;
    out.files.push(("flow.csv", buf));
    Ok(out)
}

fn invariance(cfg: &RunConfig) -> Result<Output, CliError> {
    let inv = &cfg.invariance;
    let mut s0 = cfg.state()?;
    if let Some(rate) = inv.orbit_rate {
        s0 = with_orbit_velocities(&s0, inv.field, rate)?;
    }
    let traj = integrate(&s0, cfg.integrator.t_end, &cfg.integrate_options()?)?;
    let transport = match &inv.composite {
        Some(steps) if steps.is_empty() => {
            return Err(CliError::validation("must not be empty").at("invariance.composite"))
        }
        Some(steps) => Transport::Composite(steps.iter().map(|s| (s.field, s.time)).collect()),
        None => Transport::Subgroup { kind: inv.field, time: inv.group_time },
    };
    let residuals = verify_invariance_with(&traj, &transport)?;
    let defect = inv.orbit_rate.map(|rate| relative_equilibrium_defect(&traj, inv.field, rate)).transpose()?;
    let report = json!({
        "command": "invariance",
        "field": inv.field,
        "group_time": inv.group_time,
        "composite": inv.composite.as_ref().map(|c| c.iter().map(|s| json!({"field": s.field, "time": s.time})).collect::<Vec<_>>()),
        "residual": residuals,
        "orbit_rate": inv.orbit_rate,
        "relative_equilibrium_defect": defect,
    });
    let mut out = Output::report("report.json", &report)?;
    out.files.push(("trajectory.csv", csv(&traj)?));
    Ok(out)
}

fn map(cfg: &RunConfig) -> Result<Output, CliError> {
    let radius = cfg.radius()?;
    let points = if cfg.bodies.is_empty() { Vec::new() } else { cfg.points()? };
    let mut disk = Vec::with_capacity(points.len());
    let mut round_trip = 0.0f64;
    for &w in &points {
        let p = HalfPlanePoint::new(w)?;
        let z = to_disk(p, radius);
        round_trip = round_trip.max((from_disk(z, radius)?.w() - w).norm());
        disk.push(z);
    }
    let from = cfg
        .map
        .disk_points
        .iter()
        .enumerate()
        .map(|(k, &[re, im])| {
            from_disk(Complex64::new(re, im), radius)
                .map(|p| p.w())
                .map_err(|e| CliError::from(e).at(&format!("map.disk_points[{k}]")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = json!({
        "command": "map",
        "radius": radius.get(),
        "half_plane": points,
        "disk": disk,
        "round_trip_max_error": round_trip,
        "from_disk": from,
    });
    Output::report("report.json", &report)
}

fn vlasov(cfg: &RunConfig) -> Result<Output, CliError> {
    let traj = run_trajectory(cfg)?;
    let functions = cfg.vlasov.functions.clone().unwrap_or_else(WeakTestFunction::library);
    let report = vlasov_weak_residual(&traj, &functions)?;
    Output::report("report.json", &json!({ "command": "vlasov", "samples": traj.len(), "weak_residual": report }))
}
