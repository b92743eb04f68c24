//! Run configuration: one JSON document, unknown keys rejected, every
//! validation message prefixed by the path of the offending field.

use std::path::Path;

use hyperbolic_nbody::dynamics::WeakTestFunction;
use hyperbolic_nbody::{
    Complex64, CurvatureRadius, EquilibriumClass, IntegrateOptions, KillingFieldKind, SolveOptions,
    Symmetry, SystemState,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "unit", alias = "R")]
    pub radius: f64,
    #[serde(default)]
    pub masses: Vec<f64>,
    #[serde(default)]
    pub bodies: Vec<BodyConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub equilibria: EquilibriaConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub invariance: InvarianceConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub vlasov: VlasovConfig,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    pub re: f64,
    pub im: f64,
    #[serde(default)]
    pub vre: f64,
    #[serde(default)]
    pub vim: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub tol: f64,
    pub t_end: f64,
    pub max_step: Option<f64>,
    pub sample_dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegrateOptions::default();
        Self { tol: d.tol, t_end: 1.0, max_step: d.max_step, sample_dt: Some(0.01), max_steps: d.max_steps }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriaConfig {
    pub class: Option<EquilibriumClass>,
    pub symmetry: Symmetry,
    pub tol: f64,
    pub max_iterations: usize,
    pub initial_damping: f64,
}

impl Default for EquilibriaConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self {
            class: None,
            symmetry: d.symmetry,
            tol: d.tol,
            max_iterations: d.max_iterations,
            initial_damping: d.initial_damping,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub class: Option<EquilibriumClass>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub field: KillingFieldKind,
    /// Sample times; when absent, `steps + 1` points on `[0, t_end]`.
    pub times: Option<Vec<f64>>,
    pub t_end: f64,
    pub steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { field: KillingFieldKind::NormalA, times: None, t_end: 1.0, steps: 20 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportStep {
    pub field: KillingFieldKind,
    pub time: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InvarianceConfig {
    pub field: KillingFieldKind,
    pub group_time: f64,
    /// Composite transport, applied right to left; overrides `field`.
    pub composite: Option<Vec<TransportStep>>,
    /// Replaces the body velocities by `rate · ξ(w)` of `field`.
    pub orbit_rate: Option<f64>,
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        Self { field: KillingFieldKind::NormalA, group_time: 0.5, composite: None, orbit_rate: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    /// Disk points `[re, im]` mapped back to the half-plane.
    pub disk_points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VlasovConfig {
    /// Test functions; the built-in library when absent.
    pub functions: Option<Vec<WeakTestFunction>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::validation(if path == "." { inner.to_string() } else { format!("{path}: {inner}") })
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn radius(&self) -> Result<CurvatureRadius, CliError> {
        CurvatureRadius::new(self.radius)
            .map_err(|_| CliError::validation(format!("must be a positive finite number, got {}", self.radius)).at("radius"))
    }

    /// Body positions, checked without reference to masses or velocities.
    pub fn points(&self) -> Result<Vec<Complex64>, CliError> {
        self.check_points()?;
        Ok(self.positions())
    }

    fn check_points(&self) -> Result<(), CliError> {
        if self.bodies.is_empty() {
            return Err(CliError::validation("at least one body is required").at("bodies"));
        }
        for (k, b) in self.bodies.iter().enumerate() {
            for (name, x) in [("re", b.re), ("im", b.im), ("vre", b.vre), ("vim", b.vim)] {
                if !x.is_finite() {
                    return Err(CliError::validation(format!("must be finite, got {x}")).at(&format!("bodies[{k}].{name}")));
                }
            }
            if b.im <= 0.0 {
                return Err(CliError::validation(format!("must be > 0 (upper half-plane), got {}", b.im))
                    .at(&format!("bodies[{k}].im")));
            }
        }
        Ok(())
    }

    fn check_bodies(&self) -> Result<(), CliError> {
        self.check_points()?;
        if self.masses.len() != self.bodies.len() {
            return Err(CliError::validation(format!(
                "expected {} entries (one per body), got {}",
                self.bodies.len(),
                self.masses.len()
            ))
            .at("masses"));
        }
        for (k, &m) in self.masses.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(CliError::validation(format!("must be positive, got {m}")).at(&format!("masses[{k}]")));
            }
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.bodies.iter().map(|b| Complex64::new(b.re, b.im)).collect()
    }

    /// The initial state; a configuration on the singular set is a
    /// singularity error.
    pub fn state(&self) -> Result<SystemState, CliError> {
        self.check_bodies()?;
        let radius = self.radius()?;
        let v: Vec<Complex64> = self.bodies.iter().map(|b| Complex64::new(b.vre, b.vim)).collect();
        Ok(SystemState::from_coords(0.0, &self.positions(), &v, &self.masses, radius)?)
    }

    pub fn integrate_options(&self) -> Result<IntegrateOptions, CliError> {
        let i = &self.integrator;
        if !(i.tol.is_finite() && i.tol > 0.0) {
            return Err(CliError::validation(format!("must be positive, got {}", i.tol)).at("integrator.tol"));
        }
        if !i.t_end.is_finite() {
            return Err(CliError::validation("must be finite").at("integrator.t_end"));
        }
        if let Some(dt) = i.sample_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::validation(format!("must be positive, got {dt}")).at("integrator.sample_dt"));
            }
        }
        if let Some(h) = i.max_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(CliError::validation(format!("must be positive, got {h}")).at("integrator.max_step"));
            }
        }
        if i.max_steps == 0 {
            return Err(CliError::validation("must be at least 1").at("integrator.max_steps"));
        }
        Ok(IntegrateOptions { tol: i.tol, max_step: i.max_step, sample_dt: i.sample_dt, max_steps: i.max_steps })
    }

    pub fn solve_options(&self) -> SolveOptions {
        let e = &self.equilibria;
        SolveOptions {
            tol: e.tol,
            max_iterations: e.max_iterations,
            symmetry: e.symmetry,
            initial_damping: e.initial_damping,
        }
    }

    pub fn flow_times(&self) -> Result<Vec<f64>, CliError> {
        let f = &self.flow;
        match &f.times {
            Some(t) if t.is_empty() => Err(CliError::validation("must not be empty").at("flow.times")),
            Some(t) => Ok(t.clone()),
            None if f.steps == 0 => Err(CliError::validation("must be at least 1").at("flow.steps")),
            None => Ok((0..=f.steps).map(|k| f.t_end * k as f64 / f.steps as f64).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_report_their_path() {
        let err = RunConfig::parse(r#"{"integrator": {"tol": 1e-9, "tolerance": 1}}"#).unwrap_err();
        assert!(err.message.starts_with("integrator.tolerance: unknown field `tolerance`"), "{}", err.message);
        let err = RunConfig::parse(r#"{"bodies": [{"re": 0, "im": 1}, {"re": 0, "im": "x"}]}"#).unwrap_err();
        assert!(err.message.starts_with("bodies[1].im"), "{}", err.message);
    }

    #[test]
    fn half_plane_violation_names_the_field() {
        let cfg = RunConfig::parse(r#"{"masses": [1, 1], "bodies": [{"re": 0, "im": 1}, {"re": 1, "im": -0.5}]}"#).unwrap();
        let err = cfg.state().unwrap_err();
        assert_eq!(err.exit, 1);
        assert!(err.message.starts_with("bodies[1].im"), "{}", err.message);
    }

    #[test]
    fn mass_count_and_sign() {
        let cfg = RunConfig::parse(r#"{"masses": [1], "bodies": [{"re": 0, "im": 1}, {"re": 0, "im": 2}]}"#).unwrap();
        assert!(cfg.state().unwrap_err().message.starts_with("masses:"));
        let cfg = RunConfig::parse(r#"{"masses": [1, -2], "bodies": [{"re": 0, "im": 1}, {"re": 0, "im": 2}]}"#).unwrap();
        assert!(cfg.state().unwrap_err().message.starts_with("masses[1]"));
    }

    #[test]
    fn coincident_bodies_are_a_singularity() {
        let cfg = RunConfig::parse(r#"{"masses": [1, 1], "bodies": [{"re": 0, "im": 1}, {"re": 0, "im": 1}]}"#).unwrap();
        assert_eq!(cfg.state().unwrap_err().exit, 2);
    }

    #[test]
    fn fields_and_classes_parse() {
        let cfg = RunConfig::parse(
            r#"{"R": 2, "flow": {"field": {"kind": "rotation_k", "sigma": "parabolic"}},
                "equilibria": {"class": "elliptic_cyclic", "symmetry": "imaginary_axis"},
                "vlasov": {"functions": [{"kind": "gaussian_position", "center": [0, 1], "width": 0.5}]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.radius, 2.0);
        assert_eq!(cfg.equilibria.class, Some(EquilibriumClass::EllipticCyclic));
        assert_eq!(cfg.flow_times().unwrap().len(), 21);
    }
}
