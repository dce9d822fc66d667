//! Planar time-periodic vector fields and the built-in scenarios.

use crate::error::{Error, Result};
use crate::{Mat2, Vec2};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

type RhsFn = dyn Fn(f64, &Vec2) -> Vec2 + Send + Sync;
type MatFn = dyn Fn(f64) -> Mat2 + Send + Sync;

const DEFAULT_NORM_CAP: f64 = 1e6;

/// Right-hand side `h(t, z)` of a planar system `z' = h(t, z)`, together with
/// its period, optional linearizations at zero/infinity, declared jump times
/// and a blow-up guard.
///
/// Fields are immutable after construction and cheap to clone; evaluation is
/// safe from many threads at once.
#[derive(Clone)]
pub struct TimeVaryingField {
    rhs: Arc<RhsFn>,
    period: f64,
    lin_zero: Option<Arc<MatFn>>,
    lin_inf: Option<Arc<MatFn>>,
    norm_cap: f64,
    /// Discontinuity times in `[0, T)`; the integrator lands on each of them
    /// (extended `T`-periodically) exactly.
    jump_times: Vec<f64>,
}

impl fmt::Debug for TimeVaryingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeVaryingField")
            .field("period", &self.period)
            .field("norm_cap", &self.norm_cap)
            .field("jump_times", &self.jump_times)
            .field("lin_zero", &self.lin_zero.is_some())
            .field("lin_inf", &self.lin_inf.is_some())
            .finish()
    }
}

impl TimeVaryingField {
    pub fn new<F>(period: f64, rhs: F) -> Result<Self>
    where
        F: Fn(f64, &Vec2) -> Vec2 + Send + Sync + 'static,
    {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParams(format!("period must be positive, got {period}")));
        }
        Ok(Self {
            rhs: Arc::new(rhs),
            period,
            lin_zero: None,
            lin_inf: None,
            norm_cap: DEFAULT_NORM_CAP,
            jump_times: Vec::new(),
        })
    }

    pub fn with_norm_cap(mut self, cap: f64) -> Self {
        self.norm_cap = cap;
        self
    }

    pub fn with_jump_times(mut self, jumps: Vec<f64>) -> Self {
        self.jump_times = jumps;
        self
    }

    pub fn with_lin_zero<F>(mut self, l0: F) -> Self
    where
        F: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        self.lin_zero = Some(Arc::new(l0));
        self
    }

    pub fn with_lin_inf<F>(mut self, li: F) -> Self
    where
        F: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        self.lin_inf = Some(Arc::new(li));
        self
    }

    /// Evaluate `h(t, z)`.
    ///
    /// Errors with [`Error::NormCapExceeded`] beyond the blow-up guard, which
    /// the integrator converts into a typed `BlowUp`.
    pub fn evaluate(&self, t: f64, z: &Vec2) -> Result<Vec2> {
        let norm = z.norm();
        if norm > self.norm_cap {
            return Err(Error::NormCapExceeded { norm, cap: self.norm_cap });
        }
        Ok((self.rhs)(t, z))
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn norm_cap(&self) -> f64 {
        self.norm_cap
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn lin_zero(&self) -> Option<&(impl Fn(f64) -> Mat2 + Send + Sync + ?Sized)> {
        self.lin_zero.as_deref()
    }

    pub fn lin_inf(&self) -> Option<&(impl Fn(f64) -> Mat2 + Send + Sync + ?Sized)> {
        self.lin_inf.as_deref()
    }

    pub(crate) fn lin_zero_arc(&self) -> Option<Arc<MatFn>> {
        self.lin_zero.clone()
    }

    pub(crate) fn lin_inf_arc(&self) -> Option<Arc<MatFn>> {
        self.lin_inf.clone()
    }

    /// All mandatory step boundaries in the open interval `(t0, t1)`:
    /// declared jump times extended `T`-periodically.
    pub(crate) fn breakpoints_between(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if self.jump_times.is_empty() {
            return out;
        }
        let mut k = (t0 / self.period).floor() - 1.0;
        loop {
            let base = k * self.period;
            if base > t1 {
                break;
            }
            for &j in &self.jump_times {
                let tj = base + j;
                if tj > t0 + 1e-15 && tj < t1 - 1e-15 {
                    out.push(tj);
                }
            }
            k += 1.0;
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Built-in scenario names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    RigidRotation,
    Example51,
    LinearSystem,
    DuffingSuperlinear,
    AsymlinHamiltonian,
}

impl ScenarioName {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::RigidRotation => "rigid_rotation",
            ScenarioName::Example51 => "example51",
            ScenarioName::LinearSystem => "linear_system",
            ScenarioName::DuffingSuperlinear => "duffing_superlinear",
            ScenarioName::AsymlinHamiltonian => "asymlin_hamiltonian",
        }
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rigid_rotation" => Ok(ScenarioName::RigidRotation),
            "example51" => Ok(ScenarioName::Example51),
            "linear_system" => Ok(ScenarioName::LinearSystem),
            "duffing_superlinear" => Ok(ScenarioName::DuffingSuperlinear),
            "asymlin_hamiltonian" => Ok(ScenarioName::AsymlinHamiltonian),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

/// A scenario id plus its parameter overrides.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub params: BTreeMap<String, f64>,
}

impl ScenarioSpec {
    pub fn new(name: ScenarioName) -> Self {
        Self { name, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Parse either a bare scenario name or a JSON object
    /// `{"name": "...", "params": {...}}`.
    pub fn parse(input: &str) -> Result<Self> {
        let trimmed = input.trim();
        if trimmed.starts_with('{') {
            #[derive(serde::Deserialize)]
            struct Raw {
                name: String,
                #[serde(default)]
                params: BTreeMap<String, f64>,
            }
            let raw: Raw = serde_json::from_str(trimmed)
                .map_err(|e| Error::InvalidParams(format!("scenario JSON: {e}")))?;
            Ok(Self { name: raw.name.parse()?, params: raw.params })
        } else {
            Ok(Self::new(trimmed.parse()?))
        }
    }

    fn take(&self, key: &str, default: f64, seen: &mut Vec<String>) -> f64 {
        seen.push(key.to_string());
        self.params.get(key).copied().unwrap_or(default)
    }

    fn reject_unknown(&self, seen: &[String]) -> Result<()> {
        for k in self.params.keys() {
            if !seen.iter().any(|s| s == k) {
                return Err(Error::InvalidParams(format!(
                    "unknown parameter `{k}` for scenario {}",
                    self.name.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// Smootherstep on `[0, 1]`: `3u^2 - 2u^3`, clamped outside.
fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Instantiate a built-in scenario as a concrete field.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<TimeVaryingField> {
    let mut seen = Vec::new();
    match spec.name {
        ScenarioName::RigidRotation => {
            let omega = spec.take("omega", PI / 4.0, &mut seen);
            let period = spec.take("period", 1.0, &mut seen);
            spec.reject_unknown(&seen)?;
            if !omega.is_finite() {
                return Err(Error::InvalidParams("omega must be finite".into()));
            }
            // Clockwise rotation at rate omega: x' = omega y, y' = -omega x.
            let l = move |_t: f64| Mat2::new(0.0, omega, -omega, 0.0);
            Ok(TimeVaryingField::new(period, move |_t, z: &Vec2| {
                Vec2::new(omega * z.y, -omega * z.x)
            })?
            .with_lin_zero(l)
            .with_lin_inf(l))
        }
        ScenarioName::Example51 => {
            let tau = spec.take("tau", 0.1, &mut seen);
            let period = spec.take("period", 0.43, &mut seen);
            spec.reject_unknown(&seen)?;
            if !(tau > 0.0 && tau < period) {
                return Err(Error::InvalidParams(format!(
                    "require 0 < tau < period, got tau = {tau}, period = {period}"
                )));
            }
            let hyperbolic = Mat2::new(-1.0, 0.0, 0.0, 1.0);
            let l0 = move |t: f64| {
                let tm = t.rem_euclid(period);
                if tm < tau {
                    let w = 2.0 * PI / tau;
                    Mat2::new(0.0, w, -w, 0.0)
                } else {
                    hyperbolic
                }
            };
            let rhs = move |t: f64, z: &Vec2| {
                let r = z.norm();
                let inner = l0(t) * z;
                if r <= 1.5 {
                    return inner;
                }
                let outer = hyperbolic * z;
                if r >= 2.0 {
                    return outer;
                }
                let s = smoothstep((r - 1.5) / 0.5);
                (1.0 - s) * inner + s * outer
            };
            Ok(TimeVaryingField::new(period, rhs)?
                .with_jump_times(vec![0.0, tau])
                .with_lin_zero(l0)
                .with_lin_inf(move |_t| hyperbolic))
        }
        ScenarioName::LinearSystem => {
            let a11 = spec.take("a11", -1.0, &mut seen);
            let a12 = spec.take("a12", 0.0, &mut seen);
            let a21 = spec.take("a21", 0.0, &mut seen);
            let a22 = spec.take("a22", 1.0, &mut seen);
            let period = spec.take("period", 0.43, &mut seen);
            spec.reject_unknown(&seen)?;
            let l = Mat2::new(a11, a12, a21, a22);
            Ok(TimeVaryingField::new(period, move |_t, z: &Vec2| l * z)?
                .with_lin_zero(move |_t| l)
                .with_lin_inf(move |_t| l))
        }
        ScenarioName::DuffingSuperlinear => {
            let period = spec.take("period", 1.0, &mut seen);
            let stiffness = spec.take("stiffness", 1.0, &mut seen);
            spec.reject_unknown(&seen)?;
            if stiffness <= 0.0 {
                return Err(Error::InvalidParams("stiffness must be positive".into()));
            }
            // u'' + k u^3 = 0 on the phase plane (u, w).
            Ok(TimeVaryingField::new(period, move |_t, z: &Vec2| {
                Vec2::new(z.y, -stiffness * z.x * z.x * z.x)
            })?)
        }
        ScenarioName::AsymlinHamiltonian => {
            let omega0 = spec.take("omega0", 2.5 * PI, &mut seen);
            let omega_inf = spec.take("omega_inf", 0.5 * PI, &mut seen);
            let r0 = spec.take("r0", 1.0, &mut seen);
            let r1 = spec.take("r1", 2.0, &mut seen);
            let period = spec.take("period", 1.0, &mut seen);
            spec.reject_unknown(&seen)?;
            if !(r0 > 0.0 && r1 > r0) {
                return Err(Error::InvalidParams(format!(
                    "require 0 < r0 < r1, got r0 = {r0}, r1 = {r1}"
                )));
            }
            // Counterclockwise swirl with radius-dependent angular speed;
            // divergence free, hence area preserving.
            let omega_of = move |r: f64| omega0 + (omega_inf - omega0) * smoothstep((r - r0) / (r1 - r0));
            Ok(TimeVaryingField::new(period, move |_t, z: &Vec2| {
                let w = omega_of(z.norm());
                Vec2::new(-w * z.y, w * z.x)
            })?
            .with_lin_zero(move |_t| Mat2::new(0.0, -omega0, omega0, 0.0))
            .with_lin_inf(move |_t| Mat2::new(0.0, -omega_inf, omega_inf, 0.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example51() -> TimeVaryingField {
        build_scenario(&ScenarioSpec::new(ScenarioName::Example51)).unwrap()
    }

    #[test]
    fn rigid_rotation_is_clockwise() {
        let field = build_scenario(&ScenarioSpec::new(ScenarioName::RigidRotation)).unwrap();
        let v = field.evaluate(0.7, &Vec2::new(1.0, 0.0)).unwrap();
        assert_eq!(v, Vec2::new(0.0, -PI / 4.0));
        let v = field.evaluate(3.1, &Vec2::new(0.0, 2.0)).unwrap();
        assert_eq!(v, Vec2::new(PI / 2.0, 0.0));
    }

    #[test]
    fn example51_origin_is_an_equilibrium() {
        let field = example51();
        for &t in &[0.0, 0.05, 0.2, 0.42] {
            assert_eq!(field.evaluate(t, &Vec2::zeros()).unwrap(), Vec2::zeros());
        }
    }

    #[test]
    fn example51_fast_phase_matrix_product() {
        // In the rotation phase, h(t, z) = (2 pi / tau) (y, -x).
        let field = example51();
        let v = field.evaluate(0.05, &Vec2::new(0.0, 1.0)).unwrap();
        assert!((v.x - 62.831_853_071_795_864).abs() < 1e-12);
        assert!(v.y.abs() < 1e-12);
    }

    #[test]
    fn example51_pure_outer_region() {
        let field = example51();
        for &t in &[0.01, 0.3] {
            let v = field.evaluate(t, &Vec2::new(3.0, 0.0)).unwrap();
            assert_eq!(v, Vec2::new(-3.0, 0.0));
        }
    }

    #[test]
    fn duffing_cubic_restoring_force() {
        let field = build_scenario(&ScenarioSpec::new(ScenarioName::DuffingSuperlinear)).unwrap();
        let v = field.evaluate(0.0, &Vec2::new(2.0, 0.0)).unwrap();
        assert_eq!(v, Vec2::new(0.0, -8.0));
    }

    #[test]
    fn norm_cap_is_enforced() {
        let field = example51();
        let err = field.evaluate(0.0, &Vec2::new(2e6, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NormCapExceeded { .. }));
    }

    #[test]
    fn invalid_tau_rejected() {
        let spec = ScenarioSpec::new(ScenarioName::Example51).with_param("tau", 0.5);
        assert!(matches!(build_scenario(&spec), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn unknown_scenario_and_params_rejected() {
        assert!(matches!(ScenarioSpec::parse("nope"), Err(Error::UnknownScenario(_))));
        let spec = ScenarioSpec::new(ScenarioName::RigidRotation).with_param("bogus", 1.0);
        assert!(matches!(build_scenario(&spec), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn scenario_spec_parses_json() {
        let spec = ScenarioSpec::parse(r#"{"name": "example51", "params": {"tau": 0.2}}"#).unwrap();
        assert_eq!(spec.name, ScenarioName::Example51);
        assert_eq!(spec.params["tau"], 0.2);
        let field = build_scenario(&spec).unwrap();
        assert_eq!(field.jump_times(), &[0.0, 0.2]);
    }

    #[test]
    fn all_scenarios_are_time_periodic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for name in [
            ScenarioName::RigidRotation,
            ScenarioName::Example51,
            ScenarioName::LinearSystem,
            ScenarioName::DuffingSuperlinear,
            ScenarioName::AsymlinHamiltonian,
        ] {
            let field = build_scenario(&ScenarioSpec::new(name)).unwrap();
            let t_period = field.period();
            for _ in 0..100 {
                let t: f64 = rng.gen_range(0.0..3.0 * t_period);
                let z = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let a = field.evaluate(t, &z).unwrap();
                let b = field.evaluate(t + t_period, &z).unwrap();
                assert!(
                    (a - b).norm() <= 1e-12 * (1.0 + a.norm()),
                    "{}: rhs not T-periodic at t = {t}",
                    name.as_str()
                );
            }
        }
    }

    #[test]
    fn example51_blend_is_continuous() {
        let field = example51();
        let eps = 1e-8;
        for &t in &[0.03, 0.25] {
            for &ang in &[0.0f64, 1.0, 2.5, 4.0] {
                let u = Vec2::new(ang.cos(), ang.sin());
                for &r in &[1.5, 2.0] {
                    let base = field.evaluate(t, &(u * r)).unwrap();
                    for sgn in [-1.0, 1.0] {
                        let v = field.evaluate(t, &(u * (r + sgn * eps))).unwrap();
                        assert!((v - base).norm() < 1e-6, "jump across r = {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn lin_zero_matches_field_near_origin() {
        for name in [
            ScenarioName::RigidRotation,
            ScenarioName::Example51,
            ScenarioName::LinearSystem,
            ScenarioName::AsymlinHamiltonian,
        ] {
            let field = build_scenario(&ScenarioSpec::new(name)).unwrap();
            let l0 = field.lin_zero().expect("scenario declares lin_zero");
            let mut prev = f64::INFINITY;
            for &scale in &[1e-3, 1e-5] {
                let mut worst: f64 = 0.0;
                for &t in &[0.0, 0.05, 0.2] {
                    for &ang in &[0.3f64, 2.0, 5.0] {
                        let z = Vec2::new(ang.cos(), ang.sin()) * scale;
                        let diff = (field.evaluate(t, &z).unwrap() - l0(t) * z).norm() / scale;
                        worst = worst.max(diff);
                    }
                }
                assert!(worst <= prev + 1e-12, "{}: ratio not decreasing", name.as_str());
                prev = worst;
            }
        }
    }

    #[test]
    fn breakpoints_extend_periodically() {
        let field = example51();
        let brks = field.breakpoints_between(0.0, 0.43);
        assert_eq!(brks, vec![0.1]);
        let brks = field.breakpoints_between(0.0, 1.0);
        assert_eq!(brks.len(), 5); // 0.1, 0.43, 0.53, 0.86, 0.96
        assert!((brks[1] - 0.43).abs() < 1e-12);
        assert!((brks[4] - 0.96).abs() < 1e-12);
    }
}
