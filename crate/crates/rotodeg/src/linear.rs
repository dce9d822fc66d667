//! Linear planar systems: monodromy, nonresonance, the degree/rotation
//! dichotomy, the Maslov index recovered from it, and the search for radii
//! at which a nonlinear field inherits its linearization's data.

use crate::boundary::{OrientedCurve, Region, DEFAULT_SAMPLES};
use crate::degree::{brouwer_deg_ft, sigma_set, winding_number, RotationSummary};
use crate::error::{Error, Result};
use crate::flow::{evolve, rotation_number, IntegratorConfig};
use crate::vectorfield::TimeVaryingField;
use crate::{Mat2, Vec2};
use rayon::prelude::*;
use std::sync::Arc;

/// `|det(M - I)|` above this is decisively nonresonant.
pub const NONRESONANT_TOL: f64 = 1e-8;
/// `|det(M - I)|` below this is decisively resonant; the band in between is
/// marginal.
pub const RESONANT_TOL: f64 = 1e-12;
/// Margin for open-interval membership in the degree/rotation dichotomy.
pub const DICHOTOMY_MARGIN: f64 = 1e-4;
/// Allowed drift of a nonlinear rotation hull past its linearized hull when
/// matching asymptotic radii.
pub const ROT_PROXIMITY: f64 = 0.02;

type MatFn = dyn Fn(f64) -> Mat2 + Send + Sync;

fn j_matrix() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

/// A planar linear system `z' = L(t) z` over one period.
#[derive(Clone)]
pub struct LinearSystem {
    l: Arc<MatFn>,
    period: f64,
    hamiltonian: bool,
    jumps: Vec<f64>,
}

impl std::fmt::Debug for LinearSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSystem")
            .field("period", &self.period)
            .field("hamiltonian", &self.hamiltonian)
            .finish()
    }
}

impl LinearSystem {
    /// Wrap `L(t)`. With `hamiltonian` set, `J L(t)` must be symmetric
    /// (within 1e-10) at sampled times, i.e. `L = J S` with `S` symmetric.
    pub fn new<F>(period: f64, l: F, hamiltonian: bool) -> Result<Self>
    where
        F: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        Self::from_arc(period, Arc::new(l), hamiltonian, Vec::new())
    }

    pub fn constant(m: Mat2, period: f64, hamiltonian: bool) -> Result<Self> {
        Self::new(period, move |_| m, hamiltonian)
    }

    fn from_arc(period: f64, l: Arc<MatFn>, hamiltonian: bool, jumps: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParams(format!("period must be positive, got {period}")));
        }
        if hamiltonian {
            let j = j_matrix();
            for k in 0..32 {
                let t = period * (k as f64 + 0.31) / 32.0;
                let jl = j * l(t);
                let scale = 1.0 + jl.norm();
                if (jl[(0, 1)] - jl[(1, 0)]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidParams(format!(
                        "J L(t) is not symmetric at t = {t}; not Hamiltonian"
                    )));
                }
            }
        }
        Ok(Self { l, period, hamiltonian, jumps })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn hamiltonian(&self) -> bool {
        self.hamiltonian
    }

    pub fn matrix_at(&self, t: f64) -> Mat2 {
        (self.l)(t)
    }

    pub fn with_jump_times(mut self, jumps: Vec<f64>) -> Self {
        self.jumps = jumps;
        self
    }

    /// The linear dynamics as a plain field (uncapped for practical radii).
    pub fn field(&self) -> TimeVaryingField {
        let l = self.l.clone();
        TimeVaryingField::new(self.period, move |t, z: &Vec2| l(t) * z)
            .expect("period already validated")
            .with_norm_cap(1e12)
            .with_jump_times(self.jumps.clone())
    }
}

/// Monodromy matrix: the fundamental solution at time `T`, columns obtained
/// by evolving the basis vectors.
pub fn monodromy(sys: &LinearSystem, cfg: &IntegratorConfig) -> Result<Mat2> {
    let field = sys.field();
    let c0 = evolve(&field, Vec2::new(1.0, 0.0), sys.period, cfg)?.endpoint();
    let c1 = evolve(&field, Vec2::new(0.0, 1.0), sys.period, cfg)?.endpoint();
    let m = Mat2::new(c0.x, c1.x, c0.y, c1.y);
    let det = m.determinant();
    if det <= 0.0 {
        return Err(Error::Inconsistent(format!("monodromy determinant {det:.3e} <= 0")));
    }
    if sys.hamiltonian && (det - 1.0).abs() > 1e-8 {
        return Err(Error::Inconsistent(format!(
            "Hamiltonian monodromy determinant {det} deviates from 1"
        )));
    }
    Ok(m)
}

/// `det(M - I) != 0` up to the marginal band.
pub fn nonresonant(m: &Mat2) -> Result<bool> {
    let d = (m - Mat2::identity()).determinant();
    if d.abs() > NONRESONANT_TOL {
        Ok(true)
    } else if d.abs() < RESONANT_TOL {
        Ok(false)
    } else {
        Err(Error::Marginal(d))
    }
}

/// `sign det(M - I)`, cross-checked against the winding of `(M - I) z` on
/// the unit circle.
pub fn linear_degree(m: &Mat2) -> Result<i64> {
    let a = m - Mat2::identity();
    let d = a.determinant();
    if d.abs() <= NONRESONANT_TOL {
        return Err(Error::Marginal(d));
    }
    let sign = if d > 0.0 { 1 } else { -1 };
    let circle = OrientedCurve::circle(Vec2::zeros(), 1.0, DEFAULT_SAMPLES)?;
    let g = |z: &Vec2| Ok(a * z);
    let winding = winding_number(&g, &circle, Vec2::zeros())?;
    if winding.value != sign || !winding.certified {
        return Err(Error::Inconsistent(format!(
            "sign det(M-I) = {sign} but boundary winding = {} (certified: {})",
            winding.value, winding.certified
        )));
    }
    Ok(sign)
}

fn rotation_hull_at_radius(
    field: &TimeVaryingField,
    radius: f64,
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<(f64, f64, usize, usize)> {
    // Returns (min, max, argmin sample, argmax sample) over n uniform samples.
    let rots: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            rotation_number(field, Vec2::new(radius * a.cos(), radius * a.sin()), cfg)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut lo = (f64::INFINITY, 0usize);
    let mut hi = (f64::NEG_INFINITY, 0usize);
    for (k, &r) in rots.iter().enumerate() {
        if r < lo.0 {
            lo = (r, k);
        }
        if r > hi.0 {
            hi = (r, k);
        }
    }
    Ok((lo.0, hi.0, lo.1, hi.1))
}

/// Rotation hull of `F_T^L` on the unit circle, sampled at 256 points, with
/// scale invariance asserted at radii 0.1 and 10 and a Richardson check at
/// the extremal samples.
pub fn rotation_interval(sys: &LinearSystem, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    let field = sys.field();
    let n = 256;
    let (lo, hi, klo, khi) = rotation_hull_at_radius(&field, 1.0, n, cfg)?;
    for radius in [0.1, 10.0] {
        let (l2, h2, _, _) = rotation_hull_at_radius(&field, radius, n, cfg)?;
        if (l2 - lo).abs() > 1e-6 || (h2 - hi).abs() > 1e-6 {
            return Err(Error::Inconsistent(format!(
                "rotation hull not scale invariant: [{lo}, {hi}] at r=1 vs [{l2}, {h2}] at r={radius}"
            )));
        }
    }
    // Richardson check: the extremal values must survive a 10x tighter
    // integration.
    let tight = cfg.tightened(0.1);
    for (k, v) in [(klo, lo), (khi, hi)] {
        let a = std::f64::consts::TAU * k as f64 / n as f64;
        let again = rotation_number(&field, Vec2::new(a.cos(), a.sin()), &tight)?;
        if (again - v).abs() > 1e-8 {
            return Err(Error::Inconsistent(format!(
                "rotation value {v} moved by {:.3e} under tightened tolerances",
                (again - v).abs()
            )));
        }
    }
    Ok((lo, hi))
}

/// Recover the Maslov index from the (degree, rotation interval) pair.
///
/// For a nonresonant planar Hamiltonian system the pair is a complete
/// invariant: degree -1 with rotations in `(-k-1/2, -k+1/2)` means index
/// `2k`; degree +1 with rotations in `(-k-1, -k)` means index `2k+1`
/// (clockwise rotation convention).
pub fn maslov_index(sys: &LinearSystem, cfg: &IntegratorConfig) -> Result<i64> {
    if !sys.hamiltonian {
        return Err(Error::NotHamiltonian);
    }
    let m = monodromy(sys, cfg)?;
    if !nonresonant(&m)? {
        return Err(Error::Inconsistent("system is resonant; index undefined".into()));
    }
    let deg = linear_degree(&m)?;
    let (lo, hi) = rotation_interval(sys, cfg)?;
    let mid = 0.5 * (lo + hi);
    if deg == -1 {
        let k = (-mid).round() as i64;
        let (a, b) = (-(k as f64) - 0.5, -(k as f64) + 0.5);
        if lo > a + DICHOTOMY_MARGIN && hi < b - DICHOTOMY_MARGIN {
            Ok(2 * k)
        } else {
            Err(Error::Inconsistent(format!(
                "degree -1 but rotation hull [{lo}, {hi}] escapes ({a}, {b})"
            )))
        }
    } else {
        let k = (-mid).floor() as i64;
        let (a, b) = (-(k as f64) - 1.0, -(k as f64));
        if lo > a + DICHOTOMY_MARGIN && hi < b - DICHOTOMY_MARGIN {
            Ok(2 * k + 1)
        } else {
            Err(Error::Inconsistent(format!(
                "degree +1 but rotation hull [{lo}, {hi}] escapes ({a}, {b})"
            )))
        }
    }
}

/// Which linearization an asymptotic-radius search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymptoticEnd {
    Zero,
    Infinity,
}

/// One probed radius in an asymptotic search.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RadiusProbe {
    pub radius: f64,
    pub sigma: Vec<i64>,
    pub degree: i64,
    pub rot_interval: (f64, f64),
    pub matched: bool,
    pub error: Option<String>,
}

/// A radius whose boundary data matches the linearization.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AsymptoticRadius {
    pub radius: f64,
    pub sigma: Vec<i64>,
    pub degree: i64,
    pub trace: Vec<RadiusProbe>,
}

/// Geometric search (halving toward zero, doubling toward infinity, from
/// radius 1) for a circle on which the field's sigma set and displacement
/// degree match those of its linearization, with the rotation hull inside
/// the linearized hull up to [`ROT_PROXIMITY`].
pub fn asymptotic_radius(
    field: &TimeVaryingField,
    end: AsymptoticEnd,
    cfg: &IntegratorConfig,
) -> Result<AsymptoticRadius> {
    let lin = match end {
        AsymptoticEnd::Zero => field
            .lin_zero_arc()
            .ok_or(Error::MissingLinearization("zero"))?,
        AsymptoticEnd::Infinity => field
            .lin_inf_arc()
            .ok_or(Error::MissingLinearization("infinity"))?,
    };
    let sys = LinearSystem::from_arc(field.period(), lin, false, field.jump_times().to_vec())?;
    let lin_field = sys.field();
    let unit = OrientedCurve::circle(Vec2::zeros(), 1.0, DEFAULT_SAMPLES)?;
    let target: RotationSummary = sigma_set(&lin_field, &unit, cfg)?;
    let target_deg = linear_degree(&monodromy(&sys, cfg)?)?;

    let mut trace = Vec::new();
    let mut radius = 1.0;
    for _ in 0..=40 {
        let probe = probe_radius(field, radius, &target, target_deg, cfg);
        match probe {
            Ok(p) => {
                let matched = p.matched;
                trace.push(p);
                if matched {
                    let last = trace.last().unwrap();
                    return Ok(AsymptoticRadius {
                        radius,
                        sigma: last.sigma.clone(),
                        degree: last.degree,
                        trace,
                    });
                }
            }
            Err(e) => trace.push(RadiusProbe {
                radius,
                sigma: Vec::new(),
                degree: 0,
                rot_interval: (0.0, 0.0),
                matched: false,
                error: Some(e.to_string()),
            }),
        }
        radius = match end {
            AsymptoticEnd::Zero => radius * 0.5,
            AsymptoticEnd::Infinity => radius * 2.0,
        };
    }
    Err(Error::AsymptoticNotFound { trace })
}

fn probe_radius(
    field: &TimeVaryingField,
    radius: f64,
    target: &RotationSummary,
    target_deg: i64,
    cfg: &IntegratorConfig,
) -> Result<RadiusProbe> {
    let circle = OrientedCurve::circle(Vec2::zeros(), radius, DEFAULT_SAMPLES)?;
    let sigma = sigma_set(field, &circle, cfg)?;
    let deg = brouwer_deg_ft(field, &Region::ball(Vec2::zeros(), radius)?, cfg)?;
    let hull_ok = sigma.min_rot >= target.min_rot - ROT_PROXIMITY
        && sigma.max_rot <= target.max_rot + ROT_PROXIMITY;
    let matched =
        sigma.sigma == target.sigma && deg.value == target_deg && deg.certified && hull_ok;
    Ok(RadiusProbe {
        radius,
        sigma: sigma.sigma.clone(),
        degree: deg.value,
        rot_interval: (sigma.min_rot, sigma.max_rot),
        matched,
        error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    fn ccw_rotation_system(omega: f64, period: f64) -> LinearSystem {
        // z' = omega J z rotates counterclockwise at rate omega.
        LinearSystem::constant(Mat2::new(0.0, -omega, omega, 0.0), period, true).unwrap()
    }

    fn hyperbolic_system(period: f64) -> LinearSystem {
        LinearSystem::constant(Mat2::new(-1.0, 0.0, 0.0, 1.0), period, true).unwrap()
    }

    #[test]
    fn monodromy_of_quarter_turn() {
        let m = monodromy(&ccw_rotation_system(FRAC_PI_2, 1.0), &cfg()).unwrap();
        let want = Mat2::new(0.0, -1.0, 1.0, 0.0);
        assert!((m - want).norm() < 1e-8, "{m}");
    }

    #[test]
    fn monodromy_of_hyperbolic_system() {
        let m = monodromy(&hyperbolic_system(0.43), &cfg()).unwrap();
        let want = Mat2::new((-0.43f64).exp(), 0.0, 0.0, 0.43f64.exp());
        assert!((m - want).norm() < 1e-8);
    }

    #[test]
    fn monodromy_short_time_is_identity() {
        let m = monodromy(&hyperbolic_system(1e-8), &cfg()).unwrap();
        assert!((m - Mat2::identity()).norm() < 1e-7);
    }

    #[test]
    fn nonresonance_classification() {
        let quarter = monodromy(&ccw_rotation_system(FRAC_PI_2, 1.0), &cfg()).unwrap();
        assert!(nonresonant(&quarter).unwrap());
        assert!(!nonresonant(&Mat2::identity()).unwrap());
        let hyp = monodromy(&hyperbolic_system(0.43), &cfg()).unwrap();
        assert!(nonresonant(&hyp).unwrap());
        // det(M - I) = 1e-10 falls in the marginal band.
        let m = Mat2::new(1.0 + 1e-5, 0.0, 0.0, 1.0 + 1e-5);
        assert!(matches!(nonresonant(&m), Err(Error::Marginal(_))));
    }

    #[test]
    fn linear_degree_signs() {
        let hyp = Mat2::new((-0.43f64).exp(), 0.0, 0.0, 0.43f64.exp());
        assert_eq!(linear_degree(&hyp).unwrap(), -1);
        let rot = Mat2::new(0.0, -1.0, 1.0, 0.0);
        assert_eq!(linear_degree(&rot).unwrap(), 1);
        let shear = Mat2::new(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(linear_degree(&shear), Err(Error::Marginal(_))));
    }

    #[test]
    fn rotation_interval_of_rigid_ccw() {
        // omega T = 2.5 pi: every start makes -1.25 clockwise turns.
        let sys = ccw_rotation_system(2.5 * PI, 1.0);
        let (lo, hi) = rotation_interval(&sys, &cfg()).unwrap();
        assert!((lo + 1.25).abs() < 1e-9, "lo {lo}");
        assert!((hi + 1.25).abs() < 1e-9, "hi {hi}");
    }

    #[test]
    fn rotation_interval_of_hyperbolic_is_small() {
        let (lo, hi) = rotation_interval(&hyperbolic_system(0.43), &cfg()).unwrap();
        assert!(lo > -0.25 && hi < 0.25, "[{lo}, {hi}]");
        assert!(lo < 0.0 && hi > 0.0);
    }

    #[test]
    fn maslov_indices_from_closed_forms() {
        // deg +1 and rot = -1.25 in (-2, -1): k = 1, index 3.
        assert_eq!(maslov_index(&ccw_rotation_system(2.5 * PI, 1.0), &cfg()).unwrap(), 3);
        // deg +1 and rot = -0.25 in (-1, 0): k = 0, index 1.
        assert_eq!(maslov_index(&ccw_rotation_system(0.5 * PI, 1.0), &cfg()).unwrap(), 1);
        // deg -1 and rot near 0 in (-1/2, 1/2): index 0.
        assert_eq!(maslov_index(&hyperbolic_system(0.43), &cfg()).unwrap(), 0);
    }

    #[test]
    fn maslov_requires_hamiltonian_flag() {
        let sys = LinearSystem::constant(Mat2::new(-1.0, 0.0, 0.0, 1.0), 0.43, false).unwrap();
        assert!(matches!(maslov_index(&sys, &cfg()), Err(Error::NotHamiltonian)));
    }

    #[test]
    fn non_hamiltonian_matrix_rejected_at_construction() {
        let err = LinearSystem::constant(Mat2::new(1.0, 1.0, 0.0, 1.0), 1.0, true);
        assert!(matches!(err, Err(Error::InvalidParams(_))));
    }

    #[test]
    fn asymptotic_radius_of_pure_linear_field_is_one() {
        let field = crate::vectorfield::build_scenario(&crate::vectorfield::ScenarioSpec::new(
            crate::vectorfield::ScenarioName::LinearSystem,
        ))
        .unwrap();
        let found = asymptotic_radius(&field, AsymptoticEnd::Zero, &cfg()).unwrap();
        assert_eq!(found.radius, 1.0);
        assert_eq!(found.trace.len(), 1);
        let found = asymptotic_radius(&field, AsymptoticEnd::Infinity, &cfg()).unwrap();
        assert_eq!(found.radius, 1.0);
    }

    #[test]
    fn missing_linearization_is_typed() {
        let field = crate::vectorfield::build_scenario(&crate::vectorfield::ScenarioSpec::new(
            crate::vectorfield::ScenarioName::DuffingSuperlinear,
        ))
        .unwrap();
        assert!(matches!(
            asymptotic_radius(&field, AsymptoticEnd::Zero, &cfg()),
            Err(Error::MissingLinearization("zero"))
        ));
    }
}
