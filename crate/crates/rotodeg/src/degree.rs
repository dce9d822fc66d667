//! Certified winding numbers, Brouwer degree of the displacement map, the
//! generalized chart degree, rotation hulls, and the verifiers built on them.
//!
//! Degrees are computed from boundary values only: the Brouwer degree of any
//! continuous extension is determined by the boundary winding, so the
//! extension itself never needs constructing. A degree is reported as
//! `certified` when the boundary clearance and the largest angular step of
//! the sampled image polygon guarantee the integer is exact.

use crate::boundary::{GeneralizedAnnulus, OrientedCurve, OriginSide, Region, MAX_REFINE_DEPTH};
use crate::chart;
use crate::error::{Error, Result};
use crate::flow::{displacement_big_ft, displacement_ft, rotation_number, IntegratorConfig};
use crate::vectorfield::TimeVaryingField;
use crate::Vec2;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, TAU};

/// Absolute boundary clearance below which a degree is declared undefined,
/// after normalization by the curve scale.
pub const CLEARANCE_TOL: f64 = 1e-8;

/// How close (in rotations) a hull endpoint may come to an integer before
/// the membership of that integer in a sigma set is flagged as grazing.
pub const INTEGER_MARGIN: f64 = 1e-4;

/// Adjacent-sample rotation difference driving sigma-set refinement.
pub const SIGMA_STEP: f64 = 0.05;

/// Hard cap on boundary samples per winding computation.
const MAX_WINDING_SAMPLES: usize = 200_000;

/// The half-plane target `nu_i = (2 pi i, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerTarget {
    pub i: i64,
}

impl IntegerTarget {
    pub fn value(&self) -> Vec2 {
        chart::nu(self.i)
    }
}

/// An integer degree plus the evidence that certifies it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DegreeReport {
    pub value: i64,
    /// Min distance of the boundary image from the target.
    pub boundary_clearance: f64,
    /// Largest angular step of the image polygon, radians.
    pub max_angular_step: f64,
    pub samples_used: usize,
    pub certified: bool,
}

impl DegreeReport {
    fn combine(parts: &[(i64, DegreeReport)]) -> DegreeReport {
        let mut value = 0;
        let mut clearance = f64::INFINITY;
        let mut step: f64 = 0.0;
        let mut samples = 0;
        let mut certified = true;
        for (sign, r) in parts {
            value += sign * r.value;
            clearance = clearance.min(r.boundary_clearance);
            step = step.max(r.max_angular_step);
            samples += r.samples_used;
            certified &= r.certified;
        }
        DegreeReport {
            value,
            boundary_clearance: clearance,
            max_angular_step: step,
            samples_used: samples,
            certified,
        }
    }
}

/// Standard counterclockwise angle from vector `a` to vector `b`.
fn vec_angle_step(a: &Vec2, b: &Vec2) -> f64 {
    (a.x * b.y - a.y * b.x).atan2(a.dot(b))
}

struct SampledMap {
    ts: Vec<f64>,
    values: Vec<Vec2>,
    depths: Vec<u32>,
}

/// Evaluate `g` on the curve samples at parameters `ts`, in parallel but with
/// deterministic ordering.
fn eval_batch<G>(g: &G, curve: &OrientedCurve, ts: &[f64]) -> Result<Vec<Vec2>>
where
    G: Fn(&Vec2) -> Result<Vec2> + Sync,
{
    ts.par_iter()
        .map(|&t| g(&curve.point_at(t)))
        .collect::<std::result::Result<Vec<_>, _>>()
}

/// Winding number of `g - target` along the curve, traversed in parameter
/// order, with adaptive refinement until every angular step of the image
/// polygon is below pi/2.
///
/// Errors with [`Error::BoundaryZero`] when the image meets the target
/// within the (scale-normalized) clearance tolerance; a refinement-depth cap
/// yields `certified = false` instead of an error.
pub fn winding_number<G>(g: &G, curve: &OrientedCurve, target: Vec2) -> Result<DegreeReport>
where
    G: Fn(&Vec2) -> Result<Vec2> + Sync,
{
    let clearance_tol = CLEARANCE_TOL * curve.scale().max(1.0);
    let ts: Vec<f64> = curve.samples().map(|s| s.t).collect();
    let values = eval_batch(g, curve, &ts)?;
    let mut smap = SampledMap { depths: vec![0; ts.len()], ts, values };

    let mut clearance = f64::INFINITY;
    let check_clearance = |w: &Vec2, t: f64, clearance: &mut f64| -> Result<()> {
        let d = (w - target).norm();
        *clearance = clearance.min(d);
        if d < clearance_tol {
            let p = curve.point_at(t);
            return Err(Error::BoundaryZero { clearance: d, at: (p.x, p.y) });
        }
        Ok(())
    };
    for (t, w) in smap.ts.iter().zip(&smap.values) {
        check_clearance(w, *t, &mut clearance)?;
    }

    let mut capped = false;
    loop {
        let n = smap.ts.len();
        let mut split_edges = Vec::new();
        for k in 0..n {
            let a = smap.values[k] - target;
            let b = smap.values[(k + 1) % n] - target;
            if vec_angle_step(&a, &b).abs() >= FRAC_PI_2 {
                let depth = smap.depths[k].max(smap.depths[(k + 1) % n]);
                if depth >= MAX_REFINE_DEPTH || n + split_edges.len() >= MAX_WINDING_SAMPLES {
                    capped = true;
                } else {
                    split_edges.push(k);
                }
            }
        }
        if split_edges.is_empty() {
            break;
        }
        let mids: Vec<f64> = split_edges
            .iter()
            .map(|&k| {
                let ta = smap.ts[k];
                let tb = if k + 1 == n { 1.0 } else { smap.ts[k + 1] };
                0.5 * (ta + tb)
            })
            .collect();
        let new_values = eval_batch(g, curve, &mids)?;
        // Insert back-to-front so earlier indices stay valid.
        for j in (0..split_edges.len()).rev() {
            let k = split_edges[j];
            check_clearance(&new_values[j], mids[j], &mut clearance)?;
            let depth = smap.depths[k].max(smap.depths[(k + 1) % n]) + 1;
            smap.ts.insert(k + 1, mids[j]);
            smap.values.insert(k + 1, new_values[j]);
            smap.depths.insert(k + 1, depth);
        }
        if capped {
            break;
        }
    }

    let n = smap.ts.len();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for k in 0..n {
        let a = smap.values[k] - target;
        let b = smap.values[(k + 1) % n] - target;
        let step = vec_angle_step(&a, &b);
        max_step = max_step.max(step.abs());
        total += step;
    }
    let raw = total / TAU;
    let value = raw.round() as i64;
    let certified = !capped
        && clearance > clearance_tol
        && max_step < FRAC_PI_2
        && (raw - value as f64).abs() < 0.25;
    Ok(DegreeReport {
        value,
        boundary_clearance: clearance,
        max_angular_step: max_step,
        samples_used: n,
        certified,
    })
}

fn component_sum<G>(
    g: &G,
    components: &[(OrientedCurve, i64)],
    target: Vec2,
) -> Result<DegreeReport>
where
    G: Fn(&Vec2) -> Result<Vec2> + Sync,
{
    let mut parts = Vec::with_capacity(components.len());
    for (curve, sign) in components {
        parts.push((*sign, winding_number(g, curve, target)?));
    }
    Ok(DegreeReport::combine(&parts))
}

/// `deg(f_T, U, 0)`: orientation-signed winding of the displacement map over
/// the region boundary.
///
/// A [`Error::BoundaryZero`] here means some boundary point is T-periodic;
/// report it as a found orbit instead of a degree.
pub fn brouwer_deg_ft(
    field: &TimeVaryingField,
    region: &Region,
    cfg: &IntegratorConfig,
) -> Result<DegreeReport> {
    let g = |z: &Vec2| displacement_ft(field, *z, cfg);
    component_sum(&g, &region.boundary_components()?, Vec2::zeros())
}

/// The generalized degree `D(F_T, U, nu_i)`: winding of the chart
/// displacement map against the target `(2 pi i, 0)`.
pub fn dee_degree(
    field: &TimeVaryingField,
    region: &Region,
    i: i64,
    cfg: &IntegratorConfig,
) -> Result<DegreeReport> {
    let g = |z: &Vec2| displacement_big_ft(field, *z, cfg);
    component_sum(&g, &region.boundary_components()?, IntegerTarget { i }.value())
}

/// Rotation hull of a boundary set, the integers inside it, and how close
/// the hull endpoints come to integers.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RotationSummary {
    pub min_rot: f64,
    pub max_rot: f64,
    pub sigma: Vec<i64>,
    pub clearance_to_integers: f64,
}

impl RotationSummary {
    fn from_hull(min_rot: f64, max_rot: f64) -> Self {
        let lo = min_rot.ceil() as i64;
        let hi = max_rot.floor() as i64;
        let sigma = (lo..=hi).collect();
        let dist = |x: f64| (x - x.round()).abs();
        Self { min_rot, max_rot, sigma, clearance_to_integers: dist(min_rot).min(dist(max_rot)) }
    }

    fn merge(a: &RotationSummary, b: &RotationSummary) -> Self {
        // The joint hull of a disconnected boundary is the convex envelope.
        Self::from_hull(a.min_rot.min(b.min_rot), a.max_rot.max(b.max_rot))
    }

    /// True when the sigma membership of some integer is numerically
    /// uncertain.
    pub fn grazing(&self) -> bool {
        self.clearance_to_integers < INTEGER_MARGIN
    }
}

/// Rotation hull over one boundary curve, refined until adjacent samples
/// differ by less than [`SIGMA_STEP`] rotations.
pub fn sigma_set(
    field: &TimeVaryingField,
    curve: &OrientedCurve,
    cfg: &IntegratorConfig,
) -> Result<RotationSummary> {
    let rot = |z: &Vec2| rotation_number(field, *z, cfg);
    let ts: Vec<f64> = curve.samples().map(|s| s.t).collect();
    let mut values: Vec<f64> = ts
        .par_iter()
        .map(|&t| rot(&curve.point_at(t)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut params = ts;
    let mut depths = vec![0u32; params.len()];

    loop {
        let n = params.len();
        let mut splits = Vec::new();
        for k in 0..n {
            if (values[k] - values[(k + 1) % n]).abs() >= SIGMA_STEP {
                if depths[k].max(depths[(k + 1) % n]) >= MAX_REFINE_DEPTH
                    || n + splits.len() >= MAX_WINDING_SAMPLES
                {
                    return Err(Error::RefinementLimit);
                }
                splits.push(k);
            }
        }
        if splits.is_empty() {
            break;
        }
        let mids: Vec<f64> = splits
            .iter()
            .map(|&k| {
                let ta = params[k];
                let tb = if k + 1 == n { 1.0 } else { params[k + 1] };
                0.5 * (ta + tb)
            })
            .collect();
        let new_vals: Vec<f64> = mids
            .par_iter()
            .map(|&t| rot(&curve.point_at(t)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        for ((&k, &tm), &v) in splits.iter().zip(&mids).zip(&new_vals).rev() {
            let depth = depths[k] + 1;
            params.insert(k + 1, tm);
            values.insert(k + 1, v);
            depths.insert(k + 1, depth);
        }
    }

    let min_rot = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_rot = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RotationSummary::from_hull(min_rot, max_rot))
}

/// Joint rotation hull over all boundary components of a region.
pub fn sigma_of_region(
    field: &TimeVaryingField,
    region: &Region,
    cfg: &IntegratorConfig,
) -> Result<RotationSummary> {
    let comps = region.boundary_components()?;
    let mut acc: Option<RotationSummary> = None;
    for (curve, _) in &comps {
        let s = sigma_set(field, curve, cfg)?;
        acc = Some(match acc {
            None => s,
            Some(prev) => RotationSummary::merge(&prev, &s),
        });
    }
    Ok(acc.expect("region has at least one boundary component"))
}

/// Outcome of checking the degree decomposition on one region.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecompositionReport {
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
    pub origin_inside: bool,
    pub sigma: RotationSummary,
    pub per_i: Vec<(i64, DegreeReport)>,
    pub brouwer: DegreeReport,
}

/// Check that `deg(f_T, U, 0)` equals `[0 in U] + sum over sigma of
/// D(F_T, U, nu_i)`, the boundary-value identity relating the two degrees.
pub fn verify_decomposition(
    field: &TimeVaryingField,
    region: &Region,
    cfg: &IntegratorConfig,
) -> Result<DecompositionReport> {
    let brouwer = brouwer_deg_ft(field, region, cfg)?;
    let sigma = sigma_of_region(field, region, cfg)?;
    let mut per_i = Vec::new();
    for &i in &sigma.sigma {
        per_i.push((i, dee_degree(field, region, i, cfg)?));
    }
    let origin_inside = region.origin_side() == OriginSide::Inside;
    let rhs = (origin_inside as i64) + per_i.iter().map(|(_, r)| r.value).sum::<i64>();
    let holds = brouwer.value == rhs
        && brouwer.certified
        && per_i.iter().all(|(_, r)| r.certified)
        && !sigma.grazing();
    Ok(DecompositionReport {
        lhs: brouwer.value,
        rhs,
        holds,
        origin_inside,
        sigma,
        per_i,
        brouwer,
    })
}

/// Both routes to the annulus degree of `G_i`: the direct two-component
/// winding versus the difference of the per-ball generalized degrees.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AnnulusConsistencyReport {
    pub i: i64,
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
    pub direct: DegreeReport,
    pub outer: DegreeReport,
    pub inner: DegreeReport,
}

pub fn annulus_consistency(
    field: &TimeVaryingField,
    annulus: &GeneralizedAnnulus,
    i: i64,
    cfg: &IntegratorConfig,
) -> Result<AnnulusConsistencyReport> {
    let g = |z: &Vec2| displacement_big_ft(field, *z, cfg);
    let target = IntegerTarget { i }.value();
    let direct = component_sum(
        &g,
        &[(annulus.outer().clone(), 1), (annulus.inner().clone(), -1)],
        target,
    )?;
    let outer = winding_number(&g, annulus.outer(), target)?;
    let inner = winding_number(&g, annulus.inner(), target)?;
    let rhs = outer.value - inner.value;
    let holds =
        direct.value == rhs && direct.certified && outer.certified && inner.certified;
    Ok(AnnulusConsistencyReport { i, lhs: direct.value, rhs, holds, direct, outer, inner })
}

/// The twist condition: disjoint sigma sets on the two annulus boundaries.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TwistReport {
    pub twist: bool,
    /// Set when either hull endpoint grazes an integer, i.e. the sigma sets
    /// themselves are numerically uncertain.
    pub indeterminate: bool,
    pub sigma_in: RotationSummary,
    pub sigma_out: RotationSummary,
}

pub fn check_twist(
    field: &TimeVaryingField,
    annulus: &GeneralizedAnnulus,
    cfg: &IntegratorConfig,
) -> Result<TwistReport> {
    let sigma_out = sigma_set(field, annulus.outer(), cfg)?;
    let sigma_in = sigma_set(field, annulus.inner(), cfg)?;
    let twist = sigma_out.sigma.iter().all(|i| !sigma_in.sigma.contains(i));
    let indeterminate = sigma_out.grazing() || sigma_in.grazing();
    Ok(TwistReport { twist, indeterminate, sigma_in, sigma_out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorfield::{build_scenario, ScenarioName, ScenarioSpec};
    use std::f64::consts::FRAC_PI_4;

    fn unit_circle() -> OrientedCurve {
        OrientedCurve::circle(Vec2::zeros(), 1.0, 64).unwrap()
    }

    /// Brute-force winding oracle: dense uniform sampling, no adaptivity.
    fn dense_winding(g: impl Fn(&Vec2) -> Vec2, curve: &OrientedCurve, target: Vec2) -> f64 {
        let n = 100_000;
        let mut total = 0.0;
        for k in 0..n {
            let a = g(&curve.point_at(k as f64 / n as f64)) - target;
            let b = g(&curve.point_at((k + 1) as f64 / n as f64)) - target;
            total += vec_angle_step(&a, &b);
        }
        total / TAU
    }

    #[test]
    fn identity_winds_once() {
        let g = |z: &Vec2| Ok(*z);
        let report = winding_number(&g, &unit_circle(), Vec2::zeros()).unwrap();
        assert_eq!(report.value, 1);
        assert!(report.certified);
    }

    #[test]
    fn linear_hyperbolic_displacement_winds_negative() {
        // (A - I) z for A = diag(2, 1/2); sign det(A - I) = -1.
        let a = |z: &Vec2| Vec2::new(z.x, -0.5 * z.y);
        let report = winding_number(&|z: &Vec2| Ok(a(z)), &unit_circle(), Vec2::zeros()).unwrap();
        assert_eq!(report.value, -1);
        assert!(report.certified);
        let oracle = dense_winding(a, &unit_circle(), Vec2::zeros());
        assert!((oracle - report.value as f64).abs() < 1e-6);
    }

    #[test]
    fn constant_map_winds_zero() {
        let g = |_: &Vec2| Ok(Vec2::new(3.0, 1.0));
        let report = winding_number(&g, &unit_circle(), Vec2::zeros()).unwrap();
        assert_eq!(report.value, 0);
        assert!(report.certified);
        assert_eq!(report.max_angular_step, 0.0);
    }

    #[test]
    fn boundary_zero_is_detected() {
        let g = |z: &Vec2| Ok(*z);
        let on_curve = Vec2::new(1.0, 0.0);
        assert!(matches!(
            winding_number(&g, &unit_circle(), on_curve),
            Err(Error::BoundaryZero { .. })
        ));
    }

    #[test]
    fn unresolvable_map_reports_uncertified() {
        // Image direction oscillates infinitely fast near one boundary
        // point; no refinement depth resolves it.
        let g = |z: &Vec2| {
            let u = z.y.atan2(z.x).rem_euclid(TAU) / TAU + 1e-14;
            let a = 1.0 / u;
            Ok(Vec2::new(a.cos(), a.sin()))
        };
        let report = winding_number(&g, &unit_circle(), Vec2::zeros()).unwrap();
        assert!(!report.certified);
        assert!(report.max_angular_step >= FRAC_PI_2);
    }

    #[test]
    fn rigid_rotation_figure_one_degrees() {
        let field = build_scenario(&ScenarioSpec::new(ScenarioName::RigidRotation)).unwrap();
        let cfg = IntegratorConfig::default();
        let b2 = Region::ball(Vec2::zeros(), 2.0).unwrap();
        let far = Region::ball(Vec2::new(5.0, 3.0), 1.0).unwrap();
        assert_eq!(brouwer_deg_ft(&field, &b2, &cfg).unwrap().value, 1);
        assert_eq!(brouwer_deg_ft(&field, &far, &cfg).unwrap().value, 0);
        assert_eq!(dee_degree(&field, &b2, 0, &cfg).unwrap().value, 0);
        assert_eq!(dee_degree(&field, &far, 0, &cfg).unwrap().value, 0);
    }

    #[test]
    fn sigma_of_rigid_rotation_is_empty() {
        let field = build_scenario(&ScenarioSpec::new(ScenarioName::RigidRotation)).unwrap();
        let cfg = IntegratorConfig::default();
        let s = sigma_set(&field, &unit_circle(), &cfg).unwrap();
        assert!((s.min_rot - 0.125).abs() < 1e-9);
        assert!((s.max_rot - 0.125).abs() < 1e-9);
        assert!(s.sigma.is_empty());
        assert!(!s.grazing());
    }

    #[test]
    fn sigma_of_three_half_turns_is_empty() {
        let field = build_scenario(
            &ScenarioSpec::new(ScenarioName::RigidRotation)
                .with_param("omega", 3.0 * std::f64::consts::PI),
        )
        .unwrap();
        let cfg = IntegratorConfig::default();
        let s = sigma_set(&field, &unit_circle(), &cfg).unwrap();
        assert!((s.min_rot - 1.5).abs() < 1e-9);
        assert!(s.sigma.is_empty());
    }

    #[test]
    fn decomposition_on_rigid_rotation_both_cases() {
        let field = build_scenario(&ScenarioSpec::new(ScenarioName::RigidRotation)).unwrap();
        let cfg = IntegratorConfig::default();
        let inside = verify_decomposition(&field, &Region::ball(Vec2::zeros(), 2.0).unwrap(), &cfg)
            .unwrap();
        assert!(inside.holds);
        assert_eq!((inside.lhs, inside.rhs), (1, 1));
        assert!(inside.origin_inside);
        let outside =
            verify_decomposition(&field, &Region::ball(Vec2::new(5.0, 3.0), 1.0).unwrap(), &cfg)
                .unwrap();
        assert!(outside.holds);
        assert_eq!((outside.lhs, outside.rhs), (0, 0));
        assert!(!outside.origin_inside);
    }

    #[test]
    fn twist_vacuously_true_for_rigid_rotation() {
        let field = build_scenario(&ScenarioSpec::new(ScenarioName::RigidRotation)).unwrap();
        let cfg = IntegratorConfig::default();
        let annulus = GeneralizedAnnulus::circles(1.0, 3.0).unwrap();
        let t = check_twist(&field, &annulus, &cfg).unwrap();
        assert!(t.twist);
        assert!(!t.indeterminate);
        assert!(t.sigma_in.sigma.is_empty() && t.sigma_out.sigma.is_empty());
    }

    #[test]
    fn rotation_summary_hull_arithmetic() {
        let s = RotationSummary::from_hull(-0.3, 2.2);
        assert_eq!(s.sigma, vec![0, 1, 2]);
        let s = RotationSummary::from_hull(0.4, 0.6);
        assert!(s.sigma.is_empty());
        let s = RotationSummary::from_hull(1.0, 1.0);
        assert_eq!(s.sigma, vec![1]);
        assert!(s.grazing());
    }

    #[test]
    fn integer_target_is_exact() {
        let t = IntegerTarget { i: -3 };
        assert_eq!(t.value(), Vec2::new(-3.0 * TAU, 0.0));
    }

    #[test]
    fn winding_with_linear_monodromy_matches_det_sign() {
        // Rotation by pi/4 has det(R - I) > 0.
        let rot = |z: &Vec2| {
            let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
            Ok(Vec2::new(c * z.x - s * z.y - z.x, s * z.x + c * z.y - z.y))
        };
        assert_eq!(winding_number(&rot, &unit_circle(), Vec2::zeros()).unwrap().value, 1);
    }
}
