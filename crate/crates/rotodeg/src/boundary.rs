//! Oriented boundary geometry: circles, rectangles, generalized annuli, and
//! predicate-driven refinement of boundary samples.

use crate::error::{Error, Result};
use crate::Vec2;
use std::f64::consts::TAU;
use std::sync::Arc;

type ParamFn = dyn Fn(f64) -> Vec2 + Send + Sync;

/// Traversal direction of a closed curve, validated against the shoelace
/// area of the cached samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Counterclockwise.
    Positive,
    Negative,
}

/// Depth cap for [`refine`]; hitting it marks the computation uncertified.
pub const MAX_REFINE_DEPTH: u32 = 40;

/// Default number of initial boundary samples.
pub const DEFAULT_SAMPLES: usize = 64;

/// A closed parameterized curve with a cached, refinable sample set.
///
/// Parameters live in `[0, 1)` with the closing edge running from the last
/// sample back to `t = 0`.
#[derive(Clone)]
pub struct OrientedCurve {
    param: Arc<ParamFn>,
    orientation: Orientation,
    ts: Vec<f64>,
    points: Vec<Vec2>,
    depths: Vec<u32>,
}

impl std::fmt::Debug for OrientedCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OrientedCurve")
            .field("orientation", &self.orientation)
            .field("samples", &self.ts.len())
            .finish()
    }
}

/// One cached sample: parameter plus its image point.
#[derive(Debug, Clone, Copy)]
pub struct CurveSample {
    pub t: f64,
    pub point: Vec2,
}

impl OrientedCurve {
    /// Wrap a user-supplied closed parameterization.
    pub fn from_param<F>(param: F, orientation: Orientation, n0: usize) -> Result<Self>
    where
        F: Fn(f64) -> Vec2 + Send + Sync + 'static,
    {
        if n0 < 16 {
            return Err(Error::InvalidParams(format!("need at least 16 samples, got {n0}")));
        }
        let param: Arc<ParamFn> = Arc::new(param);
        let scale = 1.0 + param(0.0).norm();
        if (param(0.0) - param(1.0)).norm() > 1e-9 * scale {
            return Err(Error::InvalidParams("parameterization is not closed".into()));
        }
        let ts: Vec<f64> = (0..n0).map(|k| k as f64 / n0 as f64).collect();
        let points: Vec<Vec2> = ts.iter().map(|&t| param(t)).collect();
        let curve = Self { param, orientation, depths: vec![0; ts.len()], ts, points };
        let area = curve.signed_area();
        let ok = match orientation {
            Orientation::Positive => area > 0.0,
            Orientation::Negative => area < 0.0,
        };
        if !ok {
            return Err(Error::InvalidParams(format!(
                "signed sample area {area:.3e} contradicts declared orientation"
            )));
        }
        Ok(curve)
    }

    /// Positively oriented circle.
    pub fn circle(center: Vec2, radius: f64, n0: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
        }
        Self::from_param(
            move |t| center + radius * Vec2::new((TAU * t).cos(), (TAU * t).sin()),
            Orientation::Positive,
            n0,
        )
    }

    /// Positively oriented axis-aligned rectangle boundary.
    pub fn rectangle(lo: Vec2, hi: Vec2) -> Result<Self> {
        if !(hi.x > lo.x && hi.y > lo.y) {
            return Err(Error::InvalidParams("degenerate rectangle".into()));
        }
        let w = hi.x - lo.x;
        let h = hi.y - lo.y;
        Self::from_param(
            move |t| {
                let s = t.rem_euclid(1.0) * 4.0;
                if s < 1.0 {
                    Vec2::new(lo.x + w * s, lo.y)
                } else if s < 2.0 {
                    Vec2::new(hi.x, lo.y + h * (s - 1.0))
                } else if s < 3.0 {
                    Vec2::new(hi.x - w * (s - 2.0), hi.y)
                } else {
                    Vec2::new(lo.x, hi.y - h * (s - 3.0))
                }
            },
            Orientation::Positive,
            16,
        )
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn point_at(&self, t: f64) -> Vec2 {
        (self.param)(t)
    }

    pub fn samples(&self) -> impl Iterator<Item = CurveSample> + '_ {
        self.ts.iter().zip(&self.points).map(|(&t, &point)| CurveSample { t, point })
    }

    pub fn sample(&self, k: usize) -> CurveSample {
        CurveSample { t: self.ts[k], point: self.points[k] }
    }

    pub(crate) fn depth(&self, k: usize) -> u32 {
        self.depths[k]
    }

    /// Shoelace area of the cached samples.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0.0;
        for k in 0..n {
            let a = self.points[k];
            let b = self.points[(k + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        0.5 * acc
    }

    /// Largest sample distance from the origin; used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Winding number of the cached sample polygon around `p`.
    pub fn winds_around(&self, p: &Vec2) -> i64 {
        let n = self.points.len();
        let mut total = 0.0;
        for k in 0..n {
            let a = self.points[k] - p;
            let b = self.points[(k + 1) % n] - p;
            total += (a.x * b.y - a.y * b.x).atan2(a.dot(&b));
        }
        (total / TAU).round() as i64
    }

    /// Split the edge starting at sample `k`, inserting the parameter
    /// midpoint. Returns the new sample index.
    pub(crate) fn split_edge(&mut self, k: usize) -> usize {
        let n = self.ts.len();
        let ta = self.ts[k];
        let tb = if k + 1 == n { 1.0 } else { self.ts[k + 1] };
        let tm = 0.5 * (ta + tb);
        let depth = self.depths[k].max(if k + 1 == n { self.depths[0] } else { self.depths[k + 1] }) + 1;
        self.ts.insert(k + 1, tm);
        self.points.insert(k + 1, (self.param)(tm));
        self.depths.insert(k + 1, depth);
        k + 1
    }
}

/// Refine until no adjacent sample pair satisfies `needs_split`.
///
/// Old samples survive refinement; only midpoints are inserted. The closing
/// pair (last sample, first sample) participates like any other edge.
pub fn refine<F>(curve: &OrientedCurve, mut needs_split: F, max_depth: u32) -> Result<OrientedCurve>
where
    F: FnMut(&CurveSample, &CurveSample) -> bool,
{
    if max_depth > MAX_REFINE_DEPTH {
        return Err(Error::InvalidParams(format!("max_depth must be <= {MAX_REFINE_DEPTH}")));
    }
    let mut out = curve.clone();
    let mut k = 0;
    while k < out.ts.len() {
        let n_now = out.ts.len();
        let a = out.sample(k);
        let b = out.sample((k + 1) % n_now);
        if needs_split(&a, &b) {
            if out.depth(k).max(out.depth((k + 1) % n_now)) >= max_depth {
                return Err(Error::RefinementLimit);
            }
            out.split_edge(k);
            // Re-examine the left half of the split edge.
            continue;
        }
        k += 1;
    }
    Ok(out)
}

/// A generalized annulus: the region between two positively oriented closed
/// curves, the inner one strictly inside the outer one.
#[derive(Debug, Clone)]
pub struct GeneralizedAnnulus {
    outer: OrientedCurve,
    inner: OrientedCurve,
    contains_origin_inner: bool,
}

impl GeneralizedAnnulus {
    pub fn from_curves(
        outer: OrientedCurve,
        inner: OrientedCurve,
        contains_origin_inner: bool,
    ) -> Result<Self> {
        for s in inner.samples() {
            if outer.winds_around(&s.point) != 1 {
                return Err(Error::InvalidParams(
                    "inner curve is not strictly inside the outer curve".into(),
                ));
            }
        }
        if contains_origin_inner && inner.winds_around(&Vec2::zeros()) != 1 {
            return Err(Error::InvalidParams("origin is not inside the inner curve".into()));
        }
        Ok(Self { outer, inner, contains_origin_inner })
    }

    /// Origin-centered circular annulus.
    pub fn circles(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) {
            return Err(Error::InvalidParams(format!(
                "require 0 < r_in < r_out, got ({r_in}, {r_out})"
            )));
        }
        Self::from_curves(
            OrientedCurve::circle(Vec2::zeros(), r_out, DEFAULT_SAMPLES)?,
            OrientedCurve::circle(Vec2::zeros(), r_in, DEFAULT_SAMPLES)?,
            true,
        )
    }

    pub fn outer(&self) -> &OrientedCurve {
        &self.outer
    }

    pub fn inner(&self) -> &OrientedCurve {
        &self.inner
    }

    pub fn contains_origin_inner(&self) -> bool {
        self.contains_origin_inner
    }

    pub fn contains_point(&self, p: &Vec2) -> bool {
        self.outer.winds_around(p) != 0 && self.inner.winds_around(p) == 0
    }
}

/// Which side of the region's closure the origin lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginSide {
    Inside,
    Outside,
}

/// A degree-computation domain: a ball or a generalized annulus.
#[derive(Debug, Clone)]
pub enum Region {
    Ball { center: Vec2, radius: f64 },
    Annulus(GeneralizedAnnulus),
}

impl Region {
    pub fn ball(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
        }
        if ((center.norm() - radius).abs()) < 1e-12 * (1.0 + radius) {
            return Err(Error::InvalidParams("origin lies on the ball boundary".into()));
        }
        Ok(Region::Ball { center, radius })
    }

    /// Origin-centered circular annulus region.
    pub fn annulus(r_in: f64, r_out: f64) -> Result<Self> {
        Ok(Region::Annulus(GeneralizedAnnulus::circles(r_in, r_out)?))
    }

    /// Boundary components with the orientation signs induced by the region:
    /// a ball contributes its circle positively; an annulus contributes the
    /// outer curve positively and the inner curve negatively.
    pub fn boundary_components(&self) -> Result<Vec<(OrientedCurve, i64)>> {
        match self {
            Region::Ball { center, radius } => {
                Ok(vec![(OrientedCurve::circle(*center, *radius, DEFAULT_SAMPLES)?, 1)])
            }
            Region::Annulus(a) => {
                Ok(vec![(a.outer.clone(), 1), (a.inner.clone(), -1)])
            }
        }
    }

    pub fn origin_side(&self) -> OriginSide {
        match self {
            Region::Ball { center, radius } => {
                if center.norm() < *radius {
                    OriginSide::Inside
                } else {
                    OriginSide::Outside
                }
            }
            // For an annulus the origin sits in the inner hole (or beyond the
            // outer curve); either way it avoids the closure.
            Region::Annulus(_) => OriginSide::Outside,
        }
    }

    pub fn contains_point(&self, p: &Vec2) -> bool {
        match self {
            Region::Ball { center, radius } => (p - center).norm() < *radius,
            Region::Annulus(a) => a.contains_point(p),
        }
    }

    /// Characteristic length used to normalize tolerances.
    pub fn scale(&self) -> f64 {
        match self {
            Region::Ball { center, radius } => center.norm() + radius,
            Region::Annulus(a) => a.outer.scale(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_invariants() {
        let c = OrientedCurve::circle(Vec2::zeros(), 2.0, 64).unwrap();
        assert!((c.point_at(0.0) - c.point_at(1.0)).norm() < 1e-12);
        assert!(c.signed_area() > 0.0);
        assert_eq!(c.winds_around(&Vec2::zeros()), 1);
    }

    #[test]
    fn off_center_circle_misses_origin() {
        let c = OrientedCurve::circle(Vec2::new(5.0, 3.0), 1.0, 64).unwrap();
        assert_eq!(c.winds_around(&Vec2::zeros()), 0);
    }

    #[test]
    fn degenerate_radius_rejected() {
        assert!(matches!(
            OrientedCurve::circle(Vec2::zeros(), 0.0, 64),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn components_and_signs() {
        let ball = Region::ball(Vec2::zeros(), 1.0).unwrap();
        let comps = ball.boundary_components().unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].1, 1);

        let ann = Region::annulus(1.0, 3.0).unwrap();
        let comps = ann.boundary_components().unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!((comps[0].1, comps[1].1), (1, -1));
        assert!(comps[0].0.scale() > comps[1].0.scale());
    }

    #[test]
    fn refine_is_a_noop_for_tame_predicates() {
        let c = OrientedCurve::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let refined = refine(&c, |_, _| false, 40).unwrap();
        assert_eq!(refined.len(), 64);
    }

    #[test]
    fn refine_keeps_old_samples_and_orientation() {
        let c = OrientedCurve::circle(Vec2::zeros(), 1.0, 16).unwrap();
        let old: Vec<f64> = c.samples().map(|s| s.t).collect();
        // Split everything with an angular gap above 0.15 rad once or twice.
        let refined = refine(
            &c,
            |a, b| {
                let d = (b.point - a.point).norm();
                d > 0.15
            },
            40,
        )
        .unwrap();
        assert!(refined.len() > c.len());
        for t in old {
            assert!(refined.samples().any(|s| s.t == t), "lost sample {t}");
        }
        assert_eq!(refined.orientation(), Orientation::Positive);
        assert!(refined.signed_area() > 0.0);
    }

    #[test]
    fn adversarial_predicate_hits_depth_limit() {
        let c = OrientedCurve::circle(Vec2::zeros(), 1.0, 16).unwrap();
        assert!(matches!(refine(&c, |_, _| true, 40), Err(Error::RefinementLimit)));
    }

    #[test]
    fn refinement_is_local_for_a_single_fast_swing() {
        // g(z) = z - c swings fast only near the closest approach to c,
        // placed between grid samples so no power-of-two grid is lucky.
        let c = OrientedCurve::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let a0 = 0.7 * TAU / 64.0;
        let target = 0.997 * Vec2::new(a0.cos(), a0.sin());
        let needs = |a: &CurveSample, b: &CurveSample| {
            let wa = a.point - target;
            let wb = b.point - target;
            let step = (wa.x * wb.y - wa.y * wb.x).atan2(wa.dot(&wb));
            step.abs() >= std::f64::consts::FRAC_PI_2
        };
        let refined = refine(&c, needs, 40).unwrap();
        let adaptive = refined.len();

        // Uniform oversampling oracle: double n until the same criterion
        // holds everywhere.
        let mut n = 64;
        loop {
            let u = OrientedCurve::circle(Vec2::zeros(), 1.0, n).unwrap();
            let samples: Vec<CurveSample> = u.samples().collect();
            let bad = (0..n).any(|k| needs(&samples[k], &samples[(k + 1) % n]));
            if !bad {
                break;
            }
            n *= 2;
            assert!(n < 1 << 20);
        }
        assert!(
            adaptive * 2 < n,
            "adaptive used {adaptive} samples, uniform oracle needed {n}"
        );
    }

    #[test]
    fn annulus_validation() {
        assert!(GeneralizedAnnulus::circles(1.0, 3.0).is_ok());
        assert!(GeneralizedAnnulus::circles(3.0, 1.0).is_err());
        // Inner curve outside the outer one is rejected.
        let outer = OrientedCurve::circle(Vec2::zeros(), 1.0, 32).unwrap();
        let inner = OrientedCurve::circle(Vec2::new(5.0, 0.0), 0.5, 32).unwrap();
        assert!(GeneralizedAnnulus::from_curves(outer, inner, false).is_err());
    }

    #[test]
    fn region_membership() {
        let ann = Region::annulus(1.0, 3.0).unwrap();
        assert!(ann.contains_point(&Vec2::new(2.0, 0.0)));
        assert!(!ann.contains_point(&Vec2::new(0.5, 0.0)));
        assert!(!ann.contains_point(&Vec2::new(3.5, 0.0)));
        assert_eq!(ann.origin_side(), OriginSide::Outside);

        let ball = Region::ball(Vec2::new(5.0, 3.0), 1.0).unwrap();
        assert_eq!(ball.origin_side(), OriginSide::Outside);
        let ball0 = Region::ball(Vec2::zeros(), 2.0).unwrap();
        assert_eq!(ball0.origin_side(), OriginSide::Inside);
    }
}
