//! The canonical clockwise polar chart.
//!
//! The covering map is `psi(theta, r) = (r cos theta, -r sin theta)`, which
//! collapses `r = 0` onto the origin and is orientation preserving on the
//! open half-plane. Increasing `theta` moves a plane point clockwise, so
//! rotation numbers count clockwise turns positively.

use crate::Vec2;
use std::f64::consts::TAU;

/// Push a half-plane point `(theta, r)` down to the plane.
pub fn psi(theta: f64, r: f64) -> Vec2 {
    Vec2::new(r * theta.cos(), -r * theta.sin())
}

/// Chart angle of a nonzero plane point, normalized to `[0, 2pi)`.
pub fn canonical_angle(z: &Vec2) -> f64 {
    (-z.y).atan2(z.x).rem_euclid(TAU)
}

/// Signed chart-angle increment from `a` to `b`, in `(-pi, pi]`.
///
/// Positive values correspond to clockwise motion in the plane.
pub fn angle_step(a: &Vec2, b: &Vec2) -> f64 {
    // Chart unit vectors (cos theta, sin theta) = (x, -y)/r.
    let (ax, ay) = (a.x, -a.y);
    let (bx, by) = (b.x, -b.y);
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    cross.atan2(dot)
}

/// The distinguished target `nu_i = (2 pi i, 0)` in the half-plane.
pub fn nu(i: i64) -> Vec2 {
    Vec2::new(TAU * i as f64, 0.0)
}
