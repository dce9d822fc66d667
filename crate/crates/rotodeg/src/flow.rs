//! Evolution maps, half-plane lifts, and rotation numbers.
//!
//! `evolve` integrates the planar ODE; `lift_trajectory` carries a trajectory
//! to the half-plane cover with a certified continuous angle (every angular
//! gap below pi/2, refined by re-integration, never by interpolation).

use crate::chart;
use crate::error::{Error, Result};
use crate::vectorfield::TimeVaryingField;
use crate::Vec2;
use std::f64::consts::{FRAC_PI_2, TAU};

/// Integration method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    Rk45Adaptive,
}

/// Integrator knobs. The defaults are tight enough for every built-in
/// scenario to reproduce its closed-form values to 1e-9 or better.
#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for [`Method::Rk4Fixed`].
    pub step_h: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub origin_clearance_eps: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45Adaptive,
            step_h: 1e-4,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_steps: 2_000_000,
            origin_clearance_eps: 1e-10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let tol_ok = |t: f64| t > 0.0 && t <= 1e-2;
        if !tol_ok(self.abs_tol) || !tol_ok(self.rel_tol) {
            return Err(Error::InvalidParams(format!(
                "abs_tol/rel_tol must lie in (0, 1e-2], got ({}, {})",
                self.abs_tol, self.rel_tol
            )));
        }
        if !(self.step_h > 0.0) {
            return Err(Error::InvalidParams("step_h must be positive".into()));
        }
        if !(self.origin_clearance_eps > 0.0) {
            return Err(Error::InvalidParams("origin_clearance_eps must be positive".into()));
        }
        Ok(())
    }

    /// Same config with both adaptive tolerances scaled (floored near the
    /// f64 noise floor) and the fixed step scaled accordingly.
    pub fn tightened(&self, factor: f64) -> Self {
        let mut c = self.clone();
        c.abs_tol = (c.abs_tol * factor).max(5e-14);
        c.rel_tol = (c.rel_tol * factor).max(5e-14);
        c.step_h *= factor.powf(0.25);
        c
    }
}

/// A sampled solution of the planar system.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
}

impl Trajectory {
    pub fn endpoint(&self) -> Vec2 {
        *self.points.last().expect("trajectory is nonempty")
    }
}

/// Witness that a trajectory entered the origin clearance ball.
#[derive(Debug, Clone, Copy)]
pub struct NullSetHit {
    pub start_point: Vec2,
    pub hit_time: f64,
}

/// A trajectory carried with its continuous chart coordinates.
///
/// Invariants: `psi(theta[k], r[k])` reproduces `points[k]`, consecutive
/// theta gaps stay below pi/2, and every radius clears the origin guard.
#[derive(Debug, Clone)]
pub struct LiftedPath {
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
}

impl LiftedPath {
    /// Net clockwise turns over the whole path.
    pub fn rotation(&self) -> f64 {
        (self.theta.last().unwrap() - self.theta[0]) / TAU
    }

    /// Chart displacement `(delta theta, delta r)` between the endpoints.
    pub fn displacement(&self) -> Vec2 {
        Vec2::new(
            self.theta.last().unwrap() - self.theta[0],
            self.r.last().unwrap() - self.r[0],
        )
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Largest angular gap the integrator will leave between consecutive output
/// points (strictly below the pi/2 wrap guard used by the lift).
const DENSE_ANGLE: f64 = 1.4;

fn eval(field: &TimeVaryingField, t: f64, z: &Vec2) -> Result<Vec2> {
    match field.evaluate(t, z) {
        Ok(v) => Ok(v),
        Err(Error::NormCapExceeded { norm, .. }) => Err(Error::BlowUp { t, norm }),
        Err(e) => Err(e),
    }
}

/// Stage times are clamped strictly inside the segment so that a stage
/// landing exactly on a declared jump time uses the left limit of the field,
/// keeping the Runge-Kutta step consistent with the smooth piece it covers.
fn stage_cap(seg_end: f64) -> f64 {
    seg_end - seg_end.abs().max(1.0) * (4.0 * f64::EPSILON)
}

/// Integrate from `(t0, x0)` to `t1`, landing exactly on every declared
/// discontinuity time in between.
pub(crate) fn integrate(
    field: &TimeVaryingField,
    t0: f64,
    x0: Vec2,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t1 > t0) || !t1.is_finite() || !x0.x.is_finite() || !x0.y.is_finite() {
        return Err(Error::InvalidParams(format!("bad integration range [{t0}, {t1}] or start")));
    }
    let mut times = vec![t0];
    let mut points = vec![x0];
    let mut steps_used = 0usize;

    let mut cuts = field.breakpoints_between(t0, t1);
    cuts.push(t1);
    let mut seg_start = t0;
    let mut z = x0;
    for &seg_end in &cuts {
        z = match cfg.method {
            Method::Rk45Adaptive => drive_rk45(
                field, seg_start, z, seg_end, cfg, &mut steps_used, &mut times, &mut points,
            )?,
            Method::Rk4Fixed => drive_rk4(
                field, seg_start, z, seg_end, cfg, &mut steps_used, &mut times, &mut points,
            )?,
        };
        seg_start = seg_end;
    }
    Ok(Trajectory { times, points })
}

#[allow(clippy::too_many_arguments)]
fn drive_rk45(
    field: &TimeVaryingField,
    t0: f64,
    x0: Vec2,
    t1: f64,
    cfg: &IntegratorConfig,
    steps_used: &mut usize,
    times: &mut Vec<f64>,
    points: &mut Vec<Vec2>,
) -> Result<Vec2> {
    let mut t = t0;
    let mut z = x0;
    let mut h = (t1 - t0) * 0.05;
    let h_floor = 4.0 * f64::EPSILON * (1.0 + t1.abs());
    let cap = stage_cap(t1);
    let mut k1 = eval(field, t, &z)?;

    while t < t1 {
        *steps_used += 1;
        if *steps_used > cfg.max_steps {
            return Err(Error::StepLimit(cfg.max_steps));
        }
        if h < h_floor {
            return Err(Error::StepLimit(*steps_used));
        }
        h = h.min(t1 - t);

        let mut k = [k1, Vec2::zeros(), Vec2::zeros(), Vec2::zeros(), Vec2::zeros(), Vec2::zeros(), Vec2::zeros()];
        for s in 1..6 {
            let mut y = z;
            for (j, kj) in k.iter().enumerate().take(s) {
                y += h * DP_A[s - 1][j] * kj;
            }
            k[s] = eval(field, (t + DP_C[s] * h).min(cap), &y)?;
        }
        let mut y5 = z;
        for (j, kj) in k.iter().enumerate().take(6) {
            y5 += h * DP_B5[j] * kj;
        }
        k[6] = eval(field, (t + h).min(cap), &y5)?;

        if !y5.x.is_finite() || !y5.y.is_finite() {
            h *= 0.3;
            continue;
        }

        let mut err2 = 0.0;
        for i in 0..2 {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += h * (DP_B5[j] - DP_B4[j]) * kj[i];
            }
            let scale = cfg.abs_tol + cfg.rel_tol * z[i].abs().max(y5[i].abs());
            err2 += (e / scale) * (e / scale);
        }
        let err = (err2 * 0.5).sqrt();
        if err > 1.0 {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }

        // Keep output dense in chart angle so the lift certifies cheaply.
        let rmin = z.norm().min(y5.norm());
        if rmin > 10.0 * cfg.origin_clearance_eps {
            let step = chart::angle_step(&z, &y5).abs();
            if step > DENSE_ANGLE {
                h *= (0.5 * DENSE_ANGLE / step).clamp(0.1, 0.5);
                continue;
            }
        }

        t += h;
        z = y5;
        let norm = z.norm();
        if norm > field.norm_cap() {
            return Err(Error::BlowUp { t, norm });
        }
        times.push(t);
        points.push(z);
        k1 = k[6]; // FSAL
        if err > 0.0 {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h *= 5.0;
        }
    }
    // Land exactly on the segment end.
    *times.last_mut().unwrap() = t1;
    Ok(z)
}

#[allow(clippy::too_many_arguments)]
fn drive_rk4(
    field: &TimeVaryingField,
    t0: f64,
    x0: Vec2,
    t1: f64,
    cfg: &IntegratorConfig,
    steps_used: &mut usize,
    times: &mut Vec<f64>,
    points: &mut Vec<Vec2>,
) -> Result<Vec2> {
    let n = ((t1 - t0) / cfg.step_h).ceil().max(1.0) as usize;
    let h = (t1 - t0) / n as f64;
    let cap = stage_cap(t1);
    let mut z = x0;
    for i in 0..n {
        *steps_used += 1;
        if *steps_used > cfg.max_steps {
            return Err(Error::StepLimit(cfg.max_steps));
        }
        let t = t0 + i as f64 * h;
        let k1 = eval(field, t, &z)?;
        let k2 = eval(field, t + 0.5 * h, &(z + 0.5 * h * k1))?;
        let k3 = eval(field, t + 0.5 * h, &(z + 0.5 * h * k2))?;
        let k4 = eval(field, (t + h).min(cap), &(z + h * k3))?;
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t_next = if i + 1 == n { t1 } else { t + h };
        let norm = z.norm();
        if !norm.is_finite() || norm > field.norm_cap() {
            return Err(Error::BlowUp { t: t_next, norm });
        }
        times.push(t_next);
        points.push(z);
    }
    Ok(z)
}

/// Evolve `x0` over `[0, t1]`.
pub fn evolve(
    field: &TimeVaryingField,
    x0: Vec2,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate(field, 0.0, x0, t1, cfg)
}

const LIFT_MAX_DEPTH: u32 = 40;

/// Lift a trajectory to the half-plane cover.
///
/// Gaps with angular jump at or above pi/2 are closed by re-integrating from
/// the left endpoint; re-integration (instead of interpolation) ensures a
/// near-origin passage cannot be silently skipped.
pub fn lift_trajectory(
    field: &TimeVaryingField,
    traj: &Trajectory,
    cfg: &IntegratorConfig,
) -> Result<LiftedPath> {
    lift_with_seed(field, traj, cfg, None)
}

pub(crate) fn lift_with_seed(
    field: &TimeVaryingField,
    traj: &Trajectory,
    cfg: &IntegratorConfig,
    seed: Option<f64>,
) -> Result<LiftedPath> {
    cfg.validate()?;
    let start = traj.points[0];
    let clearance = |z: &Vec2, t: f64| -> Result<()> {
        if z.norm() < cfg.origin_clearance_eps {
            Err(Error::OriginCrossing(NullSetHit { start_point: start, hit_time: t }))
        } else {
            Ok(())
        }
    };
    for (t, z) in traj.times.iter().zip(&traj.points) {
        clearance(z, *t)?;
    }

    let mut times = vec![traj.times[0]];
    let mut points = vec![traj.points[0]];
    for k in 1..traj.points.len() {
        close_gap(
            field,
            cfg,
            traj.times[k - 1],
            traj.points[k - 1],
            traj.times[k],
            traj.points[k],
            0,
            &clearance,
            &mut times,
            &mut points,
        )?;
    }

    let mut theta = Vec::with_capacity(points.len());
    let mut r = Vec::with_capacity(points.len());
    theta.push(seed.unwrap_or_else(|| chart::canonical_angle(&points[0])));
    r.push(points[0].norm());
    for k in 1..points.len() {
        let step = chart::angle_step(&points[k - 1], &points[k]);
        theta.push(theta[k - 1] + step);
        r.push(points[k].norm());
    }
    Ok(LiftedPath { times, points, theta, r })
}

#[allow(clippy::too_many_arguments)]
fn close_gap(
    field: &TimeVaryingField,
    cfg: &IntegratorConfig,
    ta: f64,
    za: Vec2,
    tb: f64,
    zb: Vec2,
    depth: u32,
    clearance: &dyn Fn(&Vec2, f64) -> Result<()>,
    times: &mut Vec<f64>,
    points: &mut Vec<Vec2>,
) -> Result<()> {
    if chart::angle_step(&za, &zb).abs() < FRAC_PI_2 {
        times.push(tb);
        points.push(zb);
        return Ok(());
    }
    if depth >= LIFT_MAX_DEPTH || tb - ta < 1e-13 * (1.0 + tb.abs()) {
        return Err(Error::RefinementLimit);
    }
    let tm = 0.5 * (ta + tb);
    let seg = integrate(field, ta, za, tm, cfg)?;
    let zm = seg.endpoint();
    clearance(&zm, tm)?;
    close_gap(field, cfg, ta, za, tm, zm, depth + 1, clearance, times, points)?;
    close_gap(field, cfg, tm, zm, tb, zb, depth + 1, clearance, times, points)
}

/// Evolve and lift over `[0, t1]` in one call.
pub fn evolve_lifted(
    field: &TimeVaryingField,
    x0: Vec2,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<LiftedPath> {
    let traj = evolve(field, x0, t1, cfg)?;
    lift_trajectory(field, &traj, cfg)
}

/// Clockwise turns of the trajectory from `x0` over one period.
pub fn rotation_number(field: &TimeVaryingField, x0: Vec2, cfg: &IntegratorConfig) -> Result<f64> {
    Ok(evolve_lifted(field, x0, field.period(), cfg)?.rotation())
}

/// The displacement map `f_T(x) = phi(T, x) - x`.
pub fn displacement_ft(field: &TimeVaryingField, x0: Vec2, cfg: &IntegratorConfig) -> Result<Vec2> {
    Ok(evolve(field, x0, field.period(), cfg)?.endpoint() - x0)
}

/// The chart displacement map `F_T(y) = Phi(T, y) - y = (dtheta, dr)`.
pub fn displacement_big_ft(
    field: &TimeVaryingField,
    x0: Vec2,
    cfg: &IntegratorConfig,
) -> Result<Vec2> {
    Ok(evolve_lifted(field, x0, field.period(), cfg)?.displacement())
}
