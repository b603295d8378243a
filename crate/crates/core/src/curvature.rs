//! Turning-angle bound: detection, per-waypoint convex adjustment and the
//! ERPR pipeline (beamlet initialization, segmented CFS, curvature sweeps).

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beamlet::{self, BeamletError};
use crate::cfs::{self, ObjectiveModel};
use crate::env::GridEnvironment;
use crate::geom::{turn_angle, ConvexPolygon, HalfPlane, Path, Point};
use crate::qp::{self, DenseMatrix, QpStatus, QuadraticProgram};
use crate::rpr::{self, PlanMetrics, PlanResult, PlanStatus, RprConfig, RprError};

/// Angles up to `theta_max + ANGLE_TOL` are accepted.
pub const ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("waypoints {0} and {} coincide", .0 + 1)]
    DegenerateStep(usize),
    #[error("turn bound must lie in (0, pi/2), got {0}")]
    InvalidThetaMax(f64),
    #[error("waypoint {0} cannot be adjusted (valid range is 2..=n-2)")]
    IndexOutOfRange(usize),
    #[error("no position of waypoint {0} satisfies its constraints")]
    InfeasibleSubproblem(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureMode {
    /// Only the wedge at the preceding waypoint.
    Faithful,
    /// Also bounds the angles at the moving waypoint and at its successor.
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureConfig {
    pub theta_max: f64,
    /// Sweep limit; `None` means one sweep per waypoint.
    pub maxiter: Option<usize>,
    pub qp_tol: f64,
    pub mode: CurvatureMode,
    /// Arc samples per side of the polygon inscribed in the angle region at
    /// the moving waypoint.
    pub lens_samples: usize,
    /// Densification spacing for the beamlet path; `None` means `2 delta`.
    pub densify_spacing: Option<f64>,
}

impl CurvatureConfig {
    pub fn new(theta_max: f64) -> Self {
        CurvatureConfig {
            theta_max,
            maxiter: None,
            qp_tol: qp::DEFAULT_TOL,
            mode: CurvatureMode::Extended,
            lens_samples: 8,
            densify_spacing: None,
        }
    }

    pub fn c1(&self) -> f64 {
        self.theta_max.tan()
    }

    fn validate(&self) -> Result<(), CurvatureError> {
        if self.theta_max > 0.0 && self.theta_max < std::f64::consts::FRAC_PI_2 {
            Ok(())
        } else {
            Err(CurvatureError::InvalidThetaMax(self.theta_max))
        }
    }
}

/// Turning angle at vertex `v` (between steps `v-1 -> v` and `v -> v+1`).
fn vertex_angle(w: &[Point], v: usize) -> Option<f64> {
    let a = w[v] - w[v - 1];
    let b = w[v + 1] - w[v];
    (a != Point::default() && b != Point::default()).then(|| turn_angle(a, b))
}

/// Indices `i` in `2..=n` whose angle between `x_{i-1} - x_{i-2}` and
/// `x_i - x_{i-1}` exceeds `theta_max`.
pub fn check_curvature(path: &Path, theta_max: f64) -> Result<Vec<usize>, CurvatureError> {
    let w = &path.waypoints;
    if let Some(i) = w.windows(2).position(|p| p[0] == p[1]) {
        return Err(CurvatureError::DegenerateStep(i));
    }
    Ok((2..w.len())
        .filter(|&i| vertex_angle(w, i - 1).is_some_and(|t| t > theta_max))
        .collect())
}

/// Vertices whose angle exceeds `theta_max + ANGLE_TOL` or is undefined.
fn violated_vertices(w: &[Point], theta_max: f64) -> Vec<bool> {
    let mut out = vec![false; w.len()];
    for v in 1..w.len().saturating_sub(1) {
        out[v] = vertex_angle(w, v).map_or(true, |t| t > theta_max + ANGLE_TOL);
    }
    out
}

/// The two linear constraints `a . x_i <= b` bounding the angle at `x_prev1`.
pub fn curvature_halfplanes(x_prev2: Point, x_prev1: Point, theta_max: f64) -> Result<[HalfPlane; 2], CurvatureError> {
    let u = x_prev1 - x_prev2;
    if u == Point::default() {
        return Err(CurvatureError::DegenerateStep(0));
    }
    let c1 = theta_max.tan();
    // dot = u.x_i - u.p1, cross = u.x * x_i.y - u.y * x_i.x - u x p1.
    let up = u.dot(x_prev1);
    let uxp = u.cross(x_prev1);
    Ok([
        HalfPlane::new(Point::new(-c1 * u.x - u.y, -c1 * u.y + u.x), -c1 * up + uxp),
        HalfPlane::new(Point::new(-c1 * u.x + u.y, -c1 * u.y - u.x), -c1 * up - uxp),
    ])
}

/// Fraction of the neighbouring step that the moving waypoint must advance
/// along a wedge axis; keeps it off the wedge apex.
pub const MIN_ADVANCE: f64 = 0.25;

/// `u . (x - apex) >= MIN_ADVANCE |u|^2` with `u = apex - from`.
fn advance_cut(from: Point, apex: Point) -> HalfPlane {
    let u = apex - from;
    HalfPlane::new(-u, -u.dot(apex) - MIN_ADVANCE * u.norm_squared())
}

/// Polygon inscribed in the set of points `x` for which the path
/// `prev -> x -> next` turns by at most `theta_max` (a lens bounded by two
/// circular arcs through `prev` and `next`).
pub fn turn_region(prev: Point, next: Point, theta_max: f64, samples: usize) -> Option<ConvexPolygon> {
    let chord = next - prev;
    let len = chord.norm();
    if len == 0.0 {
        return None;
    }
    let t = chord * (1.0 / len);
    let nrm = Point::new(-t.y, t.x);
    let mid = (prev + next) * 0.5;
    let radius = len / (2.0 * theta_max.sin());
    let k = samples.max(1);
    let mut pts = Vec::with_capacity(2 * k + 2);
    for side in [1.0, -1.0] {
        let centre = mid - nrm * (side * radius * theta_max.cos());
        for s in 0..=k {
            let alpha = -theta_max + 2.0 * theta_max * s as f64 / k as f64;
            pts.push(centre + nrm * (side * radius * alpha.cos()) + t * (radius * alpha.sin()));
        }
    }
    ConvexPolygon::hull(&pts)
}

/// Re-position waypoint `i` to minimize the objective with every other
/// waypoint fixed, subject to its feasible set and the angle constraints.
pub fn adjust_waypoint(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    path: &Path,
    i: usize,
    model: &ObjectiveModel,
    cfg: &CurvatureConfig,
) -> Result<Point, CurvatureError> {
    adjust_with_mode(env, hulls, path, i, model, cfg, cfg.mode)
}

fn adjust_with_mode(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    path: &Path,
    i: usize,
    model: &ObjectiveModel,
    cfg: &CurvatureConfig,
    mode: CurvatureMode,
) -> Result<Point, CurvatureError> {
    cfg.validate()?;
    let w = &path.waypoints;
    let n = w.len().saturating_sub(1);
    if i < 2 || i + 2 > n || model.n() != n {
        return Err(CurvatureError::IndexOutOfRange(i));
    }
    let m = model.scalar_cost();
    let lo = i.saturating_sub(2);
    let hi = (i + 2).min(n);
    let mut c = [0.0; 2];
    for j in (lo..=hi).filter(|&j| j != i) {
        c[0] += 2.0 * m[(i, j)] * w[j].x;
        c[1] += 2.0 * m[(i, j)] * w[j].y;
    }
    let mut q = DenseMatrix::zeros(2);
    q[(0, 0)] = 2.0 * m[(i, i)];
    q[(1, 1)] = 2.0 * m[(i, i)];
    let mut prob = QuadraticProgram::new(q, c.to_vec());
    let add = |prob: &mut QuadraticProgram, h: HalfPlane| {
        prob.add_inequality(vec![(0, h.normal.x), (1, h.normal.y)], h.offset);
    };

    let region = cfs::compute_feasible_set(env, hulls, w[i]).ok_or(CurvatureError::InfeasibleSubproblem(i))?;
    for h in region.halfplanes {
        add(&mut prob, h);
    }
    let degenerate = |e: CurvatureError, at: usize| match e {
        CurvatureError::DegenerateStep(_) => CurvatureError::DegenerateStep(at),
        e => e,
    };
    for h in curvature_halfplanes(w[i - 2], w[i - 1], cfg.theta_max).map_err(|e| degenerate(e, i - 2))? {
        add(&mut prob, h);
    }
    add(&mut prob, advance_cut(w[i - 2], w[i - 1]));
    if mode == CurvatureMode::Extended {
        for h in curvature_halfplanes(w[i + 2], w[i + 1], cfg.theta_max).map_err(|e| degenerate(e, i + 1))? {
            add(&mut prob, h);
        }
        add(&mut prob, advance_cut(w[i + 2], w[i + 1]));
        let lens = turn_region(w[i - 1], w[i + 1], cfg.theta_max, cfg.lens_samples)
            .ok_or(CurvatureError::DegenerateStep(i - 1))?;
        for e in 0..lens.vertices().len() {
            let nrm = lens.edge_normal(e);
            add(&mut prob, HalfPlane::new(nrm, nrm.dot(lens.vertices()[e])));
        }
    }
    match qp::solve_qp(&prob, cfg.qp_tol) {
        Ok(sol) if sol.status == QpStatus::Optimal => Ok(Point::new(sol.x[0], sol.x[1])),
        _ => Err(CurvatureError::InfeasibleSubproblem(i)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CurvatureStatus {
    Success,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub violations: usize,
    #[serde(rename = "J")]
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureOutcome {
    pub path: Path,
    pub status: CurvatureStatus,
    /// Full sweeps performed before the final check.
    pub sweeps: usize,
    pub infeasible_subproblems: usize,
    pub records: Vec<SweepRecord>,
}

impl CurvatureOutcome {
    /// Diagnostics CSV `sweep,violations,J`.
    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("sweep,violations,J\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.sweep, r.violations, r.objective));
        }
        out
    }
}

/// Sweep waypoints `2..=n-2` until every angle is within bounds or the sweep
/// limit is reached.
pub fn enforce_curvature(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    path: &Path,
    model: &ObjectiveModel,
    cfg: &CurvatureConfig,
) -> Result<CurvatureOutcome, CurvatureError> {
    cfg.validate()?;
    let mut path = path.clone();
    let n = path.len().saturating_sub(1);
    let maxiter = cfg.maxiter.unwrap_or(n + 1);
    let mut records = Vec::new();
    let mut infeasible = 0;
    for sweep in 0..=maxiter {
        let bad = violated_vertices(&path.waypoints, cfg.theta_max);
        let count = bad.iter().filter(|&&b| b).count();
        let objective = model.evaluate(&path).unwrap_or(f64::NAN);
        records.push(SweepRecord {
            sweep,
            violations: count,
            objective,
        });
        if count == 0 || sweep == maxiter {
            let status = if count == 0 {
                CurvatureStatus::Success
            } else {
                CurvatureStatus::Failed
            };
            return Ok(CurvatureOutcome {
                path,
                status,
                sweeps: sweep,
                infeasible_subproblems: infeasible,
                records,
            });
        }
        for i in 2..n.saturating_sub(1) {
            let bad = violated_vertices(&path.waypoints[i - 2..=i + 2], cfg.theta_max);
            if !(bad[1] || bad[2] || bad[3]) {
                continue;
            }
            let mut moved = adjust_with_mode(env, hulls, &path, i, model, cfg, cfg.mode);
            if moved.is_err() && cfg.mode == CurvatureMode::Extended {
                moved = adjust_with_mode(env, hulls, &path, i, model, cfg, CurvatureMode::Faithful);
            }
            match moved {
                Ok(p) => path.waypoints[i] = p,
                Err(_) => infeasible += 1,
            }
        }
    }
    unreachable!("the final sweep always returns")
}

/// Beamlet initialization, densification, segmented CFS and curvature
/// sweeps. Falls back to the densified beamlet path on failure.
pub fn erpr_plan(
    env: &GridEnvironment,
    start: Point,
    goal: Point,
    rpr_cfg: &RprConfig,
    curv_cfg: &CurvatureConfig,
) -> Result<PlanResult, ErprError> {
    curv_cfg.validate()?;
    rpr::check_endpoints(env, start, goal)?;
    let t0 = Instant::now();
    let coarse = beamlet::beamlet_initial_path(env, start, goal, curv_cfg.theta_max)?;
    let spacing = curv_cfg.densify_spacing.unwrap_or(2.0 * env.delta);
    let initial = beamlet::densify(&coarse, spacing)?;
    let init_time_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let hulls = env.dilated_obstacle_hulls();
    let mut metrics = PlanMetrics {
        init_time_s,
        initial_waypoints: initial.len(),
        ..PlanMetrics::default()
    };
    let mut status = PlanStatus::InitialPathFallback;
    let mut path = initial.clone();
    let mut traces = Vec::new();
    if initial.len() >= 2 {
        let r = rpr::reshape_segmented(env, &hulls, &initial, rpr_cfg)?;
        metrics.iterations = r.iterations;
        metrics.alternations = r.alternations;
        metrics.segments = r.segments;
        traces = r.traces;
        if r.ok {
            let model = ObjectiveModel::new(r.path.len() - 1, rpr_cfg.lambda).map_err(RprError::from)?;
            let out = enforce_curvature(env, &hulls, &r.path, &model, curv_cfg)?;
            metrics.sweeps = out.sweeps;
            if out.status == CurvatureStatus::Success {
                status = PlanStatus::Success;
                path = out.path;
            }
        }
    } else {
        status = PlanStatus::Success;
    }
    metrics.reshape_time_s = t1.elapsed().as_secs_f64();
    metrics.waypoints = path.len();
    Ok(PlanResult {
        path,
        initial_path: initial,
        status,
        metrics,
        traces,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErprError {
    #[error(transparent)]
    Rpr(#[from] RprError),
    #[error(transparent)]
    Beamlet(#[from] BeamletError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}
