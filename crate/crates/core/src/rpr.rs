//! Segmented reshaping (RPR-m): split the initial path into segments of at
//! most `m` steps, reshape them in order with boundary-velocity continuity and
//! move a boundary point when the following segment cannot be reshaped.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::cfs::{
    self, AffineEquality, CfsConfig, CfsError, CfsOutcome, CfsStatus, ObjectiveModel,
};
use crate::env::GridEnvironment;
use crate::geom::{ConvexPolygon, Path, Point};
use crate::roadmap::{self, RoadmapError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RprError {
    #[error("path needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("segment size m must be at least 3, got {0}")]
    InvalidSegmentSize(usize),
    #[error("boundary {0} is not an interior boundary")]
    BadBoundary(usize),
    #[error("segment next to boundary {boundary} is too small to split")]
    SegmentTooSmall { boundary: usize },
    #[error("{which} point ({x}, {y}) lies in the dilated obstacle region")]
    EndpointBlocked { which: &'static str, x: f64, y: f64 },
    #[error(transparent)]
    Roadmap(#[from] RoadmapError),
    #[error(transparent)]
    Cfs(#[from] CfsError),
}

/// Waypoint indices `0 = b_0 < b_1 < ... < b_d = n`; segment `j` spans
/// waypoints `b_j..=b_{j+1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segmentation {
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn from_boundaries(boundaries: Vec<usize>) -> Option<Self> {
        let ok = boundaries.len() >= 2
            && boundaries[0] == 0
            && boundaries.windows(2).all(|w| w[0] < w[1]);
        ok.then_some(Segmentation { boundaries })
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Inclusive waypoint range of segment `j`.
    pub fn segment(&self, j: usize) -> (usize, usize) {
        (self.boundaries[j], self.boundaries[j + 1])
    }
}

pub fn segment_path(path: &Path, m: usize) -> Result<Segmentation, RprError> {
    if path.len() < 2 {
        return Err(RprError::TooFewWaypoints(path.len()));
    }
    if m < 3 {
        return Err(RprError::InvalidSegmentSize(m));
    }
    let n = path.len() - 1;
    let mut boundaries: Vec<usize> = (0..n).step_by(m).collect();
    boundaries.push(n);
    // A trailing segment of fewer than 3 waypoints joins its predecessor.
    if boundaries.len() > 2 && n - boundaries[boundaries.len() - 2] < 2 {
        boundaries.remove(boundaries.len() - 2);
    }
    Ok(Segmentation { boundaries })
}

/// Replace interior boundary `j` by two boundaries halfway into the adjoining
/// segments.
pub fn alter_boundary(seg: &Segmentation, j: usize) -> Result<Segmentation, RprError> {
    if j == 0 || j + 1 >= seg.boundaries.len() {
        return Err(RprError::BadBoundary(j));
    }
    let b = seg.boundaries[j];
    let m1 = b - seg.boundaries[j - 1];
    let m2 = seg.boundaries[j + 1] - b;
    // Steps, not waypoints: a 3-waypoint segment has 2 steps.
    if m1 <= 2 || m2 <= 2 {
        return Err(RprError::SegmentTooSmall { boundary: j });
    }
    let mut boundaries = seg.boundaries.clone();
    boundaries.splice(j..=j, [b - m1.div_ceil(2), b + m2.div_ceil(2)]);
    Ok(Segmentation { boundaries })
}

/// CFS on one segment with pinned endpoints and, when given, the first step
/// fixed to `inbound_velocity`.
pub fn reshape_segment(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    segment: &Path,
    inbound_velocity: Option<Point>,
    model: &ObjectiveModel,
    cfg: &CfsConfig,
) -> Result<CfsOutcome, CfsError> {
    let eqs: Vec<AffineEquality> = match inbound_velocity {
        Some(v) if segment.len() > 2 => AffineEquality::step_equals(0, v).to_vec(),
        _ => Vec::new(),
    };
    let mut out = cfs::cfs_reshape(env, hulls, segment, model, cfg, &eqs)?;
    // A one-step segment cannot absorb a velocity constraint.
    if let (Some(v), 2) = (inbound_velocity, segment.len()) {
        let step = segment.waypoints[1] - segment.waypoints[0];
        if (step - v).norm() > cfg.qp_tol.max(1e-9) {
            out.status = CfsStatus::EmptyFeasibleSet;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RprConfig {
    pub m: usize,
    pub lambda: f64,
    pub cfs: CfsConfig,
    /// Total boundary alterations allowed in one plan.
    pub max_alternations: usize,
}

impl Default for RprConfig {
    fn default() -> Self {
        RprConfig {
            m: 60,
            lambda: 1.0,
            cfs: CfsConfig::default(),
            max_alternations: 10,
        }
    }
}

impl RprConfig {
    /// A single segment regardless of path length.
    pub fn all(self) -> Self {
        RprConfig {
            m: usize::MAX,
            ..self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PlanStatus {
    Success,
    InitialPathFallback,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PlanMetrics {
    pub init_time_s: f64,
    pub reshape_time_s: f64,
    pub initial_waypoints: usize,
    pub waypoints: usize,
    /// CFS iterations summed over every segment solve.
    pub iterations: usize,
    pub alternations: usize,
    pub segments: usize,
    /// Curvature sweeps, for planners that run them.
    pub sweeps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub path: Path,
    pub initial_path: Path,
    pub status: PlanStatus,
    pub metrics: PlanMetrics,
    /// Objective trace of every segment solve, in solve order.
    pub traces: Vec<CfsOutcome>,
}

/// JSON planner report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanReport {
    pub status: PlanStatus,
    pub waypoints: Vec<Point>,
    pub init_time_s: f64,
    pub reshape_time_s: f64,
    pub iterations: usize,
    pub alternations: usize,
    pub initial_waypoints: usize,
}

impl PlanResult {
    pub fn report(&self) -> PlanReport {
        PlanReport {
            status: self.status,
            waypoints: self.path.waypoints.clone(),
            init_time_s: self.metrics.init_time_s,
            reshape_time_s: self.metrics.reshape_time_s,
            iterations: self.metrics.iterations,
            alternations: self.metrics.alternations,
            initial_waypoints: self.metrics.initial_waypoints,
        }
    }
}

/// Reject endpoints inside the dilated region before snapping hides it.
pub(crate) fn check_endpoints(env: &GridEnvironment, start: Point, goal: Point) -> Result<(), RprError> {
    for (which, p) in [("start", start), ("goal", goal)] {
        if !p.is_finite() || env.point_in_dilated(p) {
            return Err(RprError::EndpointBlocked { which, x: p.x, y: p.y });
        }
    }
    Ok(())
}

pub(crate) struct Reshaped {
    pub path: Path,
    pub ok: bool,
    pub iterations: usize,
    pub alternations: usize,
    pub segments: usize,
    pub traces: Vec<CfsOutcome>,
}

/// Segment loop shared by RPR and ERPR.
pub(crate) fn reshape_segmented(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    initial: &Path,
    cfg: &RprConfig,
) -> Result<Reshaped, RprError> {
    let mut seg = segment_path(initial, cfg.m.max(3))?;
    let mut done: Vec<Path> = Vec::new();
    let mut traces = Vec::new();
    let mut iterations = 0;
    let mut alternations = 0;
    let mut i = 0;
    let failed = |traces, iterations, alternations, seg: &Segmentation| Reshaped {
        path: initial.clone(),
        ok: false,
        iterations,
        alternations,
        segments: seg.segment_count(),
        traces,
    };
    while i < seg.segment_count() {
        done.truncate(i);
        let (lo, hi) = seg.segment(i);
        let piece = Path::new(initial.waypoints[lo..=hi].to_vec());
        let inbound = done.last().map(|p: &Path| {
            let w = &p.waypoints;
            w[w.len() - 1] - w[w.len() - 2]
        });
        let model = ObjectiveModel::new(piece.len() - 1, cfg.lambda)?;
        let out = reshape_segment(env, hulls, &piece, inbound, &model, &cfg.cfs)?;
        iterations += out.iterations;
        let status = out.status;
        let path = out.path.clone();
        traces.push(out);
        if status.path_is_feasible() {
            done.push(path);
            i += 1;
            continue;
        }
        if i == 0 || alternations >= cfg.max_alternations {
            return Ok(failed(traces, iterations, alternations, &seg));
        }
        match alter_boundary(&seg, i) {
            Ok(next) => seg = next,
            Err(RprError::SegmentTooSmall { .. }) => {
                return Ok(failed(traces, iterations, alternations, &seg))
            }
            Err(e) => return Err(e),
        }
        alternations += 1;
        i -= 1;
    }
    let mut waypoints = Vec::with_capacity(initial.len());
    for (k, p) in done.iter().enumerate() {
        let skip = usize::from(k > 0);
        waypoints.extend_from_slice(&p.waypoints[skip..]);
    }
    Ok(Reshaped {
        path: Path::new(waypoints),
        ok: true,
        iterations,
        alternations,
        segments: seg.segment_count(),
        traces,
    })
}

/// Roadmap initialization followed by segmented CFS reshaping. On failure the
/// initial path is returned with [`PlanStatus::InitialPathFallback`].
pub fn rpr_plan(
    env: &GridEnvironment,
    start: Point,
    goal: Point,
    cfg: &RprConfig,
) -> Result<PlanResult, RprError> {
    check_endpoints(env, start, goal)?;
    let t0 = Instant::now();
    let graph = roadmap::build_roadmap(env);
    let initial = roadmap::initial_path(&graph, start, goal)?;
    let init_time_s = t0.elapsed().as_secs_f64();
    let hulls = env.dilated_obstacle_hulls();
    rpr_from_initial(env, &hulls, initial, init_time_s, cfg)
}

/// RPR reshaping of a given initial path.
pub fn rpr_from_initial(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    initial: Path,
    init_time_s: f64,
    cfg: &RprConfig,
) -> Result<PlanResult, RprError> {
    let t1 = Instant::now();
    let r = if initial.len() >= 2 {
        reshape_segmented(env, hulls, &initial, cfg)?
    } else {
        Reshaped {
            path: initial.clone(),
            ok: true,
            iterations: 0,
            alternations: 0,
            segments: 0,
            traces: Vec::new(),
        }
    };
    let reshape_time_s = t1.elapsed().as_secs_f64();
    Ok(PlanResult {
        metrics: PlanMetrics {
            init_time_s,
            reshape_time_s,
            initial_waypoints: initial.len(),
            waypoints: r.path.len(),
            iterations: r.iterations,
            alternations: r.alternations,
            segments: r.segments,
            sweeps: 0,
        },
        status: if r.ok {
            PlanStatus::Success
        } else {
            PlanStatus::InitialPathFallback
        },
        path: r.path,
        initial_path: initial,
        traces: r.traces,
    })
}

/// `count` evenly spaced waypoints from `a` to `b` (at least two).
pub fn straight_line(a: Point, b: Point, count: usize) -> Path {
    let count = count.max(2);
    let n = (count - 1) as f64;
    let mut w: Vec<Point> = (0..count).map(|i| a + (b - a) * (i as f64 / n)).collect();
    w[count - 1] = b;
    Path::new(w)
}

/// Unsegmented CFS started from the straight segment between the endpoints
/// with `count` waypoints. On failure the straight segment is returned with
/// [`PlanStatus::InitialPathFallback`].
pub fn cfs_from_line(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    start: Point,
    goal: Point,
    count: usize,
    cfg: &RprConfig,
) -> Result<PlanResult, RprError> {
    let t0 = Instant::now();
    let line = straight_line(start, goal, count);
    let init_time_s = t0.elapsed().as_secs_f64();
    let model = ObjectiveModel::new(line.len() - 1, cfg.lambda)?;
    let t1 = Instant::now();
    let out = cfs::cfs_reshape(env, hulls, &line, &model, &cfg.cfs, &[])?;
    let reshape_time_s = t1.elapsed().as_secs_f64();
    let ok = out.status.path_is_feasible();
    let path = if ok { out.path.clone() } else { line.clone() };
    Ok(PlanResult {
        metrics: PlanMetrics {
            init_time_s,
            reshape_time_s,
            initial_waypoints: line.len(),
            waypoints: path.len(),
            iterations: out.iterations,
            segments: 1,
            ..PlanMetrics::default()
        },
        status: if ok { PlanStatus::Success } else { PlanStatus::InitialPathFallback },
        path,
        initial_path: line,
        traces: vec![out],
    })
}

/// [`cfs_from_line`] with as many waypoints as the roadmap initial path.
pub fn cfs_line_plan(env: &GridEnvironment, start: Point, goal: Point, cfg: &RprConfig) -> Result<PlanResult, RprError> {
    check_endpoints(env, start, goal)?;
    let graph = roadmap::build_roadmap(env);
    let count = roadmap::initial_path(&graph, start, goal)?.len();
    cfs_from_line(env, &env.dilated_obstacle_hulls(), start, goal, count, cfg)
}
