//! Convex feasible set (CFS) path reshaping.
//!
//! Waypoints are stacked as `[x0.x, x0.y, x1.x, x1.y, ...]`. The objective is
//! `J(x) = |V x|^2 + lambda |A x|^2` with first differences `V` and second
//! differences `A`, minimized by successive QPs in which every waypoint is
//! restricted to a convex region built from supporting lines of the dilated
//! obstacle hulls.

use serde::Serialize;
use thiserror::Error;

use crate::env::GridEnvironment;
use crate::geom::{ConvexPolygon, HalfPlane, Path, Point};
use crate::qp::{self, DenseMatrix, QpStatus, QuadraticProgram};

/// A waypoint closer than this inside a hull still counts as on its boundary.
pub const INSIDE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CfsError {
    #[error("objective needs n >= 1 and lambda >= 0 (n = {n}, lambda = {lambda})")]
    InvalidModel { n: usize, lambda: f64 },
    #[error("path has {got} waypoints, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("stopping threshold must be positive")]
    InvalidEpsilon,
    #[error("equality constraint references coordinate {0} outside the path")]
    BadEquality(usize),
}

/// Quadratic path objective `x' (V'V + lambda A'A) x` for `n + 1` waypoints.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveModel {
    n: usize,
    lambda: f64,
    scalar: DenseMatrix,
}

pub fn build_objective(n: usize, lambda: f64) -> Result<ObjectiveModel, CfsError> {
    ObjectiveModel::new(n, lambda)
}

pub fn evaluate_objective(model: &ObjectiveModel, path: &Path) -> Result<f64, CfsError> {
    model.evaluate(path)
}

impl ObjectiveModel {
    pub fn new(n: usize, lambda: f64) -> Result<Self, CfsError> {
        if n < 1 || !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(CfsError::InvalidModel { n, lambda });
        }
        // Per-coordinate matrix D1'D1 + lambda D2'D2.
        let mut scalar = DenseMatrix::zeros(n + 1);
        for r in 0..n {
            let row = [(r, -1.0), (r + 1, 1.0)];
            for &(i, a) in &row {
                for &(j, b) in &row {
                    scalar[(i, j)] += a * b;
                }
            }
        }
        for r in 1..n {
            let row = [(r - 1, 1.0), (r, -2.0), (r + 1, 1.0)];
            for &(i, a) in &row {
                for &(j, b) in &row {
                    scalar[(i, j)] += lambda * a * b;
                }
            }
        }
        Ok(ObjectiveModel { n, lambda, scalar })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `V`, shape `2n x 2(n+1)`: row `2i + d` is `x_{i+1,d} - x_{i,d}`.
    pub fn velocity_operator(&self) -> Vec<Vec<f64>> {
        let cols = 2 * (self.n + 1);
        let mut v = vec![vec![0.0; cols]; 2 * self.n];
        for i in 0..self.n {
            for d in 0..2 {
                v[2 * i + d][2 * i + d] = -1.0;
                v[2 * i + d][2 * (i + 1) + d] = 1.0;
            }
        }
        v
    }

    /// `A`, shape `2(n-1) x 2(n+1)`: row `2(i-1) + d` is
    /// `x_{i+1,d} - 2 x_{i,d} + x_{i-1,d}`.
    pub fn acceleration_operator(&self) -> Vec<Vec<f64>> {
        let cols = 2 * (self.n + 1);
        let mut a = vec![vec![0.0; cols]; 2 * (self.n - 1)];
        for i in 1..self.n {
            for d in 0..2 {
                let row = &mut a[2 * (i - 1) + d];
                row[2 * (i - 1) + d] = 1.0;
                row[2 * i + d] = -2.0;
                row[2 * (i + 1) + d] = 1.0;
            }
        }
        a
    }

    /// Per-coordinate cost matrix of size `(n+1) x (n+1)`; the full matrix is
    /// its Kronecker product with the 2x2 identity.
    pub fn scalar_cost(&self) -> &DenseMatrix {
        &self.scalar
    }

    /// Full `2(n+1)` square matrix `V'V + lambda A'A`.
    pub fn cost_matrix(&self) -> DenseMatrix {
        let m = self.n + 1;
        let mut full = DenseMatrix::zeros(2 * m);
        for i in 0..m {
            for j in 0..m {
                for d in 0..2 {
                    full[(2 * i + d, 2 * j + d)] = self.scalar[(i, j)];
                }
            }
        }
        full
    }

    pub fn evaluate(&self, path: &Path) -> Result<f64, CfsError> {
        if path.len() != self.n + 1 {
            return Err(CfsError::DimensionMismatch {
                expected: self.n + 1,
                got: path.len(),
            });
        }
        Ok(self.evaluate_points(&path.waypoints))
    }

    fn evaluate_points(&self, w: &[Point]) -> f64 {
        let vel: f64 = w.windows(2).map(|p| (p[1] - p[0]).norm_squared()).sum();
        let acc: f64 = w
            .windows(3)
            .map(|p| (p[2] - p[1] * 2.0 + p[0]).norm_squared())
            .sum();
        vel + self.lambda * acc
    }
}

/// Intersection of half-planes `a . y <= b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexRegion {
    pub halfplanes: Vec<HalfPlane>,
}

impl ConvexRegion {
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.halfplanes.iter().all(|h| h.contains(p, tol))
    }
}

/// The four workspace bounds as half-planes.
pub fn workspace_halfplanes(env: &GridEnvironment) -> [HalfPlane; 4] {
    let ws = env.workspace;
    [
        HalfPlane::new(Point::new(-1.0, 0.0), 0.0),
        HalfPlane::new(Point::new(1.0, 0.0), ws.width),
        HalfPlane::new(Point::new(0.0, -1.0), 0.0),
        HalfPlane::new(Point::new(0.0, 1.0), ws.height),
    ]
}

/// Supporting half-plane of `hull` that keeps `x`, or `None` when `x` is
/// strictly inside. The line passes through the projection of `x` onto the
/// hull; it is shifted onto `x` when `x` sits within [`INSIDE_TOL`] inside.
pub fn separating_halfplane(hull: &ConvexPolygon, x: Point) -> Option<HalfPlane> {
    let pr = hull.project(x, INSIDE_TOL);
    if pr.signed_distance < -INSIDE_TOL {
        return None;
    }
    // Region {y : n . y >= n . pi}, i.e. (-n) . y <= -(n . pi).
    let a = -pr.normal;
    let b = (-pr.normal.dot(pr.point)).max(a.dot(x));
    Some(HalfPlane::new(a, b))
}

/// Convex feasible set of a single waypoint; `None` is the empty-region
/// marker (the waypoint lies inside a hull).
pub fn compute_feasible_set(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    x: Point,
) -> Option<ConvexRegion> {
    compute_feasible_set_within(env, hulls, x, f64::INFINITY)
}

/// As [`compute_feasible_set`], ignoring hulls farther than `radius` from `x`.
pub fn compute_feasible_set_within(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    x: Point,
    radius: f64,
) -> Option<ConvexRegion> {
    let mut halfplanes = workspace_halfplanes(env).to_vec();
    for hull in hulls {
        let hp = separating_halfplane(hull, x)?;
        if radius.is_finite() {
            let dist = hp.offset - hp.normal.dot(x);
            if dist >= radius {
                continue;
            }
        }
        halfplanes.push(hp);
    }
    Some(ConvexRegion { halfplanes })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CfsConfig {
    /// Stopping threshold on `|dJ|` and on the Euclidean step norm.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub qp_tol: f64,
    /// Hulls farther than this from a waypoint contribute no half-plane.
    /// `None` disables pruning.
    pub influence_radius: Option<f64>,
}

impl Default for CfsConfig {
    fn default() -> Self {
        CfsConfig {
            epsilon: 1e-3,
            max_iterations: 100,
            qp_tol: qp::DEFAULT_TOL,
            influence_radius: None,
        }
    }
}

/// Affine equality `sum coeff * x[index] = rhs` on the stacked path.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl AffineEquality {
    /// `x_{i+1} - x_i = v`, as two scalar equalities.
    pub fn step_equals(i: usize, v: Point) -> [AffineEquality; 2] {
        [(0, v.x), (1, v.y)].map(|(d, rhs)| AffineEquality {
            coeffs: vec![(2 * (i + 1) + d, 1.0), (2 * i + d, -1.0)],
            rhs,
        })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, a)| a * x[i]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CfsStatus {
    Converged,
    EmptyFeasibleSet,
    MaxIterations,
    QpFailure,
}

impl CfsStatus {
    /// The returned path respects every feasible set it was solved in.
    pub fn path_is_feasible(self) -> bool {
        matches!(self, CfsStatus::Converged | CfsStatus::MaxIterations)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfsOutcome {
    pub path: Path,
    pub status: CfsStatus,
    /// Number of QP updates performed.
    pub iterations: usize,
    /// `J` of every iterate, starting with the (projected) initial path.
    pub objective_trace: Vec<f64>,
    /// Euclidean norm of each update; `step_norms[k]` leads to iterate `k + 1`.
    pub step_norms: Vec<f64>,
}

impl CfsOutcome {
    /// Diagnostics CSV `iteration,J,step_norm`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,J,step_norm\n");
        for (k, j) in self.objective_trace.iter().enumerate() {
            let step = if k == 0 { 0.0 } else { self.step_norms[k - 1] };
            out.push_str(&format!("{k},{j},{step}\n"));
        }
        out
    }
}

fn stack(path: &Path) -> Vec<f64> {
    path.waypoints.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn unstack(x: &[f64]) -> Path {
    Path::new(x.chunks(2).map(|c| Point::new(c[0], c[1])).collect())
}

/// Smallest correction of the free coordinates (everything except the first
/// and last waypoint) that satisfies `eqs`.
fn project_onto_equalities(x: &mut [f64], eqs: &[AffineEquality]) {
    let len = x.len();
    let free = |i: usize| i >= 2 && i < len - 2;
    let resid: Vec<f64> = eqs.iter().map(|e| e.rhs - e.eval(x)).collect();
    if resid.iter().all(|r| r.abs() <= 1e-12) {
        return;
    }
    let rows: Vec<Vec<(usize, f64)>> = eqs
        .iter()
        .map(|e| e.coeffs.iter().copied().filter(|&(i, _)| free(i)).collect())
        .collect();
    let p = rows.len();
    // Gram matrix of the free parts, solved by Gaussian elimination with
    // partial pivoting; dependent rows get a tiny ridge.
    let mut gram = vec![vec![0.0; p + 1]; p];
    for a in 0..p {
        for b in 0..p {
            gram[a][b] = rows[a]
                .iter()
                .map(|&(i, u)| rows[b].iter().filter(|&&(j, _)| j == i).map(|&(_, v)| u * v).sum::<f64>())
                .sum();
        }
        gram[a][a] += 1e-14;
        gram[a][p] = resid[a];
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&a, &b| gram[a][col].abs().total_cmp(&gram[b][col].abs()))
            .unwrap();
        gram.swap(col, piv);
        let d = gram[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for r in 0..p {
            if r != col {
                let f = gram[r][col] / d;
                for k in col..=p {
                    gram[r][k] -= f * gram[col][k];
                }
            }
        }
    }
    for (a, row) in rows.iter().enumerate() {
        let d = gram[a][a];
        if d.abs() < 1e-300 {
            continue;
        }
        let lam = gram[a][p] / d;
        for &(i, u) in row {
            x[i] += u * lam;
        }
    }
}

/// Reshape `initial` with the CFS iteration. The first and last waypoints are
/// held fixed; `extra_eq` adds affine equalities on the stacked path.
pub fn cfs_reshape(
    env: &GridEnvironment,
    hulls: &[ConvexPolygon],
    initial: &Path,
    model: &ObjectiveModel,
    cfg: &CfsConfig,
    extra_eq: &[AffineEquality],
) -> Result<CfsOutcome, CfsError> {
    let npts = model.n() + 1;
    if initial.len() != npts {
        return Err(CfsError::DimensionMismatch {
            expected: npts,
            got: initial.len(),
        });
    }
    if !(cfg.epsilon > 0.0) {
        return Err(CfsError::InvalidEpsilon);
    }
    if let Some(&(i, _)) = extra_eq
        .iter()
        .flat_map(|e| e.coeffs.iter())
        .find(|(i, _)| *i >= 2 * npts)
    {
        return Err(CfsError::BadEquality(i));
    }

    let mut x = stack(initial);
    project_onto_equalities(&mut x, extra_eq);
    let radius = cfg.influence_radius.unwrap_or(f64::INFINITY);

    // Coordinates fixed by the endpoints or by single-variable equalities
    // are eliminated from the QP.
    let mut fixed = vec![false; 2 * npts];
    for i in [0, 1, 2 * npts - 2, 2 * npts - 1] {
        fixed[i] = true;
    }
    let mut pending: Vec<&AffineEquality> = extra_eq.iter().collect();
    loop {
        let before = pending.len();
        pending.retain(|e| {
            let free: Vec<(usize, f64)> = e.coeffs.iter().copied().filter(|&(i, _)| !fixed[i]).collect();
            match free.as_slice() {
                [] => false,
                [(i, a)] if a.abs() > 1e-12 => {
                    let rest: f64 = e.coeffs.iter().filter(|&&(j, _)| j != *i).map(|&(j, b)| b * x[j]).sum();
                    x[*i] = (e.rhs - rest) / a;
                    fixed[*i] = true;
                    false
                }
                _ => true,
            }
        });
        if pending.len() == before {
            break;
        }
    }
    let free_vars: Vec<usize> = (0..2 * npts).filter(|&i| !fixed[i]).collect();
    let mut slot = vec![usize::MAX; 2 * npts];
    for (k, &i) in free_vars.iter().enumerate() {
        slot[i] = k;
    }
    let dim = free_vars.len();

    // Reduced cost: 2M on the free block plus the coupling to fixed values.
    let scalar = model.scalar_cost();
    let mut q_red = DenseMatrix::zeros(dim);
    let mut c_red = vec![0.0; dim];
    for (k, &i) in free_vars.iter().enumerate() {
        let (wi, d) = (i / 2, i % 2);
        let lo = wi.saturating_sub(2);
        let hi = (wi + 2).min(npts - 1);
        for wj in lo..=hi {
            let j = 2 * wj + d;
            let v = 2.0 * scalar[(wi, wj)];
            if fixed[j] {
                c_red[k] += v * x[j];
            } else {
                q_red[(k, slot[j])] = v;
            }
        }
    }
    let reduce = |coeffs: &[(usize, f64)], rhs: f64, x: &[f64]| {
        let mut rhs = rhs;
        let mut out = Vec::new();
        for &(i, a) in coeffs {
            if fixed[i] {
                rhs -= a * x[i];
            } else if a != 0.0 {
                out.push((slot[i], a));
            }
        }
        (out, rhs)
    };
    let reduced_eqs: Vec<(Vec<(usize, f64)>, f64)> =
        pending.iter().map(|e| reduce(&e.coeffs, e.rhs, &x)).collect();

    let mut trace = vec![model.evaluate_points(&unstack(&x).waypoints)];
    let mut steps = Vec::new();
    let outcome = |x: &[f64], status, iterations, trace: Vec<f64>, steps: Vec<f64>| CfsOutcome {
        path: unstack(x),
        status,
        iterations,
        objective_trace: trace,
        step_norms: steps,
    };
    let inner = 1..npts.saturating_sub(1);
    if inner.is_empty() {
        return Ok(outcome(&x, CfsStatus::Converged, 0, trace, steps));
    }

    for k in 0..cfg.max_iterations {
        let mut qp = QuadraticProgram::new(q_red.clone(), c_red.clone());
        for (coeffs, rhs) in &reduced_eqs {
            qp.add_equality(coeffs.clone(), *rhs);
        }
        for w in inner.clone() {
            let p = Point::new(x[2 * w], x[2 * w + 1]);
            let Some(region) = compute_feasible_set_within(env, hulls, p, radius) else {
                return Ok(outcome(&x, CfsStatus::EmptyFeasibleSet, k, trace, steps));
            };
            for hp in region.halfplanes {
                let (coeffs, rhs) = reduce(&[(2 * w, hp.normal.x), (2 * w + 1, hp.normal.y)], hp.offset, &x);
                if !coeffs.is_empty() {
                    qp.add_inequality(coeffs, rhs);
                }
            }
        }
        let sol = if dim == 0 {
            None
        } else {
            match qp::solve_qp(&qp, cfg.qp_tol) {
                Ok(sol) if sol.status == QpStatus::Optimal => Some(sol),
                _ => return Ok(outcome(&x, CfsStatus::QpFailure, k, trace, steps)),
            }
        };
        let mut next = x.clone();
        if let Some(sol) = sol {
            for (k, &i) in free_vars.iter().enumerate() {
                next[i] = sol.x[k];
            }
        }
        let step = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let j_next = model.evaluate_points(&unstack(&next).waypoints);
        let j_prev = *trace.last().expect("trace starts non-empty");
        trace.push(j_next);
        steps.push(step);
        x = next;
        if (j_next - j_prev).abs() < cfg.epsilon || step < cfg.epsilon {
            return Ok(outcome(&x, CfsStatus::Converged, k + 1, trace, steps));
        }
    }
    Ok(outcome(&x, CfsStatus::MaxIterations, cfg.max_iterations, trace, steps))
}
