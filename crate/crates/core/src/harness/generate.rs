//! Random obstacle fields with a power-law area profile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{rasterize_and_dilate, EnvError, EnvironmentFile, GridEnvironment, Obstacle, Workspace};
use crate::geom::Point;
use crate::roadmap;

use super::HarnessError;

/// Exponent of the area law `A_i = A0 / i^AREA_EXPONENT`.
pub const AREA_EXPONENT: f64 = 1.1;
pub const ASPECT_RANGE: (f64, f64) = (0.4, 2.5);
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;
/// Obstacles keep this Euclidean distance from the start and goal points.
pub const ENDPOINT_MARGIN: f64 = 0.5;
/// Redraws allowed when the start and goal end up disconnected.
pub const MAX_CONNECTIVITY_DRAWS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleShape {
    Rectangle,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub seed: u64,
    pub q: usize,
    pub shape: ObstacleShape,
    pub workspace: Workspace,
    pub delta: f64,
    pub d_min: f64,
    pub start: Point,
    pub goal: Point,
}

impl EnvSpec {
    /// 9 x 6 workspace, 0.1 grid, 0.1 clearance, start (0,0), goal (9,0).
    pub fn new(seed: u64, q: usize, shape: ObstacleShape) -> Self {
        EnvSpec {
            seed,
            q,
            shape,
            workspace: Workspace::new(9.0, 6.0),
            delta: 0.1,
            d_min: 0.1,
            start: Point::new(0.0, 0.0),
            goal: Point::new(9.0, 0.0),
        }
    }

    pub fn to_file(&self, obstacles: Vec<Obstacle>) -> EnvironmentFile {
        EnvironmentFile {
            workspace: self.workspace,
            delta: self.delta,
            d_min: self.d_min,
            obstacles,
        }
    }

    pub fn build(&self, obstacles: &[Obstacle]) -> Result<GridEnvironment, EnvError> {
        rasterize_and_dilate(self.workspace, obstacles, self.delta, self.d_min)
    }
}

/// Riemann zeta for real `s > 1` by Euler-Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    assert!(s > 1.0, "zeta diverges for s <= 1");
    const N: usize = 32;
    let nf = N as f64;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let tail = nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s) + s * nf.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * nf.powf(-s - 5.0) / 30240.0;
    head + tail
}

/// Area of the first obstacle such that the infinite sequence fills the
/// workspace.
pub fn base_area(workspace: Workspace) -> f64 {
    workspace.width * workspace.height / zeta(AREA_EXPONENT)
}

pub fn obstacle_area(workspace: Workspace, i: usize) -> f64 {
    base_area(workspace) / (i as f64).powf(AREA_EXPONENT)
}

fn fits(ob: &Obstacle, ws: Workspace) -> bool {
    let (lo, hi) = ob.bounds();
    lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= ws.width && hi.y <= ws.height
}

fn place(spec: &EnvSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Obstacle>, HarnessError> {
    let ws = spec.workspace;
    let mut placed: Vec<Obstacle> = Vec::with_capacity(spec.q);
    for i in 1..=spec.q {
        let area = obstacle_area(ws, i);
        let mut ok = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let center = Point::new(rng.gen_range(0.0..ws.width), rng.gen_range(0.0..ws.height));
            let ob = match spec.shape {
                ObstacleShape::Rectangle => {
                    let aspect = rng.gen_range(ASPECT_RANGE.0..=ASPECT_RANGE.1);
                    Obstacle::rectangle(center, (area * aspect).sqrt(), (area / aspect).sqrt())
                }
                ObstacleShape::Circle => Obstacle::circle(center, (area / std::f64::consts::PI).sqrt()),
            };
            let clear_ends = ob.distance(spec.start) > ENDPOINT_MARGIN && ob.distance(spec.goal) > ENDPOINT_MARGIN;
            if fits(&ob, ws) && clear_ends && placed.iter().all(|p| !p.intersects(&ob)) {
                ok = Some(ob);
                break;
            }
        }
        placed.push(ok.ok_or(HarnessError::PlacementFailed { index: i })?);
    }
    Ok(placed)
}

/// Place `spec.q` pairwise disjoint obstacles, largest first.
pub fn generate_environment(spec: &EnvSpec) -> Result<Vec<Obstacle>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    place(spec, &mut rng)
}

/// As [`generate_environment`], redrawing from the same stream until the
/// start and goal are connected on the roadmap. Returns the obstacles and the
/// number of draws used.
pub fn generate_connected_environment(spec: &EnvSpec) -> Result<(Vec<Obstacle>, usize), HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for draw in 1..=MAX_CONNECTIVITY_DRAWS {
        let obstacles = place(spec, &mut rng)?;
        let env = spec.build(&obstacles)?;
        let graph = roadmap::build_roadmap(&env);
        if roadmap::initial_path(&graph, spec.start, spec.goal).is_ok() {
            return Ok((obstacles, draw));
        }
    }
    Err(HarnessError::Disconnected { seed: spec.seed })
}
