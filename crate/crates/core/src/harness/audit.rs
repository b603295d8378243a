//! Post-hoc path verification. Shares no geometry code with the planners.

use serde::Serialize;

use crate::env::Obstacle;
use crate::geom::{Path, Point};

/// Slack on the turning-angle bound, in radians.
pub const AUDIT_ANGLE_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    /// Smallest waypoint distance to an original obstacle.
    pub min_clearance: f64,
    pub endpoints_exact: bool,
    /// Largest turning angle in radians.
    pub max_angle: f64,
    pub clearance_ok: bool,
    /// `None` when no angle bound was requested.
    pub angles_ok: Option<bool>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.clearance_ok && self.endpoints_exact && self.angles_ok.unwrap_or(true)
    }
}

fn distance_to(ob: &Obstacle, p: Point) -> f64 {
    match *ob {
        Obstacle::Rectangle {
            center,
            width,
            height,
        } => {
            let cx = p.x.clamp(center.x - 0.5 * width, center.x + 0.5 * width);
            let cy = p.y.clamp(center.y - 0.5 * height, center.y + 0.5 * height);
            ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()
        }
        Obstacle::Circle { center, radius } => {
            let d = ((p.x - center.x).powi(2) + (p.y - center.y).powi(2)).sqrt();
            (d - radius).max(0.0)
        }
    }
}

/// Turning angles at every interior vertex, skipping zero-length steps.
pub fn turning_angles(path: &Path) -> Vec<f64> {
    let mut steps = Vec::with_capacity(path.len());
    for w in path.waypoints.windows(2) {
        let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
        if dx != 0.0 || dy != 0.0 {
            steps.push((dx, dy));
        }
    }
    steps
        .windows(2)
        .map(|s| {
            let ((ax, ay), (bx, by)) = (s[0], s[1]);
            let cos = (ax * bx + ay * by) / ((ax * ax + ay * ay).sqrt() * (bx * bx + by * by).sqrt());
            cos.clamp(-1.0, 1.0).acos()
        })
        .collect()
}

pub fn audit_path(
    path: &Path,
    obstacles: &[Obstacle],
    start: Point,
    goal: Point,
    d_min: f64,
    theta_max: Option<f64>,
) -> AuditReport {
    let min_clearance = path
        .waypoints
        .iter()
        .flat_map(|&p| obstacles.iter().map(move |ob| distance_to(ob, p)))
        .fold(f64::INFINITY, f64::min);
    let endpoints_exact = path.first() == Some(start) && path.last() == Some(goal);
    let max_angle = turning_angles(path).into_iter().fold(0.0, f64::max);
    AuditReport {
        min_clearance,
        endpoints_exact,
        max_angle,
        clearance_ok: !path.is_empty() && min_clearance >= d_min,
        angles_ok: theta_max.map(|t| max_angle <= t + AUDIT_ANGLE_TOL),
    }
}
