//! Planar primitives shared by every planner stage: points, paths, half-planes
//! and convex polygons.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point (or displacement) in workspace coordinates.
///
/// Serialized as a two-element array `[x, y]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Turning angle between two displacement vectors, `atan2(|a x b|, a . b)`,
/// in `[0, pi]`.
pub fn turn_angle(a: Point, b: Point) -> f64 {
    a.cross(b).abs().atan2(a.dot(b))
}

/// Ordered waypoint sequence `x_0 ... x_n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path {
    pub waypoints: Vec<Point>,
}

impl Path {
    pub fn new(waypoints: Vec<Point>) -> Self {
        Path { waypoints }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> Option<Point> {
        self.waypoints.first().copied()
    }

    pub fn last(&self) -> Option<Point> {
        self.waypoints.last().copied()
    }

    /// Sum of segment lengths.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    /// Largest turning angle over all interior vertices, 0 for paths with
    /// fewer than three waypoints. Zero-length steps are skipped.
    pub fn max_turn_angle(&self) -> f64 {
        let steps: Vec<Point> = self
            .waypoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|s| s.norm() > 0.0)
            .collect();
        steps
            .windows(2)
            .map(|s| turn_angle(s[0], s[1]))
            .fold(0.0, f64::max)
    }

    /// CSV rendering with header `index,x,y`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,y\n");
        for (i, p) in self.waypoints.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, p.x, p.y));
        }
        out
    }
}

impl From<Vec<Point>> for Path {
    fn from(waypoints: Vec<Point>) -> Self {
        Path { waypoints }
    }
}

/// The closed half-plane `{y : normal . y <= offset}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(normal: Point, offset: f64) -> Self {
        HalfPlane { normal, offset }
    }

    /// `normal . p - offset`; non-positive inside.
    pub fn violation(&self, p: Point) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.violation(p) <= tol
    }
}

/// Convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

/// Result of projecting a point onto a convex polygon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Closest point on the polygon boundary.
    pub point: Point,
    /// Distance to the boundary; negative when the query lies inside.
    pub signed_distance: f64,
    /// Outward unit normal to use for a supporting line through `point`.
    pub normal: Point,
}

impl ConvexPolygon {
    /// Convex hull of `points` (Andrew's monotone chain). Collinear points are
    /// dropped. Returns `None` when fewer than three non-collinear points remain.
    pub fn hull(points: &[Point]) -> Option<ConvexPolygon> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return None;
        }
        let turn = |o: Point, a: Point, b: Point| (a - o).cross(b - o);
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0
            {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0
            {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        if lower.len() < 3 {
            return None;
        }
        Some(ConvexPolygon { vertices: lower })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
        ConvexPolygon {
            vertices: vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Outward unit normal of edge `i` (from vertex `i` to `i + 1`).
    pub fn edge_normal(&self, i: usize) -> Point {
        let n = self.vertices.len();
        let d = self.vertices[(i + 1) % n] - self.vertices[i];
        Point::new(d.y, -d.x) * (1.0 / d.norm())
    }

    /// Closed containment with slack `tol` (positive `tol` enlarges).
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.edges()
            .enumerate()
            .all(|(i, (a, _))| self.edge_normal(i).dot(p - a) <= tol)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Euclidean projection of `p` onto the polygon boundary by enumerating
    /// edges. When `p` is on the boundary (within `on_boundary_tol`) the normal
    /// is the outward face normal, or the normalized sum of the two face
    /// normals at a vertex.
    pub fn project(&self, p: Point, on_boundary_tol: f64) -> Projection {
        let n = self.vertices.len();
        let mut best = (f64::INFINITY, Point::default(), 0usize, 0.0f64);
        for (i, (a, b)) in self.edges().enumerate() {
            let d = b - a;
            let t = ((p - a).dot(d) / d.norm_squared()).clamp(0.0, 1.0);
            let c = a + d * t;
            let dist = p.distance(c);
            if dist < best.0 {
                best = (dist, c, i, t);
            }
        }
        let (dist, point, edge, t) = best;
        let inside = self.contains(p, 0.0);
        let signed_distance = if inside { -dist } else { dist };
        let normal = if dist > on_boundary_tol {
            let dir = p - point;
            let dir = dir * (1.0 / dir.norm());
            if inside {
                -dir
            } else {
                dir
            }
        } else if t <= 0.0 {
            let prev = (edge + n - 1) % n;
            let s = self.edge_normal(prev) + self.edge_normal(edge);
            s * (1.0 / s.norm())
        } else if t >= 1.0 {
            let next = (edge + 1) % n;
            let s = self.edge_normal(edge) + self.edge_normal(next);
            s * (1.0 / s.norm())
        } else {
            self.edge_normal(edge)
        };
        Projection {
            point,
            signed_distance,
            normal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_and_collinear_points() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 1.0),
        ];
        let h = ConvexPolygon::hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 4);
        assert!((h.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_hull_is_none() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(ConvexPolygon::hull(&pts).is_none());
    }

    #[test]
    fn projection_outside_edge_and_vertex() {
        let sq = ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0);
        let pr = sq.project(Point::new(-0.5, 0.5), 1e-9);
        assert!((pr.signed_distance - 0.5).abs() < 1e-12);
        assert_eq!(pr.normal, Point::new(-1.0, 0.0));
        let pr = sq.project(Point::new(2.0, 2.0), 1e-9);
        assert!((pr.signed_distance - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(pr.point, Point::new(1.0, 1.0));
    }

    #[test]
    fn projection_on_vertex_uses_averaged_normal() {
        let sq = ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0);
        let pr = sq.project(Point::new(1.0, 1.0), 1e-9);
        let h = 0.5f64.sqrt();
        assert!((pr.normal - Point::new(h, h)).norm() < 1e-12);
        let pr = sq.project(Point::new(0.5, 1.0), 1e-9);
        assert!((pr.normal - Point::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn turn_angle_basics() {
        let a = Point::new(1.0, 0.0);
        assert_eq!(turn_angle(a, a), 0.0);
        assert!((turn_angle(a, Point::new(0.0, 2.0)) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((turn_angle(a, Point::new(1.0, 1.0)) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn point_serializes_as_pair() {
        let s = serde_json::to_string(&Path::new(vec![Point::new(1.0, 2.5)])).unwrap();
        assert_eq!(s, "[[1.0,2.5]]");
    }
}
