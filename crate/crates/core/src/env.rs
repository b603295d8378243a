//! Workspace, obstacles and the dilated occupancy grid.
//!
//! Cells are indexed `(row, col)`; row `r` covers `y in [r*delta, (r+1)*delta]`
//! and column `c` covers `x in [c*delta, (c+1)*delta]`. Grid nodes are the
//! cell corners `(i, j)` at `(j*delta, i*delta)`, `0 <= i <= rows`,
//! `0 <= j <= cols`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ConvexPolygon, Point};

/// Slack used for all comparisons in grid units.
pub(crate) const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("grid resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
    #[error("minimum clearance must be non-negative, got {0}")]
    NegativeClearance(f64),
    #[error("workspace extents must be positive, got {width} x {height}")]
    InvalidWorkspace { width: f64, height: f64 },
    #[error("obstacle {index} is degenerate or not fully inside the workspace")]
    ObstacleOutsideWorkspace { index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub width: f64,
    pub height: f64,
}

impl Workspace {
    pub fn new(width: f64, height: f64) -> Self {
        Workspace { width, height }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width && p.y <= self.height
    }

    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }
}

/// Axis-aligned rectangle or circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Obstacle {
    Rectangle {
        center: Point,
        width: f64,
        height: f64,
    },
    Circle {
        center: Point,
        radius: f64,
    },
}

impl Obstacle {
    pub fn rectangle(center: Point, width: f64, height: f64) -> Self {
        Obstacle::Rectangle {
            center,
            width,
            height,
        }
    }

    pub fn circle(center: Point, radius: f64) -> Self {
        Obstacle::Circle { center, radius }
    }

    pub fn center(&self) -> Point {
        match *self {
            Obstacle::Rectangle { center, .. } | Obstacle::Circle { center, .. } => center,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Obstacle::Rectangle { width, height, .. } => width * height,
            Obstacle::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Point, Point) {
        match *self {
            Obstacle::Rectangle {
                center,
                width,
                height,
            } => {
                let h = Point::new(width / 2.0, height / 2.0);
                (center - h, center + h)
            }
            Obstacle::Circle { center, radius } => {
                let h = Point::new(radius, radius);
                (center - h, center + h)
            }
        }
    }

    fn is_well_formed(&self) -> bool {
        match *self {
            Obstacle::Rectangle {
                center,
                width,
                height,
            } => center.is_finite() && width > 0.0 && height > 0.0,
            Obstacle::Circle { center, radius } => center.is_finite() && radius > 0.0,
        }
    }

    /// Euclidean distance from `p` to the closed obstacle set; 0 inside.
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            Obstacle::Rectangle {
                center,
                width,
                height,
            } => {
                let dx = ((p.x - center.x).abs() - width / 2.0).max(0.0);
                let dy = ((p.y - center.y).abs() - height / 2.0).max(0.0);
                dx.hypot(dy)
            }
            Obstacle::Circle { center, radius } => (p.distance(center) - radius).max(0.0),
        }
    }

    /// True when the two closed sets share at least one point.
    pub fn intersects(&self, other: &Obstacle) -> bool {
        match (*self, *other) {
            (Obstacle::Circle { center: a, radius: ra }, Obstacle::Circle { center: b, radius: rb }) => {
                a.distance(b) <= ra + rb
            }
            (Obstacle::Rectangle { .. }, Obstacle::Rectangle { .. }) => {
                let (alo, ahi) = self.bounds();
                let (blo, bhi) = other.bounds();
                alo.x <= bhi.x && blo.x <= ahi.x && alo.y <= bhi.y && blo.y <= ahi.y
            }
            (rect @ Obstacle::Rectangle { .. }, Obstacle::Circle { center, radius })
            | (Obstacle::Circle { center, radius }, rect @ Obstacle::Rectangle { .. }) => {
                rect.distance(center) <= radius
            }
        }
    }

    /// Whether the open cell `[c, c+1] x [r, r+1]` (grid units, obstacle already
    /// scaled to grid units) overlaps the obstacle with positive area.
    fn overlaps_cell(&self, r: usize, c: usize) -> bool {
        let (x0, y0) = (c as f64, r as f64);
        let (x1, y1) = (x0 + 1.0, y0 + 1.0);
        match *self {
            Obstacle::Rectangle { .. } => {
                let (lo, hi) = self.bounds();
                x1.min(hi.x) - x0.max(lo.x) > GRID_EPS && y1.min(hi.y) - y0.max(lo.y) > GRID_EPS
            }
            Obstacle::Circle { center, radius } => {
                let dx = (x0 - center.x).max(0.0).max(center.x - x1);
                let dy = (y0 - center.y).max(0.0).max(center.y - y1);
                dx.hypot(dy) < radius - GRID_EPS
            }
        }
    }

    fn scaled(&self, s: f64) -> Obstacle {
        match *self {
            Obstacle::Rectangle {
                center,
                width,
                height,
            } => Obstacle::rectangle(center * s, width * s, height * s),
            Obstacle::Circle { center, radius } => Obstacle::circle(center * s, radius * s),
        }
    }
}

/// Inclusive cell rectangle `rows r0..=r1`, `cols c0..=c1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellBlock {
    pub r0: usize,
    pub r1: usize,
    pub c0: usize,
    pub c1: usize,
}

/// On-disk environment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentFile {
    pub workspace: Workspace,
    pub delta: f64,
    pub d_min: f64,
    pub obstacles: Vec<Obstacle>,
}

impl EnvironmentFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment serializes")
    }

    pub fn build(&self) -> Result<GridEnvironment, EnvError> {
        rasterize_and_dilate(self.workspace, &self.obstacles, self.delta, self.d_min)
    }
}

/// Rasterized, dilated environment. Immutable after construction.
#[derive(Clone, Debug)]
pub struct GridEnvironment {
    pub workspace: Workspace,
    pub delta: f64,
    pub rows: usize,
    pub cols: usize,
    pub d_min: f64,
    pub obstacles: Vec<Obstacle>,
    /// Chebyshev growth applied to the raw cells, in cells.
    pub dilation_cells: usize,
    occupied: Vec<bool>,
    /// Raw (undilated) cells of each obstacle, row-major `(r, c)`.
    raw_cells: Vec<Vec<(usize, usize)>>,
}

/// Rasterize obstacles by positive-area cell overlap, then grow the occupied
/// set by `ceil(d_min / delta) + 1` cells in Chebyshev distance.
pub fn rasterize_and_dilate(
    workspace: Workspace,
    obstacles: &[Obstacle],
    delta: f64,
    d_min: f64,
) -> Result<GridEnvironment, EnvError> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(EnvError::NonPositiveResolution(delta));
    }
    if !(d_min >= 0.0) {
        return Err(EnvError::NegativeClearance(d_min));
    }
    if !(workspace.width > 0.0 && workspace.height > 0.0) {
        return Err(EnvError::InvalidWorkspace {
            width: workspace.width,
            height: workspace.height,
        });
    }
    for (index, o) in obstacles.iter().enumerate() {
        let (lo, hi) = o.bounds();
        if !o.is_well_formed() || !workspace.contains(lo) || !workspace.contains(hi) {
            return Err(EnvError::ObstacleOutsideWorkspace { index });
        }
    }
    let rows = (workspace.height / delta - GRID_EPS).ceil().max(1.0) as usize;
    let cols = (workspace.width / delta - GRID_EPS).ceil().max(1.0) as usize;
    let dilation_cells = (d_min / delta - GRID_EPS).ceil().max(0.0) as usize + 1;

    let raw_cells: Vec<Vec<(usize, usize)>> = obstacles
        .iter()
        .map(|o| {
            let g = o.scaled(1.0 / delta);
            let (lo, hi) = g.bounds();
            let c0 = (lo.x.floor().max(0.0) as usize).min(cols - 1);
            let c1 = (hi.x.ceil().max(1.0) as usize - 1).min(cols - 1);
            let r0 = (lo.y.floor().max(0.0) as usize).min(rows - 1);
            let r1 = (hi.y.ceil().max(1.0) as usize - 1).min(rows - 1);
            let mut cells = Vec::new();
            for r in r0..=r1 {
                for c in c0..=c1 {
                    if g.overlaps_cell(r, c) {
                        cells.push((r, c));
                    }
                }
            }
            cells
        })
        .collect();

    let mut raw = vec![false; rows * cols];
    for &(r, c) in raw_cells.iter().flatten() {
        raw[r * cols + c] = true;
    }
    let occupied = chebyshev_dilate(&raw, rows, cols, dilation_cells);

    Ok(GridEnvironment {
        workspace,
        delta,
        rows,
        cols,
        d_min,
        obstacles: obstacles.to_vec(),
        dilation_cells,
        occupied,
        raw_cells,
    })
}

/// Separable square max-filter of radius `k`.
fn chebyshev_dilate(grid: &[bool], rows: usize, cols: usize, k: usize) -> Vec<bool> {
    let mut horiz = vec![false; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if grid[r * cols + c] {
                let lo = c.saturating_sub(k);
                let hi = (c + k).min(cols - 1);
                horiz[r * cols + lo..=r * cols + hi].fill(true);
            }
        }
    }
    let mut out = vec![false; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if horiz[r * cols + c] {
                for rr in r.saturating_sub(k)..=(r + k).min(rows - 1) {
                    out[rr * cols + c] = true;
                }
            }
        }
    }
    out
}

impl GridEnvironment {
    /// Empty environment over a workspace.
    pub fn empty(workspace: Workspace, delta: f64, d_min: f64) -> Result<Self, EnvError> {
        rasterize_and_dilate(workspace, &[], delta, d_min)
    }

    /// Build directly from an occupancy mask (row-major, `rows * cols`). Used
    /// for synthetic grids; there are no source obstacles.
    pub fn from_occupancy(rows: usize, cols: usize, delta: f64, occupied: Vec<bool>) -> Self {
        assert_eq!(occupied.len(), rows * cols, "occupancy size mismatch");
        GridEnvironment {
            workspace: Workspace::new(cols as f64 * delta, rows as f64 * delta),
            delta,
            rows,
            cols,
            d_min: 0.0,
            obstacles: Vec::new(),
            dilation_cells: 0,
            occupied,
            raw_cells: Vec::new(),
        }
    }

    pub fn is_occupied(&self, r: usize, c: usize) -> bool {
        self.occupied[r * self.cols + c]
    }

    /// Occupancy lookup tolerant of out-of-range indices (treated as free).
    pub(crate) fn occupied_signed(&self, r: i64, c: i64) -> bool {
        r >= 0
            && c >= 0
            && (r as usize) < self.rows
            && (c as usize) < self.cols
            && self.occupied[r as usize * self.cols + c as usize]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    /// Raw rasterized cells of obstacle `i`, before dilation.
    pub fn raw_cells(&self, i: usize) -> &[(usize, usize)] {
        &self.raw_cells[i]
    }

    pub fn node_point(&self, i: usize, j: usize) -> Point {
        Point::new(j as f64 * self.delta, i as f64 * self.delta)
    }

    /// A grid node is blocked when any of its (up to four) adjacent cells is
    /// occupied.
    pub fn node_blocked(&self, i: usize, j: usize) -> bool {
        let (i, j) = (i as i64, j as i64);
        self.occupied_signed(i - 1, j - 1)
            || self.occupied_signed(i - 1, j)
            || self.occupied_signed(i, j - 1)
            || self.occupied_signed(i, j)
    }

    /// True iff `p` lies in a closed occupied cell or outside the workspace.
    pub fn point_in_dilated(&self, p: Point) -> bool {
        if !p.is_finite() || !self.workspace.contains(p) {
            return true;
        }
        let u = p.x / self.delta;
        let v = p.y / self.delta;
        let span = |t: f64| -> (i64, i64) {
            let near = t.round();
            if (t - near).abs() <= GRID_EPS {
                (near as i64 - 1, near as i64)
            } else {
                (t.floor() as i64, t.floor() as i64)
            }
        };
        let (c0, c1) = span(u);
        let (r0, r1) = span(v);
        (r0..=r1).any(|r| (c0..=c1).any(|c| self.occupied_signed(r, c)))
    }

    /// Whether the closed segment `pq` avoids every closed occupied cell.
    ///
    /// Supercover enumeration: each column strip the segment touches is
    /// clipped and every row it spans inside the strip is tested.
    pub fn segment_collision_free(&self, p: Point, q: Point) -> bool {
        // Order endpoints so the result is symmetric bit-for-bit.
        let (a, b) = if (p.x, p.y) <= (q.x, q.y) { (p, q) } else { (q, p) };
        let a = a * (1.0 / self.delta);
        let b = b * (1.0 / self.delta);
        let (xmin, xmax) = (a.x.min(b.x), a.x.max(b.x));
        let c_lo = ((xmin - GRID_EPS).ceil() as i64 - 1).max(0);
        let c_hi = ((xmax + GRID_EPS).floor() as i64).min(self.cols as i64 - 1);
        let dx = b.x - a.x;
        for c in c_lo..=c_hi {
            let (ylo, yhi) = if dx.abs() <= GRID_EPS {
                (a.y.min(b.y), a.y.max(b.y))
            } else {
                let x0 = (c as f64).max(xmin);
                let x1 = ((c + 1) as f64).min(xmax);
                let y_at = |x: f64| a.y + (b.y - a.y) * ((x - a.x) / dx);
                let (y0, y1) = (y_at(x0), y_at(x1));
                (y0.min(y1), y0.max(y1))
            };
            let r_lo = ((ylo - GRID_EPS).ceil() as i64 - 1).max(0);
            let r_hi = ((yhi + GRID_EPS).floor() as i64).min(self.rows as i64 - 1);
            for r in r_lo..=r_hi {
                if self.occupied_signed(r, c) {
                    return false;
                }
            }
        }
        true
    }

    /// Dilated cell block of rectangle obstacle `i`, clamped to the grid.
    pub fn dilated_block(&self, i: usize) -> Option<CellBlock> {
        let cells = &self.raw_cells[i];
        if cells.is_empty() {
            return None;
        }
        let k = self.dilation_cells;
        let r0 = cells.iter().map(|c| c.0).min()?;
        let r1 = cells.iter().map(|c| c.0).max()?;
        let c0 = cells.iter().map(|c| c.1).min()?;
        let c1 = cells.iter().map(|c| c.1).max()?;
        Some(CellBlock {
            r0: r0.saturating_sub(k),
            r1: (r1 + k).min(self.rows - 1),
            c0: c0.saturating_sub(k),
            c1: (c1 + k).min(self.cols - 1),
        })
    }

    /// One convex polygon per source obstacle: the hull of that obstacle's
    /// dilated cells.
    pub fn dilated_obstacle_hulls(&self) -> Vec<ConvexPolygon> {
        let k = self.dilation_cells as i64;
        let d = self.delta;
        self.raw_cells
            .iter()
            .filter(|cells| !cells.is_empty())
            .map(|cells| {
                // Row extents of the dilated set: a raw cell (r, c) covers rows
                // r-k..=r+k with columns c-k..=c+k.
                let mut extent: std::collections::BTreeMap<i64, (i64, i64)> = Default::default();
                for &(r, c) in cells {
                    let (r, c) = (r as i64, c as i64);
                    for rr in (r - k).max(0)..=(r + k).min(self.rows as i64 - 1) {
                        let lo = (c - k).max(0);
                        let hi = (c + k).min(self.cols as i64 - 1);
                        let e = extent.entry(rr).or_insert((lo, hi));
                        e.0 = e.0.min(lo);
                        e.1 = e.1.max(hi);
                    }
                }
                let mut corners = Vec::with_capacity(extent.len() * 4);
                for (&r, &(lo, hi)) in &extent {
                    for rr in [r, r + 1] {
                        corners.push(Point::new(lo as f64 * d, rr as f64 * d));
                        corners.push(Point::new((hi + 1) as f64 * d, rr as f64 * d));
                    }
                }
                ConvexPolygon::hull(&corners).expect("dilated cell set has positive area")
            })
            .collect()
    }
}

/// Distance from `p` to the nearest obstacle; `+inf` for an empty list.
pub fn clearance(p: Point, obstacles: &[Obstacle]) -> f64 {
    obstacles
        .iter()
        .map(|o| o.distance(p))
        .fold(f64::INFINITY, f64::min)
}
