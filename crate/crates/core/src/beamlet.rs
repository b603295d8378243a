//! Dyadic-square decomposition of free space and curvature-bounded shortest
//! paths over beamlets (collision-free chords between boundary nodes of free
//! squares).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::env::GridEnvironment;
use crate::geom::{turn_angle, Path, Point};
use crate::roadmap::{attach_endpoints, Node};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamletError {
    #[error("turn bound must lie in (0, pi/2), got {0}")]
    InvalidThetaMax(f64),
    #[error("no beamlet endpoint to attach to")]
    NoBeamletNode,
    #[error("no angle-admissible beamlet path")]
    Unreachable,
    #[error("spacing must be positive")]
    InvalidSpacing,
}

/// Square block of cells `row0..row0+side`, `col0..col0+side`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicSquare {
    pub row0: usize,
    pub col0: usize,
    pub side: usize,
}

impl DyadicSquare {
    pub fn cell_count(&self) -> usize {
        self.side * self.side
    }

    /// Grid nodes on the square's boundary, counter-clockwise from the
    /// lower-left corner.
    pub fn boundary_nodes(&self) -> Vec<Node> {
        let (r, c, s) = (self.row0, self.col0, self.side);
        let mut out = Vec::with_capacity(4 * s);
        out.extend((0..s).map(|k| Node::new(r, c + k)));
        out.extend((0..s).map(|k| Node::new(r + k, c + s)));
        out.extend((0..s).map(|k| Node::new(r + s, c + s - k)));
        out.extend((0..s).map(|k| Node::new(r + s - k, c)));
        out
    }

    fn shares_edge(&self, a: Node, b: Node) -> bool {
        let (r0, r1, c0, c1) = (self.row0, self.row0 + self.side, self.col0, self.col0 + self.side);
        (a.row == b.row && (a.row == r0 || a.row == r1)) || (a.col == b.col && (a.col == c0 || a.col == c1))
    }
}

/// Occupancy prefix sums over the grid padded to a power-of-two square;
/// padding counts as occupied.
struct Occupancy {
    side: usize,
    sums: Vec<u32>,
}

impl Occupancy {
    fn new(env: &GridEnvironment) -> Self {
        let side = env.rows.max(env.cols).max(1).next_power_of_two();
        let w = side + 1;
        let mut sums = vec![0u32; w * w];
        for r in 0..side {
            for c in 0..side {
                let occ = r >= env.rows || c >= env.cols || env.is_occupied(r, c);
                sums[(r + 1) * w + c + 1] =
                    u32::from(occ) + sums[r * w + c + 1] + sums[(r + 1) * w + c] - sums[r * w + c];
            }
        }
        Occupancy { side, sums }
    }

    fn count(&self, sq: DyadicSquare) -> u32 {
        let w = self.side + 1;
        let (r0, c0, r1, c1) = (sq.row0, sq.col0, sq.row0 + sq.side, sq.col0 + sq.side);
        self.sums[r1 * w + c1] + self.sums[r0 * w + c0] - self.sums[r0 * w + c1] - self.sums[r1 * w + c0]
    }
}

/// Maximal obstacle-free squares of the quadtree, in depth-first order.
pub fn build_dyadic_decomposition(env: &GridEnvironment) -> Vec<DyadicSquare> {
    let occ = Occupancy::new(env);
    let mut out = Vec::new();
    let mut stack = vec![DyadicSquare {
        row0: 0,
        col0: 0,
        side: occ.side,
    }];
    while let Some(sq) = stack.pop() {
        if occ.count(sq) == 0 {
            out.push(sq);
        } else if sq.side > 1 {
            let h = sq.side / 2;
            // Pushed in reverse so children pop in (SW, SE, NW, NE) order.
            for (dr, dc) in [(h, h), (h, 0), (0, h), (0, 0)] {
                stack.push(DyadicSquare {
                    row0: sq.row0 + dr,
                    col0: sq.col0 + dc,
                    side: h,
                });
            }
        }
    }
    out
}

/// Undirected beamlet with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Beamlet {
    pub a: Node,
    pub b: Node,
    pub length: f64,
}

/// Beamlets and their angle-admissible arcs. Directed beamlet `2k` runs
/// `a -> b` of beamlet `k`, `2k + 1` runs `b -> a`.
#[derive(Clone, Debug)]
pub struct BeamletGraph {
    pub theta_max: f64,
    delta: f64,
    node_cols: usize,
    beamlets: Vec<Beamlet>,
    /// Outgoing directed beamlets per node, CSR layout.
    out_start: Vec<usize>,
    out_ids: Vec<usize>,
}

fn node_point(n: Node, delta: f64) -> Point {
    Point::new(n.col as f64 * delta, n.row as f64 * delta)
}

pub fn build_beamlet_graph(
    env: &GridEnvironment,
    squares: &[DyadicSquare],
    theta_max: f64,
) -> Result<BeamletGraph, BeamletError> {
    if !(theta_max > 0.0 && theta_max < std::f64::consts::FRAC_PI_2) {
        return Err(BeamletError::InvalidThetaMax(theta_max));
    }
    let delta = env.delta;
    let free = |n: Node| !env.node_blocked(n.row, n.col);
    let mut pairs: Vec<(Node, Node)> = Vec::new();
    for sq in squares {
        let nodes: Vec<Node> = sq.boundary_nodes().into_iter().filter(|&n| free(n)).collect();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                let (a, b) = if u < v { (u, v) } else { (v, u) };
                // Longer chords along one edge are chains of unit chords.
                if sq.shares_edge(a, b) && a.row.abs_diff(b.row) + a.col.abs_diff(b.col) != 1 {
                    continue;
                }
                pairs.push((a, b));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let beamlets: Vec<Beamlet> = pairs
        .into_iter()
        .filter_map(|(a, b)| {
            let (pa, pb) = (node_point(a, delta), node_point(b, delta));
            env.segment_collision_free(pa, pb).then(|| Beamlet {
                a,
                b,
                length: pa.distance(pb),
            })
        })
        .collect();

    let node_cols = env.cols + 1;
    let node_total = (env.rows + 1) * node_cols;
    let mut degree = vec![0usize; node_total + 1];
    for bm in &beamlets {
        degree[bm.a.row * node_cols + bm.a.col] += 1;
        degree[bm.b.row * node_cols + bm.b.col] += 1;
    }
    let mut out_start = vec![0usize; node_total + 1];
    for i in 0..node_total {
        out_start[i + 1] = out_start[i] + degree[i];
    }
    let mut fill = out_start.clone();
    let mut out_ids = vec![0usize; out_start[node_total]];
    for (k, bm) in beamlets.iter().enumerate() {
        for (tail, id) in [(bm.a, 2 * k), (bm.b, 2 * k + 1)] {
            let t = tail.row * node_cols + tail.col;
            out_ids[fill[t]] = id;
            fill[t] += 1;
        }
    }
    Ok(BeamletGraph {
        theta_max,
        delta,
        node_cols,
        beamlets,
        out_start,
        out_ids,
    })
}

impl BeamletGraph {
    pub fn beamlets(&self) -> &[Beamlet] {
        &self.beamlets
    }

    pub fn directed_count(&self) -> usize {
        2 * self.beamlets.len()
    }

    pub fn tail(&self, d: usize) -> Node {
        let bm = &self.beamlets[d / 2];
        if d % 2 == 0 {
            bm.a
        } else {
            bm.b
        }
    }

    pub fn head(&self, d: usize) -> Node {
        self.tail(d ^ 1)
    }

    pub fn length(&self, d: usize) -> f64 {
        self.beamlets[d / 2].length
    }

    pub fn point(&self, n: Node) -> Point {
        node_point(n, self.delta)
    }

    fn direction(&self, d: usize) -> Point {
        self.point(self.head(d)) - self.point(self.tail(d))
    }

    fn node_index(&self, n: Node) -> usize {
        n.row * self.node_cols + n.col
    }

    /// Directed beamlets leaving `n`.
    pub fn outgoing(&self, n: Node) -> &[usize] {
        let i = self.node_index(n);
        if i + 1 >= self.out_start.len() {
            return &[];
        }
        &self.out_ids[self.out_start[i]..self.out_start[i + 1]]
    }

    pub fn has_node(&self, n: Node) -> bool {
        !self.outgoing(n).is_empty()
    }

    /// Weight of the arc `from -> to`, when it exists.
    pub fn arc(&self, from: usize, to: usize) -> Option<f64> {
        let admissible = self.head(from) == self.tail(to)
            && to != (from ^ 1)
            && turn_angle(self.direction(from), self.direction(to)) <= self.theta_max;
        admissible.then(|| self.length(to))
    }

    pub fn successors(&self, from: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.outgoing(self.head(from))
            .iter()
            .filter_map(move |&to| self.arc(from, to).map(|w| (to, w)))
    }

    /// Debug dump: beamlets and every arc.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = (0..self.directed_count())
            .map(|d| {
                serde_json::json!({
                    "id": d,
                    "from": self.point(self.tail(d)),
                    "to": self.point(self.head(d)),
                    "length": self.length(d),
                })
            })
            .collect();
        let arcs: Vec<serde_json::Value> = (0..self.directed_count())
            .flat_map(|d| {
                self.successors(d)
                    .map(move |(to, w)| serde_json::json!({ "from": d, "to": to, "weight": w }))
            })
            .collect();
        serde_json::json!({ "theta_max": self.theta_max, "beamlets": nodes, "arcs": arcs })
    }
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    seq: u64,
    state: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, seq).
        other.cost.total_cmp(&self.cost).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path whose consecutive beamlets turn by at most `theta_max`.
/// Returns the node polyline and its length.
pub fn beamlet_shortest_path(graph: &BeamletGraph, start: Node, goal: Node) -> Result<(Path, f64), BeamletError> {
    if start == goal {
        return Ok((Path::new(vec![graph.point(start)]), 0.0));
    }
    let total = graph.directed_count();
    let mut dist = vec![f64::INFINITY; total];
    let mut prev = vec![usize::MAX; total];
    let mut done = vec![false; total];
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for &d in graph.outgoing(start) {
        dist[d] = graph.length(d);
        seq += 1;
        heap.push(Entry {
            cost: dist[d],
            seq,
            state: d,
        });
    }
    let mut reached = None;
    while let Some(Entry { cost, state, .. }) = heap.pop() {
        if done[state] {
            continue;
        }
        done[state] = true;
        if graph.head(state) == goal {
            reached = Some((state, cost));
            break;
        }
        for (to, w) in graph.successors(state) {
            let c = cost + w;
            if !done[to] && c < dist[to] {
                dist[to] = c;
                prev[to] = state;
                seq += 1;
                heap.push(Entry { cost: c, seq, state: to });
            }
        }
    }
    let (last, cost) = reached.ok_or(BeamletError::Unreachable)?;
    let mut chain = vec![last];
    while prev[*chain.last().unwrap()] != usize::MAX {
        chain.push(prev[*chain.last().unwrap()]);
    }
    chain.reverse();
    let mut pts = vec![graph.point(start)];
    pts.extend(chain.iter().map(|&d| graph.point(graph.head(d))));
    Ok((Path::new(pts), cost))
}

/// Nearest beamlet endpoint to `p`; ties go to the lower row, then column.
pub fn snap_to_beamlet_node(graph: &BeamletGraph, p: Point) -> Result<Node, BeamletError> {
    let mut best: Option<(f64, Node)> = None;
    for bm in graph.beamlets() {
        for n in [bm.a, bm.b] {
            let d = graph.point(n).distance(p);
            let better = match best {
                None => true,
                Some((bd, bn)) => d < bd || (d == bd && n < bn),
            };
            if better {
                best = Some((d, n));
            }
        }
    }
    best.map(|(_, n)| n).ok_or(BeamletError::NoBeamletNode)
}

/// Decompose, build the graph, search, and attach the exact endpoints.
pub fn beamlet_initial_path(
    env: &GridEnvironment,
    start: Point,
    goal: Point,
    theta_max: f64,
) -> Result<Path, BeamletError> {
    let squares = build_dyadic_decomposition(env);
    let graph = build_beamlet_graph(env, &squares, theta_max)?;
    let s = snap_to_beamlet_node(&graph, start)?;
    let g = snap_to_beamlet_node(&graph, goal)?;
    let (mut path, _) = beamlet_shortest_path(&graph, s, g)?;
    attach_endpoints(&mut path, start, goal);
    Ok(path)
}

/// Split every step longer than `max_spacing` into equal collinear pieces.
pub fn densify(path: &Path, max_spacing: f64) -> Result<Path, BeamletError> {
    if !(max_spacing > 0.0) {
        return Err(BeamletError::InvalidSpacing);
    }
    let Some(first) = path.first() else {
        return Ok(path.clone());
    };
    let mut out = vec![first];
    for w in path.waypoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(b);
        let parts = if len > max_spacing {
            (len / max_spacing).ceil() as usize
        } else {
            1
        };
        for k in 1..parts {
            out.push(a + (b - a) * (k as f64 / parts as f64));
        }
        out.push(b);
    }
    Ok(Path::new(out))
}
