//! Four-connected grid roadmap over free nodes and Dijkstra initial paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::env::GridEnvironment;
pub use crate::geom::Path;
use crate::geom::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadmapError {
    #[error("roadmap has no free node")]
    NoFreeNode,
    #[error("goal is unreachable from start")]
    Unreachable,
    #[error("node ({0}, {1}) is blocked or out of range")]
    BlockedNode(usize, usize),
}

/// Grid node `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Node {
    pub row: usize,
    pub col: usize,
}

impl Node {
    pub const fn new(row: usize, col: usize) -> Self {
        Node { row, col }
    }
}

/// Node grid of `(rows + 1) x (cols + 1)` intersections. Arcs are implicit:
/// two 4-adjacent nodes are joined iff both are free; every arc has length
/// `delta`.
#[derive(Clone, Debug)]
pub struct RoadmapGraph {
    pub node_rows: usize,
    pub node_cols: usize,
    pub delta: f64,
    free: Vec<bool>,
}

pub fn build_roadmap(env: &GridEnvironment) -> RoadmapGraph {
    let node_rows = env.rows + 1;
    let node_cols = env.cols + 1;
    let mut free = Vec::with_capacity(node_rows * node_cols);
    for i in 0..node_rows {
        for j in 0..node_cols {
            free.push(!env.node_blocked(i, j));
        }
    }
    RoadmapGraph {
        node_rows,
        node_cols,
        delta: env.delta,
        free,
    }
}

/// Expansion order: N (+row), E (+col), S (-row), W (-col).
const NEIGHBORS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

impl RoadmapGraph {
    pub fn node_count(&self) -> usize {
        self.free.len()
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn is_free(&self, n: Node) -> bool {
        n.row < self.node_rows && n.col < self.node_cols && self.free[self.index(n)]
    }

    pub fn point(&self, n: Node) -> Point {
        Point::new(n.col as f64 * self.delta, n.row as f64 * self.delta)
    }

    fn index(&self, n: Node) -> usize {
        n.row * self.node_cols + n.col
    }

    fn node_at(&self, idx: usize) -> Node {
        Node::new(idx / self.node_cols, idx % self.node_cols)
    }

    /// Free 4-neighbors of `n` in N, E, S, W order.
    pub fn neighbors(&self, n: Node) -> impl Iterator<Item = Node> + '_ {
        NEIGHBORS.iter().filter_map(move |&(dr, dc)| {
            let r = n.row as i64 + dr;
            let c = n.col as i64 + dc;
            if r < 0 || c < 0 {
                return None;
            }
            let m = Node::new(r as usize, c as usize);
            self.is_free(m).then_some(m)
        })
    }

    /// Nearest free node by Euclidean distance; ties go to the lower row, then
    /// the lower column.
    pub fn snap_to_free_node(&self, p: Point) -> Result<Node, RoadmapError> {
        let mut best: Option<(f64, Node)> = None;
        for i in 0..self.node_rows {
            for j in 0..self.node_cols {
                let n = Node::new(i, j);
                if !self.free[self.index(n)] {
                    continue;
                }
                let d = self.point(n).distance(p);
                // Strict comparison keeps the first (lowest row, col) on ties.
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, n));
                }
            }
        }
        best.map(|(_, n)| n).ok_or(RoadmapError::NoFreeNode)
    }

    /// Hop count of a shortest path, or `None` when unreachable.
    pub fn shortest_hops(&self, start: Node, goal: Node) -> Option<usize> {
        self.dijkstra(start, goal).ok().map(|nodes| nodes.len() - 1)
    }

    fn dijkstra(&self, start: Node, goal: Node) -> Result<Vec<Node>, RoadmapError> {
        for n in [start, goal] {
            if !self.is_free(n) {
                return Err(RoadmapError::BlockedNode(n.row, n.col));
            }
        }
        let total = self.free.len();
        let mut dist = vec![u64::MAX; total];
        let mut prev = vec![usize::MAX; total];
        let mut settled = vec![false; total];
        // (distance in hops, push sequence): equal distances pop in push order.
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let s = self.index(start);
        let g = self.index(goal);
        dist[s] = 0;
        heap.push(Reverse((0u64, seq, s)));
        while let Some(Reverse((d, _, u))) = heap.pop() {
            if settled[u] {
                continue;
            }
            settled[u] = true;
            if u == g {
                break;
            }
            for v in self.neighbors(self.node_at(u)) {
                let vi = self.index(v);
                if !settled[vi] && d + 1 < dist[vi] {
                    dist[vi] = d + 1;
                    prev[vi] = u;
                    seq += 1;
                    heap.push(Reverse((d + 1, seq, vi)));
                }
            }
        }
        if dist[g] == u64::MAX {
            return Err(RoadmapError::Unreachable);
        }
        let mut nodes = vec![goal];
        let mut cur = g;
        while cur != s {
            cur = prev[cur];
            nodes.push(self.node_at(cur));
        }
        nodes.reverse();
        Ok(nodes)
    }

    /// Minimum-length 4-connected path between two free nodes.
    pub fn shortest_path(&self, start: Node, goal: Node) -> Result<Path, RoadmapError> {
        let nodes = self.dijkstra(start, goal)?;
        Ok(Path::new(nodes.into_iter().map(|n| self.point(n)).collect()))
    }
}

/// Snap both endpoints, search, and restore the exact endpoints as the first
/// and last waypoints.
pub fn initial_path(graph: &RoadmapGraph, start: Point, goal: Point) -> Result<Path, RoadmapError> {
    let s = graph.snap_to_free_node(start)?;
    let g = graph.snap_to_free_node(goal)?;
    let mut path = graph.shortest_path(s, g)?;
    attach_endpoints(&mut path, start, goal);
    Ok(path)
}

/// Ensure `path` begins at `start` and ends at `goal` exactly, keeping the
/// snapped nodes as inner waypoints when they differ.
pub(crate) fn attach_endpoints(path: &mut Path, start: Point, goal: Point) {
    if path.first() != Some(start) {
        path.waypoints.insert(0, start);
    }
    if path.last() != Some(goal) || path.len() == 1 {
        path.waypoints.push(goal);
    }
    if path.len() == 2 && path.waypoints[0] == path.waypoints[1] {
        path.waypoints.pop();
    }
}
