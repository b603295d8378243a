//! Acceptance checks. Run with `cargo test -p rpr-core --test acceptance`.
//!
//! Prints one line per criterion. Criteria listed in `KNOWN_FAILURES` are
//! still evaluated and reported; they do not affect the exit status.

use std::collections::VecDeque;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rpr_core::beamlet::{build_beamlet_graph, build_dyadic_decomposition};
use rpr_core::cfs::compute_feasible_set;
use rpr_core::curvature::curvature_halfplanes;
use rpr_core::env::GridEnvironment;
use rpr_core::geom::Point;
use rpr_core::harness::bench::trial_seed;
use rpr_core::harness::{
    generate_connected_environment, run_benchmark, BenchConfig, BenchmarkResult, EnvSpec, ObstacleShape, Planner,
    TrialStatus,
};
use rpr_core::qp::{solve_qp, DenseMatrix, QuadraticProgram, DEFAULT_TOL};
use rpr_core::roadmap::{self, Node};

const BASE_SEED: u64 = 2024;
const TRIALS: usize = 50;
const RECT_GROUPS: [usize; 5] = [5, 10, 15, 20, 30];
const CIRCLE_GROUPS: [usize; 4] = [5, 10, 15, 20];

const CFS_LINE_MAX_RATE_AT_30: f64 = 0.60;
const CFS_LINE_ALLOWED_INVERSIONS: usize = 1;
const DESCENT_SLACK: f64 = 1e-6;
const SPEEDUP_MIN_WAYPOINTS: usize = 100;
const SPEEDUP_MIN_FRACTION: f64 = 0.80;
const THETA_MAX_DEG: f64 = 30.0;
const ANGLE_SLACK: f64 = 1e-4;
const ORDERING_MIN_GROUPS: usize = 3;
const WEDGE_SAMPLES: usize = 100_000;
const SEARCH_GRIDS: usize = 100;
const ARC_SAMPLES: usize = 10_000;
const QP_CASES: usize = 100;
const QP_X_TOL: f64 = 2e-3;
const QP_OBJ_TOL: f64 = 1e-5;

/// Criteria expected to fail; see README.
const KNOWN_FAILURES: &[u32] = &[3];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rect_config() -> BenchConfig {
    BenchConfig::new(
        RECT_GROUPS.iter().map(|&q| (q, TRIALS)).collect(),
        vec![Planner::CfsLine, Planner::RprAll, Planner::RprM],
        BASE_SEED,
    )
}

fn rate(res: &BenchmarkResult, group: usize, planner: Planner) -> (usize, usize) {
    let g = res
        .groups
        .iter()
        .find(|g| g.group == group && g.planner == planner)
        .expect("group summary present");
    (g.solved, g.total)
}

fn initial_paths_have_feasible_sets() -> Verdict {
    let (mut envs, mut waypoints, mut violations) = (0, 0, 0);
    for (g, &q) in RECT_GROUPS.iter().enumerate() {
        for k in 0..TRIALS {
            let spec = EnvSpec::new(trial_seed(BASE_SEED, g + 1, k), q, ObstacleShape::Rectangle);
            let Ok((obstacles, _)) = generate_connected_environment(&spec) else {
                return verdict(false, format!("environment generation failed for q={q} trial {k}"));
            };
            let env = spec.build(&obstacles).expect("generated obstacles rasterize");
            let path = roadmap::initial_path(&roadmap::build_roadmap(&env), spec.start, spec.goal)
                .expect("generated environments are connected");
            let hulls = env.dilated_obstacle_hulls();
            envs += 1;
            for &p in &path.waypoints {
                waypoints += 1;
                if compute_feasible_set(&env, &hulls, p).is_none() {
                    violations += 1;
                }
            }
        }
    }
    verdict(violations == 0, format!("{envs} environments, {waypoints} waypoints, {violations} empty feasible sets"))
}

fn rpr_success(res: &BenchmarkResult) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for planner in [Planner::RprAll, Planner::RprM] {
        let (solved, total) = (1..=RECT_GROUPS.len())
            .map(|g| rate(res, g, planner))
            .fold((0, 0), |(a, b), (s, t)| (a + s, b + t));
        pass &= solved == total && total > 0;
        parts.push(format!("{} {solved}/{total}", planner.label(res.m)));
    }
    verdict(pass, parts.join(", "))
}

fn cfs_line_degrades(res: &BenchmarkResult) -> Verdict {
    let rates: Vec<f64> = (1..=RECT_GROUPS.len())
        .map(|g| {
            let (s, t) = rate(res, g, Planner::CfsLine);
            s as f64 / t as f64
        })
        .collect();
    let inversions = rates.windows(2).filter(|w| w[1] > w[0]).count();
    let last = *rates.last().expect("groups present");
    let shown: Vec<String> = RECT_GROUPS
        .iter()
        .zip(&rates)
        .map(|(q, r)| format!("q={q}:{:.0}%", 100.0 * r))
        .collect();
    verdict(
        inversions <= CFS_LINE_ALLOWED_INVERSIONS && last <= CFS_LINE_MAX_RATE_AT_30,
        format!(
            "{} ({inversions} inversions, limit {CFS_LINE_ALLOWED_INVERSIONS}; q=30 rate {:.0}%, limit {:.0}%)",
            shown.join(" "),
            100.0 * last,
            100.0 * CFS_LINE_MAX_RATE_AT_30
        ),
    )
}

fn descent(res: &BenchmarkResult) -> Verdict {
    let traces: Vec<&Vec<f64>> = res.trials.iter().flat_map(|r| &r.objective_traces).collect();
    let bad = traces
        .iter()
        .filter(|t| t.windows(2).any(|w| w[1] > w[0] + DESCENT_SLACK))
        .count();
    verdict(bad == 0 && !traces.is_empty(), format!("{} CFS runs, {bad} with an increase", traces.len()))
}

fn speedup(res: &BenchmarkResult) -> Verdict {
    let group = RECT_GROUPS.len();
    let (mut faster, mut eligible) = (0, 0);
    for k in 0..TRIALS {
        let find = |p| {
            res.trials
                .iter()
                .find(|r| r.group == group && r.trial == k && r.planner == p)
                .expect("trial record present")
        };
        let (all, m) = (find(Planner::RprAll), find(Planner::RprM));
        if all.initial_waypoints >= SPEEDUP_MIN_WAYPOINTS {
            eligible += 1;
            if m.reshape_time_s < all.reshape_time_s {
                faster += 1;
            }
        }
    }
    let frac = if eligible == 0 { 0.0 } else { faster as f64 / eligible as f64 };
    verdict(
        eligible > 0 && frac >= SPEEDUP_MIN_FRACTION,
        format!("RPR-60 faster in {faster}/{eligible} q=30 trials with >= {SPEEDUP_MIN_WAYPOINTS} waypoints"),
    )
}

fn curvature_soundness() -> Verdict {
    let mut cfg = BenchConfig::new(
        CIRCLE_GROUPS.iter().map(|&q| (q, TRIALS)).collect(),
        vec![Planner::RprM, Planner::ErprM],
        BASE_SEED,
    );
    cfg.shape = ObstacleShape::Circle;
    let res = run_benchmark(&cfg);
    let theta = THETA_MAX_DEG.to_radians();
    let mut unsound = 0;
    let mut ordered = 0;
    let mut parts = Vec::new();
    for g in 1..=CIRCLE_GROUPS.len() {
        let rows = |p| res.trials.iter().filter(move |r| r.group == g && r.planner == p);
        let erpr_ok: Vec<_> = rows(Planner::ErprM).filter(|r| r.status == TrialStatus::Success).collect();
        unsound += erpr_ok
            .iter()
            .filter(|r| r.audit.map_or(true, |a| a.max_angle > theta + ANGLE_SLACK))
            .count();
        let rpr_ok = rows(Planner::RprM)
            .filter(|r| r.status == TrialStatus::Success)
            .filter(|r| r.audit.is_some_and(|a| a.max_angle <= theta + ANGLE_SLACK))
            .count();
        if erpr_ok.len() >= rpr_ok {
            ordered += 1;
        }
        parts.push(format!("q={}: ERPR {} vs RPR {rpr_ok}", CIRCLE_GROUPS[g - 1], erpr_ok.len()));
    }
    verdict(
        unsound == 0 && ordered >= ORDERING_MIN_GROUPS,
        format!("{}; {unsound} unsound successes; ordering in {ordered}/4 groups", parts.join(", ")),
    )
}

fn wedge_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagree = 0;
    for _ in 0..WEDGE_SAMPLES {
        let mut pt = || Point::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let (a, b, x) = (pt(), pt(), pt());
        let theta = rng.gen_range(1f64..89.0).to_radians();
        let Ok(hps) = curvature_halfplanes(a, b, theta) else {
            disagree += 1;
            continue;
        };
        let by_planes = hps.iter().all(|h| h.normal.dot(x) <= h.offset);
        let (u, v) = (b - a, x - b);
        let dot = u.x * v.x + u.y * v.y;
        let cross = u.x * v.y - u.y * v.x;
        let by_angle = dot > 0.0 && cross.abs() <= theta.tan() * dot;
        if by_planes != by_angle {
            disagree += 1;
        }
    }
    verdict(disagree == 0, format!("{WEDGE_SAMPLES} triples, {disagree} disagreements"))
}

fn bfs_hops(occ: &[bool], rows: usize, cols: usize, s: Node, g: Node) -> Option<usize> {
    let nr = rows + 1;
    let nc = cols + 1;
    let cell = |r: i64, c: i64| r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && occ[r as usize * cols + c as usize];
    let free = |n: Node| {
        let (r, c) = (n.row as i64, n.col as i64);
        !(cell(r - 1, c - 1) || cell(r - 1, c) || cell(r, c - 1) || cell(r, c))
    };
    if !free(s) || !free(g) {
        return None;
    }
    let mut dist = vec![usize::MAX; nr * nc];
    let mut queue = VecDeque::from([s]);
    dist[s.row * nc + s.col] = 0;
    while let Some(n) = queue.pop_front() {
        let d = dist[n.row * nc + n.col];
        if n == g {
            return Some(d);
        }
        let cands = [
            (n.row.wrapping_sub(1), n.col),
            (n.row + 1, n.col),
            (n.row, n.col.wrapping_sub(1)),
            (n.row, n.col + 1),
        ];
        for (r, c) in cands {
            if r < nr && c < nc && free(Node::new(r, c)) && dist[r * nc + c] == usize::MAX {
                dist[r * nc + c] = d + 1;
                queue.push_back(Node::new(r, c));
            }
        }
    }
    None
}

fn search_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let delta = 0.1;
    let mut grid_mismatch = 0;
    let mut compared = 0;
    for _ in 0..SEARCH_GRIDS {
        let rows = rng.gen_range(2..=12);
        let cols = rng.gen_range(2..=12);
        let density = rng.gen_range(0.0..0.35);
        let occ: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(density)).collect();
        let env = GridEnvironment::from_occupancy(rows, cols, delta, occ.clone());
        let graph = roadmap::build_roadmap(&env);
        let s = Node::new(rng.gen_range(0..=rows), rng.gen_range(0..=cols));
        let g = Node::new(rng.gen_range(0..=rows), rng.gen_range(0..=cols));
        let expected = bfs_hops(&occ, rows, cols, s, g);
        let got = graph.shortest_path(s, g).ok().map(|p| p.len() - 1);
        let got_len = graph.shortest_path(s, g).ok().map(|p| p.length());
        compared += 1;
        let ok = match (expected, got, got_len) {
            (Some(e), Some(h), Some(len)) => e == h && (len - e as f64 * delta).abs() < 1e-9,
            (None, None, None) => true,
            _ => false,
        };
        if !ok {
            grid_mismatch += 1;
        }
    }

    let mut arc_mismatch = 0;
    let mut sampled = 0;
    let theta = THETA_MAX_DEG.to_radians();
    let mut attempts = 0;
    while sampled < ARC_SAMPLES && attempts < 1000 {
        attempts += 1;
        let (rows, cols) = (rng.gen_range(4..=16), rng.gen_range(4..=16));
        let occ: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(0.15)).collect();
        let env = GridEnvironment::from_occupancy(rows, cols, delta, occ);
        let squares = build_dyadic_decomposition(&env);
        let graph = build_beamlet_graph(&env, &squares, theta).expect("valid angle");
        let n = graph.directed_count();
        if n < 2 {
            continue;
        }
        for _ in 0..200 {
            let from = rng.gen_range(0..n);
            let to = if rng.gen_bool(0.7) {
                let out = graph.outgoing(graph.head(from));
                out[rng.gen_range(0..out.len())]
            } else {
                rng.gen_range(0..n)
            };
            let (a, b) = (graph.point(graph.tail(from)), graph.point(graph.head(from)));
            let (c, d) = (graph.point(graph.tail(to)), graph.point(graph.head(to)));
            let (u, v) = (b - a, d - c);
            let cos = (u.x * v.x + u.y * v.y) / ((u.x * u.x + u.y * u.y).sqrt() * (v.x * v.x + v.y * v.y).sqrt());
            let angle = cos.clamp(-1.0, 1.0).acos();
            let reversal = graph.tail(to) == graph.head(from) && graph.head(to) == graph.tail(from);
            let expected = graph.head(from) == graph.tail(to) && !reversal && angle <= theta;
            if graph.arc(from, to).is_some() != expected {
                arc_mismatch += 1;
            }
            sampled += 1;
        }
    }
    verdict(
        grid_mismatch == 0 && arc_mismatch == 0 && compared == SEARCH_GRIDS && sampled >= ARC_SAMPLES,
        format!("grids {grid_mismatch}/{compared} mismatches; arcs {arc_mismatch}/{sampled} mismatches"),
    )
}

/// Minimize a convex `g` over a 1-D lattice on `[lo, hi]`, refining to the
/// neighbours of the incumbent until the spacing is below `fine`.
fn lattice_min_1d(g: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, fine: f64) -> Option<(f64, f64)> {
    const N: usize = 2000;
    loop {
        let h = (hi - lo) / N as f64;
        let (bx, bv) = (0..=N)
            .map(|i| lo + i as f64 * h)
            .map(|x| (x, g(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if !bv.is_finite() {
            return None;
        }
        if h < fine {
            return Some((bx, bv));
        }
        (lo, hi) = (bx - h, bx + h);
    }
}

fn qp_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut worst_x, mut worst_obj, mut bad) = (0f64, 0f64, 0);
    for _ in 0..QP_CASES {
        let l = [[rng.gen_range(0.5..2.0), 0.0], [rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)]];
        let q = [
            [l[0][0] * l[0][0], l[0][0] * l[1][0]],
            [l[1][0] * l[0][0], l[1][0] * l[1][0] + l[1][1] * l[1][1]],
        ];
        let c = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let mut prog = QuadraticProgram::new(DenseMatrix::from_rows(&[q[0].to_vec(), q[1].to_vec()]), c.to_vec());
        let mut rows = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (a0, a1) = (ang.cos(), ang.sin());
            // Positive offsets keep the origin feasible.
            let b = rng.gen_range(0.1..1.5);
            prog.add_inequality(vec![(0, a0), (1, a1)], b);
            rows.push((a0, a1, b));
        }
        let sol = solve_qp(&prog, DEFAULT_TOL).expect("well-posed");
        let obj = |x: f64, y: f64| 0.5 * (q[0][0] * x * x + 2.0 * q[0][1] * x * y + q[1][1] * y * y) + c[0] * x + c[1] * y;
        // Exact minimization over y on each lattice column.
        let column = |x: f64| -> Option<(f64, f64)> {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for &(a0, a1, b) in &rows {
                let r = b - a0 * x;
                if a1 > 0.0 {
                    hi = hi.min(r / a1);
                } else if a1 < 0.0 {
                    lo = lo.max(r / a1);
                } else if r < 0.0 {
                    return None;
                }
            }
            (lo <= hi).then(|| {
                let y = (-(q[0][1] * x + c[1]) / q[1][1]).clamp(lo, hi);
                (y, obj(x, y))
            })
        };
        let g = |x: f64| column(x).map_or(f64::INFINITY, |(_, v)| v);
        let Some((lx, lv)) = lattice_min_1d(&g, -12.0, 12.0, 1e-9) else {
            bad += 1;
            continue;
        };
        let ly = column(lx).expect("incumbent column is feasible").0;
        let dx = ((sol.x[0] - lx).powi(2) + (sol.x[1] - ly).powi(2)).sqrt();
        let dobj = (obj(sol.x[0], sol.x[1]) - lv).abs();
        worst_x = worst_x.max(dx);
        worst_obj = worst_obj.max(dobj);
        if dx > QP_X_TOL || dobj > QP_OBJ_TOL {
            bad += 1;
        }
    }
    verdict(
        bad == 0,
        format!("{QP_CASES} programs, {bad} outside tolerance; worst |dx| {worst_x:.2e}, worst |dJ| {worst_obj:.2e}"),
    )
}

fn determinism() -> Verdict {
    let mut cfg = BenchConfig::new(vec![(5, 3), (15, 3)], Planner::ALL.to_vec(), 99);
    cfg.shape = ObstacleShape::Circle;
    let a = run_benchmark(&cfg).to_csv(false);
    let b = run_benchmark(&cfg).to_csv(false);
    verdict(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let rect = run_benchmark(&rect_config());
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        (1, "initial-path feasible sets", Box::new(initial_paths_have_feasible_sets)),
        (2, "RPR success rate", Box::new(|| rpr_success(&rect))),
        (3, "CFS-line degradation", Box::new(|| cfs_line_degrades(&rect))),
        (4, "CFS descent", Box::new(|| descent(&rect))),
        (5, "RPR-m speedup", Box::new(|| speedup(&rect))),
        (6, "curvature soundness and ordering", Box::new(curvature_soundness)),
        (7, "wedge half-plane oracle", Box::new(wedge_oracle)),
        (8, "search oracles", Box::new(search_oracles)),
        (9, "QP lattice oracle", Box::new(qp_oracle)),
        (10, "benchmark determinism", Box::new(determinism)),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        let v = check();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (v.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known failure)",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("criterion {id:>2} [{tag}] {name}: {}", v.detail);
    }
    println!("acceptance finished in {:.1}s", t0.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
