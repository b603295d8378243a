use proptest::prelude::*;

use rpr_core::beamlet::densify;
use rpr_core::cfs::{compute_feasible_set, INSIDE_TOL};
use rpr_core::curvature::curvature_halfplanes;
use rpr_core::env::{clearance, rasterize_and_dilate, Obstacle, Workspace};
use rpr_core::geom::{turn_angle, Path, Point};
use rpr_core::harness::{generate_environment, EnvSpec, ObstacleShape};
use rpr_core::qp::{solve_qp, DenseMatrix, QpStatus, QuadraticProgram, DEFAULT_TOL};
use rpr_core::rpr::{alter_boundary, segment_path};

fn ws() -> Workspace {
    Workspace::new(9.0, 6.0)
}

fn point_in(w: f64, h: f64) -> impl Strategy<Value = Point> {
    (0.0..w, 0.0..h).prop_map(|(x, y)| Point::new(x, y))
}

fn obstacle() -> impl Strategy<Value = Obstacle> {
    prop_oneof![
        (1.0..8.0f64, 1.0..5.0f64, 0.1..1.5f64, 0.1..1.5f64)
            .prop_map(|(x, y, w, h)| Obstacle::rectangle(Point::new(x, y), w, h)),
        (1.0..8.0f64, 1.0..5.0f64, 0.05..0.9f64).prop_map(|(x, y, r)| Obstacle::circle(Point::new(x, y), r)),
    ]
}

fn straight(n: usize) -> Path {
    Path::new((0..n).map(|i| Point::new(i as f64, 0.0)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn points_near_obstacles_are_in_dilated_region(ob in obstacle(), p in point_in(9.0, 6.0)) {
        let (lo, hi) = ob.bounds();
        prop_assume!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 9.0 && hi.y <= 6.0);
        let env = rasterize_and_dilate(ws(), &[ob], 0.1, 0.1).unwrap();
        if ob.distance(p) <= 0.1 {
            prop_assert!(env.point_in_dilated(p));
        }
    }

    #[test]
    fn free_nodes_keep_a_grid_step_from_dilated_cells(ob in obstacle(), i in 0usize..=60, j in 0usize..=90) {
        let (lo, hi) = ob.bounds();
        prop_assume!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 9.0 && hi.y <= 6.0);
        let env = rasterize_and_dilate(ws(), &[ob], 0.1, 0.1).unwrap();
        prop_assume!(!env.node_blocked(i, j));
        let p = env.node_point(i, j);
        let d = env.delta;
        for r in 0..env.rows {
            for c in 0..env.cols {
                if env.is_occupied(r, c) {
                    let dx = (c as f64 * d - p.x).max(p.x - (c + 1) as f64 * d).max(0.0);
                    let dy = (r as f64 * d - p.y).max(p.y - (r + 1) as f64 * d).max(0.0);
                    prop_assert!(dx.hypot(dy) >= d - 1e-9);
                }
            }
        }
        prop_assert!(clearance(p, &[ob]) >= 0.1);
    }

    #[test]
    fn feasible_set_contains_query_and_avoids_hulls(ob in obstacle(), p in point_in(9.0, 6.0), probe in point_in(9.0, 6.0)) {
        let (lo, hi) = ob.bounds();
        prop_assume!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 9.0 && hi.y <= 6.0);
        let env = rasterize_and_dilate(ws(), &[ob], 0.1, 0.1).unwrap();
        let hulls = env.dilated_obstacle_hulls();
        match compute_feasible_set(&env, &hulls, p) {
            None => prop_assert!(hulls.iter().any(|h| h.contains(p, INSIDE_TOL))),
            Some(region) => {
                prop_assert!(region.contains(p, 1e-9));
                if region.contains(probe, 0.0) {
                    prop_assert!(hulls.iter().all(|h| h.project(probe, 0.0).signed_distance >= -1e-9));
                }
            }
        }
    }

    #[test]
    fn wedge_matches_angle_test(
        a in point_in(10.0, 10.0), b in point_in(10.0, 10.0), x in point_in(10.0, 10.0), deg in 1.0..89.0f64,
    ) {
        prop_assume!(a.distance(b) > 1e-6);
        let theta = deg.to_radians();
        let hps = curvature_halfplanes(a, b, theta).unwrap();
        let (u, v) = (b - a, x - b);
        let margin = (u.cross(v).abs() - theta.tan() * u.dot(v)).abs();
        prop_assume!(margin > 1e-9 && v.norm() > 1e-9);
        let inside = hps.iter().all(|h| h.normal.dot(x) <= h.offset);
        prop_assert_eq!(inside, turn_angle(u, v) <= theta);
    }

    #[test]
    fn qp_solution_is_feasible_and_no_worse_than_samples(
        diag in prop::collection::vec(0.2..4.0f64, 3),
        off in prop::collection::vec(-0.5..0.5f64, 3),
        c in prop::collection::vec(-3.0..3.0f64, 3),
        rows in prop::collection::vec((prop::collection::vec(-1.0..1.0f64, 3), 0.1..2.0f64), 0..6),
        samples in prop::collection::vec(prop::collection::vec(-0.05..0.05f64, 3), 8),
    ) {
        // Diagonally dominant, hence positive definite.
        let q = DenseMatrix::from_rows(&[
            vec![diag[0] + 1.0, off[0], off[1]],
            vec![off[0], diag[1] + 1.0, off[2]],
            vec![off[1], off[2], diag[2] + 1.0],
        ]);
        let mut prog = QuadraticProgram::new(q, c);
        for (a, b) in &rows {
            prog.add_inequality(a.iter().copied().enumerate().collect(), *b);
        }
        let sol = solve_qp(&prog, DEFAULT_TOL).unwrap();
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        for r in &prog.inequalities {
            prop_assert!(r.eval(&sol.x) <= r.rhs + 1e-7);
        }
        // The origin is feasible, so are small moves from it.
        for s in samples.iter().chain(std::iter::once(&vec![0.0; 3])) {
            if prog.inequalities.iter().all(|r| r.eval(s) <= r.rhs) {
                prop_assert!(sol.objective <= prog.objective(s) + 1e-7);
            }
        }
    }

    #[test]
    fn segmentation_covers_path(n in 2usize..400, m in 3usize..120) {
        let seg = segment_path(&straight(n), m).unwrap();
        let b = seg.boundaries();
        prop_assert_eq!(b[0], 0);
        prop_assert_eq!(*b.last().unwrap(), n - 1);
        for (k, w) in b.windows(2).enumerate() {
            prop_assert!(w[1] > w[0]);
            // A short remainder is merged into the last segment.
            let cap = if k + 2 == b.len() { m + 1 } else { m };
            prop_assert!(w[1] - w[0] <= cap);
        }
        for j in 1..b.len().saturating_sub(1) {
            if let Ok(alt) = alter_boundary(&seg, j) {
                let nb = alt.boundaries();
                prop_assert_eq!(nb.len(), b.len() + 1);
                prop_assert!(nb.windows(2).all(|w| w[1] > w[0]));
                prop_assert!(!nb.contains(&b[j]));
                prop_assert!(nb[j] > b[j - 1] && nb[j + 1] < b[j + 1]);
            }
        }
    }

    #[test]
    fn densify_respects_spacing(pts in prop::collection::vec(point_in(9.0, 6.0), 2..12), s in 0.05..1.0f64) {
        let path = Path::new(pts);
        let d = densify(&path, s).unwrap();
        prop_assert!(d.waypoints.windows(2).all(|w| w[0].distance(w[1]) <= s + 1e-9));
        prop_assert_eq!(d.first(), path.first());
        prop_assert_eq!(d.last(), path.last());
        prop_assert!((d.length() - path.length()).abs() < 1e-9);
    }

    #[test]
    fn generated_obstacles_are_valid(seed in any::<u64>(), q in 0usize..25, circle in any::<bool>()) {
        let shape = if circle { ObstacleShape::Circle } else { ObstacleShape::Rectangle };
        let spec = EnvSpec::new(seed, q, shape);
        let obs = generate_environment(&spec).unwrap();
        prop_assert_eq!(&obs, &generate_environment(&spec).unwrap());
        prop_assert_eq!(obs.len(), q);
        for (i, a) in obs.iter().enumerate() {
            let (lo, hi) = a.bounds();
            prop_assert!(lo.x >= 0.0 && lo.y >= 0.0 && hi.x <= 9.0 && hi.y <= 6.0);
            for b in &obs[i + 1..] {
                prop_assert!(!a.intersects(b));
            }
        }
    }

    #[test]
    fn turn_angle_in_range(a in point_in(2.0, 2.0), b in point_in(2.0, 2.0)) {
        let t = turn_angle(a - Point::new(1.0, 1.0), b - Point::new(1.0, 1.0));
        prop_assert!((0.0..=std::f64::consts::PI).contains(&t));
    }
}
