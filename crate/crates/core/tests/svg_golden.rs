//! Snapshot of an initial-versus-reshaped rendering. Set `UPDATE_GOLDEN=1`
//! to rewrite the stored file.

use rpr_core::env::{EnvironmentFile, Obstacle, Workspace};
use rpr_core::geom::{Path, Point};
use rpr_core::harness::{render_svg, svg_document, PathStyle};

const GOLDEN: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/initial_and_final.svg");

fn scene() -> (EnvironmentFile, Vec<(Path, PathStyle)>) {
    let env = EnvironmentFile {
        workspace: Workspace::new(9.0, 6.0),
        delta: 0.1,
        d_min: 0.1,
        obstacles: vec![
            Obstacle::rectangle(Point::new(3.0, 1.0), 1.2, 1.4),
            Obstacle::circle(Point::new(6.2, 1.5), 0.8),
        ],
    };
    let pts = |v: &[(f64, f64)]| Path::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect());
    let initial = pts(&[(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (4.0, 2.0), (4.0, 0.3), (9.0, 0.3), (9.0, 0.0)]);
    let reshaped = pts(&[(0.0, 0.0), (1.6, 0.9), (2.2, 2.0), (3.9, 2.0), (4.6, 0.5), (7.0, 0.25), (9.0, 0.0)]);
    (env, vec![(initial, PathStyle::dashed("#1f77b4")), (reshaped, PathStyle::solid("#d62728"))])
}

#[test]
fn matches_golden_file() {
    let (env, paths) = scene();
    let doc = svg_document(&env, &paths).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(GOLDEN, &doc).unwrap();
    }
    let golden = std::fs::read_to_string(GOLDEN).expect("golden file present");
    assert_eq!(doc, golden);
    assert_eq!(doc.matches("<polyline").count(), 2);
    assert_eq!(doc.matches("stroke-dasharray").count(), 1);
}

#[test]
fn file_output_matches_document() {
    let (env, paths) = scene();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scene.svg");
    render_svg(&env, &paths, &out).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), svg_document(&env, &paths).unwrap());
}
