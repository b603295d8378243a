//! SVG rendering of an environment and planned paths.

use std::fmt::Write as _;

use crate::env::{EnvironmentFile, Obstacle};
use crate::geom::Path;

use super::HarnessError;

/// Pixels per workspace unit.
pub const SCALE: f64 = 80.0;
pub const MARGIN: f64 = 10.0;

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct PathStyle {
    pub stroke: String,
    pub width: f64,
    pub dashed: bool,
}

impl PathStyle {
    pub fn solid(stroke: &str) -> Self {
        PathStyle {
            stroke: stroke.to_string(),
            width: 2.0,
            dashed: false,
        }
    }

    pub fn dashed(stroke: &str) -> Self {
        PathStyle {
            dashed: true,
            width: 1.5,
            ..PathStyle::solid(stroke)
        }
    }

    /// Solid style with the `i`-th palette colour.
    pub fn palette(i: usize) -> Self {
        PathStyle::solid(PALETTE[i % PALETTE.len()])
    }
}

struct Frame {
    height: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        MARGIN + x * SCALE
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.height - y) * SCALE
    }
}

/// The SVG document as a string.
pub fn svg_document(env: &EnvironmentFile, paths: &[(Path, PathStyle)]) -> Result<String, HarnessError> {
    let grid = env.build()?;
    let ws = env.workspace;
    let f = Frame { height: ws.height };
    let (w, h) = (ws.width * SCALE + 2.0 * MARGIN, ws.height * SCALE + 2.0 * MARGIN);
    let mut s = String::new();
    let mut line = |text: String| {
        s.push_str(&text);
        s.push('\n');
    };
    line(format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    ));
    line(format!(r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#));

    line(r##"<g id="dilated" fill="#d9d9d9" stroke="none">"##.to_string());
    let cell = grid.delta * SCALE;
    for r in 0..grid.rows {
        let mut c = 0;
        while c < grid.cols {
            if !grid.is_occupied(r, c) {
                c += 1;
                continue;
            }
            let c0 = c;
            while c < grid.cols && grid.is_occupied(r, c) {
                c += 1;
            }
            line(format!(
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                f.x(c0 as f64 * grid.delta),
                f.y((r + 1) as f64 * grid.delta),
                (c - c0) as f64 * cell,
                cell
            ));
        }
    }
    line("</g>".to_string());

    line(r##"<g id="obstacles" fill="#404040" stroke="none">"##.to_string());
    for ob in &env.obstacles {
        match *ob {
            Obstacle::Rectangle {
                center,
                width,
                height,
            } => line(format!(
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                f.x(center.x - width / 2.0),
                f.y(center.y + height / 2.0),
                width * SCALE,
                height * SCALE
            )),
            Obstacle::Circle { center, radius } => line(format!(
                r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}"/>"#,
                f.x(center.x),
                f.y(center.y),
                radius * SCALE
            )),
        }
    }
    line("</g>".to_string());

    line(format!(
        r#"<rect id="workspace" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        f.x(0.0),
        f.y(ws.height),
        ws.width * SCALE,
        ws.height * SCALE
    ));

    for (path, style) in paths {
        let mut pts = String::new();
        for (i, p) in path.waypoints.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            write!(pts, "{:.2},{:.2}", f.x(p.x), f.y(p.y)).expect("writing to a String");
        }
        let dash = if style.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        line(format!(
            r#"<polyline points="{pts}" fill="none" stroke="{}" stroke-width="{}"{dash}/>"#,
            style.stroke, style.width
        ));
    }
    line("</svg>".to_string());
    Ok(s)
}

/// Write the SVG for `env` and `paths` to `out`.
pub fn render_svg(
    env: &EnvironmentFile,
    paths: &[(Path, PathStyle)],
    out: &std::path::Path,
) -> Result<(), HarnessError> {
    let doc = svg_document(env, paths)?;
    std::fs::write(out, doc)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Workspace;
    use crate::geom::Point;

    fn empty_env() -> EnvironmentFile {
        EnvironmentFile {
            workspace: Workspace::new(9.0, 6.0),
            delta: 0.1,
            d_min: 0.1,
            obstacles: Vec::new(),
        }
    }

    #[test]
    fn straight_path_on_empty_env() {
        let path = Path::new(vec![Point::new(0.0, 0.0), Point::new(9.0, 0.0)]);
        let doc = svg_document(&empty_env(), &[(path, PathStyle::palette(0))]).unwrap();
        assert_eq!(doc.matches("<polyline").count(), 1);
        let pts = doc.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts, "10.00,490.00 730.00,490.00");
        assert!(!doc.contains("<circle"));
    }

    #[test]
    fn missing_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("no_such_dir").join("x.svg");
        let err = render_svg(&empty_env(), &[], &out).unwrap_err();
        assert!(matches!(err, HarnessError::Io(_)));
    }
}
