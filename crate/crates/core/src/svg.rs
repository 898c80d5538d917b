//! SVG rendering of a grid, paths and the start/goal markers.

use std::fmt::Write as _;

use crate::kinematics::RobotState;
use crate::planner::Path;
use crate::world::OccupancyGrid;

/// Pixels per meter.
const SCALE: f64 = 50.0;

/// One `rect` per occupied cell, one `polyline` per path (classes `path-0`,
/// `path-1`, ...) and a `circle` for each of start and goal. The y axis is
/// flipped so north is up. Output is byte-identical for identical inputs.
pub fn render_svg(grid: &OccupancyGrid, paths: &[Path], start: &RobotState, goal: &RobotState) -> String {
    let (w, h) = grid.size_m();
    let (ox, oy) = grid.origin();
    let px = |x: f64| (x - ox) * SCALE;
    let py = |y: f64| (h - (y - oy)) * SCALE;
    let res = grid.resolution();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}" style="background:#fff">"#,
        w * SCALE,
        h * SCALE,
        w * SCALE,
        h * SCALE
    );
    let _ = writeln!(
        s,
        "<style>.occ{{fill:#333}}polyline{{fill:none;stroke-width:2}}.path-0{{stroke:#d62728;stroke-width:3}}\
         .start{{fill:#2ca02c}}.goal{{fill:#1f77b4}}</style>"
    );
    let palette = ["#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
    for iy in 0..grid.height() {
        for ix in 0..grid.width() {
            if grid.is_occupied(ix, iy) {
                let (cx, cy) = grid.cell_center(ix, iy);
                let _ = writeln!(
                    s,
                    r#"<rect class="occ" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                    px(cx - res / 2.0),
                    py(cy + res / 2.0),
                    res * SCALE,
                    res * SCALE
                );
            }
        }
    }
    for (i, path) in paths.iter().enumerate() {
        let points: Vec<String> = path
            .states
            .iter()
            .map(|p| format!("{:.3},{:.3}", px(p.x), py(p.y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="path-{i}" stroke="{}" points="{}"/>"#,
            palette[i % palette.len()],
            points.join(" ")
        );
    }
    for (class, p) in [("start", start), ("goal", goal)] {
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="{:.3}"/>"#,
            px(p.x),
            py(p.y),
            0.15 * SCALE
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes(svg: &str) -> Vec<(String, Option<String>)> {
        let doc = roxmltree::Document::parse(svg).expect("well-formed XML");
        doc.root_element()
            .children()
            .filter(|n| matches!(n.tag_name().name(), "rect" | "polyline" | "circle"))
            .map(|n| (n.tag_name().name().to_string(), n.attribute("class").map(String::from)))
            .collect()
    }

    fn straight(n: usize) -> Path {
        let mut p = Path::stationary(RobotState::new(1.0, 1.0, 0.0));
        for i in 1..n {
            p.states.push(RobotState::new(1.0 + i as f64 * 0.1, 1.0, 0.0));
        }
        p
    }

    #[test]
    fn grid_only_parses_and_counts() {
        let mut g = OccupancyGrid::empty(2.0, 1.0, 0.1).unwrap();
        g.fill_rect(0.0, 0.0, 0.3, 0.3, true);
        let a = RobotState::new(1.0, 0.5, 0.0);
        let svg = render_svg(&g, &[], &a, &a);
        assert_eq!(shapes(&svg).len(), g.occupied_count() + 2);
        assert_eq!(svg, render_svg(&g, &[], &a, &a));
    }

    #[test]
    fn polyline_vertices_and_classes() {
        let g = OccupancyGrid::empty(3.0, 3.0, 0.1).unwrap();
        let a = RobotState::new(1.0, 1.0, 0.0);
        let paths = [straight(7), straight(4)];
        let svg = render_svg(&g, &paths, &a, &a);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let lines: Vec<_> = doc.descendants().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].attribute("class"), Some("path-0"));
        assert_eq!(lines[1].attribute("class"), Some("path-1"));
        assert_eq!(lines[0].attribute("points").unwrap().split(' ').count(), 7);
        assert_eq!(shapes(&svg).len(), 2 + 2);
    }
}
