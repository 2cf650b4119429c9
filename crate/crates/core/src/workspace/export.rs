//! Output files: SVG renders and JSON documents.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Workspace, WorkspaceError};
use crate::geometry::{cell_is_valid, Aabb, Vec2};
use crate::pebble_graph::PebbleGraph;
use crate::planner::Schedule;
use crate::trimesh::TriMesh;

const VALID_FILL: &str = "#9ecae1";
const INVALID_FILL: &str = "#d3d3d3";
const LOOP_STROKE: &str = "#d62728";
const INTER_STROKE: &str = "#1f77b4";

fn io_error(path: &Path, source: std::io::Error) -> WorkspaceError {
    WorkspaceError::Io { path: path.to_path_buf(), source }
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), WorkspaceError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(path, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), WorkspaceError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, WorkspaceError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn export_schedule(s: &Schedule, path: &Path) -> Result<(), WorkspaceError> {
    write_json(s, path)
}

pub fn load_schedule(path: &Path) -> Result<Schedule, WorkspaceError> {
    let s: Schedule = read_json(path)?;
    if s.makespan != s.rounds.len() {
        return Err(WorkspaceError::Malformed(format!(
            "makespan {} does not match {} rounds",
            s.makespan,
            s.rounds.len()
        )));
    }
    Ok(s)
}

/// An embedded workspace: the region and the pebble graph built on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub workspace: Workspace,
    pub graph: PebbleGraph,
}

fn pt(p: &Vec2) -> String {
    format!("{:.6},{:.6}", p.x, p.y)
}

fn line(out: &mut String, a: &Vec2, b: &Vec2, stroke: &str, width: f64) {
    let _ = writeln!(
        out,
        r#"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="{stroke}" stroke-width="{width:.6}"/>"#,
        a.x, a.y, b.x, b.y
    );
}

/// Renders the mesh and, when given, the pebble graph on top of it. Valid
/// cells are filled, invalid ones light gray; loop edges are red, inter-cell
/// edges blue, and robots are drawn as radius-`r` circles on every vertex.
/// The y axis points up.
pub fn render_svg(mesh: &TriMesh, graph: Option<&PebbleGraph>) -> String {
    let r = mesh.radius();
    let bb = Aabb::from_points(mesh.rings().iter().flatten()).inflate(2.0 * r);
    let (w, h) = (bb.max.x - bb.min.x, bb.max.y - bb.min.y);
    let thin = r * 0.05;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {w:.6} {h:.6}">"#,
        bb.min.x, -bb.max.y
    );
    out.push_str("<g transform=\"scale(1,-1)\">\n");
    out.push_str("<g id=\"cells\">\n");
    for f in mesh.face_ids() {
        let v = mesh.face_positions(f);
        let fill = if cell_is_valid(&v, r) { VALID_FILL } else { INVALID_FILL };
        let _ = writeln!(
            out,
            r#"<polygon points="{} {} {}" fill="{fill}" stroke="black" stroke-width="{thin:.6}"/>"#,
            pt(&v[0]),
            pt(&v[1]),
            pt(&v[2])
        );
    }
    out.push_str("</g>\n<g id=\"boundary\">\n");
    for ring in mesh.rings() {
        let pts: Vec<String> = ring.iter().map(pt).collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="none" stroke="black" stroke-width="{:.6}"/>"#,
            pts.join(" "),
            3.0 * thin
        );
    }
    out.push_str("</g>\n");
    if let Some(g) = graph {
        out.push_str("<g id=\"loop-edges\">\n");
        for (a, b) in g.loop_edges() {
            line(&mut out, &g.positions[a], &g.positions[b], LOOP_STROKE, thin * 2.0);
        }
        out.push_str("</g>\n<g id=\"inter-edges\">\n");
        for e in &g.inter_edges {
            line(&mut out, &g.positions[e.a], &g.positions[e.b], INTER_STROKE, thin * 2.0);
        }
        out.push_str("</g>\n<g id=\"robots\">\n");
        for p in &g.positions {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.6}" cy="{:.6}" r="{r:.6}" fill="none" stroke="black" stroke-width="{thin:.6}"/>"#,
                p.x, p.y
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n</svg>\n");
    out
}

pub fn export_svg(mesh: &TriMesh, graph: Option<&PebbleGraph>, path: &Path) -> Result<(), WorkspaceError> {
    write_text(path, &render_svg(mesh, graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{Direction, Move};
    use crate::shapes::lattice_mesh;

    #[test]
    fn two_cell_render_counts() {
        let mesh = lattice_mesh(1, 1, 1.1, 1.0);
        let g = PebbleGraph::extract(&mesh);
        let svg = render_svg(&mesh, Some(&g));
        assert_eq!(svg.matches("<circle").count(), 6);
        assert_eq!(svg.matches(LOOP_STROKE).count(), 6);
        assert!(svg.matches(INTER_STROKE).count() >= 1);
        assert_eq!(svg.matches(VALID_FILL).count(), 2);
        assert!(roxmltree::Document::parse(&svg).is_ok());
        assert_eq!(svg, render_svg(&mesh, Some(&g)));
    }

    #[test]
    fn mesh_only_render() {
        let mesh = lattice_mesh(2, 1, 0.5, 1.0);
        let svg = render_svg(&mesh, None);
        assert_eq!(svg.matches("<circle").count(), 0);
        assert_eq!(svg.matches(INVALID_FILL).count(), 4);
    }

    #[test]
    fn schedule_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/schedule.json");
        let s = Schedule::from_rounds(vec![
            vec![Move::Cyclic { cell: 1, direction: Direction::Forward }],
            vec![Move::Vacant { robot: 2, from: 0, to: 4 }],
        ]);
        export_schedule(&s, &path).unwrap();
        assert_eq!(load_schedule(&path).unwrap(), s);
        export_schedule(&Schedule::default(), &path).unwrap();
        let v: serde_json::Value = read_json(&path).unwrap();
        assert_eq!(v, serde_json::json!({"rounds": [], "makespan": 0}));
    }

    #[test]
    fn inconsistent_schedule_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        write_text(&path, r#"{"rounds":[],"makespan":3}"#).unwrap();
        assert!(matches!(load_schedule(&path), Err(WorkspaceError::Malformed(_))));
    }
}
