//! Synthetic benchmark workspaces, scaled by the robot radius.

use std::f64::consts::PI;

use crate::geometry::{optimal_edge_length, Vec2};
use crate::trimesh::{TriMesh, VertexTag};
use crate::workspace::Workspace;

/// Names accepted by [`synthetic`].
pub const SYNTHETIC: [&str; 5] = ["square", "l_shape", "annulus", "quad", "star"];

fn scaled(pts: &[(f64, f64)], r: f64) -> Vec<Vec2> {
    pts.iter().map(|&(x, y)| Vec2::new(x * r, y * r)).collect()
}

fn circle(cx: f64, cy: f64, radius: f64, n: usize, r: f64) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            Vec2::new((cx + radius * a.cos()) * r, (cy + radius * a.sin()) * r)
        })
        .collect()
}

/// Square of side `40 r`.
pub fn square(r: f64) -> Workspace {
    Workspace::new(scaled(&[(0., 0.), (40., 0.), (40., 40.), (0., 40.)], r), vec![], r).unwrap()
}

/// L-shape: a `48 r` square with a `24 r` square removed from one corner.
pub fn l_shape(r: f64) -> Workspace {
    let pts = [(0., 0.), (48., 0.), (48., 24.), (24., 24.), (24., 48.), (0., 48.)];
    Workspace::new(scaled(&pts, r), vec![], r).unwrap()
}

/// 12-gon of circumradius `27 r` with a concentric hexagonal hole of
/// circumradius `11 r`.
pub fn annulus(r: f64) -> Workspace {
    Workspace::new(circle(0., 0., 27., 12, r), vec![circle(0., 0., 11., 6, r)], r).unwrap()
}

/// Convex quadrilateral with no axis-aligned side.
pub fn quad(r: f64) -> Workspace {
    let pts = [(0., 3.), (41., -4.), (46., 35.), (6., 44.)];
    Workspace::new(scaled(&pts, r), vec![], r).unwrap()
}

/// Five-pointed star with truncated tips.
pub fn star(r: f64) -> Workspace {
    let (outer, inner, cut) = (34.0, 20.0, 0.45);
    let mut pts = Vec::new();
    for k in 0..5 {
        let a = PI / 2.0 + 2.0 * PI * k as f64 / 5.0;
        let b = a + PI / 5.0;
        let tip = Vec2::new(outer * a.cos(), outer * a.sin());
        let prev = {
            let p = a - PI / 5.0;
            Vec2::new(inner * p.cos(), inner * p.sin())
        };
        let next = Vec2::new(inner * b.cos(), inner * b.sin());
        // replace the tip by a short edge
        pts.push(prev + (tip - prev) * cut);
        pts.push(next + (tip - next) * cut);
        pts.push(next);
    }
    let pts: Vec<Vec2> = pts.into_iter().map(|p| p * r).collect();
    Workspace::new(pts, vec![], r).unwrap()
}

/// Looks up a synthetic workspace by name.
pub fn synthetic(name: &str, r: f64) -> Option<Workspace> {
    Some(match name {
        "square" => square(r),
        "l_shape" => l_shape(r),
        "annulus" => annulus(r),
        "quad" => quad(r),
        "star" => star(r),
        _ => return None,
    })
}

/// Parallelogram of `2 * cols * rows` equilateral triangles whose side is
/// `scale` times the optimal edge length.
pub fn lattice_mesh(cols: usize, rows: usize, scale: f64, r: f64) -> TriMesh {
    assert!(cols >= 1 && rows >= 1);
    let s = scale * optimal_edge_length(r);
    let h = s * 3f64.sqrt() / 2.0;
    let at = |i: usize, j: usize| Vec2::new((i as f64 + j as f64 / 2.0) * s, j as f64 * h);
    let id = |i: usize, j: usize| j * (cols + 1) + i;
    let mut pos = Vec::new();
    let mut tags = Vec::new();
    for j in 0..=rows {
        for i in 0..=cols {
            pos.push(at(i, j));
            let tag = match (i, j) {
                (0, 0) => VertexTag::Corner { ring: 0, index: 0 },
                (i, 0) if i == cols => VertexTag::Corner { ring: 0, index: 1 },
                (i, j) if i == cols && j == rows => VertexTag::Corner { ring: 0, index: 2 },
                (0, j) if j == rows => VertexTag::Corner { ring: 0, index: 3 },
                (_, 0) => VertexTag::Segment { ring: 0, seg: 0 },
                (i, _) if i == cols => VertexTag::Segment { ring: 0, seg: 1 },
                (_, j) if j == rows => VertexTag::Segment { ring: 0, seg: 2 },
                (0, _) => VertexTag::Segment { ring: 0, seg: 3 },
                _ => VertexTag::Interior,
            };
            tags.push(tag);
        }
    }
    let mut tris = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            tris.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            tris.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let ring = vec![at(0, 0), at(cols, 0), at(cols, rows), at(0, rows)];
    TriMesh::from_triangles(&pos, &tags, &tris, vec![ring], r).expect("lattice is a valid mesh")
}

/// Workspace of [`lattice_mesh`].
pub fn lattice_workspace(cols: usize, rows: usize, scale: f64, r: f64) -> Workspace {
    let mesh = lattice_mesh(cols, rows, scale, r);
    Workspace::new(mesh.rings()[0].clone(), vec![], r).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_build() {
        for name in SYNTHETIC {
            let w = synthetic(name, 0.5).unwrap();
            assert!(w.area() > 0.0, "{name}");
        }
        assert!((square(1.0).area() - 1600.0).abs() < 1e-9);
        assert!((l_shape(2.0).area() - 4.0 * 1728.0).abs() < 1e-6);
        assert!(synthetic("nope", 1.0).is_none());
    }

    #[test]
    fn lattice_cells_are_valid() {
        let m = lattice_mesh(4, 3, 1.1, 0.5);
        m.audit().unwrap();
        assert_eq!(m.num_faces(), 24);
        let g = crate::pebble_graph::PebbleGraph::extract(&m);
        assert_eq!(g.num_cells(), 24);
        assert!(g.is_connected());
        assert!((lattice_workspace(4, 3, 1.1, 0.5).area() - m.total_area()).abs() < 1e-9 * m.total_area());
    }
}
