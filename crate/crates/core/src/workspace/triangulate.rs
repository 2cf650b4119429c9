//! Initial boundary-conforming triangulation and the clipped regular lattice
//! used as a coverage baseline.

use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{Workspace, WorkspaceError};
use crate::geometry::{flip_residual, point_in_polygon, segments_intersect, triangle_area, Vec2};
use crate::trimesh::{TriMesh, VertexTag};

const RELAX_ITERS: usize = 60;
const RELAX_STEP: f64 = 0.2;
const FORCE_SCALE: f64 = 1.2;
/// Interior points closer than this fraction of the target edge to the
/// boundary are not created or moved there.
const BOUNDARY_MARGIN: f64 = 0.45;

/// Boundary-conforming triangulation with edges close to `target_edge`.
///
/// Boundary segments are subdivided uniformly, the interior is seeded with a
/// triangular lattice, and the interior points are relaxed with a
/// repulsive spring model re-triangulated by constrained Delaunay each step.
pub fn initial_triangulation(w: &Workspace, target_edge: f64) -> Result<TriMesh, WorkspaceError> {
    if !(target_edge > 0.0) || !target_edge.is_finite() {
        return Err(WorkspaceError::InvalidTargetEdge(target_edge));
    }
    if !(w.area() > 0.0) {
        return Err(WorkspaceError::ZeroArea);
    }
    let h = target_edge;
    let mut pts: Vec<Vec2> = Vec::new();
    let mut tags: Vec<VertexTag> = Vec::new();
    let mut constraints: Vec<[usize; 2]> = Vec::new();
    for (ri, ring) in w.rings().enumerate() {
        let first = pts.len();
        let n = ring.len();
        for si in 0..n {
            let (a, b) = (ring[si], ring[(si + 1) % n]);
            let k = ((b - a).norm() / h).round().max(1.0) as usize;
            pts.push(a);
            tags.push(VertexTag::Corner { ring: ri, index: si });
            for j in 1..k {
                pts.push(a + (b - a) * (j as f64 / k as f64));
                tags.push(VertexTag::Segment { ring: ri, seg: si });
            }
        }
        let last = pts.len();
        for i in first..last {
            constraints.push([i, if i + 1 == last { first } else { i + 1 }]);
        }
    }
    let fixed = pts.len();

    let bb = w.bounds();
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = ((bb.max.y - bb.min.y) / dy).ceil() as usize + 1;
    let cols = ((bb.max.x - bb.min.x) / h).ceil() as usize + 2;
    for row in 0..rows {
        let y = bb.min.y + dy * (row as f64 + 0.5);
        let shift = if row % 2 == 0 { 0.0 } else { 0.5 * h };
        for col in 0..cols {
            let p = Vec2::new(bb.min.x + shift + h * col as f64, y);
            if w.contains(&p) && w.boundary_distance(&p) >= BOUNDARY_MARGIN * h {
                pts.push(p);
                tags.push(VertexTag::Interior);
            }
        }
    }

    for _ in 0..RELAX_ITERS {
        if pts.len() == fixed {
            break;
        }
        let tris = constrained_delaunay(w, &pts, &constraints)?;
        let mut edges: Vec<(usize, usize)> = tris
            .iter()
            .flat_map(|t| (0..3).map(move |i| (t[i].min(t[(i + 1) % 3]), t[i].max(t[(i + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        if edges.is_empty() {
            break;
        }
        let mean_sq = edges.iter().map(|&(a, b)| (pts[a] - pts[b]).norm_squared()).sum::<f64>() / edges.len() as f64;
        let rest = FORCE_SCALE * mean_sq.sqrt().max(h);
        let mut force = vec![Vec2::zeros(); pts.len()];
        for &(a, b) in &edges {
            let d = pts[a] - pts[b];
            let len = d.norm();
            if len <= 0.0 {
                continue;
            }
            let f = d * ((rest - len).max(0.0) / len);
            force[a] += f;
            force[b] -= f;
        }
        for i in fixed..pts.len() {
            let cand = pts[i] + force[i] * RELAX_STEP;
            if w.contains(&cand) && w.boundary_distance(&cand) >= BOUNDARY_MARGIN * h * 0.5 {
                pts[i] = cand;
            }
        }
    }

    let tris = constrained_delaunay(w, &pts, &constraints)?;
    let mesh = TriMesh::from_triangles(&pts, &tags, &tris, w.ring_list(), w.robot_radius)
        .map_err(|e| WorkspaceError::Triangulation(e.to_string()))?;
    Ok(mesh)
}

/// CCW triangles of the constrained Delaunay triangulation that lie in `w`.
fn constrained_delaunay(
    w: &Workspace,
    pts: &[Vec2],
    constraints: &[[usize; 2]],
) -> Result<Vec<[usize; 3]>, WorkspaceError> {
    let verts: Vec<Point2<f64>> = pts.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut conflict = false;
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(
        verts,
        constraints.to_vec(),
        |_| conflict = true,
    )
    .map_err(|e| WorkspaceError::Triangulation(format!("{e:?}")))?;
    if conflict || cdt.num_vertices() != pts.len() {
        return Err(WorkspaceError::Triangulation("boundary constraints conflict or points coincide".into()));
    }
    let mut tris = Vec::new();
    for f in cdt.inner_faces() {
        let mut t = f.vertices().map(|v| v.fix().index());
        let p = t.map(|i| pts[i]);
        let centroid = (p[0] + p[1] + p[2]) / 3.0;
        // slivers along a ring have their centroid on the boundary
        if triangle_area(&p).abs() <= 1e-12 * w.area() || !w.contains(&centroid) {
            continue;
        }
        if flip_residual(&p) < 0.0 {
            t.swap(1, 2);
        }
        tris.push(t);
    }
    tris.sort_unstable();
    Ok(tris)
}

/// Regular triangles of a fixed side that fit entirely inside a workspace.
#[derive(Debug, Clone)]
pub struct LatticeBaseline {
    pub triangles: Vec<[Vec2; 3]>,
    pub coverage: f64,
}

/// Clips a regular triangular lattice of the given side to `w`, keeping only
/// triangles fully inside. The best of a small grid of lattice offsets is
/// returned.
pub fn lattice_baseline(w: &Workspace, side: f64) -> LatticeBaseline {
    const OFFSETS: usize = 4;
    let mut best = LatticeBaseline { triangles: Vec::new(), coverage: 0.0 };
    for ox in 0..OFFSETS {
        for oy in 0..OFFSETS {
            let off = Vec2::new(side * ox as f64 / OFFSETS as f64, side * 0.866 * oy as f64 / OFFSETS as f64);
            let tris = lattice_triangles(w, side, off);
            let area: f64 = tris.iter().map(triangle_area).sum();
            let coverage = area / w.area();
            if coverage > best.coverage {
                best = LatticeBaseline { triangles: tris, coverage };
            }
        }
    }
    best
}

fn lattice_triangles(w: &Workspace, side: f64, offset: Vec2) -> Vec<[Vec2; 3]> {
    let bb = w.bounds();
    let dy = side * 3f64.sqrt() / 2.0;
    let origin = bb.min - Vec2::new(side, dy) + offset;
    let rows = ((bb.max.y - origin.y) / dy).ceil() as i64 + 1;
    let cols = ((bb.max.x - origin.x) / side).ceil() as i64 + 2;
    let node = |i: i64, j: i64| origin + Vec2::new(side * (i as f64 + 0.5 * (j.rem_euclid(2)) as f64), dy * j as f64);
    let segs = w.segments();
    let inside = |t: &[Vec2; 3]| {
        t.iter().all(|p| w.contains(p))
            && !segs.iter().any(|(_, _, a, b)| (0..3).any(|k| segments_intersect(a, b, &t[k], &t[(k + 1) % 3])))
            && !w.rings().flatten().any(|q| point_in_polygon(q, t))
    };
    let mut out = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            let (a, b) = (node(i, j), node(i + 1, j));
            // the row above is shifted right by half a side on odd rows
            let (c, d) = if j.rem_euclid(2) == 0 { (node(i, j + 1), node(i - 1, j + 1)) } else { (node(i + 1, j + 1), node(i, j + 1)) };
            for t in [[a, b, c], [a, c, d]] {
                let t = if flip_residual(&t) < 0.0 { [t[0], t[2], t[1]] } else { t };
                if inside(&t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(s: f64) -> Vec<Vec2> {
        vec![Vec2::new(0., 0.), Vec2::new(s, 0.), Vec2::new(s, s), Vec2::new(0., s)]
    }

    #[test]
    fn unit_square_area_oracle() {
        let ws = Workspace::new(square(1.0), vec![], 0.05).unwrap();
        let mesh = initial_triangulation(&ws, 0.5).unwrap();
        assert!(mesh.num_faces() >= 4);
        mesh.audit().unwrap();
        let area: f64 = mesh.face_ids().map(|f| triangle_area(&mesh.face_positions(f))).sum();
        assert!((area - ws.area()).abs() <= 1e-9 * ws.area());
        assert!(mesh.face_ids().all(|f| flip_residual(&mesh.face_positions(f)) > 0.0));
    }

    #[test]
    fn single_triangle_workspace() {
        let tri = vec![Vec2::new(0., 0.), Vec2::new(1., 0.), Vec2::new(0.5, 3f64.sqrt() / 2.0)];
        let ws = Workspace::new(tri, vec![], 0.01).unwrap();
        let mesh = initial_triangulation(&ws, 1.0).unwrap();
        assert_eq!(mesh.num_faces(), 1);
        assert_eq!(mesh.num_vertices(), 3);
    }

    #[test]
    fn hole_is_not_covered() {
        let hole = vec![Vec2::new(2., 2.), Vec2::new(2., 3.), Vec2::new(3., 3.), Vec2::new(3., 2.)];
        let ws = Workspace::new(square(5.0), vec![hole.clone()], 0.05).unwrap();
        let mesh = initial_triangulation(&ws, 0.7).unwrap();
        mesh.audit().unwrap();
        // sample each cell with barycentric points; none may fall inside the hole
        for f in mesh.face_ids() {
            let p = mesh.face_positions(f);
            for i in 1..10 {
                for j in 1..(10 - i) {
                    let (a, b) = (i as f64 / 10.0, j as f64 / 10.0);
                    let q = p[0] * (1.0 - a - b) + p[1] * a + p[2] * b;
                    assert!(!point_in_polygon(&q, &hole), "cell {f} overlaps the hole");
                }
            }
        }
        let area: f64 = mesh.face_ids().map(|f| mesh.face_area(f)).sum();
        assert!((area - ws.area()).abs() <= 1e-9 * ws.area());
    }

    #[test]
    fn lattice_triangles_lie_inside() {
        let ws = Workspace::new(square(10.0), vec![], 0.05).unwrap();
        let base = lattice_baseline(&ws, 1.0);
        assert!(base.coverage > 0.7 && base.coverage < 1.0);
        for t in &base.triangles {
            assert!((triangle_area(t) - 3f64.sqrt() / 4.0).abs() < 1e-9);
        }
    }
}
