//! Workspace geometry: ingestion, initial triangulation and output files.

mod export;
mod svg;
mod textmesh;
mod triangulate;

pub use export::{
    export_schedule, export_svg, load_schedule, read_json, render_svg, write_json, write_text, Embedding,
};
pub use svg::{load_workspace, parse_svg_workspace};
pub use textmesh::{load_text_mesh, parse_text_mesh};
pub use triangulate::{initial_triangulation, lattice_baseline, LatticeBaseline};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    point_in_polygon, point_segment_distance, polygon_signed_area, segments_intersect, Vec2,
};

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("open path in element #{element}: workspace boundaries must be closed")]
    OpenPath { element: usize },
    #[error("curved path command '{command}' is not supported; flatten curves first")]
    CurvedPrimitive { command: char },
    #[error("no closed path found")]
    NoClosedPath,
    #[error("ring {ring} has fewer than 3 distinct vertices")]
    TooFewVertices { ring: usize },
    #[error("ring {ring}: segment {first} crosses segment {second}")]
    SelfIntersecting {
        ring: usize,
        first: usize,
        second: usize,
    },
    #[error("segment {seg_a} of ring {ring_a} crosses segment {seg_b} of ring {ring_b}")]
    RingsCross {
        ring_a: usize,
        seg_a: usize,
        ring_b: usize,
        seg_b: usize,
    },
    #[error("hole ring {ring} is not inside the outer boundary or is nested in another hole")]
    HoleOutside { ring: usize },
    #[error("workspace has zero area")]
    ZeroArea,
    #[error("robot radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("target edge length must be positive, got {0}")]
    InvalidTargetEdge(f64),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A polygonal region with holes. The outer ring is CCW, holes are CW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub outer: Vec<Vec2>,
    pub holes: Vec<Vec<Vec2>>,
    pub robot_radius: f64,
}

impl Workspace {
    /// Validates the rings and normalizes their orientation.
    pub fn new(outer: Vec<Vec2>, holes: Vec<Vec<Vec2>>, robot_radius: f64) -> Result<Self, WorkspaceError> {
        if !(robot_radius > 0.0) || !robot_radius.is_finite() {
            return Err(WorkspaceError::InvalidRadius(robot_radius));
        }
        let mut rings: Vec<Vec<Vec2>> = std::iter::once(outer).chain(holes).collect();
        for (i, ring) in rings.iter_mut().enumerate() {
            dedup_ring(ring);
            if ring.len() < 3 {
                return Err(WorkspaceError::TooFewVertices { ring: i });
            }
            if let Some((first, second)) = self_intersection(ring) {
                return Err(WorkspaceError::SelfIntersecting { ring: i, first, second });
            }
            let area = polygon_signed_area(ring);
            if area.abs() <= f64::EPSILON * bbox_diag2(ring) {
                return Err(WorkspaceError::ZeroArea);
            }
            let want_ccw = i == 0;
            if (area > 0.0) != want_ccw {
                ring.reverse();
            }
        }
        for a in 0..rings.len() {
            for b in a + 1..rings.len() {
                if let Some((sa, sb)) = rings_cross(&rings[a], &rings[b]) {
                    return Err(WorkspaceError::RingsCross { ring_a: a, seg_a: sa, ring_b: b, seg_b: sb });
                }
            }
        }
        for h in 1..rings.len() {
            if !point_in_polygon(&rings[h][0], &rings[0]) {
                return Err(WorkspaceError::HoleOutside { ring: h });
            }
            for o in 1..rings.len() {
                if o != h && point_in_polygon(&rings[h][0], &rings[o]) {
                    return Err(WorkspaceError::HoleOutside { ring: h });
                }
            }
        }
        let outer = rings.remove(0);
        let ws = Self { outer, holes: rings, robot_radius };
        if ws.area() <= 0.0 {
            return Err(WorkspaceError::ZeroArea);
        }
        Ok(ws)
    }

    /// Builds the workspace with the outer ring picked as the ring of
    /// largest area.
    pub fn from_rings(mut rings: Vec<Vec<Vec2>>, robot_radius: f64) -> Result<Self, WorkspaceError> {
        if rings.is_empty() {
            return Err(WorkspaceError::NoClosedPath);
        }
        let outer_idx = rings
            .iter()
            .enumerate()
            .max_by(|a, b| polygon_signed_area(a.1).abs().total_cmp(&polygon_signed_area(b.1).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let outer = rings.remove(outer_idx);
        Self::new(outer, rings, robot_radius)
    }

    /// Outer ring first, then holes.
    pub fn rings(&self) -> impl Iterator<Item = &[Vec2]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn ring_list(&self) -> Vec<Vec<Vec2>> {
        self.rings().map(|r| r.to_vec()).collect()
    }

    pub fn area(&self) -> f64 {
        polygon_signed_area(&self.outer) - self.holes.iter().map(|h| polygon_signed_area(h).abs()).sum::<f64>()
    }

    /// All boundary segments as `(ring, index, start, end)`.
    pub fn segments(&self) -> Vec<(usize, usize, Vec2, Vec2)> {
        let mut out = Vec::new();
        for (ri, ring) in self.rings().enumerate() {
            let n = ring.len();
            for i in 0..n {
                out.push((ri, i, ring[i], ring[(i + 1) % n]));
            }
        }
        out
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        point_in_polygon(p, &self.outer) && !self.holes.iter().any(|h| point_in_polygon(p, h))
    }

    pub fn boundary_distance(&self, p: &Vec2) -> f64 {
        self.segments()
            .iter()
            .map(|(_, _, a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounds(&self) -> crate::geometry::Aabb {
        crate::geometry::Aabb::from_points(self.outer.iter())
    }
}

fn dedup_ring(ring: &mut Vec<Vec2>) {
    ring.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
}

fn bbox_diag2(ring: &[Vec2]) -> f64 {
    let b = crate::geometry::Aabb::from_points(ring.iter());
    (b.max - b.min).norm_squared()
}

/// First pair of segments of a closed ring that touch anywhere other than a
/// shared endpoint.
pub(crate) fn self_intersection(ring: &[Vec2]) -> Option<(usize, usize)> {
    let n = ring.len();
    let seg = |i: usize| (ring[i], ring[(i + 1) % n]);
    for i in 0..n {
        for j in i + 1..n {
            let ((a, b), (c, d)) = (seg(i), seg(j));
            let (shared, p, q) = if j == i + 1 {
                (b, a, d)
            } else if i == 0 && j == n - 1 {
                (a, b, c)
            } else {
                if segments_intersect(&a, &b, &c, &d) {
                    return Some((i, j));
                }
                continue;
            };
            // adjacent segments overlap only if the ring folds back on itself
            let (u, v) = (p - shared, q - shared);
            if crate::geometry::cross(&u, &v) == 0.0 && u.dot(&v) > 0.0 {
                return Some((i, j));
            }
        }
    }
    None
}

fn rings_cross(a: &[Vec2], b: &[Vec2]) -> Option<(usize, usize)> {
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segments_intersect(&a[i], &a[(i + 1) % a.len()], &b[j], &b[(j + 1) % b.len()]) {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Vec2> {
        vec![
            Vec2::new(x0, y0),
            Vec2::new(x0 + s, y0),
            Vec2::new(x0 + s, y0 + s),
            Vec2::new(x0, y0 + s),
        ]
    }

    #[test]
    fn hole_orientation_is_normalized() {
        let ws = Workspace::new(square(0., 0., 4.), vec![square(1., 1., 1.)], 0.05).unwrap();
        assert!(polygon_signed_area(&ws.outer) > 0.0);
        assert!(polygon_signed_area(&ws.holes[0]) < 0.0);
        assert!((ws.area() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn bowtie_names_crossing_segments() {
        let ring = vec![Vec2::new(0., 0.), Vec2::new(1., 1.), Vec2::new(1., 0.), Vec2::new(0., 1.)];
        // brute-force oracle over all non-adjacent segment pairs
        let n = ring.len();
        let mut expected = None;
        'outer: for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if segments_intersect(&ring[i], &ring[(i + 1) % n], &ring[j], &ring[(j + 1) % n]) {
                    expected = Some((i, j));
                    break 'outer;
                }
            }
        }
        match Workspace::new(ring, vec![], 0.1) {
            Err(WorkspaceError::SelfIntersecting { ring: 0, first, second }) => {
                assert_eq!(Some((first, second)), expected)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hole_outside_rejected() {
        let err = Workspace::new(square(0., 0., 1.), vec![square(5., 5., 1.)], 0.1).unwrap_err();
        assert!(matches!(err, WorkspaceError::HoleOutside { ring: 1 }));
    }

    #[test]
    fn nonpositive_radius_rejected() {
        assert!(matches!(
            Workspace::new(square(0., 0., 1.), vec![], 0.0),
            Err(WorkspaceError::InvalidRadius(_))
        ));
    }
}
