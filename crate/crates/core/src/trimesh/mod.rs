//! Editable half-edge triangle mesh with flip, split, collapse and smooth.
//!
//! Half-edges are allocated in pairs so that the twin of `h` is `h ^ 1` and
//! the undirected edge id is `h / 2`. Removed elements are tombstoned rather
//! than compacted, which keeps ids stable across edits; iteration is always
//! in ascending id order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{flip_residual, is_degenerate, triangle_area, Vec2};

pub type VertexId = usize;
pub type FaceId = usize;
pub type EdgeId = usize;
pub type HalfEdgeId = usize;

const NONE: usize = usize::MAX;

/// How a vertex is tied to the workspace boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexTag {
    Interior,
    /// A polygon vertex of boundary ring `ring`. Never moves, never removed.
    Corner { ring: usize, index: usize },
    /// A vertex on the open segment `seg` of boundary ring `ring`.
    Segment { ring: usize, seg: usize },
}

impl VertexTag {
    pub fn is_boundary(&self) -> bool {
        !matches!(self, VertexTag::Interior)
    }

    fn rank(&self) -> u8 {
        match self {
            VertexTag::Interior => 0,
            VertexTag::Segment { .. } => 1,
            VertexTag::Corner { .. } => 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangle {face} references missing vertex {vertex}")]
    BadIndex { face: usize, vertex: usize },
    #[error("triangle {0} is not counter-clockwise")]
    NotCcw(usize),
    #[error("edge ({0}, {1}) is used twice in the same direction")]
    NonManifold(usize, usize),
    #[error("malformed mesh text: {0}")]
    Parse(String),
    #[error("mesh audit failed: {0}")]
    Audit(String),
}

/// Why an operator refused to modify the mesh.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    #[error("element no longer exists")]
    Dead,
    #[error("operation not allowed on a boundary edge")]
    BoundaryEdge,
    #[error("result would duplicate an existing edge")]
    DuplicateEdge,
    #[error("result would contain a flipped or degenerate cell")]
    WouldFlip,
    #[error("link condition violated")]
    LinkCondition,
    #[error("operation would change the boundary")]
    BoundaryViolation,
    #[error("vertex is pinned")]
    Pinned,
}

#[derive(Debug, Clone, PartialEq)]
struct Vertex {
    pos: Vec2,
    tag: VertexTag,
    out: usize,
    alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct HalfEdge {
    origin: VertexId,
    next: HalfEdgeId,
    face: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Face {
    he: HalfEdgeId,
    alive: bool,
}

/// Which endpoint position survives an edge collapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollapseTo {
    First,
    Second,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    verts: Vec<Vertex>,
    hes: Vec<HalfEdge>,
    edge_alive: Vec<bool>,
    faces: Vec<Face>,
    directed: HashMap<(VertexId, VertexId), HalfEdgeId>,
    rings: Vec<Vec<Vec2>>,
    radius: f64,
}

impl TriMesh {
    /// Builds a mesh from CCW triangles. `rings` are the workspace boundary
    /// rings that the `Corner`/`Segment` tags refer to.
    pub fn from_triangles(
        positions: &[Vec2],
        tags: &[VertexTag],
        triangles: &[[VertexId; 3]],
        rings: Vec<Vec<Vec2>>,
        radius: f64,
    ) -> Result<Self, MeshError> {
        let mut mesh = TriMesh {
            verts: positions
                .iter()
                .zip(tags)
                .map(|(p, t)| Vertex { pos: *p, tag: *t, out: NONE, alive: true })
                .collect(),
            hes: Vec::new(),
            edge_alive: Vec::new(),
            faces: Vec::new(),
            directed: HashMap::new(),
            rings,
            radius,
        };
        for (fi, t) in triangles.iter().enumerate() {
            for &v in t {
                if v >= positions.len() {
                    return Err(MeshError::BadIndex { face: fi, vertex: v });
                }
            }
            let p = [positions[t[0]], positions[t[1]], positions[t[2]]];
            if flip_residual(&p) <= 0.0 {
                return Err(MeshError::NotCcw(fi));
            }
            for i in 0..3 {
                let (u, v) = (t[i], t[(i + 1) % 3]);
                if let Some(&h) = mesh.directed.get(&(u, v)) {
                    if mesh.hes[h].face != NONE {
                        return Err(MeshError::NonManifold(u, v));
                    }
                }
            }
            mesh.add_face(*t);
        }
        // vertices not referenced by any triangle are dropped
        for v in mesh.verts.iter_mut() {
            if v.out == NONE {
                v.alive = false;
            }
        }
        Ok(mesh)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rings(&self) -> &[Vec<Vec2>] {
        &self.rings
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.verts.len()).filter(|&v| self.verts[v].alive)
    }

    pub fn face_ids(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.faces.len()).filter(|&f| self.faces[f].alive)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_alive.len()).filter(|&e| self.edge_alive[e])
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_ids().count()
    }

    pub fn num_faces(&self) -> usize {
        self.face_ids().count()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_ids().count()
    }

    /// Upper bound (exclusive) on face ids ever allocated.
    pub fn face_capacity(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_capacity(&self) -> usize {
        self.verts.len()
    }

    pub fn is_vertex_alive(&self, v: VertexId) -> bool {
        v < self.verts.len() && self.verts[v].alive
    }

    pub fn is_face_alive(&self, f: FaceId) -> bool {
        f < self.faces.len() && self.faces[f].alive
    }

    pub fn is_edge_alive(&self, e: EdgeId) -> bool {
        e < self.edge_alive.len() && self.edge_alive[e]
    }

    pub fn position(&self, v: VertexId) -> Vec2 {
        self.verts[v].pos
    }

    pub fn tag(&self, v: VertexId) -> VertexTag {
        self.verts[v].tag
    }

    pub fn face_vertices(&self, f: FaceId) -> [VertexId; 3] {
        let h0 = self.faces[f].he;
        let h1 = self.hes[h0].next;
        let h2 = self.hes[h1].next;
        [self.hes[h0].origin, self.hes[h1].origin, self.hes[h2].origin]
    }

    pub fn face_positions(&self, f: FaceId) -> [Vec2; 3] {
        self.face_vertices(f).map(|v| self.verts[v].pos)
    }

    pub fn face_area(&self, f: FaceId) -> f64 {
        triangle_area(&self.face_positions(f))
    }

    pub fn total_area(&self) -> f64 {
        self.face_ids().map(|f| self.face_area(f)).sum()
    }

    pub fn edge_endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        (self.hes[2 * e].origin, self.hes[2 * e + 1].origin)
    }

    pub fn edge_length(&self, e: EdgeId) -> f64 {
        let (a, b) = self.edge_endpoints(e);
        (self.verts[a].pos - self.verts[b].pos).norm()
    }

    /// Faces on the left of `a -> b` and of `b -> a`.
    pub fn edge_faces(&self, e: EdgeId) -> (Option<FaceId>, Option<FaceId>) {
        let f = |h: usize| (self.hes[h].face != NONE).then_some(self.hes[h].face);
        (f(2 * e), f(2 * e + 1))
    }

    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        let (a, b) = self.edge_faces(e);
        a.is_none() || b.is_none()
    }

    pub fn find_edge(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.directed.get(&(u, v)).map(|h| h / 2)
    }

    /// Edge ids of the three sides `(v0,v1)`, `(v1,v2)`, `(v2,v0)` of `f`.
    pub fn face_edges(&self, f: FaceId) -> [EdgeId; 3] {
        let h0 = self.faces[f].he;
        let h1 = self.hes[h0].next;
        let h2 = self.hes[h1].next;
        [h0 / 2, h1 / 2, h2 / 2]
    }

    /// Neighbouring face across each side of `f`, in `face_edges` order.
    pub fn face_neighbors(&self, f: FaceId) -> [Option<FaceId>; 3] {
        let h0 = self.faces[f].he;
        let h1 = self.hes[h0].next;
        let h2 = self.hes[h1].next;
        [h0, h1, h2].map(|h| {
            let t = self.hes[h ^ 1].face;
            (t != NONE).then_some(t)
        })
    }

    fn prev(&self, h: HalfEdgeId) -> HalfEdgeId {
        self.hes[self.hes[h].next].next
    }

    /// Outgoing half-edges of `v` that bound a face, in CCW order starting
    /// at a boundary half-edge if `v` is on the boundary.
    fn outgoing(&self, v: VertexId) -> Vec<HalfEdgeId> {
        let start = self.verts[v].out;
        if start == NONE {
            return Vec::new();
        }
        // rewind clockwise to the first face of an open fan
        let mut h = start;
        loop {
            let t = h ^ 1;
            if self.hes[t].face == NONE {
                break;
            }
            let cw = self.hes[t].next;
            if cw == start {
                break;
            }
            h = cw;
        }
        let first = h;
        let mut out = vec![first];
        loop {
            let p = self.prev(h);
            let ccw = p ^ 1;
            if self.hes[ccw].face == NONE || ccw == first {
                break;
            }
            out.push(ccw);
            h = ccw;
        }
        out
    }

    /// Faces around `v` in CCW order.
    pub fn vertex_faces(&self, v: VertexId) -> Vec<FaceId> {
        self.outgoing(v).into_iter().map(|h| self.hes[h].face).collect()
    }

    /// Neighbours of `v` in CCW order.
    pub fn vertex_neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let hs = self.outgoing(v);
        let mut out: Vec<VertexId> = hs.iter().map(|&h| self.hes[h ^ 1].origin).collect();
        if let Some(&last) = hs.last() {
            let p = self.prev(last);
            if self.hes[p ^ 1].face == NONE {
                out.push(self.hes[p].origin);
            }
        }
        out
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.verts[v].tag.is_boundary()
    }

    fn alloc_edge(&mut self, u: VertexId, v: VertexId) -> HalfEdgeId {
        let h = self.hes.len();
        self.hes.push(HalfEdge { origin: u, next: NONE, face: NONE });
        self.hes.push(HalfEdge { origin: v, next: NONE, face: NONE });
        self.edge_alive.push(true);
        self.directed.insert((u, v), h);
        self.directed.insert((v, u), h + 1);
        h
    }

    fn add_face(&mut self, t: [VertexId; 3]) -> FaceId {
        let f = self.faces.len();
        let mut hs = [0; 3];
        for i in 0..3 {
            let (u, v) = (t[i], t[(i + 1) % 3]);
            hs[i] = match self.directed.get(&(u, v)) {
                Some(&h) => h,
                None => self.alloc_edge(u, v),
            };
        }
        for i in 0..3 {
            let h = hs[i];
            debug_assert_eq!(self.hes[h].face, NONE);
            self.hes[h].face = f;
            self.hes[h].next = hs[(i + 1) % 3];
            self.verts[t[i]].out = h;
        }
        self.faces.push(Face { he: hs[0], alive: true });
        f
    }

    fn remove_face(&mut self, f: FaceId) {
        let h0 = self.faces[f].he;
        let hs = [h0, self.hes[h0].next, self.prev(h0)];
        for h in hs {
            self.hes[h].face = NONE;
            self.hes[h].next = NONE;
        }
        for h in hs {
            if self.hes[h ^ 1].face == NONE {
                let e = h / 2;
                self.edge_alive[e] = false;
                let (a, b) = (self.hes[2 * e].origin, self.hes[2 * e + 1].origin);
                self.directed.remove(&(a, b));
                self.directed.remove(&(b, a));
            }
        }
        self.faces[f].alive = false;
    }

    /// Re-points `out` of each vertex in `vs` at a live face half-edge.
    fn repair_out(&mut self, vs: &[VertexId], candidates: &[VertexId]) {
        for &v in vs {
            if !self.verts[v].alive {
                continue;
            }
            let o = self.verts[v].out;
            if o != NONE && self.hes[o].face != NONE && self.hes[o].origin == v {
                continue;
            }
            self.verts[v].out = candidates
                .iter()
                .filter_map(|&w| self.directed.get(&(v, w)).copied())
                .find(|&h| self.hes[h].face != NONE)
                .unwrap_or(NONE);
        }
    }

    fn ccw_ok(p: &[Vec2; 3]) -> bool {
        flip_residual(p) > 0.0 && !is_degenerate(p)
    }

    /// Replaces the two cells adjacent to `e` by the other diagonal.
    /// Returns the new edge id.
    pub fn flip_edge(&mut self, e: EdgeId) -> Result<EdgeId, Rejection> {
        if !self.is_edge_alive(e) {
            return Err(Rejection::Dead);
        }
        let (h, t) = (2 * e, 2 * e + 1);
        let (fa, fb) = (self.hes[h].face, self.hes[t].face);
        if fa == NONE || fb == NONE {
            return Err(Rejection::BoundaryEdge);
        }
        let a = self.hes[h].origin;
        let b = self.hes[t].origin;
        let c = self.hes[self.prev(h)].origin;
        let d = self.hes[self.prev(t)].origin;
        if c == d || self.directed.contains_key(&(c, d)) {
            return Err(Rejection::DuplicateEdge);
        }
        let t1 = [a, d, c];
        let t2 = [d, b, c];
        if !Self::ccw_ok(&t1.map(|v| self.verts[v].pos)) || !Self::ccw_ok(&t2.map(|v| self.verts[v].pos)) {
            return Err(Rejection::WouldFlip);
        }
        self.remove_face(fa);
        self.remove_face(fb);
        self.add_face(t1);
        self.add_face(t2);
        self.repair_out(&[a, b, c, d], &[a, b, c, d]);
        Ok(self.find_edge(c, d).expect("new diagonal"))
    }

    /// Boundary ring/segment that the edge `(a, b)` lies on, if any.
    fn boundary_segment_of(&self, a: VertexId, b: VertexId) -> Option<(usize, usize)> {
        let (ta, tb) = (self.verts[a].tag, self.verts[b].tag);
        let seg_of = |t: VertexTag, other: VertexTag| -> Option<(usize, usize)> {
            match (t, other) {
                (VertexTag::Segment { ring, seg }, VertexTag::Segment { ring: r2, seg: s2 }) => {
                    (ring == r2 && seg == s2).then_some((ring, seg))
                }
                (VertexTag::Segment { ring, seg }, VertexTag::Corner { ring: r2, index }) => {
                    let n = self.rings[ring].len();
                    (ring == r2 && (index == seg || index == (seg + 1) % n)).then_some((ring, seg))
                }
                (VertexTag::Corner { ring, index: i }, VertexTag::Corner { ring: r2, index: j }) => {
                    if ring != r2 {
                        return None;
                    }
                    let n = self.rings[ring].len();
                    if j == (i + 1) % n {
                        Some((ring, i))
                    } else if i == (j + 1) % n {
                        Some((ring, j))
                    } else {
                        None
                    }
                }
                _ => None,
            }
        };
        seg_of(ta, tb).or_else(|| seg_of(tb, ta))
    }

    fn project_to_segment(&self, ring: usize, seg: usize, p: &Vec2) -> Vec2 {
        let r = &self.rings[ring];
        let (a, b) = (r[seg], r[(seg + 1) % r.len()]);
        let ab = b - a;
        let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
        a + ab * t
    }

    /// Inserts the midpoint of `e`. Returns the new vertex.
    pub fn split_edge(&mut self, e: EdgeId) -> Result<VertexId, Rejection> {
        if !self.is_edge_alive(e) {
            return Err(Rejection::Dead);
        }
        let (h, t) = (2 * e, 2 * e + 1);
        let a = self.hes[h].origin;
        let b = self.hes[t].origin;
        let mut m = (self.verts[a].pos + self.verts[b].pos) * 0.5;
        let boundary = self.hes[h].face == NONE || self.hes[t].face == NONE;
        let tag = if boundary {
            let (ring, seg) = self.boundary_segment_of(a, b).ok_or(Rejection::BoundaryViolation)?;
            m = self.project_to_segment(ring, seg, &m);
            VertexTag::Segment { ring, seg }
        } else {
            VertexTag::Interior
        };
        let mid = self.verts.len();
        let mut new_tris = Vec::new();
        let mut old = Vec::new();
        for (hh, u, v) in [(h, a, b), (t, b, a)] {
            let f = self.hes[hh].face;
            if f == NONE {
                continue;
            }
            let c = self.hes[self.prev(hh)].origin;
            new_tris.push([u, mid, c]);
            new_tris.push([mid, v, c]);
            old.push(f);
        }
        let pos = |v: VertexId| if v == mid { m } else { self.verts[v].pos };
        if !new_tris.iter().all(|t| Self::ccw_ok(&t.map(pos))) {
            return Err(Rejection::WouldFlip);
        }
        self.verts.push(Vertex { pos: m, tag, out: NONE, alive: true });
        for f in old {
            self.remove_face(f);
        }
        let mut touched = vec![a, b, mid];
        for t in &new_tris {
            self.add_face(*t);
            touched.push(t[2]);
        }
        self.repair_out(&touched, &touched);
        Ok(mid)
    }

    /// Survivor, removed vertex and merged position for a collapse, or the
    /// reason it is not allowed by the boundary rules.
    fn collapse_plan(&self, e: EdgeId, to: CollapseTo) -> Result<(VertexId, VertexId, Vec2, VertexTag), Rejection> {
        let (a, b) = self.edge_endpoints(e);
        let (ta, tb) = (self.verts[a].tag, self.verts[b].tag);
        let (pa, pb) = (self.verts[a].pos, self.verts[b].pos);
        let on_boundary = self.is_boundary_edge(e);
        match (ta.is_boundary(), tb.is_boundary()) {
            (false, false) => Ok(match to {
                CollapseTo::First => (a, b, pa, ta),
                CollapseTo::Second => (b, a, pb, tb),
                CollapseTo::Midpoint => (a, b, (pa + pb) * 0.5, ta),
            }),
            (true, false) => Ok((a, b, pa, ta)),
            (false, true) => Ok((b, a, pb, tb)),
            (true, true) => {
                if !on_boundary {
                    return Err(Rejection::BoundaryViolation);
                }
                match (ta.rank(), tb.rank()) {
                    (2, 2) => Err(Rejection::Pinned),
                    (2, _) => Ok((a, b, pa, ta)),
                    (_, 2) => Ok((b, a, pb, tb)),
                    _ => Ok(match to {
                        CollapseTo::First => (a, b, pa, ta),
                        CollapseTo::Second => (b, a, pb, tb),
                        CollapseTo::Midpoint => (a, b, (pa + pb) * 0.5, ta),
                    }),
                }
            }
        }
    }

    /// Contracts `e`, removing one endpoint. Returns the surviving vertex.
    pub fn collapse_edge(&mut self, e: EdgeId, to: CollapseTo) -> Result<VertexId, Rejection> {
        if !self.is_edge_alive(e) {
            return Err(Rejection::Dead);
        }
        let (keep, gone, p, tag) = self.collapse_plan(e, to)?;
        // link condition: common neighbours are exactly the apexes of the edge's cells
        let nk = self.vertex_neighbors(keep);
        let ng = self.vertex_neighbors(gone);
        let mut apex: Vec<VertexId> = Vec::new();
        for h in [2 * e, 2 * e + 1] {
            if self.hes[h].face != NONE {
                apex.push(self.hes[self.prev(h)].origin);
            }
        }
        let mut common: Vec<VertexId> = nk.iter().copied().filter(|v| ng.contains(v)).collect();
        common.sort_unstable();
        common.dedup();
        let mut apex_sorted = apex.clone();
        apex_sorted.sort_unstable();
        if common != apex_sorted {
            return Err(Rejection::LinkCondition);
        }
        // a hole or outer ring keeps at least 3 boundary vertices via its corners;
        // additionally the result must keep at least one face
        let gone_faces = self.vertex_faces(gone);
        let keep_faces = self.vertex_faces(keep);
        let new_tris: Vec<[VertexId; 3]> = gone_faces
            .iter()
            .map(|&f| self.face_vertices(f))
            .filter(|t| !t.contains(&keep))
            .map(|t| t.map(|v| if v == gone { keep } else { v }))
            .collect();
        let moved: Vec<[VertexId; 3]> = keep_faces
            .iter()
            .map(|&f| self.face_vertices(f))
            .filter(|t| !t.contains(&gone))
            .collect();
        let pos = |v: VertexId| if v == keep || v == gone { p } else { self.verts[v].pos };
        if !new_tris.iter().chain(moved.iter()).all(|t| Self::ccw_ok(&t.map(pos))) {
            return Err(Rejection::WouldFlip);
        }
        if new_tris.is_empty() && moved.is_empty() {
            return Err(Rejection::LinkCondition);
        }
        // apex vertices must keep at least one cell
        for &c in &apex {
            let remaining = self
                .vertex_faces(c)
                .into_iter()
                .filter(|&f| {
                    let t = self.face_vertices(f);
                    !(t.contains(&keep) && t.contains(&gone))
                })
                .count();
            if remaining == 0 {
                return Err(Rejection::LinkCondition);
            }
        }
        // boundary apex of a boundary collapse must not become a pinch point
        if self.is_boundary_edge(e) {
            for &c in &apex {
                if self.verts[c].tag.is_boundary() && self.find_edge(keep, c).is_some() {
                    let ek = self.find_edge(keep, c).unwrap();
                    let eg = self.find_edge(gone, c).unwrap();
                    if self.is_boundary_edge(ek) && self.is_boundary_edge(eg) {
                        return Err(Rejection::BoundaryViolation);
                    }
                }
            }
        }
        let mut touched: Vec<VertexId> = nk.iter().chain(ng.iter()).copied().collect();
        touched.push(keep);
        for f in gone_faces {
            self.remove_face(f);
        }
        self.verts[keep].pos = p;
        if tag.rank() > self.verts[keep].tag.rank() {
            self.verts[keep].tag = tag;
        }
        self.verts[gone].alive = false;
        self.verts[gone].out = NONE;
        for t in new_tris {
            self.add_face(t);
        }
        touched.retain(|&v| v != gone);
        self.repair_out(&touched, &touched);
        Ok(keep)
    }

    /// Moves `v` to `target`, sliding boundary vertices along their segment.
    pub fn smooth_vertex(&mut self, v: VertexId, target: Vec2) -> Result<Vec2, Rejection> {
        if !self.is_vertex_alive(v) {
            return Err(Rejection::Dead);
        }
        let p = match self.verts[v].tag {
            VertexTag::Corner { .. } => return Err(Rejection::Pinned),
            VertexTag::Segment { ring, seg } => self.project_to_segment(ring, seg, &target),
            VertexTag::Interior => target,
        };
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Rejection::WouldFlip);
        }
        for f in self.vertex_faces(v) {
            let t = self.face_vertices(f);
            let q = t.map(|u| if u == v { p } else { self.verts[u].pos });
            if !Self::ccw_ok(&q) {
                return Err(Rejection::WouldFlip);
            }
        }
        self.verts[v].pos = p;
        Ok(p)
    }

    /// Position that `v` may legally occupy given its tag (projection only,
    /// no orientation check).
    pub fn constrain_position(&self, v: VertexId, target: Vec2) -> Vec2 {
        match self.verts[v].tag {
            VertexTag::Corner { .. } => self.verts[v].pos,
            VertexTag::Segment { ring, seg } => self.project_to_segment(ring, seg, &target),
            VertexTag::Interior => target,
        }
    }

    /// Direction and endpoints of the segment a boundary vertex slides on.
    pub fn slide_segment(&self, v: VertexId) -> Option<(Vec2, Vec2)> {
        match self.verts[v].tag {
            VertexTag::Segment { ring, seg } => {
                let r = &self.rings[ring];
                Some((r[seg], r[(seg + 1) % r.len()]))
            }
            _ => None,
        }
    }

    /// Sets positions without checks; used by the optimizer after it has
    /// verified the result itself.
    pub(crate) fn set_position_unchecked(&mut self, v: VertexId, p: Vec2) {
        self.verts[v].pos = p;
    }

    /// Full structural and geometric consistency check.
    pub fn audit(&self) -> Result<(), MeshError> {
        let err = |s: String| Err(MeshError::Audit(s));
        for f in self.face_ids() {
            let h0 = self.faces[f].he;
            let mut h = h0;
            for _ in 0..3 {
                if self.hes[h].face != f {
                    return err(format!("half-edge {h} does not point back to face {f}"));
                }
                if !self.edge_alive[h / 2] {
                    return err(format!("face {f} uses dead edge {}", h / 2));
                }
                h = self.hes[h].next;
            }
            if h != h0 {
                return err(format!("face {f} is not a 3-cycle"));
            }
            let p = self.face_positions(f);
            if flip_residual(&p) <= 0.0 {
                return err(format!("face {f} is not counter-clockwise"));
            }
            for v in self.face_vertices(f) {
                if !self.verts[v].alive {
                    return err(format!("face {f} uses dead vertex {v}"));
                }
            }
        }
        for e in self.edge_ids() {
            let (h, t) = (2 * e, 2 * e + 1);
            if self.hes[h].face == NONE && self.hes[t].face == NONE {
                return err(format!("edge {e} has no faces"));
            }
            let (a, b) = (self.hes[h].origin, self.hes[t].origin);
            if self.directed.get(&(a, b)) != Some(&h) || self.directed.get(&(b, a)) != Some(&t) {
                return err(format!("edge {e} missing from the lookup table"));
            }
            if (self.hes[h].face == NONE || self.hes[t].face == NONE)
                && self.boundary_segment_of(a, b).is_none()
            {
                return err(format!("boundary edge {e} ({a},{b}) does not lie on a workspace segment"));
            }
        }
        if self.directed.len() != 2 * self.num_edges() {
            return err("stale entries in the lookup table".into());
        }
        let tol = 1e-9 * self.radius;
        for v in self.vertex_ids() {
            let o = self.verts[v].out;
            if o == NONE || self.hes[o].origin != v || self.hes[o].face == NONE {
                return err(format!("vertex {v} has no valid outgoing half-edge"));
            }
            let p = self.verts[v].pos;
            match self.verts[v].tag {
                VertexTag::Corner { ring, index } => {
                    if (self.rings[ring][index] - p).norm() > tol {
                        return err(format!("corner vertex {v} moved"));
                    }
                }
                VertexTag::Segment { ring, seg } => {
                    if (self.project_to_segment(ring, seg, &p) - p).norm() > tol {
                        return err(format!("boundary vertex {v} left its segment"));
                    }
                }
                VertexTag::Interior => {}
            }
            // the fan around a vertex must be a single disc or half-disc
            let fan = self.vertex_faces(v).len();
            let incident = self
                .face_ids()
                .filter(|&f| self.face_vertices(f).contains(&v))
                .count();
            if fan != incident {
                return err(format!("vertex {v} is non-manifold ({fan} of {incident} faces reachable)"));
            }
        }
        Ok(())
    }

    /// Text dump: `V F`, then `x y` lines, then `i j k` lines, with ids
    /// compacted in ascending order.
    pub fn to_text(&self) -> String {
        let mut remap = vec![NONE; self.verts.len()];
        let mut out = String::new();
        let vs: Vec<VertexId> = self.vertex_ids().collect();
        for (i, &v) in vs.iter().enumerate() {
            remap[v] = i;
        }
        out.push_str(&format!("{} {}\n", vs.len(), self.num_faces()));
        for &v in &vs {
            let p = self.verts[v].pos;
            out.push_str(&format!("{} {}\n", p.x, p.y));
        }
        for f in self.face_ids() {
            let t = self.face_vertices(f);
            out.push_str(&format!("{} {} {}\n", remap[t[0]], remap[t[1]], remap[t[2]]));
        }
        out
    }

    /// Copy with tombstones removed and ids renumbered in ascending order.
    pub fn compacted(&self) -> TriMesh {
        let mut remap = vec![NONE; self.verts.len()];
        let mut pos = Vec::new();
        let mut tags = Vec::new();
        for v in self.vertex_ids() {
            remap[v] = pos.len();
            pos.push(self.verts[v].pos);
            tags.push(self.verts[v].tag);
        }
        let tris: Vec<[VertexId; 3]> = self
            .face_ids()
            .map(|f| self.face_vertices(f).map(|v| remap[v]))
            .collect();
        TriMesh::from_triangles(&pos, &tags, &tris, self.rings.clone(), self.radius)
            .expect("compacting a valid mesh")
    }
}

#[cfg(test)]
mod tests;
