//! The pebble graph of a mesh: one 3-loop per valid cell plus inter-cell
//! edges across shared mesh edges.
//!
//! Graph vertex `3k + i` is corner `i` of cell `k`, where corner `i` belongs
//! to the cell's `i`-th mesh vertex in CCW order. A forward cyclic move on
//! cell `k` sends the robot on `3k + i` to `3k + (i + 1) % 3`.

use serde::{Deserialize, Serialize};

use crate::geometry::{cell_is_valid, corner_points, triangle_area, Vec2};
use crate::trimesh::{FaceId, TriMesh, VertexId};

pub type NodeId = usize;
pub type CellId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Face id in the mesh the graph was extracted from.
    pub face: FaceId,
    pub mesh_vertices: [VertexId; 3],
    /// Cell triangle, CCW.
    pub triangle: [Vec2; 3],
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterCellEdge {
    pub a: NodeId,
    pub b: NodeId,
    /// Endpoints of the shared mesh edge; `shared[0]` is the mesh vertex
    /// whose corners this edge joins.
    pub shared: [Vec2; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Loop,
    InterCell(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PebbleGraph {
    pub radius: f64,
    pub workspace_area: f64,
    pub cells: Vec<Cell>,
    /// Corner positions, `3 * cells.len()` entries.
    pub positions: Vec<Vec2>,
    pub inter_edges: Vec<InterCellEdge>,
}

/// Counting and packing metrics of a graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    /// Number of robots, three per valid cell.
    pub robots: usize,
    /// Robots in the largest connected component.
    pub robots_largest_component: usize,
    /// Robot disk area over valid-cell area (0 when there are no cells).
    pub density: f64,
    /// Valid-cell area over workspace area.
    pub coverage: f64,
}

impl PebbleGraph {
    /// Extracts the graph: corners of every valid cell, its loop, and the
    /// two corner pairs flanking each mesh edge shared by two valid cells.
    pub fn extract(mesh: &TriMesh) -> PebbleGraph {
        let r = mesh.radius();
        let mut cell_of_face = vec![usize::MAX; mesh.face_capacity()];
        let mut cells = Vec::new();
        let mut positions = Vec::new();
        for f in mesh.face_ids() {
            let tri = mesh.face_positions(f);
            if !cell_is_valid(&tri, r) {
                continue;
            }
            let c = corner_points(&tri, r).expect("valid cells are non-degenerate");
            cell_of_face[f] = cells.len();
            positions.extend_from_slice(&c);
            cells.push(Cell {
                face: f,
                mesh_vertices: mesh.face_vertices(f),
                triangle: tri,
                area: triangle_area(&tri),
            });
        }
        let mut inter_edges = Vec::new();
        for e in mesh.edge_ids() {
            let (Some(fa), Some(fb)) = mesh.edge_faces(e) else { continue };
            let (ka, kb) = (cell_of_face[fa], cell_of_face[fb]);
            if ka == usize::MAX || kb == usize::MAX {
                continue;
            }
            let (p, q) = mesh.edge_endpoints(e);
            for (v, w) in [(p, q), (q, p)] {
                let ia = cells[ka].mesh_vertices.iter().position(|&x| x == v).unwrap();
                let ib = cells[kb].mesh_vertices.iter().position(|&x| x == v).unwrap();
                inter_edges.push(InterCellEdge {
                    a: 3 * ka + ia,
                    b: 3 * kb + ib,
                    shared: [mesh.position(v), mesh.position(w)],
                });
            }
        }
        PebbleGraph { radius: r, workspace_area: mesh.total_area(), cells, positions, inter_edges }
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_of(node: NodeId) -> CellId {
        node / 3
    }

    pub fn corner_of(node: NodeId) -> usize {
        node % 3
    }

    pub fn cell_nodes(cell: CellId) -> [NodeId; 3] {
        [3 * cell, 3 * cell + 1, 3 * cell + 2]
    }

    pub fn corners(&self, cell: CellId) -> [Vec2; 3] {
        [self.positions[3 * cell], self.positions[3 * cell + 1], self.positions[3 * cell + 2]]
    }

    /// Loop edges as node pairs, three per cell.
    pub fn loop_edges(&self) -> Vec<(NodeId, NodeId)> {
        (0..self.cells.len())
            .flat_map(|k| (0..3).map(move |i| (3 * k + i, 3 * k + (i + 1) % 3)))
            .collect()
    }

    /// Sorted adjacency lists with the kind of each edge.
    pub fn adjacency(&self) -> Vec<Vec<(NodeId, EdgeKind)>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for (a, b) in self.loop_edges() {
            adj[a].push((b, EdgeKind::Loop));
            adj[b].push((a, EdgeKind::Loop));
        }
        for (i, e) in self.inter_edges.iter().enumerate() {
            adj[e.a].push((e.b, EdgeKind::InterCell(i)));
            adj[e.b].push((e.a, EdgeKind::InterCell(i)));
        }
        for l in adj.iter_mut() {
            l.sort_by_key(|x| x.0);
        }
        adj
    }

    /// Inter-cell edge joining `a` and `b`, if any.
    pub fn inter_edge_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.inter_edges
            .iter()
            .position(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    /// Connected-component label per node; labels are numbered in order of
    /// each component's smallest node id.
    pub fn components(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut uf = UnionFind::new(n);
        for (a, b) in self.loop_edges() {
            uf.union(a, b);
        }
        for e in &self.inter_edges {
            uf.union(e.a, e.b);
        }
        let mut label = vec![usize::MAX; n];
        let mut root_label = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            let r = uf.find(v);
            if root_label[r] == usize::MAX {
                root_label[r] = next;
                next += 1;
            }
            label[v] = root_label[r];
        }
        label
    }

    /// Cells of the largest component; ties go to the component holding
    /// the smallest node id.
    pub fn largest_component_cells(&self) -> Vec<CellId> {
        let label = self.components();
        let Some(&max_label) = label.iter().max() else { return Vec::new() };
        let mut size = vec![0usize; max_label + 1];
        for &l in &label {
            size[l] += 1;
        }
        let best = (0..size.len()).max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a))).unwrap();
        (0..self.cells.len()).filter(|&k| label[3 * k] == best).collect()
    }

    /// Graph restricted to the given cells, renumbered in the given order.
    pub fn subgraph(&self, cells: &[CellId]) -> PebbleGraph {
        let mut new_id = vec![usize::MAX; self.cells.len()];
        for (i, &k) in cells.iter().enumerate() {
            new_id[k] = i;
        }
        let map = |v: NodeId| {
            let k = new_id[v / 3];
            (k != usize::MAX).then(|| 3 * k + v % 3)
        };
        PebbleGraph {
            radius: self.radius,
            workspace_area: self.workspace_area,
            cells: cells.iter().map(|&k| self.cells[k].clone()).collect(),
            positions: cells.iter().flat_map(|&k| self.corners(k)).collect(),
            inter_edges: self
                .inter_edges
                .iter()
                .filter_map(|e| Some(InterCellEdge { a: map(e.a)?, b: map(e.b)?, shared: e.shared }))
                .collect(),
        }
    }

    pub fn largest_component(&self) -> PebbleGraph {
        self.subgraph(&self.largest_component_cells())
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&l| l == 0)
    }

    pub fn metrics(&self) -> GraphMetrics {
        let robots = self.num_nodes();
        let label = self.components();
        let mut size = vec![0usize; label.iter().max().map_or(0, |m| m + 1)];
        for &l in &label {
            size[l] += 1;
        }
        let area: f64 = self.cells.iter().map(|c| c.area).sum();
        let r = self.radius;
        GraphMetrics {
            robots,
            robots_largest_component: size.iter().copied().max().unwrap_or(0),
            density: if area > 0.0 { std::f64::consts::PI * r * r * robots as f64 / area } else { 0.0 },
            coverage: if self.workspace_area > 0.0 { area / self.workspace_area } else { 0.0 },
        }
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] || (self.size[a] == self.size[b] && a > b) {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::optimal_edge_length;
    use crate::trimesh::VertexTag;

    /// Two equilateral cells of side `s` sharing an edge (a rhombus).
    pub(crate) fn rhombus(s: f64, r: f64) -> TriMesh {
        let h = s * 3f64.sqrt() / 2.0;
        let pos = [Vec2::new(0., 0.), Vec2::new(s, 0.), Vec2::new(s / 2., h), Vec2::new(1.5 * s, h)];
        let ring = vec![pos[0], pos[1], pos[3], pos[2]];
        let tags = [
            VertexTag::Corner { ring: 0, index: 0 },
            VertexTag::Corner { ring: 0, index: 1 },
            VertexTag::Corner { ring: 0, index: 3 },
            VertexTag::Corner { ring: 0, index: 2 },
        ];
        TriMesh::from_triangles(&pos, &tags, &[[0, 1, 2], [1, 3, 2]], vec![ring], r).unwrap()
    }

    #[test]
    fn single_valid_cell() {
        let r = 1.0;
        let s = optimal_edge_length(r) * 1.01;
        let pos = [Vec2::new(0., 0.), Vec2::new(s, 0.), Vec2::new(s / 2., s * 3f64.sqrt() / 2.)];
        let tags = [0, 1, 2].map(|i| VertexTag::Corner { ring: 0, index: i });
        let m = TriMesh::from_triangles(&pos, &tags, &[[0, 1, 2]], vec![pos.to_vec()], r).unwrap();
        let g = PebbleGraph::extract(&m);
        assert_eq!((g.num_nodes(), g.loop_edges().len(), g.inter_edges.len()), (3, 3, 0));
    }

    #[test]
    fn two_valid_cells_share_two_inter_edges() {
        let g = PebbleGraph::extract(&rhombus(optimal_edge_length(1.0) * 1.05, 1.0));
        assert_eq!((g.num_nodes(), g.loop_edges().len(), g.inter_edges.len()), (6, 6, 2));
        let m = g.metrics();
        assert_eq!((m.robots, m.robots_largest_component), (6, 6));
        // the two inter-cell edges do not cross each other
        let (e0, e1) = (&g.inter_edges[0], &g.inter_edges[1]);
        assert!(!crate::geometry::segments_intersect(
            &g.positions[e0.a],
            &g.positions[e0.b],
            &g.positions[e1.a],
            &g.positions[e1.b]
        ));
    }

    #[test]
    fn one_invalid_cell_is_dropped() {
        // shrink the second cell by pulling its apex toward the shared edge
        let r = 1.0;
        let s = optimal_edge_length(r) * 1.05;
        let mut m = rhombus(s, r);
        let p = m.position(3);
        let moved = Vec2::new(p.x - 0.2 * s, p.y * 0.4);
        // the apex is a boundary corner, so rebuild instead of smoothing
        let pos: Vec<Vec2> = (0..4).map(|v| if v == 3 { moved } else { m.position(v) }).collect();
        let ring = vec![pos[0], pos[1], pos[3], pos[2]];
        let tags: Vec<VertexTag> = (0..4).map(|v| m.tag(v)).collect();
        m = TriMesh::from_triangles(&pos, &tags, &[[0, 1, 2], [1, 3, 2]], vec![ring], r).unwrap();
        let g = PebbleGraph::extract(&m);
        assert_eq!((g.num_nodes(), g.inter_edges.len()), (3, 0));
    }

    #[test]
    fn metrics_of_empty_and_minimal_cell() {
        let g = PebbleGraph { radius: 1.0, workspace_area: 1.0, cells: vec![], positions: vec![], inter_edges: vec![] };
        let m = g.metrics();
        assert_eq!((m.robots, m.robots_largest_component, m.density, m.coverage), (0, 0, 0.0, 0.0));

        let r = 0.5;
        let s = optimal_edge_length(r);
        // nudge above the minimal side so the cell is strictly valid
        let s_valid = s * (1.0 + 1e-9);
        let pos = [Vec2::new(0., 0.), Vec2::new(s_valid, 0.), Vec2::new(s_valid / 2., s_valid * 3f64.sqrt() / 2.)];
        let tags = [0, 1, 2].map(|i| VertexTag::Corner { ring: 0, index: i });
        let mesh = TriMesh::from_triangles(&pos, &tags, &[[0, 1, 2]], vec![pos.to_vec()], r).unwrap();
        let m = PebbleGraph::extract(&mesh).metrics();
        let expected = 3.0 * std::f64::consts::PI * r * r / (3f64.sqrt() / 4.0 * s * s);
        assert_eq!((m.robots, m.robots_largest_component), (3, 3));
        assert!((m.density - expected).abs() < 1e-6);
        assert!((expected - 0.3907).abs() < 1e-3);
    }

    #[test]
    fn metrics_invariant_under_rigid_motion() {
        let r = 1.0;
        let mesh = rhombus(optimal_edge_length(r) * 1.1, r);
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let tf = |p: Vec2| Vec2::new(c * p.x - s * p.y + 5.0, s * p.x + c * p.y - 2.0);
        let pos: Vec<Vec2> = (0..4).map(|v| tf(mesh.position(v))).collect();
        let ring = vec![pos[0], pos[1], pos[3], pos[2]];
        let tags: Vec<VertexTag> = (0..4).map(|v| mesh.tag(v)).collect();
        let moved = TriMesh::from_triangles(&pos, &tags, &[[0, 1, 2], [1, 3, 2]], vec![ring], r).unwrap();
        let (a, b) = (PebbleGraph::extract(&mesh).metrics(), PebbleGraph::extract(&moved).metrics());
        assert_eq!((a.robots, a.robots_largest_component), (b.robots, b.robots_largest_component));
        assert!((a.density - b.density).abs() < 1e-12 && (a.coverage - b.coverage).abs() < 1e-12);
    }
}
