//! Complete-linkage clustering of loops into a binary tree.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ScheduleError;
use crate::pebble_graph::{CellId, PebbleGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    /// Cells of the cluster, ascending.
    pub cells: Vec<CellId>,
    pub children: Option<[usize; 2]>,
}

/// Binary merge tree over the loops (cells) of a graph, cut into leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopClusterTree {
    pub k: usize,
    pub nodes: Vec<ClusterNode>,
    pub root: usize,
    /// Tree nodes acting as leaves, left to right.
    pub leaves: Vec<usize>,
    /// Leaf index of every cell.
    pub leaf_of_cell: Vec<usize>,
}

impl LoopClusterTree {
    /// Whether `node` is one of the cut leaves.
    pub fn is_leaf(&self, node: usize) -> bool {
        self.leaves.contains(&node)
    }

    /// Leaf indices below `node`.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if let Some(i) = self.leaves.iter().position(|&l| l == x) {
                out.push(i);
            } else if let Some([a, b]) = self.nodes[x].children {
                stack.push(b);
                stack.push(a);
            }
        }
        out.sort_unstable();
        out
    }

    /// Cells of leaf `leaf`.
    pub fn leaf_cells(&self, leaf: usize) -> &[CellId] {
        &self.nodes[self.leaves[leaf]].cells
    }
}

/// Hop distances between cells over inter-cell adjacency.
fn cell_distances(adj: &[Vec<CellId>]) -> Vec<Vec<u32>> {
    let n = adj.len();
    let mut dist = vec![vec![u32::MAX; n]; n];
    for s in 0..n {
        let d = &mut dist[s];
        d[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &w in &adj[u] {
                if d[w] == u32::MAX {
                    d[w] = d[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    dist
}

pub(crate) fn cell_adjacency(graph: &PebbleGraph) -> Vec<Vec<CellId>> {
    let mut adj = vec![Vec::new(); graph.num_cells()];
    for e in &graph.inter_edges {
        let (a, b) = (PebbleGraph::cell_of(e.a), PebbleGraph::cell_of(e.b));
        adj[a].push(b);
        adj[b].push(a);
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    adj
}

/// Clusters the loops of a connected graph and cuts the tree so that every
/// leaf holds at least `k` loops.
///
/// Starting from singletons, the smallest cluster (lowest cell id on ties)
/// is merged with the adjacent cluster at the smallest complete-linkage hop
/// distance (then smallest size, then lowest cell id). A tree node becomes
/// a leaf when it is a single loop or one of its children has fewer than
/// `k` loops.
pub fn cluster_loops(graph: &PebbleGraph, k: usize) -> Result<LoopClusterTree, ScheduleError> {
    if k < 2 {
        return Err(ScheduleError::InvalidK(k));
    }
    let n = graph.num_cells();
    if n < 2 {
        return Err(ScheduleError::TooFewLoops);
    }
    if !graph.is_connected() {
        return Err(ScheduleError::Disconnected);
    }
    let adj = cell_adjacency(graph);
    let cell_dist = cell_distances(&adj);

    let mut nodes: Vec<ClusterNode> = (0..n).map(|c| ClusterNode { cells: vec![c], children: None }).collect();
    // complete-linkage distance and adjacency between node ids
    let cap = 2 * n - 1;
    let mut dist = vec![vec![0u32; cap]; cap];
    let mut touching = vec![vec![false; cap]; cap];
    for a in 0..n {
        for b in 0..n {
            dist[a][b] = cell_dist[a][b];
        }
        for &b in &adj[a] {
            touching[a][b] = true;
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    while active.len() > 1 {
        let key = |x: usize, nodes: &[ClusterNode]| (nodes[x].cells.len(), nodes[x].cells[0]);
        let &s = active.iter().min_by_key(|&&x| key(x, &nodes)).unwrap();
        let &t = active
            .iter()
            .filter(|&&x| x != s && touching[s][x])
            .min_by_key(|&&x| (dist[s][x], key(x, &nodes)))
            .expect("connected graph has an adjacent cluster");
        let id = nodes.len();
        let mut cells = nodes[s].cells.clone();
        cells.extend_from_slice(&nodes[t].cells);
        cells.sort_unstable();
        let (left, right) = if nodes[s].cells[0] < nodes[t].cells[0] { (s, t) } else { (t, s) };
        nodes.push(ClusterNode { cells, children: Some([left, right]) });
        active.retain(|&x| x != s && x != t);
        for &x in &active {
            let d = dist[s][x].max(dist[t][x]);
            dist[id][x] = d;
            dist[x][id] = d;
            let tc = touching[s][x] || touching[t][x];
            touching[id][x] = tc;
            touching[x][id] = tc;
        }
        active.push(id);
    }
    let root = active[0];

    let mut leaves = Vec::new();
    let mut stack = vec![root];
    while let Some(x) = stack.pop() {
        match nodes[x].children {
            Some([a, b]) if nodes[a].cells.len() >= k && nodes[b].cells.len() >= k => {
                stack.push(b);
                stack.push(a);
            }
            _ => leaves.push(x),
        }
    }
    let mut leaf_of_cell = vec![usize::MAX; n];
    for (i, &l) in leaves.iter().enumerate() {
        for &c in &nodes[l].cells {
            leaf_of_cell[c] = i;
        }
    }
    Ok(LoopClusterTree { k, nodes, root, leaves, leaf_of_cell })
}
