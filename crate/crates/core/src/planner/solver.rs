use std::collections::VecDeque;

use super::local::{LocalMove, RegionShape, SwapCache, MAX_REGION};
use super::{Move, MppInstance, Occupancy, PlanError, Schedule, Topology};
use crate::pebble_graph::{CellId, NodeId, PebbleGraph};

/// Move generator shared by the sequential and parallel solvers.
#[derive(Debug)]
pub struct Planner {
    topo: Topology,
    cache: SwapCache,
}

impl Planner {
    pub fn new(graph: &PebbleGraph) -> Self {
        Self { topo: Topology::new(graph), cache: SwapCache::default() }
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    fn allowed(mask: Option<&[bool]>, v: NodeId) -> bool {
        mask.is_none_or(|m| m[v])
    }

    /// Moves the vacancy at `from` to `to` along a shortest path. Other
    /// vacancies on the path end where they started.
    pub fn route_vacancy(
        &self,
        state: &mut Occupancy,
        from: NodeId,
        to: NodeId,
        mask: Option<&[bool]>,
        out: &mut Vec<Move>,
    ) -> Result<(), PlanError> {
        if from == to || !state.is_vacant(from) || state.is_vacant(to) {
            return Ok(());
        }
        let path = self.topo.path(from, to, mask).ok_or(PlanError::Unreachable(from, to))?;
        let holes: Vec<usize> = (0..path.len()).filter(|&i| state.is_vacant(path[i])).collect();
        // shift the hole closest to `to` first so every segment is full
        let mut end = path.len() - 1;
        for &h in holes.iter().rev() {
            for i in h..end {
                let robot = state.robot_at(path[i + 1]).expect("segment interior is occupied");
                let mv = Move::Vacant { robot, from: path[i + 1], to: path[i] };
                state.apply(&mv);
                out.push(mv);
            }
            end = h;
        }
        Ok(())
    }

    /// Path from the vacancy nearest to `region` (outside it) to the first
    /// region vertex reached.
    fn nearest_vacancy(&self, state: &Occupancy, region: &[NodeId], mask: Option<&[bool]>) -> Option<Vec<NodeId>> {
        let n = self.topo.num_nodes();
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &s in region {
            parent[s] = s;
            queue.push_back(s);
        }
        while let Some(u) = queue.pop_front() {
            if state.is_vacant(u) {
                let mut path = vec![u];
                let mut x = u;
                while parent[x] != x {
                    x = parent[x];
                    path.push(x);
                }
                return Some(path);
            }
            for &w in self.topo.neighbors(u) {
                if parent[w] == usize::MAX && Self::allowed(mask, w) {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Exchanges the contents of adjacent vertices `u` and `v`; every other
    /// robot ends where it started.
    pub fn swap(
        &mut self,
        state: &mut Occupancy,
        u: NodeId,
        v: NodeId,
        mask: Option<&[bool]>,
        out: &mut Vec<Move>,
    ) -> Result<(), PlanError> {
        if u == v || state.robot_at(u) == state.robot_at(v) {
            return Ok(());
        }
        let mut cells: Vec<CellId> = vec![PebbleGraph::cell_of(u)];
        if PebbleGraph::cell_of(v) != cells[0] {
            cells.push(PebbleGraph::cell_of(v));
        }
        loop {
            if let Some(()) = self.swap_in_cells(state, &cells, u, v, mask, out)? {
                return Ok(());
            }
            let next = self.grow(&cells, mask).ok_or(PlanError::SwapFailed(u, v))?;
            cells.push(next);
        }
    }

    /// Lowest-id cell adjacent to `cells` that fits in the region budget.
    fn grow(&self, cells: &[CellId], mask: Option<&[bool]>) -> Option<CellId> {
        if 3 * (cells.len() + 1) + 1 > MAX_REGION {
            return None;
        }
        let mut best: Option<CellId> = None;
        for &c in cells {
            for v in PebbleGraph::cell_nodes(c) {
                for &w in self.topo.neighbors(v) {
                    let d = PebbleGraph::cell_of(w);
                    let inside = PebbleGraph::cell_nodes(d).iter().all(|&x| Self::allowed(mask, x));
                    if !cells.contains(&d) && inside && best.is_none_or(|b| d < b) {
                        best = Some(d);
                    }
                }
            }
        }
        best
    }

    /// Tries the swap inside the given cells, routing a vacancy next to them
    /// first when they are full. `None` means the region is too small.
    fn swap_in_cells(
        &mut self,
        state: &mut Occupancy,
        cells: &[CellId],
        u: NodeId,
        v: NodeId,
        mask: Option<&[bool]>,
        out: &mut Vec<Move>,
    ) -> Result<Option<()>, PlanError> {
        let mut nodes: Vec<NodeId> = cells.iter().flat_map(|&c| PebbleGraph::cell_nodes(c)).collect();
        let mut route = Vec::new();
        if nodes.iter().all(|&x| !state.is_vacant(x)) {
            let path = self.nearest_vacancy(state, &nodes, mask).ok_or(PlanError::NoVacancy(u))?;
            // stop one step short so the region robot stays put
            let pendant = path[path.len() - 2];
            self.route_vacancy(state, path[0], pendant, mask, &mut route)?;
            nodes.push(pendant);
        }
        let local = |x: NodeId| nodes.iter().position(|&y| y == x).unwrap();
        let mut edges = Vec::new();
        for (i, &a) in nodes.iter().enumerate() {
            for &b in self.topo.neighbors(a) {
                if let Some(j) = nodes.iter().position(|&y| y == b) {
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
        }
        let shape = RegionShape {
            cells: cells.iter().map(|&c| PebbleGraph::cell_nodes(c).map(local)).collect(),
            edges,
            size: nodes.len(),
        };
        let holes: Vec<bool> = nodes.iter().map(|&x| state.is_vacant(x)).collect();
        let Some(local_moves) = self.cache.solve(&shape, &holes, local(u), local(v)) else {
            // undo the routing before trying a larger region
            for mv in route.iter().rev() {
                state.apply(&mv.inverse());
            }
            return Ok(None);
        };
        out.extend_from_slice(&route);
        for lm in local_moves {
            let mv = match lm {
                LocalMove::Cyclic { cell, direction } => Move::Cyclic { cell: cells[cell], direction },
                LocalMove::Vacant { from, to } => {
                    let robot = state.robot_at(nodes[from]).expect("local search moves robots only");
                    Move::Vacant { robot, from: nodes[from], to: nodes[to] }
                }
            };
            state.apply(&mv);
            out.push(mv);
        }
        for mv in route.iter().rev() {
            let inv = mv.inverse();
            state.apply(&inv);
            out.push(inv);
        }
        Ok(Some(()))
    }

    /// Exchanges the contents of any two connected vertices by adjacent
    /// swaps along a shortest path.
    pub fn transpose(
        &mut self,
        state: &mut Occupancy,
        x: NodeId,
        y: NodeId,
        mask: Option<&[bool]>,
        out: &mut Vec<Move>,
    ) -> Result<(), PlanError> {
        if x == y {
            return Ok(());
        }
        let path = self.topo.path(x, y, mask).ok_or(PlanError::Unreachable(x, y))?;
        let m = path.len() - 1;
        for i in 0..m {
            self.swap(state, path[i], path[i + 1], mask, out)?;
        }
        for i in (0..m.saturating_sub(1)).rev() {
            self.swap(state, path[i], path[i + 1], mask, out)?;
        }
        Ok(())
    }

    /// Moves the content of `from` to `to`, shifting the contents of the
    /// path between them back by one vertex.
    pub fn carry(
        &mut self,
        state: &mut Occupancy,
        from: NodeId,
        to: NodeId,
        mask: Option<&[bool]>,
        out: &mut Vec<Move>,
    ) -> Result<(), PlanError> {
        if from == to {
            return Ok(());
        }
        let path = self.topo.path(from, to, mask).ok_or(PlanError::Unreachable(from, to))?;
        for w in path.windows(2) {
            self.swap(state, w[0], w[1], mask, out)?;
        }
        Ok(())
    }

    /// Moves every robot inside `mask` to `goals[robot]`; the goals of those
    /// robots must lie inside `mask` too.
    pub fn permute(
        &mut self,
        state: &mut Occupancy,
        goals: &[NodeId],
        mask: Option<&[bool]>,
        out: &mut Vec<Move>,
    ) -> Result<(), PlanError> {
        let n = self.topo.num_nodes();
        let mut sigma = vec![usize::MAX; n];
        for (robot, &g) in goals.iter().enumerate() {
            let p = state.positions()[robot];
            if Self::allowed(mask, p) {
                sigma[p] = g;
            }
        }
        // vacancies take the vertices no robot is headed for
        let mut targeted = vec![false; n];
        for &g in sigma.iter().filter(|&&g| g != usize::MAX) {
            targeted[g] = true;
        }
        let mut free = (0..n).filter(|&v| Self::allowed(mask, v) && !targeted[v]);
        for v in 0..n {
            if Self::allowed(mask, v) && state.is_vacant(v) {
                sigma[v] = free.next().expect("as many free vertices as vacancies");
            }
        }
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] || sigma[start] == usize::MAX {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut x = sigma[start];
            while x != start {
                seen[x] = true;
                cycle.push(x);
                x = sigma[x];
            }
            for &xk in &cycle[1..] {
                self.transpose(state, cycle[0], xk, mask, out)?;
            }
        }
        Ok(())
    }
}

/// Solves an instance with one move per round.
pub fn solve_sequential(inst: &MppInstance) -> Result<Schedule, PlanError> {
    let mut planner = Planner::new(&inst.graph);
    let mut state = Occupancy::new(inst.graph.num_nodes(), &inst.starts);
    let mut moves = Vec::new();
    planner.permute(&mut state, &inst.goals, None, &mut moves)?;
    Ok(Schedule::sequential(moves))
}

/// Vacant moves relocating the vacancy at `from` to `to`.
pub fn route_vacancy(
    graph: &PebbleGraph,
    state: &mut Occupancy,
    from: NodeId,
    to: NodeId,
) -> Result<Vec<Move>, PlanError> {
    let mut out = Vec::new();
    Planner::new(graph).route_vacancy(state, from, to, None, &mut out)?;
    Ok(out)
}

/// Moves exchanging the contents of adjacent vertices `u` and `v` with the
/// help of the nearest vacancy.
pub fn swap_primitive(graph: &PebbleGraph, state: &mut Occupancy, u: NodeId, v: NodeId) -> Result<Vec<Move>, PlanError> {
    let mut planner = Planner::new(graph);
    if u != v && !planner.topo.adjacent(u, v) {
        return Err(PlanError::InvalidInstance(format!("vertices {u} and {v} are not adjacent")));
    }
    let mut out = Vec::new();
    planner.swap(state, u, v, None, &mut out)?;
    Ok(out)
}
