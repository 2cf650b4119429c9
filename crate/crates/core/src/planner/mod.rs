//! Sequential multi-robot path planning on a pebble graph.
//!
//! A permutation of robot positions is decomposed into transpositions, each
//! transposition into swaps of adjacent vertices, and each adjacent swap is
//! carried out by cyclic and vacant moves inside a small region around the
//! swapped pair with the help of one vacancy.

mod local;
mod solver;

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pebble_graph::{CellId, NodeId, PebbleGraph};

pub use solver::{route_vacancy, solve_sequential, swap_primitive, Planner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Corner `i` to corner `i + 1`.
    Forward,
    /// Corner `i` to corner `i - 1`.
    Backward,
}

impl Direction {
    pub fn step(self) -> usize {
        match self {
            Direction::Forward => 1,
            Direction::Backward => 2,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    /// Every robot of the cell advances one corner.
    Cyclic { cell: CellId, direction: Direction },
    /// One robot moves along an edge to an unoccupied vertex.
    Vacant { robot: usize, from: NodeId, to: NodeId },
}

impl Move {
    /// Vertices whose robots may move or be displaced while the move runs.
    /// An inter-cell vacant move rotates both cells out of the way, so it
    /// claims all six corners.
    pub fn footprint(&self) -> Vec<NodeId> {
        match *self {
            Move::Cyclic { cell, .. } => PebbleGraph::cell_nodes(cell).to_vec(),
            Move::Vacant { from, to, .. } => {
                let (ca, cb) = (PebbleGraph::cell_of(from), PebbleGraph::cell_of(to));
                if ca == cb {
                    vec![from, to]
                } else {
                    let mut v = PebbleGraph::cell_nodes(ca).to_vec();
                    v.extend(PebbleGraph::cell_nodes(cb));
                    v
                }
            }
        }
    }

    pub fn inverse(&self) -> Move {
        match *self {
            Move::Cyclic { cell, direction } => Move::Cyclic { cell, direction: direction.reversed() },
            Move::Vacant { robot, from, to } => Move::Vacant { robot, from: to, to: from },
        }
    }
}

/// Moves grouped into rounds; moves of one round run simultaneously.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rounds: Vec<Vec<Move>>,
    pub makespan: usize,
}

impl Schedule {
    /// One move per round.
    pub fn sequential(moves: Vec<Move>) -> Self {
        let rounds: Vec<Vec<Move>> = moves.into_iter().map(|m| vec![m]).collect();
        Schedule { makespan: rounds.len(), rounds }
    }

    pub fn from_rounds(rounds: Vec<Vec<Move>>) -> Self {
        let rounds: Vec<Vec<Move>> = rounds.into_iter().filter(|r| !r.is_empty()).collect();
        Schedule { makespan: rounds.len(), rounds }
    }

    pub fn num_moves(&self) -> usize {
        self.rounds.iter().map(Vec::len).sum()
    }

    pub fn moves(&self) -> impl Iterator<Item = &Move> {
        self.rounds.iter().flatten()
    }

    /// Appends the rounds of `other` after this schedule.
    pub fn extend(&mut self, other: Schedule) {
        self.rounds.extend(other.rounds);
        self.makespan = self.rounds.len();
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("instance is infeasible: {0}")]
    Infeasible(String),
    #[error("vertex {0} cannot reach a vacancy")]
    NoVacancy(NodeId),
    #[error("vertices {0} and {1} are not connected")]
    Unreachable(NodeId, NodeId),
    #[error("no local move sequence swaps {0} and {1}")]
    SwapFailed(NodeId, NodeId),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplayError {
    #[error("round {round}: moves overlap at vertex {vertex}")]
    Overlap { round: usize, vertex: NodeId },
    #[error("round {round}: vertices {from} and {to} are not adjacent")]
    NotAdjacent { round: usize, from: NodeId, to: NodeId },
    #[error("round {round}: robot {robot} is not at vertex {from}")]
    WrongRobot { round: usize, robot: usize, from: NodeId },
    #[error("round {round}: target vertex {to} is occupied")]
    Occupied { round: usize, to: NodeId },
    #[error("round {round}: cell {cell} does not exist")]
    BadCell { round: usize, cell: CellId },
    #[error("robot {robot} ends at {actual} instead of {expected}")]
    WrongTarget { robot: usize, expected: NodeId, actual: NodeId },
}

/// A multi-robot path planning problem on a connected pebble graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppInstance {
    pub graph: PebbleGraph,
    /// Start vertex of every robot.
    pub starts: Vec<NodeId>,
    /// Goal vertex of every robot; a permutation of `starts`.
    pub goals: Vec<NodeId>,
}

impl MppInstance {
    pub fn new(graph: PebbleGraph, starts: Vec<NodeId>, goals: Vec<NodeId>) -> Result<Self, PlanError> {
        let n = graph.num_nodes();
        if starts.len() != goals.len() {
            return Err(PlanError::InvalidInstance("starts and goals differ in length".into()));
        }
        if starts.iter().chain(&goals).any(|&v| v >= n) {
            return Err(PlanError::InvalidInstance("vertex out of range".into()));
        }
        let mut a = starts.clone();
        let mut b = goals.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a.windows(2).any(|w| w[0] == w[1]) {
            return Err(PlanError::InvalidInstance("two robots share a start vertex".into()));
        }
        if a != b {
            return Err(PlanError::InvalidInstance("goals are not a permutation of the starts".into()));
        }
        if graph.num_cells() < 2 {
            return Err(PlanError::Infeasible("the graph needs more than one loop".into()));
        }
        if !graph.is_connected() {
            return Err(PlanError::Infeasible("the graph is not connected".into()));
        }
        if starts.len() >= n {
            return Err(PlanError::Infeasible("no vacant vertex".into()));
        }
        Ok(Self { graph, starts, goals })
    }

    /// `n` robots on distinct random vertices with a uniformly random
    /// permutation of those vertices as goals.
    pub fn random(graph: PebbleGraph, n: usize, rng: &mut impl Rng) -> Result<Self, PlanError> {
        let total = graph.num_nodes();
        if n > total {
            return Err(PlanError::InvalidInstance(format!("{n} robots on {total} vertices")));
        }
        let mut starts: Vec<NodeId> = rand::seq::index::sample(rng, total, n).into_vec();
        starts.sort_unstable();
        let mut goals = starts.clone();
        goals.shuffle(rng);
        Self::new(graph, starts, goals)
    }

    pub fn num_robots(&self) -> usize {
        self.starts.len()
    }

    pub fn vacant(&self) -> Vec<NodeId> {
        let mut occ = vec![false; self.graph.num_nodes()];
        for &s in &self.starts {
            occ[s] = true;
        }
        (0..occ.len()).filter(|&v| !occ[v]).collect()
    }
}

/// Node adjacency of a pebble graph, sorted by node id.
#[derive(Debug, Clone)]
pub struct Topology {
    adj: Vec<Vec<NodeId>>,
    num_cells: usize,
}

impl Topology {
    pub fn new(graph: &PebbleGraph) -> Self {
        let adj = graph.adjacency().into_iter().map(|l| l.into_iter().map(|(v, _)| v).collect()).collect();
        Self { adj, num_cells: graph.num_cells() }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v]
    }

    pub fn adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Shortest path from `from` to `to` inside `mask`, preferring low
    /// vertex ids on ties.
    pub fn path(&self, from: NodeId, to: NodeId, mask: Option<&[bool]>) -> Option<Vec<NodeId>> {
        let allowed = |v: NodeId| mask.is_none_or(|m| m[v]);
        let mut parent = vec![usize::MAX; self.adj.len()];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut path = vec![to];
                let mut x = to;
                while x != from {
                    x = parent[x];
                    path.push(x);
                }
                path.reverse();
                return Some(path);
            }
            for &w in &self.adj[u] {
                if parent[w] == usize::MAX && allowed(w) {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        None
    }
}

/// Robot positions and vertex occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    occ: Vec<Option<usize>>,
    pos: Vec<NodeId>,
}

impl Occupancy {
    pub fn new(num_nodes: usize, starts: &[NodeId]) -> Self {
        let mut occ = vec![None; num_nodes];
        for (i, &s) in starts.iter().enumerate() {
            occ[s] = Some(i);
        }
        Self { occ, pos: starts.to_vec() }
    }

    pub fn robot_at(&self, v: NodeId) -> Option<usize> {
        self.occ[v]
    }

    pub fn is_vacant(&self, v: NodeId) -> bool {
        self.occ[v].is_none()
    }

    pub fn positions(&self) -> &[NodeId] {
        &self.pos
    }

    /// Applies a move without validation.
    pub fn apply(&mut self, mv: &Move) {
        match *mv {
            Move::Cyclic { cell, direction } => {
                let nodes = PebbleGraph::cell_nodes(cell);
                let old = nodes.map(|v| self.occ[v]);
                for i in 0..3 {
                    let j = (i + direction.step()) % 3;
                    self.occ[nodes[j]] = old[i];
                    if let Some(r) = old[i] {
                        self.pos[r] = nodes[j];
                    }
                }
            }
            Move::Vacant { robot, from, to } => {
                debug_assert_eq!(self.occ[from], Some(robot));
                debug_assert!(self.occ[to].is_none());
                self.occ[from] = None;
                self.occ[to] = Some(robot);
                self.pos[robot] = to;
            }
        }
    }
}

/// Replays a schedule from `starts`, checking every vacancy and adjacency
/// rule, and returns the final robot positions.
pub fn replay(graph: &PebbleGraph, starts: &[NodeId], schedule: &Schedule) -> Result<Vec<NodeId>, ReplayError> {
    let topo = Topology::new(graph);
    let mut state = Occupancy::new(graph.num_nodes(), starts);
    let mut claimed = vec![usize::MAX; graph.num_nodes()];
    for (round, moves) in schedule.rounds.iter().enumerate() {
        for mv in moves {
            if let Move::Cyclic { cell, .. } = *mv {
                if cell >= graph.num_cells() {
                    return Err(ReplayError::BadCell { round, cell });
                }
            }
            if let Move::Vacant { from, to, .. } = *mv {
                if from >= topo.num_nodes() || to >= topo.num_nodes() || !topo.adjacent(from, to) {
                    return Err(ReplayError::NotAdjacent { round, from, to });
                }
            }
            for v in mv.footprint() {
                if claimed[v] == round {
                    return Err(ReplayError::Overlap { round, vertex: v });
                }
                claimed[v] = round;
            }
            if let Move::Vacant { robot, from, to } = *mv {
                if state.robot_at(from) != Some(robot) {
                    return Err(ReplayError::WrongRobot { round, robot, from });
                }
                if !state.is_vacant(to) {
                    return Err(ReplayError::Occupied { round, to });
                }
            }
        }
        // footprints are disjoint, so applying in order equals applying at once
        for mv in moves {
            state.apply(mv);
        }
    }
    Ok(state.pos)
}

/// Replays a schedule and checks that every robot reaches its goal.
pub fn check_solution(inst: &MppInstance, schedule: &Schedule) -> Result<(), ReplayError> {
    let end = replay(&inst.graph, &inst.starts, schedule)?;
    for (robot, (&actual, &expected)) in end.iter().zip(&inst.goals).enumerate() {
        if actual != expected {
            return Err(ReplayError::WrongTarget { robot, expected, actual });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
