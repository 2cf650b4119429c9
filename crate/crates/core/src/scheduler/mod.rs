//! Parallel planning by divide and conquer over a loop cluster tree.
//!
//! Vacancies are first spread so that every leaf of the tree holds one.
//! Then, top-down, the robots of each tree node are exchanged between its
//! two children until every robot is in the child holding its goal, with
//! the exchanges scheduled in parallel rounds. Sibling sub-trees proceed in
//! parallel and leaves finish with the sequential solver.

mod cluster;
mod spacetime;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pebble_graph::{NodeId, PebbleGraph};
use crate::planner::{Move, MppInstance, Occupancy, PlanError, Planner, Schedule};

pub use cluster::{cluster_loops, ClusterNode, LoopClusterTree};
pub use spacetime::{audit_plan, schedule_swaps, LeafSwap, SwapPlan, SwapProblem, Token};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("K must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("the graph needs more than one loop")]
    TooFewLoops,
    #[error("the graph is not connected")]
    Disconnected,
    #[error("{robots} robots leave fewer vacancies than the {leaves} leaves need")]
    TooFewVacancies { robots: usize, leaves: usize },
    #[error("no spare vacancy can reach the sub-graph that needs one")]
    NoSpareVacancy,
    #[error("sub-graphs need different numbers of exchanges")]
    Unbalanced,
    #[error("exchange scheduling made no progress")]
    NoProgress,
    #[error("exchange plan failed its audit: {0}")]
    Audit(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

/// Per-node record of the exchange scheduling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub node: usize,
    pub exchange_rounds: usize,
    pub exchanges: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelOutput {
    pub schedule: Schedule,
    pub tree: LoopClusterTree,
    pub trace: Vec<NodeTrace>,
}

type Steps = Vec<Vec<Move>>;

/// Runs parallel move streams side by side.
fn zip(mut a: Steps, b: Steps) -> Steps {
    if a.len() < b.len() {
        a.resize(b.len(), Vec::new());
    }
    for (x, y) in a.iter_mut().zip(b) {
        x.extend(y);
    }
    a
}

/// Packs a move sequence into rounds as early as footprints allow.
fn compact(moves: &[Move], num_nodes: usize) -> Steps {
    let mut ready = vec![0usize; num_nodes];
    let mut steps: Steps = Vec::new();
    for mv in moves {
        let fp = mv.footprint();
        let t = fp.iter().map(|&v| ready[v]).max().unwrap_or(0);
        if steps.len() <= t {
            steps.resize(t + 1, Vec::new());
        }
        steps[t].push(*mv);
        for v in fp {
            ready[v] = t + 1;
        }
    }
    steps
}

struct Solver<'a> {
    graph: &'a PebbleGraph,
    tree: LoopClusterTree,
    planner: Planner,
    state: Occupancy,
    goals: Vec<NodeId>,
    leaf_of_node: Vec<usize>,
    leaf_adj: Vec<Vec<usize>>,
    trace: Vec<NodeTrace>,
}

impl<'a> Solver<'a> {
    fn leaf_mask(&self, leaves: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.graph.num_nodes()];
        for v in 0..m.len() {
            m[v] = leaves.contains(&self.leaf_of_node[v]);
        }
        m
    }

    /// Routes the spare vacancy (one of at least two in its leaf) nearest to
    /// the occupied vertices accepted by `root`, staying inside `mask`.
    fn route_spare_hole(
        &mut self,
        root: impl Fn(NodeId) -> bool,
        source: impl Fn(usize) -> bool,
        mask: &[bool],
        out: &mut Vec<Move>,
    ) -> Result<(), ScheduleError> {
        let n = self.graph.num_nodes();
        let mut holes = vec![0usize; self.tree.leaves.len()];
        for v in (0..n).filter(|&v| self.state.is_vacant(v)) {
            holes[self.leaf_of_node[v]] += 1;
        }
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for v in (0..n).filter(|&v| mask[v] && root(v) && !self.state.is_vacant(v)) {
            parent[v] = v;
            queue.push_back(v);
        }
        while let Some(u) = queue.pop_front() {
            let l = self.leaf_of_node[u];
            if self.state.is_vacant(u) && holes[l] > 1 && source(l) {
                let mut target = u;
                while parent[target] != target {
                    target = parent[target];
                }
                self.planner.route_vacancy(&mut self.state, u, target, Some(mask), out)?;
                return Ok(());
            }
            for &w in self.planner.topology().neighbors(u) {
                if mask[w] && parent[w] == usize::MAX {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        Err(ScheduleError::NoSpareVacancy)
    }

    /// Moves a vacancy into every leaf that has none, taking it from the
    /// nearest leaf that has more than one.
    fn spread_vacancies(&mut self) -> Result<Vec<Move>, ScheduleError> {
        let n = self.graph.num_nodes();
        let all = vec![true; n];
        let mut moves = Vec::new();
        loop {
            let mut holes = vec![0usize; self.tree.leaves.len()];
            for v in (0..n).filter(|&v| self.state.is_vacant(v)) {
                holes[self.leaf_of_node[v]] += 1;
            }
            let Some(need) = holes.iter().position(|&h| h == 0) else { break };
            let lof = self.leaf_of_node.clone();
            self.route_spare_hole(|v| lof[v] == need, |_| true, &all, &mut moves)?;
        }
        Ok(moves)
    }

    /// Routes spare vacancies across the cut between `left` and `right` until
    /// each side holds as many robots as goals.
    fn balance(&mut self, left: &[usize], right: &[usize]) -> Result<Vec<Move>, ScheduleError> {
        let mut both = left.to_vec();
        both.extend_from_slice(right);
        let mask = self.leaf_mask(&both);
        let in_left: Vec<bool> = (0..self.tree.leaves.len()).map(|l| left.contains(&l)).collect();
        let mut moves = Vec::new();
        loop {
            let robots = self.state.positions().iter().filter(|&&p| in_left[self.leaf_of_node[p]]).count();
            let goals = self.goals.iter().filter(|&&g| in_left[self.leaf_of_node[g]]).count();
            if robots == goals {
                break;
            }
            // the side with too many robots takes a vacancy from the other
            let to_left = robots > goals;
            let lof = self.leaf_of_node.clone();
            let side = in_left.clone();
            self.route_spare_hole(|v| side[lof[v]] == to_left, |l| side[l] != to_left, &mask, &mut moves)?;
        }
        Ok(moves)
    }

    fn solve_node(&mut self, node: usize) -> Result<Steps, ScheduleError> {
        if self.tree.is_leaf(node) {
            let leaf = self.tree.leaves.iter().position(|&l| l == node).unwrap();
            let mask = self.leaf_mask(&[leaf]);
            let mut moves = Vec::new();
            let goals = self.goals.clone();
            self.planner.permute(&mut self.state, &goals, Some(&mask), &mut moves)?;
            return Ok(moves.into_iter().map(|m| vec![m]).collect());
        }
        let [left, right] = self.tree.nodes[node].children.expect("internal node");
        let left_leaves = self.tree.leaves_under(left);
        let right_leaves = self.tree.leaves_under(right);
        let nl = self.tree.leaves.len();
        let mut side = vec![None; nl];
        for &l in &left_leaves {
            side[l] = Some(false);
        }
        for &l in &right_leaves {
            side[l] = Some(true);
        }
        let balance = self.balance(&left_leaves, &right_leaves)?;
        let goal_side = |v: NodeId| side[self.leaf_of_node[v]];
        let mut misplaced = vec![0; nl];
        // spare vacancies can be handed over like placed robots; each leaf
        // keeps one
        let mut placed: Vec<usize> = (0..nl).map(|l| self.holes(l).saturating_sub(1)).collect();
        for r in 0..self.goals.len() {
            let p = self.state.positions()[r];
            let l = self.leaf_of_node[p];
            if side[l].is_none() {
                continue;
            }
            if goal_side(self.goals[r]) == side[l] {
                placed[l] += 1;
            } else {
                misplaced[l] += 1;
            }
        }
        let problem = SwapProblem { adjacency: self.leaf_adj.clone(), side: side.clone(), misplaced, placed };
        let plan = schedule_swaps(&problem)?;
        audit_plan(&problem, &plan).map_err(ScheduleError::Audit)?;
        let mut steps = compact(&balance, self.graph.num_nodes());
        for round in &plan.rounds {
            let mut round_steps: Steps = Vec::new();
            for s in round {
                let pair = self.realize_exchange(s, &side)?;
                round_steps = zip(round_steps, pair);
            }
            steps.extend(round_steps);
        }
        self.trace.push(NodeTrace {
            node,
            exchange_rounds: plan.rounds.len(),
            exchanges: plan.rounds.iter().map(Vec::len).sum(),
            steps: steps.len(),
        });
        let a = self.solve_node(left)?;
        let b = self.solve_node(right)?;
        steps.extend(zip(a, b));
        Ok(steps)
    }

    fn holes(&self, leaf: usize) -> usize {
        (0..self.graph.num_nodes()).filter(|&v| self.leaf_of_node[v] == leaf && self.state.is_vacant(v)).count()
    }

    /// Nearest vertex holding a token of the given kind to `target` inside
    /// `mask`, with the hop distance. Spare vacancies count as placed.
    fn nearest_token(&self, target: NodeId, mask: &[bool], want_misplaced: bool, side: &[Option<bool>]) -> Option<(NodeId, usize)> {
        let here = side[self.leaf_of_node[target]];
        let spare_hole = !want_misplaced && self.holes(self.leaf_of_node[target]) > 1;
        let mut dist = vec![usize::MAX; mask.len()];
        dist[target] = 0;
        let mut queue = VecDeque::from([target]);
        while let Some(u) = queue.pop_front() {
            let hit = match self.state.robot_at(u) {
                Some(r) => (side[self.leaf_of_node[self.goals[r]]] != here) == want_misplaced,
                None => spare_hole,
            };
            if hit {
                return Some((u, dist[u]));
            }
            for &w in self.planner.topology().neighbors(u) {
                if mask[w] && dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Carries one token of each leaf to the ends of an inter-cell edge
    /// joining them and swaps the two.
    fn realize_exchange(&mut self, s: &LeafSwap, side: &[Option<bool>]) -> Result<Steps, ScheduleError> {
        let mask_a = self.leaf_mask(&[s.a]);
        let mask_b = self.leaf_mask(&[s.b]);
        let want_a = s.a_gives == Token::Misplaced;
        let want_b = s.b_gives == Token::Misplaced;
        let mut best: Option<(usize, usize, NodeId, NodeId, NodeId, NodeId)> = None;
        for (i, e) in self.graph.inter_edges.iter().enumerate() {
            let (p, q) = match (self.leaf_of_node[e.a], self.leaf_of_node[e.b]) {
                (x, y) if x == s.a && y == s.b => (e.a, e.b),
                (x, y) if x == s.b && y == s.a => (e.b, e.a),
                _ => continue,
            };
            let (Some((ra, da)), Some((rb, db))) =
                (self.nearest_token(p, &mask_a, want_a, side), self.nearest_token(q, &mask_b, want_b, side))
            else {
                continue;
            };
            let cost = da.max(db);
            if best.is_none_or(|b| (cost, i) < (b.0, b.1)) {
                best = Some((cost, i, p, q, ra, rb));
            }
        }
        let (_, _, p, q, ra, rb) = best.ok_or_else(|| ScheduleError::Audit(format!("no robots to exchange for {s:?}")))?;
        let mut ca = Vec::new();
        self.planner.carry(&mut self.state, ra, p, Some(&mask_a), &mut ca)?;
        let mut cb = Vec::new();
        self.planner.carry(&mut self.state, rb, q, Some(&mask_b), &mut cb)?;
        let mut steps = zip(ca.into_iter().map(|m| vec![m]).collect(), cb.into_iter().map(|m| vec![m]).collect());
        let both: Vec<bool> = mask_a.iter().zip(&mask_b).map(|(x, y)| *x || *y).collect();
        let mut sw = Vec::new();
        self.planner.swap(&mut self.state, p, q, Some(&both), &mut sw)?;
        steps.extend(sw.into_iter().map(|m| vec![m]));
        Ok(steps)
    }
}

/// Solves an instance with parallel rounds; `k` is the minimum number of
/// loops per leaf of the cluster tree.
pub fn solve_parallel(inst: &MppInstance, k: usize) -> Result<ParallelOutput, ScheduleError> {
    let graph = &inst.graph;
    let tree = cluster_loops(graph, k)?;
    let n = graph.num_nodes();
    let nl = tree.leaves.len();
    if inst.num_robots() + nl > n {
        return Err(ScheduleError::TooFewVacancies { robots: inst.num_robots(), leaves: nl });
    }
    if inst.starts == inst.goals {
        return Ok(ParallelOutput { schedule: Schedule::default(), tree, trace: Vec::new() });
    }
    let leaf_of_node: Vec<usize> = (0..n).map(|v| tree.leaf_of_cell[PebbleGraph::cell_of(v)]).collect();
    let mut leaf_adj = vec![Vec::new(); nl];
    for e in &graph.inter_edges {
        let (a, b) = (leaf_of_node[e.a], leaf_of_node[e.b]);
        if a != b {
            leaf_adj[a].push(b);
            leaf_adj[b].push(a);
        }
    }
    for l in &mut leaf_adj {
        l.sort_unstable();
        l.dedup();
    }
    let mut solver = Solver {
        graph,
        planner: Planner::new(graph),
        state: Occupancy::new(n, &inst.starts),
        goals: inst.goals.clone(),
        leaf_of_node,
        leaf_adj,
        trace: Vec::new(),
        tree,
    };

    let spread = solver.spread_vacancies()?;
    // goals relabelled by the vertex permutation of the spreading moves
    let mut content: Vec<NodeId> = (0..n).collect();
    for mv in &spread {
        if let Move::Vacant { from, to, .. } = *mv {
            content.swap(from, to);
        }
    }
    let mut image = vec![0; n];
    for (v, &c) in content.iter().enumerate() {
        image[c] = v;
    }
    solver.goals = inst.goals.iter().map(|&g| image[g]).collect();

    let root = solver.tree.root;
    let mut steps = compact(&spread, n);
    steps.extend(solver.solve_node(root)?);
    // undo the spreading, with robots looked up at execution time
    let mut undo = Vec::new();
    for mv in spread.iter().rev() {
        if let Move::Vacant { from, to, .. } = *mv {
            let robot = solver.state.robot_at(to).expect("spread pattern is restored");
            let back = Move::Vacant { robot, from: to, to: from };
            solver.state.apply(&back);
            undo.push(back);
        }
    }
    steps.extend(compact(&undo, n));
    debug_assert_eq!(solver.state.positions(), &inst.goals[..]);
    Ok(ParallelOutput { schedule: Schedule::from_rounds(steps), tree: solver.tree, trace: solver.trace })
}

#[cfg(test)]
mod tests;
