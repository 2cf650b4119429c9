//! Continuous-time realization of schedules and clearance checks.
//!
//! Every round lasts one time unit split into three equal phases, and every
//! robot path is linear inside a phase. Cyclic moves and vacant moves along
//! a loop edge are straight lines over the whole round. A vacant move across
//! an inter-cell edge first rotates both loops part way so that the two
//! slots face each other through the midpoint of the shared mesh edge, then
//! translates the robot across, then rotates both loops back.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cell_is_valid, corner_points, segment_quadratic_min, segment_segment_distance, Vec2};
use crate::pebble_graph::{NodeId, PebbleGraph};
use crate::planner::{replay, Move, Occupancy, ReplayError, Schedule};
use crate::workspace::Workspace;

/// Relative tolerance on clearances.
pub const CLEARANCE_TOL: f64 = 1e-6;
/// Phases per round.
pub const PHASES: usize = 3;
const MAX_REPORTED: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("schedule does not replay: {0}")]
    Replay(#[from] ReplayError),
    #[error("cell {0} is not valid")]
    InvalidCell(usize),
    #[error("cells do not share an edge")]
    NotAdjacent,
    #[error("no aligned crossing between vertices {0} and {1}")]
    Misaligned(NodeId, NodeId),
}

/// Path of one robot during one round: positions at the phase boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub robot: usize,
    pub knots: [Vec2; PHASES + 1],
}

/// Robot paths of a schedule; robots without a piece in a round stay put.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub radius: f64,
    pub initial: Vec<Vec2>,
    pub rounds: Vec<Vec<Piece>>,
}

impl Trajectory {
    /// Robot positions at the end of every round, starting with the initial
    /// ones.
    pub fn positions_after_rounds(&self) -> Vec<Vec<Vec2>> {
        let mut pos = self.initial.clone();
        let mut out = vec![pos.clone()];
        for round in &self.rounds {
            for p in round {
                pos[p.robot] = p.knots[PHASES];
            }
            out.push(pos.clone());
        }
        out
    }
}

/// Slot positions of a loop rotated by fraction `s`, slot `x` heading to
/// slot `y`.
fn rotated(c: &[Vec2; 3], x: usize, y: usize, s: f64) -> [Vec2; 3] {
    let step = (y + 3 - x) % 3;
    std::array::from_fn(|k| c[k] + (c[(k + step) % 3] - c[k]) * s)
}

/// Fraction of the rotation that brings slot `x` level with the midpoint of
/// the mesh edge between vertices `x` and `y`.
fn alignment(tri: &[Vec2; 3], c: &[Vec2; 3], x: usize, y: usize) -> Option<f64> {
    let m = (tri[x] + tri[y]) * 0.5;
    let d = c[y] - c[x];
    let s = (m - c[x]).dot(&d) / d.norm_squared();
    (0.0..=1.0).contains(&s).then_some(s)
}

/// Crossing geometry between two cells: the rotated slots of both loops and
/// the crossing segment.
struct Crossing {
    a: [Vec2; 3],
    b: [Vec2; 3],
    from: Vec2,
    to: Vec2,
}

fn crossing(
    ta: &[Vec2; 3],
    ca: &[Vec2; 3],
    (xa, ya): (usize, usize),
    tb: &[Vec2; 3],
    cb: &[Vec2; 3],
    (xb, yb): (usize, usize),
) -> Option<Crossing> {
    let sa = alignment(ta, ca, xa, ya)?;
    let sb = alignment(tb, cb, xb, yb)?;
    let a = rotated(ca, xa, ya, sa);
    let b = rotated(cb, xb, yb, sb);
    Some(Crossing { from: a[xa], to: b[xb], a, b })
}

/// Clearances of the crossing corridor: distance from the crossing segment
/// to the other two slots of each loop, minus `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorridorClearance {
    pub d1: f64,
    pub d2: f64,
}

/// Corridor clearances for a robot crossing from either shared vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorridorReport {
    /// Crossing at the first shared vertex in the order of cell `a`.
    pub first: CorridorClearance,
    pub second: CorridorClearance,
}

impl CorridorReport {
    pub fn min(&self) -> f64 {
        self.first.d1.min(self.first.d2).min(self.second.d1).min(self.second.d2)
    }
}

fn corridor_clearance(x: &Crossing, (ya, za): (usize, usize), (yb, zb): (usize, usize), r: f64) -> CorridorClearance {
    let dist = |p: &Vec2| segment_quadratic_min(&(x.from - p), &(x.to - p)).0.sqrt() - r;
    CorridorClearance { d1: dist(&x.a[ya]).min(dist(&x.a[za])), d2: dist(&x.b[yb]).min(dist(&x.b[zb])) }
}

/// Aligned corridor clearances between two valid CCW cells sharing an edge.
pub fn corridor_check(a: &[Vec2; 3], b: &[Vec2; 3], r: f64) -> Result<CorridorReport, VerifyError> {
    for (i, t) in [a, b].into_iter().enumerate() {
        if !cell_is_valid(t, r) {
            return Err(VerifyError::InvalidCell(i));
        }
    }
    let shared: Vec<(usize, usize)> =
        (0..3).filter_map(|i| (0..3).find(|&j| b[j] == a[i]).map(|j| (i, j))).collect();
    let [(pa, pb), (qa, qb)] = shared[..] else { return Err(VerifyError::NotAdjacent) };
    let ca = corner_points(a, r).expect("valid cell");
    let cb = corner_points(b, r).expect("valid cell");
    let (ra, rb) = (3 - pa - qa, 3 - pb - qb);
    let mut out = [CorridorClearance { d1: 0.0, d2: 0.0 }; 2];
    for (k, ((xa, ya), (xb, yb))) in [((pa, qa), (pb, qb)), ((qa, pa), (qb, pb))].into_iter().enumerate() {
        let x = crossing(a, &ca, (xa, ya), b, &cb, (xb, yb)).ok_or(VerifyError::Misaligned(xa, ya))?;
        out[k] = corridor_clearance(&x, (ya, ra), (yb, rb), r);
    }
    Ok(CorridorReport { first: out[0], second: out[1] })
}

fn linear(a: Vec2, b: Vec2) -> [Vec2; PHASES + 1] {
    std::array::from_fn(|k| a + (b - a) * (k as f64 / PHASES as f64))
}

/// Turns a replay-sound schedule into piecewise-linear robot paths.
pub fn realize_moves(graph: &PebbleGraph, starts: &[NodeId], schedule: &Schedule) -> Result<Trajectory, VerifyError> {
    replay(graph, starts, schedule)?;
    let mut state = Occupancy::new(graph.num_nodes(), starts);
    let pos = |v: NodeId| graph.positions[v];
    let mut rounds = Vec::with_capacity(schedule.rounds.len());
    for round in &schedule.rounds {
        let mut pieces = Vec::new();
        for mv in round {
            match *mv {
                Move::Cyclic { cell, direction } => {
                    for v in PebbleGraph::cell_nodes(cell) {
                        if let Some(robot) = state.robot_at(v) {
                            let to = 3 * cell + (PebbleGraph::corner_of(v) + direction.step()) % 3;
                            pieces.push(Piece { robot, knots: linear(pos(v), pos(to)) });
                        }
                    }
                }
                Move::Vacant { robot, from, to } => {
                    let (ka, kb) = (PebbleGraph::cell_of(from), PebbleGraph::cell_of(to));
                    if ka == kb {
                        pieces.push(Piece { robot, knots: linear(pos(from), pos(to)) });
                        continue;
                    }
                    let (xa, xb) = (PebbleGraph::corner_of(from), PebbleGraph::corner_of(to));
                    let (va, vb) = (&graph.cells[ka].mesh_vertices, &graph.cells[kb].mesh_vertices);
                    let ya = (0..3).find(|&i| i != xa && vb.contains(&va[i])).ok_or(VerifyError::Misaligned(from, to))?;
                    let yb = vb.iter().position(|&v| v == va[ya]).unwrap();
                    let corners = |k: usize| -> [Vec2; 3] { std::array::from_fn(|i| pos(3 * k + i)) };
                    let (ca, cb) = (corners(ka), corners(kb));
                    let x = crossing(&graph.cells[ka].triangle, &ca, (xa, ya), &graph.cells[kb].triangle, &cb, (xb, yb))
                        .ok_or(VerifyError::Misaligned(from, to))?;
                    pieces.push(Piece { robot, knots: [ca[xa], x.from, x.to, cb[xb]] });
                    for (k, c, rot) in [(ka, ca, x.a), (kb, cb, x.b)] {
                        for i in 0..3 {
                            let v = 3 * k + i;
                            if v == from {
                                continue;
                            }
                            if let Some(other) = state.robot_at(v) {
                                pieces.push(Piece { robot: other, knots: [c[i], rot[i], rot[i], c[i]] });
                            }
                        }
                    }
                }
            }
        }
        for mv in round {
            state.apply(mv);
        }
        rounds.push(pieces);
    }
    Ok(Trajectory { radius: graph.radius, initial: starts.iter().map(|&v| pos(v)).collect(), rounds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    Pair { a: usize, b: usize },
    Boundary { robot: usize },
}

/// A clearance violation at `time` (round index plus fraction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    #[serde(flatten)]
    pub kind: ViolationKind,
    /// Center distance for pairs, distance to the boundary for robots
    /// (negative when outside).
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub radius: f64,
    /// Smallest center distance between two robots, if there are two.
    pub min_clearance: Option<f64>,
    /// Smallest distance from a robot center to the boundary.
    pub min_boundary_clearance: Option<f64>,
    pub rounds: usize,
    pub num_violations: usize,
    /// The first violations found.
    pub violations: Vec<Violation>,
}

struct Audit {
    r: f64,
    min_pair: f64,
    min_boundary: f64,
    count: usize,
    violations: Vec<Violation>,
}

impl Audit {
    fn pair(&mut self, time: f64, a: usize, b: usize, d: f64) {
        self.min_pair = self.min_pair.min(d);
        if d < 2.0 * self.r * (1.0 - CLEARANCE_TOL) {
            self.record(Violation { time, kind: ViolationKind::Pair { a: a.min(b), b: a.max(b) }, distance: d });
        }
    }

    fn boundary(&mut self, time: f64, robot: usize, d: f64) {
        self.min_boundary = self.min_boundary.min(d);
        if d < self.r * (1.0 - CLEARANCE_TOL) {
            self.record(Violation { time, kind: ViolationKind::Boundary { robot }, distance: d });
        }
    }

    fn record(&mut self, v: Violation) {
        self.count += 1;
        if self.violations.len() < MAX_REPORTED {
            self.violations.push(v);
        }
    }
}

/// Checks pairwise and boundary clearance along the whole trajectory, using
/// the exact minimum over every linear phase.
pub fn verify(traj: &Trajectory, w: &Workspace) -> VerifyReport {
    let r = traj.radius;
    let segs = w.segments();
    let mut audit =
        Audit { r, min_pair: f64::INFINITY, min_boundary: f64::INFINITY, count: 0, violations: Vec::new() };
    let mut pos = traj.initial.clone();
    let n = pos.len();
    for i in 0..n {
        for j in i + 1..n {
            audit.pair(0.0, i, j, (pos[i] - pos[j]).norm());
        }
        let d = w.boundary_distance(&pos[i]);
        audit.boundary(0.0, i, if w.contains(&pos[i]) { d } else { -d });
    }
    let mut piece_of = vec![usize::MAX; n];
    for (t, round) in traj.rounds.iter().enumerate() {
        for (k, p) in round.iter().enumerate() {
            piece_of[p.robot] = k;
        }
        for (k, p) in round.iter().enumerate() {
            for ph in 0..PHASES {
                let time = t as f64 + ph as f64 / PHASES as f64;
                let (a0, a1) = (p.knots[ph], p.knots[ph + 1]);
                let bd = segs.iter().map(|(_, _, s, e)| segment_segment_distance(&a0, &a1, s, e)).fold(f64::INFINITY, f64::min);
                audit.boundary(time, p.robot, bd);
                for j in 0..n {
                    if j == p.robot {
                        continue;
                    }
                    let (b0, b1) = match piece_of[j] {
                        usize::MAX => (pos[j], pos[j]),
                        // each moving pair once
                        q if q < k => continue,
                        q => (round[q].knots[ph], round[q].knots[ph + 1]),
                    };
                    let (sq, s) = segment_quadratic_min(&(a0 - b0), &(a1 - b1));
                    audit.pair(time + s / PHASES as f64, p.robot, j, sq.sqrt());
                }
            }
        }
        for p in round {
            pos[p.robot] = p.knots[PHASES];
            piece_of[p.robot] = usize::MAX;
        }
    }
    let finite = |x: f64| x.is_finite().then_some(x);
    VerifyReport {
        pass: audit.count == 0,
        radius: r,
        min_clearance: finite(audit.min_pair),
        min_boundary_clearance: finite(audit.min_boundary),
        rounds: traj.rounds.len(),
        num_violations: audit.count,
        violations: audit.violations,
    }
}

/// Realizes and verifies a schedule.
pub fn verify_schedule(
    graph: &PebbleGraph,
    starts: &[NodeId],
    schedule: &Schedule,
    w: &Workspace,
) -> Result<VerifyReport, VerifyError> {
    Ok(verify(&realize_moves(graph, starts, schedule)?, w))
}
