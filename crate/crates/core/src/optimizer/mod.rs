//! Greedy two-pass mesh optimization.
//!
//! Each sweep tries, in order, edge collapses, edge splits (first pass
//! only), edge flips, vertex smoothing, per-cell local optimization and one
//! global optimization. Every trial runs on a copy of the mesh and is kept
//! only if the accept gate approves the resulting graph metrics.

use std::collections::HashSet;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::constrained_opt::{solve_global, solve_local, IpmConfig};
use crate::geometry::{amips_energy, optimal_edge_length, AmipsParams, Vec2};
use crate::pebble_graph::{GraphMetrics, PebbleGraph};
use crate::trimesh::{CollapseTo, EdgeId, TriMesh, VertexId, VertexTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Weight of the largest-component robot count.
    pub w: f64,
    /// Edges longer than this multiple of the optimal edge are split.
    pub split_factor: f64,
    pub passes: usize,
    /// Upper bound on sweeps per pass.
    pub max_sweeps: usize,
    pub local_opt: bool,
    pub global_opt: bool,
    pub amips: AmipsParams,
    #[serde(skip)]
    pub ipm: IpmConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            w: 10.0,
            split_factor: 1.3,
            passes: 2,
            max_sweeps: 30,
            local_opt: true,
            global_opt: true,
            amips: AmipsParams::default(),
            ipm: IpmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Collapse,
    Split,
    Flip,
    Smooth,
    LocalOpt,
    GlobalOpt,
}

impl OpKind {
    /// Operators that may be accepted on an improved guide metric alone.
    fn guided(self) -> bool {
        matches!(self, OpKind::Flip | OpKind::Smooth | OpKind::LocalOpt | OpKind::GlobalOpt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Reject,
    /// Count metric unchanged, guide metric improved.
    Guide,
    /// Count metric strictly improved.
    Count,
}

/// `M#r + w * M#rc`.
pub fn count_score(robots: usize, robots_largest_component: usize, w: f64) -> f64 {
    robots as f64 + w * robots_largest_component as f64
}

/// Accept rule: any strict improvement of the weighted count is accepted;
/// guided operators are also accepted when the count is unchanged and their
/// guide metric improved.
pub fn accept_gate(before: (usize, usize), after: (usize, usize), op: OpKind, guide_improved: bool, w: f64) -> Gate {
    let (b, a) = (count_score(before.0, before.1, w), count_score(after.0, after.1, w));
    if a > b {
        Gate::Count
    } else if a == b && op.guided() && guide_improved {
        Gate::Guide
    } else {
        Gate::Reject
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OpCounts {
    pub collapse: usize,
    pub split: usize,
    pub flip: usize,
    pub smooth: usize,
    pub local_opt: usize,
    pub global_opt: usize,
}

impl OpCounts {
    fn bump(&mut self, op: OpKind) {
        match op {
            OpKind::Collapse => self.collapse += 1,
            OpKind::Split => self.split += 1,
            OpKind::Flip => self.flip += 1,
            OpKind::Smooth => self.smooth += 1,
            OpKind::LocalOpt => self.local_opt += 1,
            OpKind::GlobalOpt => self.global_opt += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.collapse + self.split + self.flip + self.smooth + self.local_opt + self.global_opt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStats {
    pub pass: usize,
    pub sweep: usize,
    pub accepted: OpCounts,
    pub metrics: GraphMetrics,
}

/// One accepted operator and the metrics after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub pass: usize,
    pub sweep: usize,
    pub op: OpKind,
    pub robots: usize,
    pub robots_largest_component: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeStats {
    pub initial: GraphMetrics,
    pub final_metrics: GraphMetrics,
    pub sweeps: Vec<SweepStats>,
    pub trace: Vec<TraceEntry>,
}

pub struct OptimizeOutput {
    pub mesh: TriMesh,
    pub graph: PebbleGraph,
    pub stats: OptimizeStats,
}

/// Runs the greedy optimization; `on_sweep` sees the mesh after each sweep.
pub fn optimize_with(
    mesh: TriMesh,
    cfg: &OptimizerConfig,
    mut on_sweep: impl FnMut(usize, usize, &TriMesh),
) -> OptimizeOutput {
    let mut st = State::new(mesh, cfg);
    let initial = st.metrics;
    let mut sweeps = Vec::new();
    for pass in 1..=cfg.passes {
        for sweep in 0..cfg.max_sweeps {
            let before = st.counts;
            st.sweep(pass, sweep);
            sweeps.push(SweepStats { pass, sweep, accepted: st.sweep_counts, metrics: st.metrics });
            log::debug!(
                "pass {pass} sweep {sweep}: robots {} / {} coverage {:.3} density {:.3} ({:?})",
                st.metrics.robots,
                st.metrics.robots_largest_component,
                st.metrics.coverage,
                st.metrics.density,
                st.sweep_counts
            );
            on_sweep(pass, sweep, &st.mesh);
            let improved = count_score(st.counts.0, st.counts.1, cfg.w) > count_score(before.0, before.1, cfg.w);
            if !improved {
                break;
            }
        }
    }
    let graph = PebbleGraph::extract(&st.mesh);
    OptimizeOutput {
        stats: OptimizeStats { initial, final_metrics: graph.metrics(), sweeps, trace: st.trace },
        mesh: st.mesh,
        graph,
    }
}

pub fn optimize(mesh: TriMesh, cfg: &OptimizerConfig) -> OptimizeOutput {
    optimize_with(mesh, cfg, |_, _, _| {})
}

struct State<'a> {
    cfg: &'a OptimizerConfig,
    mesh: TriMesh,
    metrics: GraphMetrics,
    counts: (usize, usize),
    target: f64,
    trace: Vec<TraceEntry>,
    sweep_counts: OpCounts,
    guard: HashSet<(OpKind, VertexId, VertexId)>,
    pass: usize,
    sweep: usize,
}

fn evaluate(mesh: &TriMesh) -> GraphMetrics {
    PebbleGraph::extract(mesh).metrics()
}

impl<'a> State<'a> {
    fn new(mesh: TriMesh, cfg: &'a OptimizerConfig) -> Self {
        let metrics = evaluate(&mesh);
        let target = optimal_edge_length(mesh.radius());
        Self {
            cfg,
            counts: (metrics.robots, metrics.robots_largest_component),
            metrics,
            mesh,
            target,
            trace: Vec::new(),
            sweep_counts: OpCounts::default(),
            guard: HashSet::new(),
            pass: 0,
            sweep: 0,
        }
    }

    /// Gates a trial mesh and adopts it if accepted.
    fn offer(&mut self, trial: TriMesh, op: OpKind, guide: impl FnOnce(&GraphMetrics) -> bool) -> Gate {
        let m = evaluate(&trial);
        let after = (m.robots, m.robots_largest_component);
        let gate = accept_gate(self.counts, after, op, guide(&m), self.cfg.w);
        if gate != Gate::Reject {
            self.mesh = trial;
            self.metrics = m;
            self.counts = after;
            self.sweep_counts.bump(op);
            self.trace.push(TraceEntry {
                pass: self.pass,
                sweep: self.sweep,
                op,
                robots: after.0,
                robots_largest_component: after.1,
                score: count_score(after.0, after.1, self.cfg.w),
            });
        }
        gate
    }

    fn sweep(&mut self, pass: usize, sweep: usize) {
        if pass != self.pass {
            self.guard.clear();
        }
        self.pass = pass;
        self.sweep = sweep;
        self.sweep_counts = OpCounts::default();
        self.collapse_edges();
        if pass == 1 {
            self.split_edges();
        }
        self.flip_edges();
        self.smooth_vertices();
        if self.cfg.local_opt {
            self.local_opt();
        }
        if self.cfg.global_opt {
            self.global_opt();
        }
    }

    fn edge_key(&self, op: OpKind, e: EdgeId) -> (OpKind, VertexId, VertexId) {
        let (a, b) = self.mesh.edge_endpoints(e);
        (op, a.min(b), a.max(b))
    }

    fn collapse_edges(&mut self) {
        let edges: Vec<EdgeId> = self.mesh.edge_ids().collect();
        for e in edges {
            if !self.mesh.is_edge_alive(e) {
                continue;
            }
            // keep the best of the three placements of the merged vertex
            let mut best: Option<(f64, TriMesh)> = None;
            for to in [CollapseTo::Midpoint, CollapseTo::First, CollapseTo::Second] {
                let mut trial = self.mesh.clone();
                if trial.collapse_edge(e, to).is_err() {
                    continue;
                }
                let m = evaluate(&trial);
                let score = count_score(m.robots, m.robots_largest_component, self.cfg.w);
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, trial));
                }
            }
            if let Some((_, trial)) = best {
                self.offer(trial, OpKind::Collapse, |_| false);
            }
        }
    }

    fn split_edges(&mut self) {
        let threshold = self.cfg.split_factor * self.target;
        let edges: Vec<EdgeId> = self.mesh.edge_ids().collect();
        for e in edges {
            if !self.mesh.is_edge_alive(e) || self.mesh.edge_length(e) <= threshold {
                continue;
            }
            let key = self.edge_key(OpKind::Split, e);
            if self.guard.contains(&key) {
                continue;
            }
            let mut trial = self.mesh.clone();
            if trial.split_edge(e).is_ok() && self.offer(trial, OpKind::Split, |_| false) != Gate::Reject {
                self.guard.insert(key);
            }
        }
    }

    fn cell_energy(&self, mesh: &TriMesh, f: usize) -> f64 {
        amips_energy(&mesh.face_positions(f), self.target, &self.cfg.amips).0
    }

    fn flip_edges(&mut self) {
        let edges: Vec<EdgeId> = self.mesh.edge_ids().collect();
        for e in edges {
            if !self.mesh.is_edge_alive(e) || self.mesh.is_boundary_edge(e) {
                continue;
            }
            let key = self.edge_key(OpKind::Flip, e);
            if self.guard.contains(&key) {
                continue;
            }
            let (Some(fa), Some(fb)) = self.mesh.edge_faces(e) else { continue };
            let before = self.cell_energy(&self.mesh, fa) + self.cell_energy(&self.mesh, fb);
            let mut trial = self.mesh.clone();
            let Ok(ne) = trial.flip_edge(e) else { continue };
            let (Some(ga), Some(gb)) = trial.edge_faces(ne) else { continue };
            let after = self.cell_energy(&trial, ga) + self.cell_energy(&trial, gb);
            let improved = after < before * (1.0 - 1e-9);
            if self.offer(trial, OpKind::Flip, |_| improved) != Gate::Reject {
                self.guard.insert(key);
                let new_key = self.edge_key(OpKind::Flip, ne);
                self.guard.insert(new_key);
            }
        }
    }

    /// One-ring energy of `v` placed at `p`, with its gradient.
    fn ring_energy(&self, v: VertexId, p: Vec2) -> (f64, Vec2) {
        let mut e = 0.0;
        let mut g = Vec2::zeros();
        for f in self.mesh.vertex_faces(v) {
            let ids = self.mesh.face_vertices(f);
            let k = ids.iter().position(|&x| x == v).unwrap();
            let tri = ids.map(|u| if u == v { p } else { self.mesh.position(u) });
            let (ef, gf) = amips_energy(&tri, self.target, &self.cfg.amips);
            e += ef;
            g += gf[k];
        }
        (e, g)
    }

    /// Newton direction on the one-ring energy, restricted to the segment
    /// for boundary vertices.
    fn smoothing_step(&self, v: VertexId) -> Option<Vec2> {
        let p = self.mesh.position(v);
        let (e0, g) = self.ring_energy(v, p);
        if !e0.is_finite() {
            return None;
        }
        let h = 1e-6 * self.target;
        let mut hess = Matrix2::zeros();
        for i in 0..2 {
            let mut dp = Vector2::zeros();
            dp[i] = h;
            let gp = self.ring_energy(v, p + dp).1;
            let gm = self.ring_energy(v, p - dp).1;
            hess.set_column(i, &((gp - gm) / (2.0 * h)));
        }
        let hess = (hess + hess.transpose()) * 0.5;
        let dir = match self.mesh.slide_segment(v) {
            Some((a, b)) => {
                let t = (b - a).normalize();
                let gt = g.dot(&t);
                let ht = t.dot(&(hess * t));
                let s = if ht > 0.0 { -gt / ht } else { -gt.signum() * 0.1 * self.target };
                t * s
            }
            None => match hess.cholesky() {
                Some(ch) => -ch.solve(&g),
                None => {
                    let n = g.norm();
                    if n == 0.0 {
                        return None;
                    }
                    -g / n * (0.1 * self.target)
                }
            },
        };
        // cap the step at a fraction of the target edge
        let cap = 0.5 * self.target;
        let dir = if dir.norm() > cap { dir * (cap / dir.norm()) } else { dir };
        let mut t = 1.0;
        for _ in 0..20 {
            let q = self.mesh.constrain_position(v, p + dir * t);
            if self.ring_energy(v, q).0 < e0 * (1.0 - 1e-12) {
                return Some(q);
            }
            t *= 0.5;
        }
        None
    }

    fn smooth_vertices(&mut self) {
        let verts: Vec<VertexId> = self.mesh.vertex_ids().collect();
        for v in verts {
            if !self.mesh.is_vertex_alive(v) || matches!(self.mesh.tag(v), VertexTag::Corner { .. }) {
                continue;
            }
            let Some(q) = self.smoothing_step(v) else { continue };
            let mut trial = self.mesh.clone();
            if trial.smooth_vertex(v, q).is_ok() {
                self.offer(trial, OpKind::Smooth, |_| true);
            }
        }
    }

    fn local_opt(&mut self) {
        let faces: Vec<usize> = self.mesh.face_ids().collect();
        for f in faces {
            if !self.mesh.is_face_alive(f) {
                continue;
            }
            if !crate::geometry::cell_is_valid(&self.mesh.face_positions(f), self.mesh.radius()) {
                continue;
            }
            let Ok(imp) = solve_local(&self.mesh, f, &self.cfg.ipm) else { continue };
            let mut trial = self.mesh.clone();
            imp.apply(&mut trial);
            let density = self.metrics.density;
            self.offer(trial, OpKind::LocalOpt, |m| m.density > density * (1.0 + 1e-12));
        }
    }

    fn global_opt(&mut self) {
        let Ok(imp) = solve_global(&self.mesh, &self.cfg.ipm) else { return };
        let mut trial = self.mesh.clone();
        imp.apply(&mut trial);
        let density = self.metrics.density;
        self.offer(trial, OpKind::GlobalOpt, |m| m.density > density * (1.0 + 1e-12));
    }
}

#[cfg(test)]
mod tests;
