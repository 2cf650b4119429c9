//! Primal-dual interior-point solver that shrinks valid cells while keeping
//! them valid.
//!
//! The decision variables are positions of a set of free mesh vertices
//! (boundary vertices move along their segment, one coordinate each) and one
//! certificate multiplier per loop-edge pair of every valid cell in scope.
//! The objective is the total area of the cells that were valid at the
//! start; the inequality constraints are the certificate residuals of those
//! cells and the orientation residual of every cell in scope. The valid set
//! is frozen for the duration of a solve.
//!
//! Internally all lengths are expressed in units of the robot radius.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::geometry::{
    cell_is_valid, cond2_constraint_residuals, corner_points, find_alpha4, flip_residual_grad,
    is_degenerate, triangle_area_grad, Vec2,
};
use crate::trimesh::{FaceId, TriMesh, VertexId, VertexTag};

#[derive(Debug, Clone, PartialEq)]
pub struct IpmConfig {
    pub max_iters: usize,
    /// Stopping tolerance on the KKT residual, in units of `r^2`.
    pub kkt_tol: f64,
    pub mu_factor: f64,
    pub initial_mu: f64,
    pub fraction_to_boundary: f64,
    pub max_backtracks: usize,
    pub damping: f64,
}

impl Default for IpmConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            kkt_tol: 1e-8,
            mu_factor: 0.2,
            initial_mu: 1.0,
            fraction_to_boundary: 0.995,
            max_backtracks: 40,
            damping: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmIteration {
    pub iter: usize,
    pub objective: f64,
    pub kkt: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IpmLog {
    pub iterations: Vec<IpmIteration>,
}

impl IpmLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,objective,kkt_residual,mu\n");
        for it in &self.iterations {
            let _ = writeln!(s, "{},{},{},{}", it.iter, it.objective, it.kkt, it.mu);
        }
        s
    }
}

/// New positions for the free vertices of a successful solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub moves: Vec<(VertexId, Vec2)>,
    pub objective_before: f64,
    pub objective_after: f64,
    pub log: IpmLog,
}

impl Improvement {
    pub fn apply(&self, mesh: &mut TriMesh) {
        for &(v, p) in &self.moves {
            mesh.set_position_unchecked(v, p);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoImprovement {
    /// A cell in scope is flipped or degenerate at the start.
    InfeasibleStart,
    /// Nothing is free to move.
    NoVariables,
    /// The solver made no measurable progress.
    Stalled(IpmLog),
}

pub type SolveResult = Result<Improvement, NoImprovement>;

/// Optimizes the three vertices of one cell against its 1-ring.
pub fn solve_local(mesh: &TriMesh, face: FaceId, cfg: &IpmConfig) -> SolveResult {
    let vars: Vec<VertexId> = mesh.face_vertices(face).to_vec();
    solve_vertices(mesh, &vars, cfg)
}

/// Optimizes every movable vertex of the mesh.
pub fn solve_global(mesh: &TriMesh, cfg: &IpmConfig) -> SolveResult {
    let vars: Vec<VertexId> = mesh.vertex_ids().collect();
    solve_vertices(mesh, &vars, cfg)
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Free { col: usize },
    Slide { col: usize, dir: Vec2 },
    Fixed,
}

struct ScopeFace {
    verts: [VertexId; 3],
    /// First multiplier column for originally valid cells.
    alpha_col: Option<usize>,
}

struct Problem {
    origin: Vec2,
    r: f64,
    /// Per mesh vertex (indexed by id), how it maps to variables.
    slots: Vec<Slot>,
    /// Scaled start position of every vertex touched by the scope.
    base: Vec<Vec2>,
    faces: Vec<ScopeFace>,
    n: usize,
    n_cons: usize,
}

struct Eval {
    f: f64,
    grad: DVector<f64>,
    g: DVector<f64>,
    /// Sparse constraint gradients: one list of `(col, value)` per row.
    jac: Vec<Vec<(usize, f64)>>,
}

impl Problem {
    fn pos(&self, z: &DVector<f64>, v: VertexId) -> Vec2 {
        match self.slots[v] {
            Slot::Free { col } => self.base[v] + Vec2::new(z[col], z[col + 1]),
            Slot::Slide { col, dir } => self.base[v] + dir * z[col],
            Slot::Fixed => self.base[v],
        }
    }

    fn scatter(&self, row: &mut Vec<(usize, f64)>, v: VertexId, g: Vec2) {
        match self.slots[v] {
            Slot::Free { col } => {
                row.push((col, g.x));
                row.push((col + 1, g.y));
            }
            Slot::Slide { col, dir } => row.push((col, g.dot(&dir))),
            Slot::Fixed => {}
        }
    }

    /// Objective, constraints and first derivatives. `None` if a cell is
    /// degenerate at `z`.
    fn eval(&self, z: &DVector<f64>) -> Option<Eval> {
        let mut f = 0.0;
        let mut grad = DVector::zeros(self.n);
        let mut g = DVector::zeros(self.n_cons);
        let mut jac = Vec::with_capacity(self.n_cons);
        let mut row = 0;
        for sf in &self.faces {
            let p = sf.verts.map(|v| self.pos(z, v));
            let (flip, dflip) = flip_residual_grad(&p);
            g[row] = flip;
            let mut jr = Vec::new();
            for i in 0..3 {
                self.scatter(&mut jr, sf.verts[i], dflip[i]);
            }
            jac.push(jr);
            row += 1;
            let Some(ac) = sf.alpha_col else { continue };
            let (area, darea) = triangle_area_grad(&p);
            f += area;
            let mut gr = Vec::new();
            for i in 0..3 {
                self.scatter(&mut gr, sf.verts[i], darea[i]);
            }
            for (c, val) in gr {
                grad[c] += val;
            }
            let alpha = [z[ac], z[ac + 1], z[ac + 2]];
            let res = cond2_constraint_residuals(&p, &alpha, 1.0).ok()?;
            for j in 0..6 {
                g[row] = res.values[j];
                let mut jr = Vec::new();
                for i in 0..3 {
                    self.scatter(&mut jr, sf.verts[i], res.grad_verts[j][i]);
                }
                for k in 0..3 {
                    if res.grad_alpha[j][k] != 0.0 {
                        jr.push((ac + k, res.grad_alpha[j][k]));
                    }
                }
                jac.push(jr);
                row += 1;
            }
        }
        debug_assert_eq!(row, self.n_cons);
        Some(Eval { f, grad, g, jac })
    }

    fn unscale(&self, p: Vec2) -> Vec2 {
        p * self.r + self.origin
    }

    /// Closed-form audit of a candidate: no cell in scope degenerate or
    /// flipped, every originally valid cell still valid.
    fn audit(&self, z: &DVector<f64>) -> bool {
        self.faces.iter().all(|sf| {
            let p = sf.verts.map(|v| self.unscale(self.pos(z, v)));
            let q = sf.verts.map(|v| self.pos(z, v));
            if is_degenerate(&q) || flip_residual_grad(&q).0 <= 0.0 {
                return false;
            }
            sf.alpha_col.is_none() || cell_is_valid(&p, self.r)
        })
    }
}

fn strictly_certified(v: &[Vec2; 3]) -> Option<[f64; 3]> {
    let c = corner_points(v, 1.0).ok()?;
    let cert = find_alpha4(&c, 1.0)?;
    let res = cond2_constraint_residuals(v, &cert.alpha4, 1.0).ok()?;
    res.values.iter().all(|&x| x > 1e-9).then_some(cert.alpha4)
}

fn solve_vertices(mesh: &TriMesh, candidates: &[VertexId], cfg: &IpmConfig) -> SolveResult {
    let r = mesh.radius();
    let scaled = |p: Vec2, origin: Vec2| (p - origin) / r;
    let mut cand: Vec<VertexId> = candidates.iter().copied().filter(|&v| !matches!(mesh.tag(v), VertexTag::Corner { .. })).collect();
    cand.sort_unstable();
    cand.dedup();
    let origin = candidates.first().map_or(Vec2::zeros(), |&v| mesh.position(v));

    // cells touched by the candidate vertices
    let mut face_set = BTreeSet::new();
    for &v in &cand {
        face_set.extend(mesh.vertex_faces(v));
    }
    for &f in &face_set {
        let p = mesh.face_positions(f).map(|x| scaled(x, origin));
        if is_degenerate(&p) || flip_residual_grad(&p).0 <= 0.0 {
            return Err(NoImprovement::InfeasibleStart);
        }
    }
    // cells valid now but without a strictly positive certificate cannot be
    // part of an interior start; their vertices are held fixed instead
    let mut certs = std::collections::BTreeMap::new();
    let mut frozen = BTreeSet::new();
    for &f in &face_set {
        let p = mesh.face_positions(f);
        if cell_is_valid(&p, r) {
            match strictly_certified(&p.map(|x| scaled(x, origin))) {
                Some(a) => {
                    certs.insert(f, a);
                }
                None => frozen.extend(mesh.face_vertices(f)),
            }
        }
    }
    cand.retain(|v| !frozen.contains(v));
    if cand.is_empty() {
        return Err(NoImprovement::NoVariables);
    }
    let mut face_set = BTreeSet::new();
    for &v in &cand {
        face_set.extend(mesh.vertex_faces(v));
    }

    let mut slots = vec![Slot::Fixed; mesh.vertex_capacity()];
    let mut base = vec![Vec2::zeros(); mesh.vertex_capacity()];
    let mut n = 0;
    for &v in &cand {
        slots[v] = match mesh.slide_segment(v) {
            Some((a, b)) => {
                let s = Slot::Slide { col: n, dir: (b - a).normalize() };
                n += 1;
                s
            }
            None => {
                let s = Slot::Free { col: n };
                n += 2;
                s
            }
        };
    }
    let mut faces = Vec::new();
    let mut z0 = Vec::new();
    let mut n_cons = 0;
    for &f in &face_set {
        let verts = mesh.face_vertices(f);
        for &v in &verts {
            base[v] = scaled(mesh.position(v), origin);
        }
        let alpha_col = certs.get(&f).map(|a| {
            z0.extend_from_slice(a);
            let c = n;
            n += 3;
            c
        });
        n_cons += if alpha_col.is_some() { 7 } else { 1 };
        faces.push(ScopeFace { verts, alpha_col });
    }
    let n_pos = n - z0.len();
    let mut z = DVector::zeros(n);
    for (i, a) in z0.iter().enumerate() {
        z[n_pos + i] = *a;
    }
    let prob = Problem { origin, r, slots, base, faces, n, n_cons };
    run_ipm(&prob, z, cfg, &cand)
}

fn barrier_merit(e: &Eval, mu: f64) -> f64 {
    e.f - mu * e.g.iter().map(|x| x.ln()).sum::<f64>()
}

fn run_ipm(prob: &Problem, mut z: DVector<f64>, cfg: &IpmConfig, vars: &[VertexId]) -> SolveResult {
    let Some(mut ev) = prob.eval(&z) else { return Err(NoImprovement::InfeasibleStart) };
    if ev.g.iter().any(|&x| x <= 0.0) {
        return Err(NoImprovement::InfeasibleStart);
    }
    let f0 = ev.f;
    let mut mu = cfg.initial_mu;
    let mut lambda = ev.g.map(|g| mu / g);
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut log = IpmLog::default();
    let m = prob.n_cons;
    for iter in 0..cfg.max_iters {
        // KKT residual: stationarity and complementarity
        let mut stat = ev.grad.clone();
        for (i, row) in ev.jac.iter().enumerate() {
            for &(c, v) in row {
                stat[c] -= lambda[i] * v;
            }
        }
        let comp = (0..m).map(|i| (lambda[i] * ev.g[i]).abs()).fold(0.0, f64::max);
        let kkt = stat.amax().max(comp);
        log.iterations.push(IpmIteration { iter, objective: ev.f * prob.r * prob.r, kkt, mu });
        if kkt < cfg.kkt_tol {
            break;
        }

        // Gauss-Newton barrier Hessian and gradient
        let mut w = DMatrix::<f64>::zeros(prob.n, prob.n);
        let mut rhs = -ev.grad.clone();
        for (i, row) in ev.jac.iter().enumerate() {
            let s = lambda[i] / ev.g[i];
            let t = mu / ev.g[i];
            for &(a, va) in row {
                rhs[a] += t * va;
                for &(b, vb) in row {
                    w[(a, b)] += s * va * vb;
                }
            }
        }
        let mut damping = cfg.damping;
        let dz = loop {
            let mut wd = w.clone();
            for i in 0..prob.n {
                wd[(i, i)] += damping;
            }
            if let Some(ch) = wd.cholesky() {
                break ch.solve(&rhs);
            }
            damping *= 100.0;
            if damping > 1e6 {
                return finish(prob, f0, best, log, vars);
            }
        };
        let jdz: DVector<f64> = DVector::from_iterator(
            m,
            ev.jac.iter().map(|row| row.iter().map(|&(c, v)| v * dz[c]).sum::<f64>()),
        );
        let dlambda = DVector::from_iterator(
            m,
            (0..m).map(|i| mu / ev.g[i] - lambda[i] - lambda[i] / ev.g[i] * jdz[i]),
        );

        // fraction to the boundary on the linearized constraints and duals
        let tau = cfg.fraction_to_boundary;
        let mut step: f64 = 1.0;
        for i in 0..m {
            if jdz[i] < 0.0 {
                step = step.min(-tau * ev.g[i] / jdz[i]);
            }
        }
        let mut step_l: f64 = 1.0;
        for i in 0..m {
            if dlambda[i] < 0.0 {
                step_l = step_l.min(-tau * lambda[i] / dlambda[i]);
            }
        }

        let phi0 = barrier_merit(&ev, mu);
        let slope = -rhs.dot(&dz);
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let zt = &z + &dz * step;
            if let Some(et) = prob.eval(&zt) {
                if et.g.iter().all(|&x| x > 0.0) {
                    let phi = barrier_merit(&et, mu);
                    if phi <= phi0 + 1e-4 * step * slope.min(0.0) {
                        accepted = Some((zt, et));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((zt, et)) = accepted else {
            // no acceptable step at this barrier level: tighten and retry
            mu *= cfg.mu_factor;
            if mu < 1e-14 {
                break;
            }
            continue;
        };
        z = zt;
        ev = et;
        lambda += &dlambda * step_l.min(1.0);
        for l in lambda.iter_mut() {
            *l = l.max(1e-20);
        }
        if best.as_ref().is_none_or(|b| ev.f < b.0) && prob.audit(&z) {
            best = Some((ev.f, z.clone()));
        }
        mu *= cfg.mu_factor;
    }
    finish(prob, f0, best, log, vars)
}

fn finish(
    prob: &Problem,
    f0: f64,
    best: Option<(f64, DVector<f64>)>,
    log: IpmLog,
    vars: &[VertexId],
) -> SolveResult {
    let scale = prob.r * prob.r;
    match best {
        Some((f, z)) if (f0 - f) * scale > 1e-12 => Ok(Improvement {
            moves: vars.iter().map(|&v| (v, prob.unscale(prob.pos(&z, v)))).collect(),
            objective_before: f0 * scale,
            objective_after: f * scale,
            log,
        }),
        _ => Err(NoImprovement::Stalled(log)),
    }
}

#[cfg(test)]
mod tests;
