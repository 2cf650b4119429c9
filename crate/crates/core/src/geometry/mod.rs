//! Closed-form cell predicates and constraint functions.
//!
//! A mesh cell is a CCW triangle `v[0], v[1], v[2]`. Its robots sit on the
//! three *corner points*: the points inside the cell at distance `r` from the
//! two edges meeting at each vertex. Equivalently the corners are the
//! vertices of the triangle offset inward by `r`.
//!
//! A cell is *valid* when its corner disks do not overlap (condition 1) and a
//! full cyclic move along the three loop edges is collision-free
//! (condition 2). Condition 2 has a polynomial certificate form with one
//! extra scalar per loop-edge pair, which is what the constrained optimizer
//! works with.

pub mod primitives;

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

pub use primitives::*;

pub type Vec2 = Vector2<f64>;

/// Relative threshold under which a triangle is treated as degenerate.
pub const DEGENERACY_REL: f64 = 1e-12;

/// Relative slack on squared clearances in the condition checks.
pub const CLEARANCE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triangle: corner points are undefined")]
    DegenerateTriangle,
}

/// Side length of the smallest equilateral cell that satisfies condition 2.
pub fn optimal_edge_length(r: f64) -> f64 {
    (2.0 * 3f64.sqrt() + 4.0) * r
}

/// Area of the smallest valid equilateral cell.
pub fn optimal_cell_area(r: f64) -> f64 {
    let l = optimal_edge_length(r);
    3f64.sqrt() / 4.0 * l * l
}

pub fn is_degenerate(v: &[Vec2; 3]) -> bool {
    let longest = (v[1] - v[0])
        .norm_squared()
        .max((v[2] - v[1]).norm_squared())
        .max((v[0] - v[2]).norm_squared());
    flip_residual(v).abs() <= DEGENERACY_REL * longest
}

/// Twice the signed area. Non-negative iff the cell is not flipped.
pub fn flip_residual(v: &[Vec2; 3]) -> f64 {
    cross(&(v[1] - v[0]), &(v[2] - v[0]))
}

pub fn flip_residual_grad(v: &[Vec2; 3]) -> (f64, [Vec2; 3]) {
    let a = v[1] - v[0];
    let b = v[2] - v[0];
    let da = Vec2::new(b.y, -b.x);
    let db = Vec2::new(-a.y, a.x);
    (cross(&a, &b), [-(da + db), da, db])
}

pub fn triangle_area(v: &[Vec2; 3]) -> f64 {
    0.5 * flip_residual(v)
}

pub fn triangle_area_grad(v: &[Vec2; 3]) -> (f64, [Vec2; 3]) {
    let (f, g) = flip_residual_grad(v);
    (0.5 * f, [0.5 * g[0], 0.5 * g[1], 0.5 * g[2]])
}

/// Corner points of a cell, one per vertex.
pub fn corner_points(v: &[Vec2; 3], r: f64) -> Result<[Vec2; 3], GeometryError> {
    if is_degenerate(v) {
        return Err(GeometryError::DegenerateTriangle);
    }
    Ok(std::array::from_fn(|i| {
        let p = v[i];
        let e1 = v[(i + 1) % 3] - p;
        let e2 = v[(i + 2) % 3] - p;
        let n = e1 * e2.norm() + e2 * e1.norm();
        p + n * (r / cross(&e1, &e2).abs())
    }))
}

/// Corner points together with `jac[i][k] = d corner_i / d v_k`.
pub fn corner_points_jacobian(
    v: &[Vec2; 3],
    r: f64,
) -> Result<([Vec2; 3], [[Matrix2<f64>; 3]; 3]), GeometryError> {
    if is_degenerate(v) {
        return Err(GeometryError::DegenerateTriangle);
    }
    let mut pts = [Vec2::zeros(); 3];
    let mut jac = [[Matrix2::zeros(); 3]; 3];
    for i in 0..3 {
        let (ia, ib) = ((i + 1) % 3, (i + 2) % 3);
        let p = v[i];
        let e1 = v[ia] - p;
        let e2 = v[ib] - p;
        let (l1, l2) = (e1.norm(), e2.norm());
        let raw = cross(&e1, &e2);
        let sign = raw.signum();
        let d = raw.abs();
        let n = e1 * l2 + e2 * l1;
        pts[i] = p + n * (r / d);

        let dn_de1 = Matrix2::identity() * l2 + e2 * (e1 / l1).transpose();
        let dn_de2 = Matrix2::identity() * l1 + e1 * (e2 / l2).transpose();
        let dd_de1 = Vec2::new(e2.y, -e2.x) * sign;
        let dd_de2 = Vec2::new(-e1.y, e1.x) * sign;
        let q1 = (dn_de1 / d - n * dd_de1.transpose() / (d * d)) * r;
        let q2 = (dn_de2 / d - n * dd_de2.transpose() / (d * d)) * r;
        jac[i][ia] = q1;
        jac[i][ib] = q2;
        jac[i][i] = Matrix2::identity() - q1 - q2;
    }
    Ok((pts, jac))
}

/// Position of robot `i` after a fraction `t` of the forward cyclic move.
pub fn cyclic_position(c: &[Vec2; 3], i: usize, t: f64) -> Vec2 {
    c[i] * (1.0 - t) + c[(i + 1) % 3] * t
}

/// Closed-form minimum over `t in [0,1]` of the squared separation of robots
/// `i` and `i+1` during a forward cyclic move. Returns `(min_sq, t_min)`.
pub fn cyclic_pair_min_sq(c: &[Vec2; 3], i: usize) -> (f64, f64) {
    let d0 = c[i] - c[(i + 1) % 3];
    let d1 = c[(i + 1) % 3] - c[(i + 2) % 3];
    segment_quadratic_min(&d0, &d1)
}

fn separation_ok(sq: f64, r: f64) -> bool {
    sq >= 4.0 * r * r * (1.0 - CLEARANCE_REL_TOL)
}

/// Condition 1: corner disks are pairwise disjoint.
pub fn check_condition1(c: &[Vec2; 3], r: f64) -> bool {
    (0..3).all(|i| separation_ok((c[i] - c[(i + 1) % 3]).norm_squared(), r))
}

/// Condition 2: the forward cyclic move is collision-free.
pub fn check_condition2(c: &[Vec2; 3], r: f64) -> bool {
    (0..3).all(|i| separation_ok(cyclic_pair_min_sq(c, i).0, r))
}

/// Smallest squared separation over the cyclic move minus `4r^2`.
pub fn condition2_margin(c: &[Vec2; 3], r: f64) -> f64 {
    (0..3)
        .map(|i| cyclic_pair_min_sq(c, i).0)
        .fold(f64::INFINITY, f64::min)
        - 4.0 * r * r
}

/// Radius of the inscribed circle.
pub fn inradius(v: &[Vec2; 3]) -> f64 {
    let perimeter: f64 = (0..3).map(|i| (v[(i + 1) % 3] - v[i]).norm()).sum();
    2.0 * triangle_area(v) / perimeter
}

/// Validity of a cell given its mesh vertices. Degenerate or flipped cells
/// are never valid, and neither are cells whose inset by `r` is empty: their
/// corner formula yields a point-reflected triangle that can still pass the
/// distance tests.
pub fn cell_is_valid(v: &[Vec2; 3], r: f64) -> bool {
    if flip_residual(v) <= 0.0 || inradius(v) <= r {
        return false;
    }
    match corner_points(v, r) {
        Ok(c) => check_condition1(&c, r) && check_condition2(&c, r),
        Err(_) => false,
    }
}

/// Coefficients `(a, b, c)` of the squared pair separation written as
/// `a s^2 + 2 b s + c + 4r^2` with `s = 2t - 1`, for the pair `(i, i+1)`.
fn pair_coefficients(c: &[Vec2; 3], i: usize, r: f64) -> (f64, f64, f64, Vec2, Vec2) {
    let (e1, m, e2) = (c[i], c[(i + 1) % 3], c[(i + 2) % 3]);
    let u = m * 2.0 - e1 - e2;
    let w = e1 - e2;
    (
        0.25 * u.norm_squared(),
        0.25 * w.dot(&u),
        0.25 * w.norm_squared() - 4.0 * r * r,
        u,
        w,
    )
}

/// Certificate product residual for pair `i` given corners and `alpha4`.
pub fn certificate_residual(c: &[Vec2; 3], i: usize, alpha4: f64, r: f64) -> f64 {
    let (a, b, cc, _, _) = pair_coefficients(c, i, r);
    (a + alpha4) * (cc - alpha4) - b * b
}

/// One multiplier per loop-edge pair proving condition 2.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Cond2Certificate {
    pub alpha4: [f64; 3],
}

/// The six certificate residuals of a cell with their gradients.
///
/// Residual `2k` is the product inequality for pair `k`, residual `2k+1` is
/// `alpha4[k] >= 0`. Gradients with respect to the mesh vertices go through
/// the corner-point map.
#[derive(Debug, Clone)]
pub struct Cond2Residuals {
    pub values: [f64; 6],
    pub grad_verts: [[Vec2; 3]; 6],
    pub grad_alpha: [[f64; 3]; 6],
}

pub fn cond2_constraint_residuals(
    v: &[Vec2; 3],
    alpha4: &[f64; 3],
    r: f64,
) -> Result<Cond2Residuals, GeometryError> {
    let (c, jac) = corner_points_jacobian(v, r)?;
    let mut out = Cond2Residuals {
        values: [0.0; 6],
        grad_verts: [[Vec2::zeros(); 3]; 6],
        grad_alpha: [[0.0; 3]; 6],
    };
    for k in 0..3 {
        let al = alpha4[k];
        let (a, b, cc, u, w) = pair_coefficients(&c, k, r);
        out.values[2 * k] = (a + al) * (cc - al) - b * b;
        let dr_du = u * (0.5 * (cc - al)) - w * (0.5 * b);
        let dr_dw = u * (-0.5 * b) + w * (0.5 * (a + al));
        let (ie1, im, ie2) = (k, (k + 1) % 3, (k + 2) % 3);
        let mut dr_dc = [Vec2::zeros(); 3];
        dr_dc[im] = dr_du * 2.0;
        dr_dc[ie1] = -dr_du + dr_dw;
        dr_dc[ie2] = -dr_du - dr_dw;
        for kk in 0..3 {
            let mut g = Vec2::zeros();
            for i in 0..3 {
                g += jac[i][kk].transpose() * dr_dc[i];
            }
            out.grad_verts[2 * k][kk] = g;
        }
        out.grad_alpha[2 * k][k] = cc - a - 2.0 * al;
        out.values[2 * k + 1] = al;
        out.grad_alpha[2 * k + 1][k] = 1.0;
    }
    Ok(out)
}

/// Searches a certificate multiplier for every pair.
///
/// For each pair the product residual is concave in `alpha4`, so
/// `min(residual, alpha4)` is unimodal on `[0, c]` and a golden-section
/// search finds its maximizer. The closed-form maximizer of the residual
/// alone is also evaluated so that certificates on the boundary of the
/// feasible set are not missed.
pub fn find_alpha4(c: &[Vec2; 3], r: f64) -> Option<Cond2Certificate> {
    let mut alpha4 = [0.0; 3];
    for (k, slot) in alpha4.iter_mut().enumerate() {
        let (a, b, cc, _, _) = pair_coefficients(c, k, r);
        let residual = |al: f64| (a + al) * (cc - al) - b * b;
        let scale = (a.abs() + cc.abs() + 4.0 * r * r).powi(2);
        let tol = CLEARANCE_REL_TOL * scale;
        let hi = cc.max(0.0);
        let objective = |al: f64| residual(al).min(al);
        let best_interior = golden_section_max(objective, 0.0, hi, 200);
        let closed = (0.5 * (cc - a)).clamp(0.0, hi);
        let candidates = [best_interior, closed, 0.0, hi];
        let pick = candidates
            .iter()
            .copied()
            .filter(|&al| residual(al) >= -tol)
            .max_by(|x, y| objective(*x).total_cmp(&objective(*y)))?;
        *slot = pick;
    }
    Some(Cond2Certificate { alpha4 })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if hi - lo <= f64::EPSILON * (1.0 + hi.abs()) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Parameters of the shape energy that guides flips and smoothing.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AmipsParams {
    /// Exponent on the conformal distortion term.
    pub exponent: f64,
    /// Weight of the area-deviation term `det J + 1/det J - 2`.
    pub area_weight: f64,
}

impl Default for AmipsParams {
    fn default() -> Self {
        Self {
            exponent: 1.0,
            area_weight: 0.5,
        }
    }
}

impl AmipsParams {
    /// Energy value at the identity map.
    pub fn minimum(&self) -> f64 {
        self.exponent.exp()
    }
}

/// Conformal AMIPS distortion of the affine map taking the equilateral
/// target of side `target_side` onto `v`, plus an area-deviation term.
///
/// Flipped or degenerate cells evaluate to `+inf` with zero gradient.
pub fn amips_energy(v: &[Vec2; 3], target_side: f64, p: &AmipsParams) -> (f64, [Vec2; 3]) {
    if flip_residual(v) <= 0.0 || is_degenerate(v) {
        return (f64::INFINITY, [Vec2::zeros(); 3]);
    }
    let h = target_side * 3f64.sqrt() / 2.0;
    let dt = Matrix2::new(target_side, 0.5 * target_side, 0.0, h);
    let dt_inv = dt.try_inverse().expect("target triangle is regular");
    let ds = Matrix2::from_columns(&[v[1] - v[0], v[2] - v[0]]);
    let j = ds * dt_inv;
    let det = j.determinant();
    let frob = j.norm_squared();
    let cof = Matrix2::new(j[(1, 1)], -j[(1, 0)], -j[(0, 1)], j[(0, 0)]);
    let conformal = frob / (2.0 * det);
    let e1 = (p.exponent * conformal).exp();
    let e2 = p.area_weight * (det + 1.0 / det - 2.0);
    let dconf = j / det - cof * (frob / (2.0 * det * det));
    let d_dj = dconf * (p.exponent * e1) + cof * (p.area_weight * (1.0 - 1.0 / (det * det)));
    let d_dds = d_dj * dt_inv.transpose();
    let g1 = d_dds.column(0).into_owned();
    let g2 = d_dds.column(1).into_owned();
    (e1 + e2, [-(g1 + g2), g1, g2])
}
