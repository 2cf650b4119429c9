//! Planar primitives shared by the mesh, workspace and verifier code.

use super::Vec2;

pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Minimum of `|d0 (1 - t) + d1 t|^2` over `t in [0, 1]`, with its argmin.
pub fn segment_quadratic_min(d0: &Vec2, d1: &Vec2) -> (f64, f64) {
    let a = d1 - d0;
    let aa = a.norm_squared();
    let t = if aa <= f64::MIN_POSITIVE {
        0.0
    } else {
        (-d0.dot(&a) / aa).clamp(0.0, 1.0)
    };
    ((d0 + a * t).norm_squared(), t)
}

pub fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 <= f64::MIN_POSITIVE {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    };
    (p - (a + ab * t)).norm()
}

fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    cross(&(b - a), &(c - a))
}

fn on_segment(p: &Vec2, a: &Vec2, b: &Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segments `[a, b]` and `[c, d]` share at least one point.
pub fn segments_intersect(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(c, a, b))
        || (o2 == 0.0 && on_segment(d, a, b))
        || (o3 == 0.0 && on_segment(a, c, d))
        || (o4 == 0.0 && on_segment(b, c, d))
}

pub fn segment_segment_distance(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Signed area of a closed polygon, positive for CCW.
pub fn polygon_signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| cross(&pts[i], &pts[(i + 1) % n])).sum::<f64>()
}

/// Even-odd point in polygon.
pub fn point_in_polygon(p: &Vec2, pts: &[Vec2]) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (pts[i], pts[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x = pj.x + (p.y - pj.y) / (pi.y - pj.y) * (pi.x - pj.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec2>) -> Self {
        let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            min = min.inf(p);
            max = max.sup(p);
        }
        Self { min, max }
    }

    pub fn inflate(&self, by: f64) -> Self {
        Self {
            min: self.min - Vec2::new(by, by),
            max: self.max + Vec2::new(by, by),
        }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_touching_segments() {
        let p = |x, y| Vec2::new(x, y);
        assert!(segments_intersect(&p(0., 0.), &p(2., 2.), &p(0., 2.), &p(2., 0.)));
        assert!(segments_intersect(&p(0., 0.), &p(1., 0.), &p(1., 0.), &p(2., 1.)));
        assert!(!segments_intersect(&p(0., 0.), &p(1., 0.), &p(0., 1.), &p(1., 1.)));
        assert!((segment_segment_distance(&p(0., 0.), &p(1., 0.), &p(0., 1.), &p(1., 1.)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_min_interior_and_clamped() {
        let (m, t) = segment_quadratic_min(&Vec2::new(-1.0, 1.0), &Vec2::new(1.0, 1.0));
        assert!((m - 1.0).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
        let (m, t) = segment_quadratic_min(&Vec2::new(1.0, 0.0), &Vec2::new(2.0, 0.0));
        assert_eq!((m, t), (1.0, 0.0));
    }

    #[test]
    fn polygon_area_and_containment() {
        let sq = [Vec2::new(0., 0.), Vec2::new(1., 0.), Vec2::new(1., 1.), Vec2::new(0., 1.)];
        assert!((polygon_signed_area(&sq) - 1.0).abs() < 1e-15);
        assert!(point_in_polygon(&Vec2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(&Vec2::new(1.5, 0.5), &sq));
    }
}
