//! Planar primitives: vectors, polygons, segment predicates, and the
//! `z -> ±z + c` isometries that glue charts together.

use serde::{Deserialize, Serialize};

/// Absolute tolerance for lengths and angles throughout the crate.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub const fn v2(x: f64, y: f64) -> Vec2 {
    Vec2 { x, y }
}

impl Vec2 {
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
    pub fn norm2(self) -> f64 {
        self.x * self.x + self.y * self.y
    }
    pub fn unit(self) -> Vec2 {
        let n = self.norm();
        v2(self.x / n, self.y / n)
    }
    pub fn perp(self) -> Vec2 {
        v2(-self.y, self.x)
    }
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }
    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        v2(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
    pub fn scale(self, s: f64) -> Vec2 {
        v2(self.x * s, self.y * s)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        v2(self.x + o.x, self.y + o.y)
    }
}
impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        v2(self.x - o.x, self.y - o.y)
    }
}
impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        v2(-self.x, -self.y)
    }
}
impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        v2(self.x * s, self.y * s)
    }
}

/// Counterclockwise angle from `a` to `b`, in `[0, 2π)`.
pub fn angle_ccw(a: Vec2, b: Vec2) -> f64 {
    let ang = a.cross(b).atan2(a.dot(b));
    if ang < 0.0 {
        ang + std::f64::consts::TAU
    } else {
        ang
    }
}

/// Orientation-preserving plane isometry of the form `p -> sign·p + t`
/// with `sign ∈ {+1, -1}` (half-translation transition functions).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub sign: f64,
    pub t: Vec2,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        sign: 1.0,
        t: Vec2 { x: 0.0, y: 0.0 },
    };
    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.scale(self.sign) + self.t
    }
    /// Apply only the linear part (for directions).
    pub fn apply_dir(&self, d: Vec2) -> Vec2 {
        d.scale(self.sign)
    }
    /// `self ∘ other` (other applied first).
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            sign: self.sign * other.sign,
            t: other.t.scale(self.sign) + self.t,
        }
    }
    pub fn inverse(&self) -> Isometry {
        // p = s q + t  =>  q = s p - s t
        Isometry {
            sign: self.sign,
            t: self.t.scale(-self.sign),
        }
    }
}

/// Shoelace signed area (positive for counterclockwise vertex order).
pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.cross(b);
    }
    s * 0.5
}

pub fn centroid(pts: &[Vec2]) -> Vec2 {
    let mut c = v2(0.0, 0.0);
    for p in pts {
        c = c + *p;
    }
    c.scale(1.0 / pts.len() as f64)
}

/// Distance from point `p` to segment `[a, b]`.
pub fn seg_point_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Proper intersection of open segments (a,b) and (c,d): each segment's
/// endpoints lie strictly on opposite sides of the other's line, beyond a
/// distance tolerance. Touching within tolerance does not count.
pub fn segments_cross_properly(a: Vec2, b: Vec2, c: Vec2, d: Vec2, tol: f64) -> bool {
    let lab = (b - a).norm();
    let lcd = (d - c).norm();
    if lab < tol || lcd < tol {
        return false;
    }
    // cross((b-a), p-a) = lab * signed_distance(p, line ab).
    let s1 = (b - a).cross(c - a);
    let s2 = (b - a).cross(d - a);
    let s3 = (d - c).cross(a - c);
    let s4 = (d - c).cross(b - c);
    let opp = |x: f64, y: f64, t: f64| (x > t && y < -t) || (x < -t && y > t);
    opp(s1, s2, lab * tol) && opp(s3, s4, lcd * tol)
}

/// Intersection parameter of segment `a + t(b-a)` with segment `[c, d]`,
/// if the segments intersect (including endpoints, within tolerance).
pub fn seg_seg_intersection(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() < 1e-14 * r.norm().max(1.0) * s.norm().max(1.0) {
        return None;
    }
    let t = (c - a).cross(s) / denom;
    let u = (c - a).cross(r) / denom;
    if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

/// Winding-number point-in-polygon test for the open interior.
pub fn point_in_polygon(pts: &[Vec2], p: Vec2) -> bool {
    let mut winding = 0i32;
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Distance from `p` to the polygon boundary.
pub fn polygon_boundary_distance(pts: &[Vec2], p: Vec2) -> f64 {
    let n = pts.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        d = d.min(seg_point_distance(pts[i], pts[(i + 1) % n], p));
    }
    d
}

/// Point in closed polygon, with tolerance on the boundary.
pub fn point_in_polygon_closed(pts: &[Vec2], p: Vec2, tol: f64) -> bool {
    point_in_polygon(pts, p) || polygon_boundary_distance(pts, p) <= tol
}

/// Whether the closed segment `[a, b]` stays inside the closed polygon.
/// Exact for simple polygons up to tolerance: no proper edge crossing and
/// all probe midpoints inside.
pub fn segment_in_polygon(pts: &[Vec2], a: Vec2, b: Vec2, tol: f64) -> bool {
    let n = pts.len();
    if !point_in_polygon_closed(pts, a, tol) || !point_in_polygon_closed(pts, b, tol) {
        return false;
    }
    for i in 0..n {
        if segments_cross_properly(a, b, pts[i], pts[(i + 1) % n], tol) {
            return false;
        }
    }
    // Probe points guard against exit-and-reenter through vertices.
    for k in 1..8 {
        let q = a.lerp(b, k as f64 / 8.0);
        if !point_in_polygon_closed(pts, q, tol.max(1e-12)) {
            return false;
        }
    }
    true
}

/// Simplicity check: no two non-adjacent edges intersect and no edge
/// degenerates.
pub fn polygon_is_simple(pts: &[Vec2], tol: f64) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if pts[i].dist(pts[(i + 1) % n]) <= tol {
            return false;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if adjacent {
                continue;
            }
            if segments_cross_properly(a, b, c, d, tol) {
                return false;
            }
            // Non-adjacent edges must not even touch.
            if seg_point_distance(a, b, c) <= tol
                || seg_point_distance(a, b, d) <= tol
                || seg_point_distance(c, d, a) <= tol
                || seg_point_distance(c, d, b) <= tol
            {
                return false;
            }
        }
    }
    true
}

/// Largest pairwise vertex distance.
pub fn polygon_diameter(pts: &[Vec2]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(pts[i].dist(pts[j]));
        }
    }
    d
}

/// Interior angle at vertex `v` of a counterclockwise simple polygon,
/// in `(0, 2π)`.
pub fn interior_angle(pts: &[Vec2], v: usize) -> f64 {
    let n = pts.len();
    let prev = pts[(v + n - 1) % n];
    let cur = pts[v];
    let next = pts[(v + 1) % n];
    let out_dir = next - cur;
    let back_dir = prev - cur;
    angle_ccw(out_dir, back_dir)
}

/// Ear-clipping triangulation of a simple polygon (counterclockwise).
pub fn triangulate(pts: &[Vec2]) -> Vec<[Vec2; 3]> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::new();
    let mut guard = 0usize;
    while idx.len() > 3 {
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            if (b - a).cross(c - b) <= 1e-14 {
                continue; // reflex or flat
            }
            let mut ear = true;
            for &io in &idx {
                if io == ia || io == ib || io == ic {
                    continue;
                }
                let p = pts[io];
                if tri_contains(a, b, c, p) {
                    ear = false;
                    break;
                }
            }
            if ear {
                tris.push([a, b, c]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        guard += 1;
        if !clipped || guard > 10_000 {
            break; // degenerate input; fall through with what we have
        }
    }
    if idx.len() == 3 {
        tris.push([pts[idx[0]], pts[idx[1]], pts[idx[2]]]);
    }
    tris
}

fn tri_contains(a: Vec2, b: Vec2, c: Vec2, p: Vec2) -> bool {
    let d1 = (b - a).cross(p - a);
    let d2 = (c - b).cross(p - b);
    let d3 = (a - c).cross(p - c);
    d1 >= -1e-14 && d2 >= -1e-14 && d3 >= -1e-14
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_and_angles_of_unit_square() {
        let sq = vec![v2(0.0, 0.0), v2(1.0, 0.0), v2(1.0, 1.0), v2(0.0, 1.0)];
        assert!((signed_area(&sq) - 1.0).abs() < 1e-15);
        for v in 0..4 {
            assert!((interior_angle(&sq, v) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
        assert!(polygon_is_simple(&sq, EPS));
    }

    #[test]
    fn reflex_angle_detected() {
        // L-shape: reflex corner at (1,1) has interior angle 3π/2.
        let l = vec![
            v2(0.0, 0.0),
            v2(2.0, 0.0),
            v2(2.0, 1.0),
            v2(1.0, 1.0),
            v2(1.0, 2.0),
            v2(0.0, 2.0),
        ];
        assert!((interior_angle(&l, 3) - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn isometry_composition_and_inverse() {
        let g = Isometry { sign: -1.0, t: v2(2.0, 1.0) };
        let h = Isometry { sign: 1.0, t: v2(0.5, -0.5) };
        let p = v2(0.3, 0.7);
        let gh = g.compose(&h);
        assert!(gh.apply(p).dist(g.apply(h.apply(p))) < 1e-15);
        let ginv = g.inverse();
        assert!(ginv.apply(g.apply(p)).dist(p) < 1e-15);
    }

    #[test]
    fn segment_containment_in_l_shape() {
        let l = vec![
            v2(0.0, 0.0),
            v2(2.0, 0.0),
            v2(2.0, 1.0),
            v2(1.0, 1.0),
            v2(1.0, 2.0),
            v2(0.0, 2.0),
        ];
        assert!(segment_in_polygon(&l, v2(0.5, 0.5), v2(1.5, 0.5), EPS));
        // Touching the reflex corner while staying inside is fine.
        assert!(segment_in_polygon(&l, v2(0.5, 1.5), v2(1.5, 0.5), EPS));
        // Cutting across the notch is not.
        assert!(!segment_in_polygon(&l, v2(0.5, 1.8), v2(1.8, 0.5), EPS));
    }

    #[test]
    fn triangulation_covers_polygon_area() {
        let l = vec![
            v2(0.0, 0.0),
            v2(2.0, 0.0),
            v2(2.0, 1.0),
            v2(1.0, 1.0),
            v2(1.0, 2.0),
            v2(0.0, 2.0),
        ];
        let tris = triangulate(&l);
        let total: f64 = tris.iter().map(|t| signed_area(t)).sum();
        assert!((total - 3.0).abs() < 1e-12);
    }
}
