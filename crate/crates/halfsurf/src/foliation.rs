//! Partial measured foliations with piecewise-affine potentials:
//! Dirichlet energy, heights of curve classes, extremal length of the
//! structure foliations, push-forwards, and the K-monotonicity check.

use crate::error::{Error, Result};
use crate::geom::{signed_area, triangulate, v2, Vec2};
use crate::qc::PiecewiseAffineMap;
use crate::surface::{eref, BoundaryKind, HalfTranslationSurface, SurfacePoint};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Affine scalar field `v(p) = grad · p + offset` on one triangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePotential {
    pub grad: Vec2,
    pub offset: f64,
}

impl AffinePotential {
    pub fn eval(&self, p: Vec2) -> f64 {
        self.grad.dot(p) + self.offset
    }
}

/// One chart patch: a triangle with an affine potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    /// Polygon of the surface this patch came from (chart bookkeeping).
    pub polygon: usize,
    pub triangle: [Vec2; 3],
    pub potential: AffinePotential,
}

/// A partial measured foliation presented by per-triangle affine
/// potentials; the transverse measure is `|dv|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialFoliation {
    pub charts: Vec<Chart>,
}

impl PartialFoliation {
    /// Exact Dirichlet energy: sum over triangles of `|∇v|² · area`.
    pub fn dirichlet_energy(&self) -> f64 {
        self.charts
            .iter()
            .map(|c| c.potential.grad.norm2() * signed_area(&c.triangle).abs())
            .sum()
    }

    /// Rescale the transverse measure by λ (potentials scale linearly,
    /// energy quadratically).
    pub fn rescale(&self, lambda: f64) -> PartialFoliation {
        let charts = self
            .charts
            .iter()
            .map(|c| Chart {
                polygon: c.polygon,
                triangle: c.triangle,
                potential: AffinePotential {
                    grad: c.triangle_grad().scale(lambda),
                    offset: c.potential.offset * lambda,
                },
            })
            .collect();
        PartialFoliation { charts }
    }

    /// Potential value at a point of a given polygon, if a chart covers it.
    pub fn eval(&self, polygon: usize, p: Vec2) -> Option<f64> {
        for c in &self.charts {
            if c.polygon == polygon && tri_contains_closed(&c.triangle, p, 1e-9) {
                return Some(c.potential.eval(p));
            }
        }
        None
    }
}

impl Chart {
    fn triangle_grad(&self) -> Vec2 {
        self.potential.grad
    }
}

fn tri_contains_closed(t: &[Vec2; 3], p: Vec2, tol: f64) -> bool {
    let d1 = (t[1] - t[0]).cross(p - t[0]);
    let d2 = (t[2] - t[1]).cross(p - t[1]);
    let d3 = (t[0] - t[2]).cross(p - t[2]);
    let scale = (t[1] - t[0]).norm().max((t[2] - t[1]).norm()).max(1.0);
    d1 >= -tol * scale && d2 >= -tol * scale && d3 >= -tol * scale
}

/// The horizontal (`v = Im z`) or vertical (`v = Re z`) foliation of the
/// flat structure, triangulated per polygon. Transition compatibility
/// `v_j = ±v_k + c` across pairings follows from the pairing signs.
pub fn foliation_from_differential(
    s: &HalfTranslationSurface,
    orientation: Orientation,
) -> PartialFoliation {
    let grad = match orientation {
        Orientation::Horizontal => v2(0.0, 1.0), // v = Im z, measure |dy|
        Orientation::Vertical => v2(1.0, 0.0),   // v = Re z, measure |dx|
    };
    let mut charts = Vec::new();
    for (pid, poly) in s.polygons.iter().enumerate() {
        for tri in triangulate(&poly.vertices) {
            charts.push(Chart {
                polygon: pid,
                triangle: tri,
                potential: AffinePotential { grad, offset: 0.0 },
            });
        }
    }
    PartialFoliation { charts }
}

/// Dirichlet energy of a foliation.
pub fn dirichlet_energy(f: &PartialFoliation) -> f64 {
    f.dirichlet_energy()
}

/// Extremal length of the structure foliation. By the energy-minimization
/// property of structure foliations this equals the Dirichlet energy,
/// which equals the flat area; the equality is asserted as a
/// postcondition. Surfaces with free boundary are rejected.
pub fn extremal_length_of_structure(
    s: &HalfTranslationSurface,
    orientation: Orientation,
) -> Result<f64> {
    if s.has_free_boundary() {
        return Err(Error::Precondition(
            "extremal length requires horizontal boundary (free boundary present)".into(),
        ));
    }
    let f = foliation_from_differential(s, orientation);
    let energy = f.dirichlet_energy();
    let a = s.area();
    if (energy - a).abs() > 1e-9 * a.max(1.0) {
        return Err(Error::Precondition(format!(
            "structure foliation energy {energy} does not match area {a}"
        )));
    }
    Ok(energy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    Closed,
    CrossCut,
}

/// A curve class is presented by a representative polyline on the surface.
/// Step `i` runs from `points[i]` to the next point (cyclically for
/// closed curves). A step is either a straight segment inside one polygon
/// or a `hop`: the two sides of an identified point on a paired edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveClass {
    pub points: Vec<SurfacePoint>,
    /// `hops[i]` marks step `i` as an identification hop (zero measure).
    /// Length = number of steps: n for closed curves, n-1 for cross-cuts.
    pub hops: Vec<bool>,
    pub kind: CurveKind,
}

impl CurveClass {
    pub fn closed(points: Vec<SurfacePoint>, hops: Vec<bool>) -> Self {
        CurveClass { points, hops, kind: CurveKind::Closed }
    }
    pub fn cross_cut(points: Vec<SurfacePoint>, hops: Vec<bool>) -> Self {
        CurveClass { points, hops, kind: CurveKind::CrossCut }
    }
    fn step_count(&self) -> usize {
        match self.kind {
            CurveKind::Closed => self.points.len(),
            CurveKind::CrossCut => self.points.len() - 1,
        }
    }
}

fn eval_at(f: &PartialFoliation, p: SurfacePoint) -> Result<f64> {
    f.eval(p.polygon, p.position)
        .ok_or_else(|| Error::Precondition("path point not covered by a chart".into()))
}

fn cost_of_path(f: &PartialFoliation, pts: &[SurfacePoint], hops: &[bool], steps: usize) -> Result<f64> {
    let n = pts.len();
    let mut total = 0.0;
    for i in 0..steps {
        if hops[i] {
            continue;
        }
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if a.polygon != b.polygon {
            return Err(Error::Precondition(format!("segment step {i} spans two polygons")));
        }
        total += (eval_at(f, b)? - eval_at(f, a)?).abs();
    }
    Ok(total)
}

/// Find the edge of `a.polygon` through which `a` and `b` are identified.
fn hop_edge(
    s: &HalfTranslationSurface,
    a: SurfacePoint,
    b: SurfacePoint,
) -> Option<(usize, crate::surface::EdgeRef, crate::geom::Isometry)> {
    for e in 0..s.polygons[a.polygon].len() {
        let (p0, p1) = s.polygons[a.polygon].edge(e);
        if crate::geom::seg_point_distance(p0, p1, a.position) <= 1e-7 {
            if let Some((fref, iso)) = s.gluing_into(eref(a.polygon, e)) {
                // iso maps partner-polygon coords into a.polygon coords.
                if fref.polygon == b.polygon && iso.apply(b.position).dist(a.position) <= 1e-7 {
                    return Some((e, fref, iso));
                }
            }
        }
    }
    None
}

fn check_chain(s: &HalfTranslationSurface, c: &CurveClass) -> Result<()> {
    let n = c.points.len();
    if n < 2 {
        return Err(Error::Precondition("curve representative needs at least 2 points".into()));
    }
    if c.hops.len() != c.step_count() {
        return Err(Error::Precondition(format!(
            "hops length {} does not match step count {}",
            c.hops.len(),
            c.step_count()
        )));
    }
    for i in 0..c.step_count() {
        let a = c.points[i];
        let b = c.points[(i + 1) % n];
        if c.hops[i] {
            if hop_edge(s, a, b).is_none() {
                return Err(Error::Precondition(format!(
                    "step {i} marked as hop but points are not identified across a pairing"
                )));
            }
        } else if a.polygon != b.polygon {
            return Err(Error::Precondition(format!("segment step {i} spans two polygons")));
        }
    }
    if c.kind == CurveKind::CrossCut {
        for p in [c.points[0], *c.points.last().unwrap()] {
            let on_boundary = s.boundary.iter().any(|b| {
                let (a, bb) = s.edge_endpoints(b.edge);
                b.edge.polygon == p.polygon
                    && crate::geom::seg_point_distance(a, bb, p.position) <= 1e-7
            });
            if !on_boundary {
                return Err(Error::Precondition("cross-cut endpoints must lie on boundary".into()));
            }
        }
    }
    Ok(())
}

/// Minimal transverse measure over homotopic representatives reachable by
/// bounded local moves: hop slides along their shared edge (exact 1D
/// convex minimization over kink candidates) and straightening of
/// in-polygon detours. Monotone non-increasing in budget.
pub fn height_of_class(
    s: &HalfTranslationSurface,
    f: &PartialFoliation,
    class: &CurveClass,
    budget: usize,
) -> Result<(f64, CurveClass)> {
    check_chain(s, class)?;
    let steps = class.step_count();
    let mut pts = class.points.clone();
    let hops = class.hops.clone();
    let mut cost = cost_of_path(f, &pts, &hops, steps)?;
    let mut stabilized = false;

    for _round in 0..budget {
        let before = cost;
        for i in 0..steps {
            if hops[i] {
                slide_hop(s, f, &mut pts, &hops, steps, i);
            }
        }
        cost = cost_of_path(f, &pts, &hops, steps)?;
        if (before - cost).abs() < 1e-13 * (1.0 + before.abs()) {
            stabilized = true;
            break;
        }
    }
    if !stabilized {
        return Err(Error::Budget(format!(
            "height minimization did not stabilize within {budget} rounds"
        )));
    }
    Ok((cost, CurveClass { points: pts, hops, kind: class.kind }))
}

/// Slide the hop at step `i` along its shared edge. The global cost is
/// piecewise-linear convex in the slide parameter, so evaluating at kink
/// candidates and endpoints is exact.
fn slide_hop(
    s: &HalfTranslationSurface,
    f: &PartialFoliation,
    pts: &mut [SurfacePoint],
    hops: &[bool],
    steps: usize,
    i: usize,
) {
    let n = pts.len();
    let j = (i + 1) % n;
    let a = pts[i];
    let Some((e, fref, iso_into_a)) = hop_edge(s, a, pts[j]) else { return };
    let (a0, a1) = s.polygons[a.polygon].edge(e);
    let inv = iso_into_a.inverse();

    let place = |pts: &mut [SurfacePoint], t: f64| {
        let pa = a0.lerp(a1, t);
        pts[i] = SurfacePoint { polygon: a.polygon, position: pa };
        pts[j] = SurfacePoint { polygon: fref.polygon, position: inv.apply(pa) };
    };
    let mut work = pts.to_vec();
    let mut objective = |t: f64| -> f64 {
        work.copy_from_slice(pts);
        place(&mut work, t);
        cost_of_path(f, &work, hops, steps).unwrap_or(f64::INFINITY)
    };

    // Kink candidates: parameters where an adjacent |Δv| term vanishes.
    let mut cands = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let mut add_kink = |edge0: Vec2, edge1: Vec2, poly: usize, other: Option<SurfacePoint>| {
        if let (Some(v0), Some(v1)) = (f.eval(poly, edge0), f.eval(poly, edge1)) {
            if let Some(o) = other {
                if o.polygon == poly {
                    if let Some(vo) = f.eval(o.polygon, o.position) {
                        if (v1 - v0).abs() > 1e-15 {
                            cands.push((vo - v0) / (v1 - v0));
                        }
                    }
                }
            }
        }
    };
    // Segment into the hop (step i-1) and out of it (step j).
    let prev_step = (i + steps - 1) % steps;
    if prev_step != i && !hops[prev_step] {
        add_kink(a0, a1, a.polygon, Some(pts[prev_step]));
    }
    if j < pts.len() {
        let out_step = j % steps;
        if out_step != i && !hops[out_step] && (j + 1) % n < n {
            add_kink(inv.apply(a0), inv.apply(a1), fref.polygon, Some(pts[(j + 1) % n]));
        }
    }

    let mut best_t = 0.0;
    let mut best = f64::INFINITY;
    let current = objective(current_param(a0, a1, a.position));
    for t in cands {
        if !(0.0..=1.0).contains(&t) {
            continue;
        }
        let c = objective(t);
        if c < best - 1e-15 {
            best = c;
            best_t = t;
        }
    }
    if best < current - 1e-15 {
        place(pts, best_t);
    }
}

fn current_param(a0: Vec2, a1: Vec2, p: Vec2) -> f64 {
    let d = a1 - a0;
    let l2 = d.norm2();
    if l2 == 0.0 {
        0.0
    } else {
        ((p - a0).dot(d) / l2).clamp(0.0, 1.0)
    }
}

/// Push a foliation forward through a face-wise injective affine map.
/// Potentials become `v ∘ m⁻¹`: gradients transform by the inverse
/// transpose of each face matrix.
pub fn pushforward_foliation(
    f: &PartialFoliation,
    m: &PiecewiseAffineMap,
) -> Result<PartialFoliation> {
    let mut charts = Vec::new();
    for chart in &f.charts {
        let face = m
            .faces
            .iter()
            .find(|fm| fm.src_polygon == chart.polygon)
            .ok_or_else(|| Error::Precondition(format!("no face map for polygon {}", chart.polygon)))?;
        let det = face.matrix[0][0] * face.matrix[1][1] - face.matrix[0][1] * face.matrix[1][0];
        if det.abs() < 1e-15 {
            return Err(Error::Precondition("face map not injective (zero determinant)".into()));
        }
        let apply = |p: Vec2| -> Vec2 {
            v2(
                face.matrix[0][0] * p.x + face.matrix[0][1] * p.y + face.translation.x,
                face.matrix[1][0] * p.x + face.matrix[1][1] * p.y + face.translation.y,
            )
        };
        let tri = [apply(chart.triangle[0]), apply(chart.triangle[1]), apply(chart.triangle[2])];
        // grad' = A^{-T} grad
        let g = chart.potential.grad;
        let inv_t = [
            [face.matrix[1][1] / det, -face.matrix[1][0] / det],
            [-face.matrix[0][1] / det, face.matrix[0][0] / det],
        ];
        let grad = v2(inv_t[0][0] * g.x + inv_t[0][1] * g.y, inv_t[1][0] * g.x + inv_t[1][1] * g.y);
        // Match offsets so the value at the image of a vertex is unchanged.
        let offset = chart.potential.eval(chart.triangle[0]) - grad.dot(tri[0]);
        charts.push(Chart { polygon: face.dst_polygon, triangle: tri, potential: AffinePotential { grad, offset } });
    }
    Ok(PartialFoliation { charts })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub energy_before: f64,
    pub energy_after: f64,
    pub bound: f64,
    pub passed: bool,
    /// True when the map is a Teichmüller stretch and the foliation is the
    /// horizontal structure foliation: the bound is attained exactly.
    pub equality_branch: bool,
    pub equality_error: f64,
}

/// Check that pushing `f` through the K-quasiconformal `m` raises energy
/// by at most K, with exact equality for the stretch of the horizontal
/// structure foliation.
pub fn el_monotonicity_check(
    f: &PartialFoliation,
    m: &PiecewiseAffineMap,
    k: f64,
) -> Result<MonotonicityVerdict> {
    let dil = crate::qc::dilatation_of(m);
    if dil > k + 1e-9 {
        return Err(Error::Precondition(format!(
            "map dilatation {dil} exceeds K = {k}"
        )));
    }
    let before = f.dirichlet_energy();
    let pushed = pushforward_foliation(f, m)?;
    let after = pushed.dirichlet_energy();
    let bound = k * before + 1e-8;
    let passed = after <= bound;

    let is_stretch = m.faces.iter().all(|fm| {
        let a = fm.matrix;
        ((a[0][0] - k).abs() < 1e-12 && (a[1][1] - 1.0).abs() < 1e-12
            || (a[0][0] + k).abs() < 1e-12 && (a[1][1] + 1.0).abs() < 1e-12)
            && a[0][1].abs() < 1e-12
            && a[1][0].abs() < 1e-12
    });
    let is_horizontal = f.charts.iter().all(|c| {
        c.potential.grad.x.abs() < 1e-12 && (c.potential.grad.y.abs() - 1.0).abs() < 1e-12
    });
    let equality_branch = is_stretch && is_horizontal;
    let equality_error = (after - k * before).abs();
    if equality_branch && equality_error > 1e-12 * (1.0 + after.abs()) {
        return Err(Error::Precondition(format!(
            "stretch should transport energy exactly: error {equality_error}"
        )));
    }
    Ok(MonotonicityVerdict { energy_before: before, energy_after: after, bound, passed, equality_branch, equality_error })
}

/// Reject structure-foliation requests on free boundary per the boundary
/// condition housed by extremal_length_of_structure; helper for callers.
pub fn requires_horizontal_boundary(s: &HalfTranslationSurface) -> Result<()> {
    if s.boundary.iter().any(|b| b.kind == BoundaryKind::Free) {
        return Err(Error::Precondition("operation requires horizontal boundary".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{cylinder, spoint, square_torus};

    #[test]
    fn structure_foliation_energy_is_area() {
        let s = square_torus();
        let f = foliation_from_differential(&s, Orientation::Horizontal);
        assert!((f.dirichlet_energy() - 1.0).abs() < 1e-12);
        let c = cylinder(2.0);
        let fc = foliation_from_differential(&c, Orientation::Horizontal);
        assert!((fc.dirichlet_energy() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling_is_quadratic_in_energy() {
        let s = square_torus();
        let f = foliation_from_differential(&s, Orientation::Horizontal);
        let g = f.rescale(2.0);
        assert!((g.dirichlet_energy() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn heights_on_square_torus() {
        let s = square_torus();
        let f = foliation_from_differential(&s, Orientation::Horizontal);
        // Vertical loop: segment up the square, then a hop top -> bottom.
        let vertical =
            CurveClass::closed(vec![spoint(0, 0.3, 0.0), spoint(0, 0.3, 1.0)], vec![false, true]);
        let (h, _) = height_of_class(&s, &f, &vertical, 16).unwrap();
        assert!((h - 1.0).abs() < 1e-12, "vertical height {h}");
        // Horizontal loop has zero height against |dy|.
        let horizontal =
            CurveClass::closed(vec![spoint(0, 0.0, 0.4), spoint(0, 1.0, 0.4)], vec![false, true]);
        let (h0, _) = height_of_class(&s, &f, &horizontal, 16).unwrap();
        assert!(h0.abs() < 1e-12, "horizontal height {h0}");
    }

    #[test]
    fn cross_cut_height_on_cylinder() {
        let s = cylinder(2.0);
        let f = foliation_from_differential(&s, Orientation::Horizontal);
        let cut =
            CurveClass::cross_cut(vec![spoint(0, 0.5, 0.0), spoint(0, 0.5, 2.0)], vec![false]);
        let (h, _) = height_of_class(&s, &f, &cut, 16).unwrap();
        assert!((h - 2.0).abs() < 1e-12, "cross-cut height {h}");
    }

    #[test]
    fn height_scales_linearly() {
        let s = square_torus();
        let f = foliation_from_differential(&s, Orientation::Horizontal);
        let g = f.rescale(3.0);
        let vertical =
            CurveClass::closed(vec![spoint(0, 0.3, 0.0), spoint(0, 0.3, 1.0)], vec![false, true]);
        let (h1, _) = height_of_class(&s, &f, &vertical, 16).unwrap();
        let (h3, _) = height_of_class(&s, &g, &vertical, 16).unwrap();
        assert!((h3 - 3.0 * h1).abs() < 1e-12);
    }

    #[test]
    fn el_of_structure_matches_area_and_rejects_free_boundary() {
        let s = square_torus();
        assert!((extremal_length_of_structure(&s, Orientation::Horizontal).unwrap() - 1.0).abs() < 1e-12);
        let c = cylinder(2.0);
        assert!((extremal_length_of_structure(&c, Orientation::Horizontal).unwrap() - 2.0).abs() < 1e-12);
        assert!((extremal_length_of_structure(&c, Orientation::Vertical).unwrap() - 2.0).abs() < 1e-12);
        let mut free = cylinder(1.0);
        free.boundary[0].kind = BoundaryKind::Free;
        assert!(extremal_length_of_structure(&free, Orientation::Horizontal).is_err());
    }
}
