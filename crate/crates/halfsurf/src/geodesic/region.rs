//! Gauss-Bonnet for a simple geodesic loop bounding a disk: boundary
//! turning plus interior cone defects must balance 2π. The interior is
//! identified by splitting polygons along the loop's chords and flood
//! filling from the left of the first segment, so the cone count is an
//! independent input to the balance rather than being derived from it.

use super::GeodesicPath;
use crate::error::{Error, Result};
use crate::geom::{angle_ccw, point_in_polygon_closed, seg_point_distance, Vec2};
use crate::surface::{eref, Corner, CycleLocation, HalfTranslationSurface, SurfacePoint};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussBonnetLoopReport {
    pub boundary_turning: f64,
    pub interior_defect: f64,
    pub residual: f64,
    pub corner_angles: Vec<f64>,
    pub enclosed_cones: usize,
}

/// All loop segments, cyclically ordered, with closure checked.
fn collect_segments(
    s: &HalfTranslationSurface,
    paths: &[GeodesicPath],
) -> Result<Vec<(SurfacePoint, SurfacePoint)>> {
    let mut segments = Vec::new();
    for p in paths {
        if p.segments.is_empty() {
            return Err(Error::Precondition("empty geodesic piece in loop".into()));
        }
        segments.extend(p.segments.iter().cloned());
    }
    let n = segments.len();
    if n < 2 {
        return Err(Error::Precondition("loop needs at least two segments".into()));
    }
    for i in 0..n {
        let a = segments[i].1;
        let b = segments[(i + 1) % n].0;
        if !points_identified(s, a, b) {
            return Err(Error::Precondition(format!(
                "loop does not close: segment {i} ends away from the next start"
            )));
        }
    }
    Ok(segments)
}

fn points_identified(s: &HalfTranslationSurface, a: SurfacePoint, b: SurfacePoint) -> bool {
    if a.polygon == b.polygon && a.position.dist(b.position) <= 1e-9 {
        return true;
    }
    for e in 0..s.polygons[a.polygon].len() {
        let (p0, p1) = s.polygons[a.polygon].edge(e);
        if seg_point_distance(p0, p1, a.position) <= 1e-9 {
            if let Some((f, glue)) = s.gluing_into(eref(a.polygon, e)) {
                if f.polygon == b.polygon && glue.apply(b.position).dist(a.position) <= 1e-9 {
                    return true;
                }
            }
        }
    }
    // Vertex identification: both at corners of the same class.
    if let (Some(ca), Some(cb)) = (corner_at(s, a), corner_at(s, b)) {
        let cycles = s.vertex_cycles();
        return cycles.iter().any(|(cs, _, _)| cs.contains(&ca) && cs.contains(&cb));
    }
    false
}

fn corner_at(s: &HalfTranslationSurface, p: SurfacePoint) -> Option<Corner> {
    let poly = &s.polygons[p.polygon];
    (0..poly.len())
        .find(|&v| poly.vertices[v].dist(p.position) <= 1e-9)
        .map(|v| Corner { polygon: p.polygon, vertex: v })
}

/// Interior (left-side) angle at the junction from segment `inc` to
/// segment `out`, for a loop traversed with the region on its left.
fn interior_angle_at_junction(
    s: &HalfTranslationSurface,
    cycles: &[(Vec<Corner>, f64, CycleLocation)],
    inc: (SurfacePoint, SurfacePoint),
    out: (SurfacePoint, SurfacePoint),
) -> Result<f64> {
    let d_out = (out.1.position - out.0.position).unit();
    let rev_in = (inc.0.position - inc.1.position).unit();
    match (corner_at(s, inc.1), corner_at(s, out.0)) {
        (Some(ca), Some(cb)) => {
            // Sweep counterclockwise from the outgoing direction to the
            // reversed incoming direction around the identified vertex.
            let hit = super::junction_angles(s, cycles, (ca, rev_in), (cb, d_out))?;
            Ok(hit.right_angle)
        }
        _ => {
            // Same chart or a gluing across the shared edge.
            if inc.1.polygon == out.0.polygon {
                Ok(angle_ccw(d_out, rev_in))
            } else {
                for e in 0..s.polygons[inc.1.polygon].len() {
                    let (p0, p1) = s.polygons[inc.1.polygon].edge(e);
                    if seg_point_distance(p0, p1, inc.1.position) <= 1e-9 {
                        if let Some((f, glue)) = s.gluing_into(eref(inc.1.polygon, e)) {
                            if f.polygon == out.0.polygon
                                && glue.apply(out.0.position).dist(inc.1.position) <= 1e-9
                            {
                                return Ok(angle_ccw(glue.apply_dir(d_out), rev_in));
                            }
                        }
                    }
                }
                Err(Error::Precondition("junction charts not identified".into()))
            }
        }
    }
}

/// A run of consecutive loop segments inside one polygon.
struct Run {
    polygon: usize,
    points: Vec<Vec2>,
}

fn collect_runs(segments: &[(SurfacePoint, SurfacePoint)]) -> Vec<Run> {
    let n = segments.len();
    // Start at a polygon change if there is one.
    let start = (0..n)
        .find(|&i| segments[(i + n - 1) % n].0.polygon != segments[i].0.polygon
            || segments[(i + n - 1) % n].1.position.dist(segments[i].0.position) > 1e-9)
        .unwrap_or(0);
    let mut runs: Vec<Run> = Vec::new();
    for k in 0..n {
        let seg = &segments[(start + k) % n];
        let extend = match runs.last() {
            Some(r) => {
                r.polygon == seg.0.polygon
                    && r.points.last().unwrap().dist(seg.0.position) <= 1e-9
            }
            None => false,
        };
        if extend {
            runs.last_mut().unwrap().points.push(seg.1.position);
        } else {
            runs.push(Run { polygon: seg.0.polygon, points: vec![seg.0.position, seg.1.position] });
        }
    }
    runs
}

/// A sub-polygon produced by chord splitting.
#[derive(Clone, Debug)]
struct Region {
    polygon: usize,
    boundary: Vec<Vec2>,
}

/// Split a simple region along a chord polyline whose endpoints lie on
/// the region boundary.
fn split_region(region: &Region, chord: &[Vec2]) -> Option<(Region, Region)> {
    let pts = &region.boundary;
    let n = pts.len();
    let locate = |p: Vec2| -> Option<(usize, f64)> {
        // Edge index and parameter along it.
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            let d = seg_point_distance(a, b, p);
            if d <= 1e-7 {
                let l2 = (b - a).norm2();
                let t = if l2 == 0.0 { 0.0 } else { ((p - a).dot(b - a) / l2).clamp(0.0, 1.0) };
                if best.is_none() || d < best.unwrap().1 {
                    best = Some((i, d, t));
                }
            }
        }
        best.map(|(i, _, t)| (i, t))
    };
    let (ea, ta) = locate(chord[0])?;
    let (eb, tb) = locate(*chord.last().unwrap())?;

    // Walk the boundary from chord end A forward (CCW) to chord end B.
    let point_at = |(e, t): (usize, f64)| pts[e].lerp(pts[(e + 1) % n], t);
    let walk = |from: (usize, f64), to: (usize, f64)| -> Vec<Vec2> {
        let mut out = vec![point_at(from)];
        if !(from.0 == to.0 && to.1 >= from.1 - 1e-12) {
            let mut v = (from.0 + 1) % n;
            loop {
                out.push(pts[v]);
                if v == to.0 {
                    break; // reached the start vertex of the target edge
                }
                v = (v + 1) % n;
                if out.len() > n + 2 {
                    break;
                }
            }
        }
        out.push(point_at(to));
        out
    };
    // Region 1: boundary from A to B, then chord reversed B -> A.
    let mut r1 = walk((ea, ta), (eb, tb));
    for p in chord.iter().rev().skip(1) {
        r1.push(*p);
    }
    r1.pop(); // the walk already starts at A
    // Region 2: boundary from B to A, then chord A -> B.
    let mut r2 = walk((eb, tb), (ea, ta));
    for p in chord.iter().skip(1) {
        r2.push(*p);
    }
    r2.pop();
    let clean = |mut v: Vec<Vec2>| -> Vec<Vec2> {
        v.dedup_by(|a, b| a.dist(*b) <= 1e-10);
        if v.len() > 1 && v[0].dist(*v.last().unwrap()) <= 1e-10 {
            v.pop();
        }
        v
    };
    let r1 = clean(r1);
    let r2 = clean(r2);
    if r1.len() < 3 || r2.len() < 3 {
        return None;
    }
    Some((
        Region { polygon: region.polygon, boundary: r1 },
        Region { polygon: region.polygon, boundary: r2 },
    ))
}

/// Gauss-Bonnet residual of a simple geodesic loop bounding a disk,
/// traversed with the disk on its left.
pub fn polygon_gauss_bonnet(
    s: &HalfTranslationSurface,
    paths: &[GeodesicPath],
) -> Result<GaussBonnetLoopReport> {
    let segments = collect_segments(s, paths)?;
    let cycles = s.vertex_cycles();
    let n = segments.len();

    // Corner angles along the loop.
    let mut corner_angles = Vec::new();
    let mut turning = 0.0;
    let mut bends = 0usize;
    for i in 0..n {
        let inc = segments[i];
        let out = segments[(i + 1) % n];
        let ang = interior_angle_at_junction(s, &cycles, inc, out)?;
        turning += std::f64::consts::PI - ang;
        if (ang - std::f64::consts::PI).abs() > 1e-9 {
            bends += 1;
            corner_angles.push(ang);
        }
    }
    if bends < 3 {
        return Err(Error::Precondition(format!(
            "degenerate loop with {bends} corners (a bigon cannot bound a flat disk)"
        )));
    }

    // Split polygons by the loop's chords and flood fill the left side.
    let runs = collect_runs(&segments);
    let single_polygon_loop = runs.len() == 1
        && runs[0].points.first().unwrap().dist(*runs[0].points.last().unwrap()) <= 1e-9;

    let mut interior_defect = 0.0;
    let mut enclosed = 0usize;
    if !single_polygon_loop {
        let mut regions: Vec<Region> = (0..s.polygons.len())
            .map(|p| Region { polygon: p, boundary: s.polygons[p].vertices.clone() })
            .collect();
        for run in &runs {
            // Find the region containing this chord's interior.
            let probe = run.points[0].lerp(run.points[1], 0.5);
            let idx = regions
                .iter()
                .position(|r| {
                    r.polygon == run.polygon && point_in_polygon_closed(&r.boundary, probe, 1e-9)
                })
                .ok_or_else(|| Error::Precondition("chord not inside any region".into()))?;
            let region = regions.swap_remove(idx);
            let (r1, r2) = split_region(&region, &run.points)
                .ok_or_else(|| Error::Precondition("failed to split polygon along loop chord".into()))?;
            regions.push(r1);
            regions.push(r2);
        }
        // Seed: just left of the first segment.
        let scale = segments[0].0.position.dist(segments[0].1.position).max(1e-6);
        let eps = 1e-6 * scale;
        let mid = segments[0].0.position.lerp(segments[0].1.position, 0.5);
        let left = (segments[0].1.position - segments[0].0.position).perp().unit();
        let seed = mid + left.scale(eps);
        let seed_poly = segments[0].0.polygon;
        let find_region = |poly: usize, p: Vec2| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for (i, r) in regions.iter().enumerate() {
                if r.polygon == poly && point_in_polygon_closed(&r.boundary, p, 1e-10) {
                    let d = crate::geom::polygon_boundary_distance(&r.boundary, p);
                    if best.is_none() || d > best.unwrap().1 {
                        best = Some((i, d));
                    }
                }
            }
            best.map(|(i, _)| i)
        };
        let start = find_region(seed_poly, seed)
            .ok_or_else(|| Error::Precondition("flood-fill seed outside all regions".into()))?;
        let on_chord = |poly: usize, a: Vec2, b: Vec2| -> bool {
            let mid = a.lerp(b, 0.5);
            runs.iter().filter(|r| r.polygon == poly).any(|r| {
                r.points
                    .windows(2)
                    .any(|w| seg_point_distance(w[0], w[1], mid) <= 1e-8)
            })
        };
        let mut interior = vec![false; regions.len()];
        interior[start] = true;
        let mut stack = vec![start];
        while let Some(ri) = stack.pop() {
            let region = regions[ri].clone();
            let m = region.boundary.len();
            for i in 0..m {
                let (a, b) = (region.boundary[i], region.boundary[(i + 1) % m]);
                if on_chord(region.polygon, a, b) {
                    continue; // loop wall
                }
                // Which original edge carries this piece?
                let poly = &s.polygons[region.polygon];
                let mid = a.lerp(b, 0.5);
                let mut crossed = false;
                for e in 0..poly.len() {
                    let (p0, p1) = poly.edge(e);
                    if seg_point_distance(p0, p1, mid) <= 1e-8 {
                        let er = eref(region.polygon, e);
                        if s.is_boundary(er) {
                            return Err(Error::Precondition(
                                "loop region touches the surface boundary; not a disk".into(),
                            ));
                        }
                        if let Some((f, glue)) = s.gluing_into(er) {
                            // Map into the partner chart and probe inward.
                            let ginv = glue.inverse();
                            let q_mid = ginv.apply(mid);
                            let (f0, f1) = s.polygons[f.polygon].edge(f.edge);
                            let inward = (f1 - f0).perp().unit();
                            let probe = q_mid + inward.scale(1e-7 * (f1 - f0).norm().max(1e-3));
                            if let Some(nb) = find_region(f.polygon, probe) {
                                if !interior[nb] {
                                    interior[nb] = true;
                                    stack.push(nb);
                                }
                            }
                            crossed = true;
                        }
                        break;
                    }
                }
                let _ = crossed;
            }
        }
        // Enclosed vertex classes: every corner probe interior, vertex
        // itself off the loop.
        for (cycle, total, loc) in &cycles {
            if *loc == CycleLocation::Boundary {
                continue;
            }
            let mut inside = true;
            for c in cycle {
                let vpos = s.polygons[c.polygon].vertices[c.vertex];
                let on_loop = runs.iter().filter(|r| r.polygon == c.polygon).any(|r| {
                    r.points.windows(2).any(|w| seg_point_distance(w[0], w[1], vpos) <= 1e-8)
                });
                if on_loop {
                    inside = false;
                    break;
                }
                let (w0, w1) = crate::surface::corner_wedge(s, *c);
                let half = angle_ccw(w0, w1) * 0.5;
                let bis = super::rotate(w0.unit(), half);
                let probe = vpos + bis.scale(1e-6 * w0.norm().min(w1.norm()).max(1e-3));
                match find_region(c.polygon, probe) {
                    Some(ri) if interior[ri] => {}
                    _ => {
                        inside = false;
                        break;
                    }
                }
            }
            if inside {
                enclosed += 1;
                interior_defect += 2.0 * std::f64::consts::PI - total;
            }
        }
    }

    let residual = turning + interior_defect - 2.0 * std::f64::consts::PI;
    Ok(GaussBonnetLoopReport {
        boundary_turning: turning,
        interior_defect,
        residual,
        corner_angles,
        enclosed_cones: enclosed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{geodesic_between, DEFAULT_BUDGET};
    use crate::surface::{octagon, spoint, square_torus};

    #[test]
    fn triangle_in_one_polygon_balances() {
        let s = square_torus();
        let a = spoint(0, 0.2, 0.2);
        let b = spoint(0, 0.6, 0.25);
        let c = spoint(0, 0.4, 0.6);
        // Counterclockwise triangle a -> b -> c.
        let p1 = geodesic_between(&s, a, b, DEFAULT_BUDGET).unwrap();
        let p2 = geodesic_between(&s, b, c, DEFAULT_BUDGET).unwrap();
        let p3 = geodesic_between(&s, c, a, DEFAULT_BUDGET).unwrap();
        let rep = polygon_gauss_bonnet(&s, &[p1, p2, p3]).unwrap();
        assert!(rep.residual.abs() < 1e-8, "residual {}", rep.residual);
        let sum: f64 = rep.corner_angles.iter().sum();
        assert!((sum - std::f64::consts::PI).abs() < 1e-9, "angle sum {sum}");
        assert_eq!(rep.enclosed_cones, 0);
    }

    #[test]
    fn loop_around_octagon_cone_balances() {
        let s = octagon();
        // Sixteen points at radius r around the 6π cone, two per corner
        // wedge, joined by straight chords: a geodesic polygon enclosing
        // the cone once.
        let r = 0.2;
        let m = 16usize;
        let delta = 6.0 * std::f64::consts::PI / m as f64;
        let cycles = s.vertex_cycles();
        let (cycle, total, _) = &cycles[0];
        assert!((total - 6.0 * std::f64::consts::PI).abs() < 1e-9);
        // Place points by walking the wedge positions.
        let mut pts: Vec<SurfacePoint> = Vec::new();
        for k in 0..m {
            let target = delta * (k as f64 + 0.5);
            // Find the corner whose wedge contains this angle.
            let mut acc = 0.0;
            for c in cycle.iter() {
                let w = crate::geom::interior_angle(&s.polygons[c.polygon].vertices, c.vertex);
                if target < acc + w {
                    let (w0, _) = crate::surface::corner_wedge(&s, *c);
                    let dir = crate::geodesic::rotate(w0.unit(), target - acc);
                    let vpos = s.polygons[c.polygon].vertices[c.vertex];
                    pts.push(SurfacePoint { polygon: c.polygon, position: vpos + dir.scale(r) });
                    break;
                }
                acc += w;
            }
        }
        assert_eq!(pts.len(), m);
        let mut paths = Vec::new();
        for k in 0..m {
            let g = geodesic_between(&s, pts[k], pts[(k + 1) % m], DEFAULT_BUDGET).unwrap();
            assert!(g.cone_hits.is_empty(), "chord {k} must not bend");
            paths.push(g);
        }
        let rep = polygon_gauss_bonnet(&s, &paths).unwrap();
        assert_eq!(rep.enclosed_cones, 1, "loop must enclose the cone");
        assert!((rep.interior_defect + 4.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!(rep.residual.abs() < 1e-8, "residual {}", rep.residual);
    }

    #[test]
    fn bigon_is_rejected() {
        let s = square_torus();
        let a = spoint(0, 0.2, 0.2);
        let b = spoint(0, 0.7, 0.7);
        let p1 = geodesic_between(&s, a, b, DEFAULT_BUDGET).unwrap();
        let p2 = geodesic_between(&s, b, a, DEFAULT_BUDGET).unwrap();
        let err = polygon_gauss_bonnet(&s, &[p1, p2]);
        assert!(err.is_err());
    }
}
