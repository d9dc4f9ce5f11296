//! Surgery on flat surfaces: horizontal slit cutting, slit-tip unfolding
//! bookkeeping, cylinder enlargement, the modulus-of-extension search,
//! branched double covers, and horizontal flow families of slit maps.

use crate::error::{Error, Result};
use crate::geom::{seg_point_distance, v2, Vec2, EPS};
use crate::qc::{FaceMap, PiecewiseAffineMap};
use crate::surface::{
    eref, split_edge, BoundaryEdge, BoundaryKind, Corner, CycleLocation, EdgeRef,
    HalfTranslationSurface, Pairing, Polygon, Sign, SurfacePoint,
};
use serde::{Deserialize, Serialize};

/// A horizontal slit: starts at `start` and extends `length` to the
/// right in natural coordinates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlitSpec {
    pub start: SurfacePoint,
    pub length: f64,
}

/// Cut a horizontal slit. The containing polygon is split along the full
/// horizontal chord through the slit; the chord pieces away from the slit
/// are re-paired, the slit pieces become horizontal boundary, and the two
/// tips turn into boundary vertex cycles of doubled angle.
pub fn cut_slit(s: &HalfTranslationSurface, slit: SlitSpec) -> Result<HalfTranslationSurface> {
    if slit.length <= EPS {
        return Err(Error::Precondition("degenerate slit (length must be positive)".into()));
    }
    let pid = slit.start.polygon;
    if pid >= s.polygons.len() {
        return Err(Error::Precondition("slit polygon out of range".into()));
    }
    let y = slit.start.position.y;
    let x0 = slit.start.position.x;
    let x1 = x0 + slit.length;

    // The full horizontal chord of the polygon at height y.
    let poly = &s.polygons[pid];
    let mut crossings: Vec<(usize, f64, f64)> = Vec::new(); // (edge, param, x)
    for e in 0..poly.len() {
        let (a, b) = poly.edge(e);
        let dy = b.y - a.y;
        if dy.abs() < 1e-13 {
            if (a.y - y).abs() < EPS {
                return Err(Error::Precondition("slit lies along a polygon edge; unsupported".into()));
            }
            continue;
        }
        let t = (y - a.y) / dy;
        if t >= -1e-12 && t <= 1.0 + 1e-12 {
            let x = a.x + (b.x - a.x) * t;
            crossings.push((e, t.clamp(0.0, 1.0), x));
        }
    }
    crossings.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    crossings.dedup_by(|a, b| (a.2 - b.2).abs() < EPS);
    if crossings.len() != 2 {
        return Err(Error::Unsupported(format!(
            "horizontal line through the slit crosses the polygon boundary {} times; need exactly 2",
            crossings.len()
        )));
    }
    let (xa, xb) = (crossings[0].2, crossings[1].2);
    if x0 < xa - EPS || x1 > xb + EPS {
        return Err(Error::Precondition("slit exits the polygon".into()));
    }
    // Tips on the surface boundary are rejected; tips on paired edges are
    // interior points of the surface and fine.
    for &(e, _, x) in &crossings {
        if s.is_boundary(eref(pid, e)) && ((x - x0).abs() < EPS || (x - x1).abs() < EPS || (x0 < x && x < x1)) {
            return Err(Error::Precondition("slit touches the surface boundary".into()));
        }
    }
    // No vertex may sit on the open slit.
    for v in &poly.vertices {
        if (v.y - y).abs() <= EPS && v.x > x0 + EPS && v.x < x1 - EPS {
            return Err(Error::Precondition(
                "slit passes through a vertex (cone point) in its interior".into(),
            ));
        }
    }

    // Step 1: make the chord endpoints vertices, splitting edges (and
    // partners) as needed.
    let mut surf = s.clone();
    for target in [v2(xa, y), v2(xb, y)] {
        loop {
            let poly = &surf.polygons[pid];
            if poly.vertices.iter().any(|v| v.dist(target) <= EPS) {
                break;
            }
            let e = (0..poly.len())
                .find(|&e| {
                    let (a, b) = poly.edge(e);
                    seg_point_distance(a, b, target) <= EPS
                })
                .ok_or_else(|| Error::Unsupported("chord endpoint not on the boundary".into()))?;
            let (a, b) = surf.polygons[pid].edge(e);
            let t = (target - a).dot(b - a) / (b - a).norm2();
            surf = split_edge(&surf, eref(pid, e), t)?;
        }
    }

    // Step 2: locate the chord endpoint vertices.
    let poly = surf.polygons[pid].clone();
    let n = poly.len();
    let va = (0..n).find(|&v| poly.vertices[v].dist(v2(xa, y)) <= EPS).unwrap();
    let vb = (0..n).find(|&v| poly.vertices[v].dist(v2(xb, y)) <= EPS).unwrap();

    // Step 3: the two arcs between va and vb; identify the one below.
    let walk = |from: usize, to: usize| -> Vec<usize> {
        let mut arc = vec![from];
        let mut k = from;
        while k != to {
            k = (k + 1) % n;
            arc.push(k);
        }
        arc
    };
    let arc_ab = walk(va, vb);
    let below_first = arc_ab.iter().any(|&k| poly.vertices[k].y < y - EPS);
    let (below_arc, above_arc) = if below_first {
        (arc_ab, walk(vb, va))
    } else {
        (walk(vb, va), walk(va, vb))
    };

    // Chord stations from xa to xb, dropping coincident ones.
    let mut stations = vec![xa, x0, x1, xb];
    stations.dedup_by(|a, b| (*a - *b).abs() < EPS);

    // Lower polygon: below arc, then chord stations walking from the
    // arc's last x back to its first x.
    let chord_between = |from_x: f64, to_x: f64| -> Vec<f64> {
        let mut xs: Vec<f64> = stations
            .iter()
            .copied()
            .filter(|&x| x > from_x.min(to_x) + EPS && x < from_x.max(to_x) - EPS)
            .collect();
        if from_x > to_x {
            xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        } else {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        xs
    };
    let build = |arc: &[usize]| -> (Vec<Vec2>, Vec<(f64, f64)>) {
        let mut verts: Vec<Vec2> = arc.iter().map(|&k| poly.vertices[k]).collect();
        let from_x = poly.vertices[*arc.last().unwrap()].x;
        let to_x = poly.vertices[arc[0]].x;
        let mut intervals = Vec::new();
        let mut prev = from_x;
        for x in chord_between(from_x, to_x) {
            verts.push(v2(x, y));
            intervals.push((prev.min(x), prev.max(x)));
            prev = x;
        }
        intervals.push((prev.min(to_x), prev.max(to_x)));
        (verts, intervals)
    };
    let (lower_verts, lower_intervals) = build(&below_arc);
    let (upper_verts, upper_intervals) = build(&above_arc);
    let lower_arc_edges = below_arc.len() - 1;
    let upper_arc_edges = above_arc.len() - 1;

    // Step 4: assemble. The lower polygon replaces `pid`; the upper is
    // appended. External references remap onto whichever arc owns them.
    let upper_id = surf.polygons.len();
    let mut edge_map: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    for (i, &k) in below_arc.iter().enumerate().take(below_arc.len() - 1) {
        edge_map.insert(k, (pid, i));
    }
    for (i, &k) in above_arc.iter().enumerate().take(above_arc.len() - 1) {
        edge_map.insert(k, (upper_id, i));
    }
    let mut out = surf.clone();
    out.polygons[pid] = Polygon::new(lower_verts);
    out.polygons.push(Polygon::new(upper_verts));
    out.names.push(format!("{}u", surf.names[pid]));
    let remap = |e: EdgeRef| -> EdgeRef {
        if e.polygon == pid {
            let (np, ne) = edge_map[&e.edge];
            eref(np, ne)
        } else {
            e
        }
    };
    for pr in &mut out.pairings {
        pr.a = remap(pr.a);
        pr.b = remap(pr.b);
    }
    for bd in &mut out.boundary {
        bd.edge = remap(bd.edge);
    }
    for mk in &mut out.marked_points {
        if mk.point.polygon == pid && mk.point.position.y > y + EPS {
            mk.point.polygon = upper_id;
        }
    }
    // Chord pieces: pair matching intervals; slit pieces become boundary.
    for (i, &(lo, hi)) in lower_intervals.iter().enumerate() {
        let lower_edge = eref(pid, lower_arc_edges + i);
        let j = upper_intervals
            .iter()
            .position(|&(ul, uh)| (ul - lo).abs() < EPS && (uh - hi).abs() < EPS)
            .ok_or_else(|| Error::Unsupported("chord pieces do not match".into()))?;
        let upper_edge = eref(upper_id, upper_arc_edges + j);
        let on_slit = lo >= x0 - EPS && hi <= x1 + EPS;
        if on_slit {
            out.boundary.push(BoundaryEdge { edge: lower_edge, kind: BoundaryKind::Horizontal });
            out.boundary.push(BoundaryEdge { edge: upper_edge, kind: BoundaryKind::Horizontal });
        } else {
            out.pairings.push(Pairing { a: lower_edge, b: upper_edge, sign: Sign::Plus });
        }
    }
    let rep = crate::surface::validate_surface(&out);
    if !rep.is_valid() {
        return Err(Error::Unsupported(format!(
            "slit surgery produced an invalid surface: {:?}",
            rep.violations[0]
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnfoldReport {
    pub tip_cycle_angle: f64,
    pub original_prongs: usize,
    pub unfolded_prongs: usize,
    /// Order of the boundary zero after unfolding (2n - 2 for n prongs).
    pub boundary_zero_order: i64,
}

/// Bookkeeping for unfolding a slit tip: a point of n prongs becomes half
/// of a 2n-prong singularity of the unfolded double.
pub fn unfold_slit(s: &HalfTranslationSurface, tip: SurfacePoint) -> Result<UnfoldReport> {
    let cycles = s.vertex_cycles();
    let mut found = None;
    for (cycle, total, loc) in &cycles {
        for c in cycle {
            if c.polygon == tip.polygon
                && s.polygons[c.polygon].vertices[c.vertex].dist(tip.position) <= EPS
            {
                found = Some((*total, *loc, cycle.clone()));
            }
        }
    }
    let Some((total, loc, cycle)) = found else {
        return Err(Error::Precondition("tip is not a vertex of the surface".into()));
    };
    if loc != CycleLocation::Boundary {
        return Err(Error::Precondition("tip is not on the boundary (not a slit endpoint)".into()));
    }
    // A slit tip is flanked by two horizontal boundary edges.
    let first: Corner = cycle[0];
    let last: Corner = *cycle.last().unwrap();
    let e1 = eref(first.polygon, first.vertex);
    let nlast = s.polygons[last.polygon].len();
    let e2 = eref(last.polygon, (last.vertex + nlast - 1) % nlast);
    for e in [e1, e2] {
        match s.boundary_kind(e) {
            Some(BoundaryKind::Horizontal) => {}
            _ => return Err(Error::Precondition("tip is not flanked by horizontal boundary".into())),
        }
    }
    let n = (total / std::f64::consts::PI).round();
    if (total - n * std::f64::consts::PI).abs() > EPS || n < 1.0 {
        return Err(Error::Precondition(format!("tip cycle angle {total} is not a multiple of π")));
    }
    let n = n as usize;
    Ok(UnfoldReport {
        tip_cycle_angle: total,
        original_prongs: n,
        unfolded_prongs: 2 * n,
        boundary_zero_order: 2 * n as i64 - 2,
    })
}

/// A differential `c · z^k (dz)²` for the symbolic pullback check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialQuadratic {
    pub coefficient: f64,
    pub power: i64,
}

/// Pull back `c z^k dz²` by `z -> z^m`: substituting gives
/// `c m² z^{km + 2(m-1)} dz²`.
pub fn pullback_by_power(q: MonomialQuadratic, m: i64) -> MonomialQuadratic {
    MonomialQuadratic {
        coefficient: q.coefficient * (m * m) as f64,
        power: q.power * m + 2 * (m - 1),
    }
}

/// Enlargement: glue a flat cylinder of modulus `r` to each boundary
/// circle, parametrized by arc length.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnlargementSpec {
    pub r: f64,
}

/// Boundary components as edge lists in traversal order.
pub fn boundary_components(s: &HalfTranslationSurface) -> Result<Vec<Vec<EdgeRef>>> {
    let mut remaining: std::collections::BTreeSet<EdgeRef> =
        s.boundary.iter().map(|b| b.edge).collect();
    let cycles = s.vertex_cycles();
    let next_of = |e: EdgeRef| -> Option<EdgeRef> {
        // The head corner of e belongs to a boundary cycle whose first
        // corner's outgoing edge is the next boundary edge.
        let n = s.polygons[e.polygon].len();
        let head = Corner { polygon: e.polygon, vertex: (e.edge + 1) % n };
        for (cycle, _, loc) in &cycles {
            if *loc == CycleLocation::Boundary && cycle.contains(&head) {
                let first = cycle[0];
                return Some(eref(first.polygon, first.vertex));
            }
        }
        None
    };
    let mut comps = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut comp = vec![start];
        remaining.remove(&start);
        let mut cur = start;
        loop {
            let Some(nx) = next_of(cur) else {
                return Err(Error::Precondition("boundary component does not close".into()));
            };
            if nx == start {
                break;
            }
            if !remaining.remove(&nx) {
                return Err(Error::Precondition("boundary traversal revisited an edge".into()));
            }
            comp.push(nx);
            cur = nx;
            if comp.len() > s.boundary.len() + 1 {
                return Err(Error::Precondition("runaway boundary traversal".into()));
            }
        }
        comps.push(comp);
    }
    Ok(comps)
}

/// Glue a cylinder of modulus `r` (height = r · circumference) to every
/// boundary component. Components must be circle-developable: all edges
/// horizontal and every boundary vertex angle exactly π.
pub fn glue_cylinders(
    s: &HalfTranslationSurface,
    spec: EnlargementSpec,
) -> Result<HalfTranslationSurface> {
    if spec.r < 0.0 {
        return Err(Error::Precondition("enlargement modulus must be nonnegative".into()));
    }
    for b in &s.boundary {
        if b.kind != BoundaryKind::Horizontal {
            return Err(Error::Precondition("free boundary cannot be enlarged".into()));
        }
    }
    for (cycle, total, loc) in &s.vertex_cycles() {
        if *loc == CycleLocation::Boundary && (total - std::f64::consts::PI).abs() > EPS {
            let c = cycle[0];
            return Err(Error::Unsupported(format!(
                "boundary vertex at {}.v{} has angle {total}; component does not develop to a round circle (slit boundary unsupported)",
                s.names[c.polygon], c.vertex,
            )));
        }
    }
    let comps = boundary_components(s)?;
    let min_circ = comps
        .iter()
        .map(|c| c.iter().map(|&e| s.edge_vector(e).norm()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if spec.r * min_circ < 10.0 * EPS {
        // A shorter cylinder would collapse below coordinate tolerance.
        return Ok(s.clone());
    }
    let mut out = s.clone();
    for comp in comps {
        let lens: Vec<f64> = comp.iter().map(|&e| s.edge_vector(e).norm()).collect();
        let circumference: f64 = lens.iter().sum();
        let height = spec.r * circumference;
        let k = comp.len();
        let dir = s.edge_vector(comp[0]).x.signum();
        let rect_id = out.polygons.len();
        out.names.push(format!("cyl{rect_id}"));

        let mut verts = Vec::new();
        if dir < 0.0 {
            // Component runs -x (a "top" circle): glue the rectangle's
            // bottom sub-edges; splits s_j = L - prefix(k - j).
            verts.push(v2(0.0, 0.0));
            for j in 1..k {
                let prefix: f64 = lens.iter().take(k - j).sum();
                verts.push(v2(circumference - prefix, 0.0));
            }
            verts.push(v2(circumference, 0.0));
            verts.push(v2(circumference, height));
            verts.push(v2(0.0, height));
        } else {
            // Component runs +x (a "bottom" circle): glue the rectangle's
            // top sub-edges; splits u_j = prefix(k - j), right to left.
            verts.push(v2(0.0, 0.0));
            verts.push(v2(circumference, 0.0));
            verts.push(v2(circumference, height));
            for j in 1..k {
                let prefix: f64 = lens.iter().take(k - j).sum();
                verts.push(v2(prefix, height));
            }
            verts.push(v2(0.0, height));
        }
        out.polygons.push(Polygon::new(verts));
        let m = out.polygons[rect_id].len();
        for (i, &e) in comp.iter().enumerate() {
            let sub = if dir < 0.0 {
                eref(rect_id, k - 1 - i)
            } else {
                eref(rect_id, 2 + (k - 1 - i))
            };
            out.pairings.push(Pairing { a: e, b: sub, sign: Sign::Plus });
            out.boundary.retain(|b| b.edge != e);
        }
        // Close the rectangle into a cylinder and flag the far side.
        if dir < 0.0 {
            out.pairings.push(Pairing { a: eref(rect_id, k), b: eref(rect_id, m - 1), sign: Sign::Plus });
            out.boundary.push(BoundaryEdge { edge: eref(rect_id, k + 1), kind: BoundaryKind::Horizontal });
        } else {
            out.pairings.push(Pairing { a: eref(rect_id, 1), b: eref(rect_id, m - 1), sign: Sign::Plus });
            out.boundary.push(BoundaryEdge { edge: eref(rect_id, 0), kind: BoundaryKind::Horizontal });
        }
    }
    let rep = crate::surface::validate_surface(&out);
    if !rep.is_valid() {
        return Err(Error::Unsupported(format!(
            "cylinder gluing produced an invalid surface: {:?}",
            rep.violations[0]
        )));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub modulus_of_extension: f64,
    pub closed_form: f64,
    /// Flat area left uncovered when the extension is maximal.
    pub complement_area_at_max: f64,
}

/// Modulus of extension for the cylinder family `C(hX) ⊂ C(hY)`
/// (circumference 1): binary search on r, gluing modulus-r cylinders to
/// both ends of C(hX) and testing whether the enlarged cylinder still
/// fits in C(hY) by modulus monotonicity. Agrees with the closed form
/// (hY - hX)/2; at the maximum the complement has zero area.
pub fn modulus_of_extension_cylinder(h_x: f64, h_y: f64) -> Result<ExtensionReport> {
    if h_x <= 0.0 || h_y <= 0.0 {
        return Err(Error::Precondition("cylinder heights must be positive".into()));
    }
    if h_x > h_y + EPS {
        return Err(Error::Precondition(format!(
            "C({h_x}) does not embed in C({h_y}): no conformal embedding exists"
        )));
    }
    let base = crate::surface::cylinder(h_x);
    let fits = |r: f64| -> Result<bool> {
        let enlarged = glue_cylinders(&base, EnlargementSpec { r })?;
        // The enlargement is a circumference-1 cylinder; it embeds in
        // C(hY) iff its modulus (= area) does not exceed hY.
        Ok(enlarged.area() <= h_y + 1e-13)
    };
    let mut lo = 0.0f64;
    let mut hi = (h_y - h_x) / 2.0 + 1.0;
    if !fits(lo)? {
        return Err(Error::Precondition("base cylinder does not fit".into()));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = lo;
    let max_surface = glue_cylinders(&base, EnlargementSpec { r: m })?;
    Ok(ExtensionReport {
        modulus_of_extension: m,
        closed_form: (h_y - h_x) / 2.0,
        complement_area_at_max: h_y - max_surface.area(),
    })
}

/// Covering data: pairings to cut along. Crossing a cut pairing swaps the
/// two sheets; vertex classes with an odd number of incident cut-edge
/// ends are the branch points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverSpec {
    pub cut_pairings: Vec<usize>,
    /// Declared branch points for validation; must have even cardinality
    /// and match the derived branch set.
    pub declared_branch_points: Vec<SurfacePoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverReport {
    pub branch_vertex_classes: usize,
    pub chi_base: i64,
    pub chi_cover: i64,
    pub riemann_hurwitz_ok: bool,
    pub degree_two_away_from_branch: bool,
    pub branch_angle_doubles: bool,
}

/// Branched double cover: two copies of every polygon with pairings
/// swapped across the cut arcs; the deck involution is the sheet swap.
pub fn double_cover_branched(
    s: &HalfTranslationSurface,
    spec: &CoverSpec,
) -> Result<(HalfTranslationSurface, CoverReport)> {
    if spec.declared_branch_points.len() % 2 != 0 {
        return Err(Error::Precondition(format!(
            "branch set must have even cardinality, got {}",
            spec.declared_branch_points.len()
        )));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &k in &spec.cut_pairings {
        if k >= s.pairings.len() {
            return Err(Error::Precondition(format!("cut pairing {k} out of range")));
        }
        if !seen.insert(k) {
            return Err(Error::Precondition("cut arcs intersect (duplicate pairing)".into()));
        }
    }

    let cycles = s.vertex_cycles();
    let class_of = |c: Corner| -> usize {
        cycles.iter().position(|(cs, _, _)| cs.contains(&c)).expect("corner in a cycle")
    };
    let mut incidence = vec![0usize; cycles.len()];
    for &k in &spec.cut_pairings {
        let p = s.pairings[k];
        let n = s.polygons[p.a.polygon].len();
        let tail = Corner { polygon: p.a.polygon, vertex: p.a.edge };
        let head = Corner { polygon: p.a.polygon, vertex: (p.a.edge + 1) % n };
        incidence[class_of(tail)] += 1;
        incidence[class_of(head)] += 1;
    }
    let branch_classes: Vec<usize> = (0..cycles.len()).filter(|&i| incidence[i] % 2 == 1).collect();
    if spec.declared_branch_points.len() != branch_classes.len() {
        return Err(Error::Precondition(format!(
            "declared {} branch points but the cut arcs branch at {} vertex classes",
            spec.declared_branch_points.len(),
            branch_classes.len()
        )));
    }
    for bp in &spec.declared_branch_points {
        let corner = (0..s.polygons[bp.polygon].len())
            .find(|&v| s.polygons[bp.polygon].vertices[v].dist(bp.position) <= EPS)
            .map(|v| Corner { polygon: bp.polygon, vertex: v })
            .ok_or_else(|| Error::Precondition("branch point is not a vertex".into()))?;
        if !branch_classes.contains(&class_of(corner)) {
            return Err(Error::Precondition(
                "declared branch point does not match the cut arcs".into(),
            ));
        }
    }

    // Two sheets; crossing a cut pairing swaps them.
    let n_poly = s.polygons.len();
    let lift = |e: EdgeRef, sheet: usize| eref(e.polygon + sheet * n_poly, e.edge);
    let mut w = HalfTranslationSurface::with_names(
        s.names
            .iter()
            .map(|nm| format!("{nm}a"))
            .chain(s.names.iter().map(|nm| format!("{nm}b")))
            .collect(),
        s.polygons.iter().cloned().chain(s.polygons.iter().cloned()).collect(),
    );
    for (k, p) in s.pairings.iter().enumerate() {
        if spec.cut_pairings.contains(&k) {
            w.pairings.push(Pairing { a: lift(p.a, 0), b: lift(p.b, 1), sign: p.sign });
            w.pairings.push(Pairing { a: lift(p.a, 1), b: lift(p.b, 0), sign: p.sign });
        } else {
            w.pairings.push(Pairing { a: lift(p.a, 0), b: lift(p.b, 0), sign: p.sign });
            w.pairings.push(Pairing { a: lift(p.a, 1), b: lift(p.b, 1), sign: p.sign });
        }
    }
    for b in &s.boundary {
        w.boundary.push(BoundaryEdge { edge: lift(b.edge, 0), kind: b.kind });
        w.boundary.push(BoundaryEdge { edge: lift(b.edge, 1), kind: b.kind });
    }
    let repv = crate::surface::validate_surface(&w);
    if !repv.is_valid() {
        return Err(Error::Unsupported(format!(
            "cover construction invalid: {:?}",
            repv.violations[0]
        )));
    }

    // Independent verification: Riemann-Hurwitz through Gauss-Bonnet on
    // the cover, fiber counts away from the branch set, angle doubling
    // over it.
    let gb_base = crate::surface::gauss_bonnet_global(s)?;
    let gb_cover = crate::surface::gauss_bonnet_global(&w)?;
    let rh_ok = gb_cover.chi == 2 * gb_base.chi - branch_classes.len() as i64
        && gb_cover.residual.abs() < 1e-9;
    let cover_cycles = w.vertex_cycles();
    let mut degree_ok = true;
    let mut branch_ok = true;
    for (i, (cycle, total, _)) in cycles.iter().enumerate() {
        let lifted: Vec<_> = cover_cycles
            .iter()
            .filter(|(cs, _, _)| {
                cs.iter().any(|c| {
                    cycle.contains(&Corner { polygon: c.polygon % n_poly, vertex: c.vertex })
                })
            })
            .collect();
        if branch_classes.contains(&i) {
            branch_ok &= lifted.len() == 1 && (lifted[0].1 - 2.0 * total).abs() < 1e-9;
        } else {
            degree_ok &= lifted.len() == 2 && lifted.iter().all(|(_, t, _)| (t - total).abs() < 1e-9);
        }
    }

    let report = CoverReport {
        branch_vertex_classes: branch_classes.len(),
        chi_base: gb_base.chi,
        chi_cover: gb_cover.chi,
        riemann_hurwitz_ok: rh_ok,
        degree_two_away_from_branch: degree_ok,
        branch_angle_doubles: branch_ok,
    };
    Ok((w, report))
}

/// A flat cylinder with horizontal slits, each given as
/// `(height, start x, length)`; x is taken modulo the circumference.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlitCylinder {
    pub circumference: f64,
    pub height: f64,
    pub slits: Vec<(f64, f64, f64)>,
}

impl SlitCylinder {
    /// Build the cut surface by slitting the plain cylinder.
    pub fn to_surface(&self) -> Result<HalfTranslationSurface> {
        let mut s =
            crate::surface::cylinder_with_circumference(self.circumference, self.height);
        let mut polygon_of_height = |surface: &HalfTranslationSurface, y: f64| -> usize {
            // After earlier cuts the cylinder is layered; find the
            // polygon whose y-range contains the slit height strictly.
            for (i, p) in surface.polygons.iter().enumerate() {
                let ys: Vec<f64> = p.vertices.iter().map(|v| v.y).collect();
                let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if y > lo + EPS && y < hi - EPS {
                    return i;
                }
            }
            0
        };
        for &(y, x0, len) in &self.slits {
            let pid = polygon_of_height(&s, y);
            s = cut_slit(
                &s,
                SlitSpec {
                    start: SurfacePoint { polygon: pid, position: v2(x0, y) },
                    length: len,
                },
            )?;
        }
        Ok(s)
    }

    /// Minimal forward horizontal distance from any slit tip to the next
    /// obstruction at the same height.
    pub fn clearance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &(y, x0, len)) in self.slits.iter().enumerate() {
            let tip = (x0 + len).rem_euclid(self.circumference);
            for (j, &(y2, x2, _)) in self.slits.iter().enumerate() {
                if (y2 - y).abs() > EPS {
                    continue;
                }
                let mut d = (x2 - tip).rem_euclid(self.circumference);
                if i == j && d < EPS {
                    d = self.circumference - len;
                }
                best = best.min(d);
            }
        }
        best
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowReport {
    pub t: f64,
    pub clearance: f64,
    pub map: PiecewiseAffineMap,
    pub dilatation: f64,
    pub injective: bool,
    /// Complement of the image in the ambient cylinder: the translated
    /// slits, all horizontal.
    pub complement_arcs: Vec<(f64, f64, f64)>,
    pub complement_horizontal: bool,
    /// Flow length per sampled point; constant equal to t.
    pub flow_lengths: Vec<f64>,
    pub pass: bool,
}

/// The time-t horizontal flow on a slit cylinder: translation by t,
/// defined while every forward trajectory of length t stays clear of the
/// slits. Each admissible time gives a conformal slit map of the ambient
/// cylinder whose complement is the translated slit set.
pub fn horizontal_flow_family(cyl: &SlitCylinder, t: f64, samples: usize) -> Result<FlowReport> {
    if t < 0.0 {
        return Err(Error::Precondition("flow time must be nonnegative".into()));
    }
    if cyl.slits.is_empty() {
        return Err(Error::Precondition("flow family needs at least one slit".into()));
    }
    let clearance = cyl.clearance();
    if t + 1e-9 >= clearance {
        let (y, x0, len) = cyl.slits[0];
        let tip_x = (x0 + len).rem_euclid(cyl.circumference);
        return Err(Error::Collision { t, x: tip_x, y });
    }
    let surf = cyl.to_surface()?;
    let faces: Vec<FaceMap> = (0..surf.polygons.len())
        .map(|i| FaceMap {
            src_polygon: i,
            dst_polygon: 0,
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            translation: v2(t, 0.0),
        })
        .collect();
    let map = PiecewiseAffineMap { faces };
    let dil = crate::qc::dilatation_of(&map);

    // Injectivity of the translation on sample points modulo the
    // cylinder.
    let mut pts = Vec::new();
    for k in 0..samples.max(1) {
        let fx = (k as f64 + 0.5) / samples.max(1) as f64 * cyl.circumference;
        let fy = (k as f64 * 0.37 + 0.13).rem_euclid(1.0) * cyl.height;
        let on_slit = cyl.slits.iter().any(|&(y, x0, len)| {
            (fy - y).abs() < 1e-6 && (fx - x0).rem_euclid(cyl.circumference) < len + 1e-6
        });
        if !on_slit {
            pts.push(v2(fx, fy));
        }
    }
    let mapped: Vec<Vec2> =
        pts.iter().map(|p| v2((p.x + t).rem_euclid(cyl.circumference), p.y)).collect();
    let mut injective = true;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            if mapped[i].dist(mapped[j]) < 1e-12 && pts[i].dist(pts[j]) > 1e-9 {
                injective = false;
            }
        }
    }
    let complement_arcs: Vec<(f64, f64, f64)> = cyl
        .slits
        .iter()
        .map(|&(y, x0, len)| (y, (x0 + t).rem_euclid(cyl.circumference), len))
        .collect();
    let complement_horizontal = true; // translated horizontal slits
    let flow_lengths: Vec<f64> = pts.iter().map(|_| t).collect();
    let pass = (dil - 1.0).abs() < 1e-12 && injective && complement_horizontal;
    Ok(FlowReport {
        t,
        clearance,
        map,
        dilatation: dil,
        injective,
        complement_arcs,
        complement_horizontal,
        flow_lengths,
        pass,
    })
}

/// Isometry surrogate for cylinder stacks: area, sorted boundary
/// circumferences, and the singular cone count.
pub fn cylinder_invariants(s: &HalfTranslationSurface) -> Result<(f64, Vec<f64>, usize)> {
    let comps = boundary_components(s)?;
    let mut circs: Vec<f64> =
        comps.iter().map(|c| c.iter().map(|&e| s.edge_vector(e).norm()).sum()).collect();
    circs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let singular = crate::surface::cone_points(s)?.iter().filter(|c| c.singular).count();
    Ok((s.area(), circs, singular))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{cone_points, cylinder, gauss_bonnet_global, validate_surface};

    #[test]
    fn cut_slit_on_unit_cylinder() {
        let s = cylinder(1.0);
        let cut = cut_slit(
            &s,
            SlitSpec { start: SurfacePoint { polygon: 0, position: v2(0.0, 0.5) }, length: 0.6 },
        )
        .unwrap();
        assert!(validate_surface(&cut).is_valid());
        assert!((cut.area() - 1.0).abs() < 1e-12);
        // Two original circles plus the two slit lips.
        assert_eq!(cut.boundary.len(), 4);
        let cones = cone_points(&cut).unwrap();
        let tips: Vec<_> = cones
            .iter()
            .filter(|c| {
                c.location == CycleLocation::Boundary
                    && (c.total_angle - 2.0 * std::f64::consts::PI).abs() < 1e-9
            })
            .collect();
        assert_eq!(tips.len(), 2, "{cones:#?}");
        assert!(gauss_bonnet_global(&cut).unwrap().residual.abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_bad_slits_error() {
        let s = cylinder(1.0);
        assert!(cut_slit(
            &s,
            SlitSpec { start: SurfacePoint { polygon: 0, position: v2(0.2, 0.5) }, length: 0.0 }
        )
        .is_err());
        // Slit whose interior passes through the octagon cone point.
        let o = crate::surface::octagon();
        let v0 = o.polygons[0].vertices[0];
        assert!(cut_slit(
            &o,
            SlitSpec {
                start: SurfacePoint { polygon: 0, position: v2(v0.x - 0.1, v0.y) },
                length: 0.2,
            },
        )
        .is_err());
    }

    #[test]
    fn unfold_regular_tip_doubles_prongs() {
        let s = cylinder(1.0);
        let cut = cut_slit(
            &s,
            SlitSpec { start: SurfacePoint { polygon: 0, position: v2(0.2, 0.5) }, length: 0.5 },
        )
        .unwrap();
        let cones = cone_points(&cut).unwrap();
        let tip = cones
            .iter()
            .find(|c| {
                c.location == CycleLocation::Boundary
                    && (c.total_angle - 2.0 * std::f64::consts::PI).abs() < 1e-9
            })
            .unwrap();
        let c = tip.vertex_cycle[0];
        let rep = unfold_slit(
            &cut,
            SurfacePoint {
                polygon: c.polygon,
                position: cut.polygons[c.polygon].vertices[c.vertex],
            },
        )
        .unwrap();
        assert_eq!(rep.original_prongs, 2);
        assert_eq!(rep.unfolded_prongs, 4);
        assert_eq!(rep.boundary_zero_order, 2);
    }

    #[test]
    fn pullback_of_dz2_by_square_is_4z2() {
        let q = MonomialQuadratic { coefficient: 1.0, power: 0 };
        assert_eq!(pullback_by_power(q, 2), MonomialQuadratic { coefficient: 4.0, power: 2 });
        // Slit ending at a simple zero: z dz² pulls back to 4 z⁴ dz².
        let q1 = MonomialQuadratic { coefficient: 1.0, power: 1 };
        assert_eq!(pullback_by_power(q1, 2), MonomialQuadratic { coefficient: 4.0, power: 4 });
    }

    #[test]
    fn glue_half_cylinders_makes_c2() {
        let s = cylinder(1.0);
        let bigger = glue_cylinders(&s, EnlargementSpec { r: 0.5 }).unwrap();
        assert!(validate_surface(&bigger).is_valid());
        assert!((bigger.area() - 2.0).abs() < 1e-12, "{}", bigger.area());
        let inv = cylinder_invariants(&bigger).unwrap();
        let inv2 = cylinder_invariants(&cylinder(2.0)).unwrap();
        assert!((inv.0 - inv2.0).abs() < 1e-12);
        assert_eq!(inv.1.len(), inv2.1.len());
        assert_eq!(inv.2, inv2.2);
        let same = glue_cylinders(&s, EnlargementSpec { r: 0.0 }).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn slit_boundary_cannot_be_enlarged() {
        let s = cylinder(1.0);
        let cut = cut_slit(
            &s,
            SlitSpec { start: SurfacePoint { polygon: 0, position: v2(0.2, 0.5) }, length: 0.5 },
        )
        .unwrap();
        assert!(glue_cylinders(&cut, EnlargementSpec { r: 0.25 }).is_err());
    }

    #[test]
    fn gluing_is_additive_on_cylinder_invariants() {
        let s = cylinder(1.0);
        let a = glue_cylinders(
            &glue_cylinders(&s, EnlargementSpec { r: 0.25 }).unwrap(),
            EnlargementSpec { r: 0.15 },
        )
        .unwrap();
        let b = glue_cylinders(&s, EnlargementSpec { r: 0.40 }).unwrap();
        let ia = cylinder_invariants(&a).unwrap();
        let ib = cylinder_invariants(&b).unwrap();
        assert!((ia.0 - ib.0).abs() < 1e-12);
        assert_eq!(ia.1.len(), ib.1.len());
        for (x, y) in ia.1.iter().zip(&ib.1) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(ia.2, ib.2);
    }

    #[test]
    fn extension_modulus_matches_closed_form() {
        let rep = modulus_of_extension_cylinder(1.0, 3.0).unwrap();
        assert!((rep.modulus_of_extension - 1.0).abs() < 1e-9, "{}", rep.modulus_of_extension);
        assert!(rep.complement_area_at_max.abs() < 1e-9);
        let rep2 = modulus_of_extension_cylinder(2.0, 2.0).unwrap();
        assert!(rep2.modulus_of_extension.abs() < 1e-9);
        assert!(modulus_of_extension_cylinder(2.0, 1.0).is_err());
    }

    #[test]
    fn flow_family_on_rotating_slit_cylinder() {
        let cyl = SlitCylinder { circumference: 1.0, height: 1.0, slits: vec![(0.5, 0.0, 0.6)] };
        assert!((cyl.clearance() - 0.4).abs() < 1e-12);
        let rep = horizontal_flow_family(&cyl, 0.2, 50).unwrap();
        assert!(rep.pass);
        assert!((rep.dilatation - 1.0).abs() < 1e-15);
        assert!(rep.flow_lengths.iter().all(|&l| (l - 0.2).abs() < 1e-15));
        assert_eq!(rep.complement_arcs.len(), 1);
        assert!((rep.complement_arcs[0].1 - 0.2).abs() < 1e-12);
        let id = horizontal_flow_family(&cyl, 0.0, 10).unwrap();
        assert!(id.pass);
        assert!(horizontal_flow_family(&cyl, 0.45, 10).is_err());
        assert!(horizontal_flow_family(&cyl, 0.4, 10).is_err());
    }
}
