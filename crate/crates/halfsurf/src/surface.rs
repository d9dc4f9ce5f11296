//! Euclidean polygons with `z -> ±z + c` edge identifications: the flat
//! structure of a half-translation surface, its cone points, and the
//! global Gauss-Bonnet balance.
//!
//! Polygons live in natural coordinates, so lengths and angles are read
//! straight off vertex coordinates. A pairing stores only its sign; the
//! translation part is implied by the matched endpoints.

use crate::error::{Error, Result};
use crate::geom::{
    angle_ccw, interior_angle, point_in_polygon_closed, polygon_is_simple, signed_area, v2,
    Isometry, Vec2, EPS,
};
use serde::{Deserialize, Serialize};

pub const PI: f64 = std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Vec2>) -> Self {
        Polygon { vertices }
    }
    pub fn len(&self) -> usize {
        self.vertices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
    /// Edge `i` runs from vertex `i` to vertex `i+1` (cyclic).
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }
    pub fn edge_vector(&self, i: usize) -> Vec2 {
        let (a, b) = self.edge(i);
        b - a
    }
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRef {
    pub polygon: usize,
    pub edge: usize,
}

pub const fn eref(polygon: usize, edge: usize) -> EdgeRef {
    EdgeRef { polygon, edge }
}

/// `+1` glues by a translation `z -> z + c`; `-1` by `z -> -z + c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub a: EdgeRef,
    pub b: EdgeRef,
    pub sign: Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Horizontal,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub edge: EdgeRef,
    pub kind: BoundaryKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkRole {
    Puncture,
    Cone,
    Plain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub polygon: usize,
    pub position: Vec2,
}

pub const fn spoint(polygon: usize, x: f64, y: f64) -> SurfacePoint {
    SurfacePoint { polygon, position: Vec2 { x, y } }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub point: SurfacePoint,
    pub role: MarkRole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfTranslationSurface {
    pub names: Vec<String>,
    pub polygons: Vec<Polygon>,
    pub pairings: Vec<Pairing>,
    pub boundary: Vec<BoundaryEdge>,
    pub marked_points: Vec<MarkedPoint>,
}

/// A corner of a polygon: the wedge at `vertex` between edges
/// `vertex-1 -> vertex` and `vertex -> vertex+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Corner {
    pub polygon: usize,
    pub vertex: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleLocation {
    Interior,
    Boundary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConePointReport {
    pub vertex_cycle: Vec<Corner>,
    pub total_angle: f64,
    pub prongs: usize,
    pub location: CycleLocation,
    pub singular: bool,
    /// Angle is an integer multiple of π within tolerance. Cycles on free
    /// boundary are exempt from the multiple-of-π requirement.
    pub angle_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: String,
    pub element: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
    fn push(&mut self, invariant: &str, element: String, detail: String) {
        self.violations.push(Violation { invariant: invariant.to_string(), element, detail });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetReport {
    pub lhs: f64,
    pub chi: i64,
    pub residual: f64,
}

impl HalfTranslationSurface {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        let names = (0..polygons.len()).map(|i| format!("P{i}")).collect();
        HalfTranslationSurface { names, polygons, pairings: Vec::new(), boundary: Vec::new(), marked_points: Vec::new() }
    }

    pub fn with_names(names: Vec<String>, polygons: Vec<Polygon>) -> Self {
        HalfTranslationSurface { names, polygons, pairings: Vec::new(), boundary: Vec::new(), marked_points: Vec::new() }
    }

    pub fn pair(&mut self, a: EdgeRef, b: EdgeRef, sign: Sign) {
        self.pairings.push(Pairing { a, b, sign });
    }

    pub fn set_boundary(&mut self, edge: EdgeRef, kind: BoundaryKind) {
        self.boundary.push(BoundaryEdge { edge, kind });
    }

    pub fn edge_count(&self) -> usize {
        self.polygons.iter().map(|p| p.len()).sum()
    }

    /// Partner lookup: edge -> (partner edge, sign), if paired.
    pub fn partner(&self, e: EdgeRef) -> Option<(EdgeRef, Sign)> {
        for p in &self.pairings {
            if p.a == e {
                return Some((p.b, p.sign));
            }
            if p.b == e {
                return Some((p.a, p.sign));
            }
        }
        None
    }

    pub fn boundary_kind(&self, e: EdgeRef) -> Option<BoundaryKind> {
        self.boundary.iter().find(|b| b.edge == e).map(|b| b.kind)
    }

    pub fn is_boundary(&self, e: EdgeRef) -> bool {
        self.boundary_kind(e).is_some()
    }

    pub fn has_free_boundary(&self) -> bool {
        self.boundary.iter().any(|b| b.kind == BoundaryKind::Free)
    }

    pub fn edge_vector(&self, e: EdgeRef) -> Vec2 {
        self.polygons[e.polygon].edge_vector(e.edge)
    }

    pub fn edge_endpoints(&self, e: EdgeRef) -> (Vec2, Vec2) {
        self.polygons[e.polygon].edge(e.edge)
    }

    /// The gluing map from the partner polygon's coordinates into the
    /// coordinates of `e.polygon`, across edge `e`.
    ///
    /// If `e` is paired with `f`, the map sends `f`'s start to `e`'s head
    /// and `f`'s head to `e`'s start (interiors on opposite sides).
    pub fn gluing_into(&self, e: EdgeRef) -> Option<(EdgeRef, Isometry)> {
        let (f, sign) = self.partner(e)?;
        let (_, e_head) = self.edge_endpoints(e);
        let (f_start, _) = self.edge_endpoints(f);
        let s = sign.as_f64();
        Some((f, Isometry { sign: s, t: e_head - f_start.scale(s) }))
    }

    /// Total flat area = sum of polygon areas.
    pub fn area(&self) -> f64 {
        self.polygons.iter().map(|p| p.area()).sum()
    }

    fn corner_angle(&self, c: Corner) -> f64 {
        interior_angle(&self.polygons[c.polygon].vertices, c.vertex)
    }

    fn in_edge(&self, c: Corner) -> EdgeRef {
        let n = self.polygons[c.polygon].len();
        eref(c.polygon, (c.vertex + n - 1) % n)
    }

    fn out_edge(&self, c: Corner) -> EdgeRef {
        eref(c.polygon, c.vertex)
    }

    /// Step counterclockwise around the vertex: cross the corner's
    /// incoming edge. The next corner sits at the start of the partner.
    pub fn ccw_neighbor(&self, c: Corner) -> Option<Corner> {
        let (f, _) = self.partner(self.in_edge(c))?;
        Some(Corner { polygon: f.polygon, vertex: f.edge })
    }

    /// Step clockwise around the vertex: cross the corner's outgoing edge.
    pub fn cw_neighbor(&self, c: Corner) -> Option<Corner> {
        let (f, _) = self.partner(self.out_edge(c))?;
        let n = self.polygons[f.polygon].len();
        Some(Corner { polygon: f.polygon, vertex: (f.edge + 1) % n })
    }

    /// Identification cycles of all polygon corners, with their total
    /// angles. Interior cycles are closed walks; boundary cycles run from
    /// one boundary edge to another.
    pub fn vertex_cycles(&self) -> Vec<(Vec<Corner>, f64, CycleLocation)> {
        let mut seen = std::collections::BTreeSet::new();
        let mut cycles = Vec::new();
        for p in 0..self.polygons.len() {
            for vtx in 0..self.polygons[p].len() {
                let start = Corner { polygon: p, vertex: vtx };
                if seen.contains(&start) {
                    continue;
                }
                // Walk clockwise first to find the "first" corner of a
                // boundary cycle (or detect a closed interior cycle).
                let mut first = start;
                let mut boundary = false;
                let mut guard = 0usize;
                loop {
                    match self.cw_neighbor(first) {
                        Some(c) => {
                            if c == start {
                                break; // closed cycle
                            }
                            first = c;
                        }
                        None => {
                            boundary = true;
                            break;
                        }
                    }
                    guard += 1;
                    if guard > self.edge_count() + 1 {
                        break; // malformed pairings; avoid spinning
                    }
                }
                // Now walk counterclockwise from `first`, collecting.
                let mut cycle = vec![first];
                seen.insert(first);
                let mut cur = first;
                let mut guard = 0usize;
                loop {
                    match self.ccw_neighbor(cur) {
                        Some(c) => {
                            if c == first {
                                break;
                            }
                            cycle.push(c);
                            seen.insert(c);
                            cur = c;
                        }
                        None => break,
                    }
                    guard += 1;
                    if guard > self.edge_count() + 1 {
                        break;
                    }
                }
                let total: f64 = cycle.iter().map(|&c| self.corner_angle(c)).sum();
                let loc = if boundary { CycleLocation::Boundary } else { CycleLocation::Interior };
                cycles.push((cycle, total, loc));
            }
        }
        cycles
    }

    /// Whether this cycle touches only horizontal boundary edges (for
    /// boundary cycles); interior cycles return false.
    fn cycle_boundary_all_horizontal(&self, cycle: &[Corner]) -> bool {
        let first = cycle[0];
        let last = *cycle.last().unwrap();
        let e1 = self.out_edge(first);
        let e2 = self.in_edge(last);
        matches!(self.boundary_kind(e1), Some(BoundaryKind::Horizontal))
            && matches!(self.boundary_kind(e2), Some(BoundaryKind::Horizontal))
    }

    /// Vertex class index of a corner (position in `vertex_cycles`).
    pub fn vertex_class_of(&self, corner: Corner, cycles: &[(Vec<Corner>, f64, CycleLocation)]) -> usize {
        cycles
            .iter()
            .position(|(cs, _, _)| cs.contains(&corner))
            .expect("corner belongs to some cycle")
    }
}

/// Check every structural invariant and report violations.
pub fn validate_surface(s: &HalfTranslationSurface) -> ValidationReport {
    let mut rep = ValidationReport::default();

    for (i, poly) in s.polygons.iter().enumerate() {
        let name = &s.names[i];
        if poly.len() < 3 {
            rep.push("polygon-vertex-count", name.clone(), format!("{} vertices", poly.len()));
            continue;
        }
        for v in 0..poly.len() {
            if poly.vertices[v].dist(poly.vertices[(v + 1) % poly.len()]) <= EPS {
                rep.push("polygon-repeated-vertex", format!("{name}.{v}"), "consecutive vertices coincide".into());
            }
        }
        if poly.area() <= 0.0 {
            rep.push("polygon-orientation", name.clone(), format!("signed area {}", poly.area()));
        }
        if !polygon_is_simple(&poly.vertices, EPS) {
            rep.push("polygon-simple", name.clone(), "self-intersecting polygon".into());
        }
    }
    if !rep.is_valid() {
        return rep; // angle walks need well-formed polygons
    }

    // Edge cover: each edge in exactly one pairing or boundary entry.
    let mut cover: std::collections::BTreeMap<EdgeRef, usize> = std::collections::BTreeMap::new();
    let in_range = |e: EdgeRef| e.polygon < s.polygons.len() && e.edge < s.polygons[e.polygon].len();
    for (k, p) in s.pairings.iter().enumerate() {
        for e in [p.a, p.b] {
            if !in_range(e) {
                rep.push("edge-ref-range", format!("pairing {k}"), format!("{e:?} out of range"));
            } else {
                *cover.entry(e).or_insert(0) += 1;
            }
        }
        if p.a == p.b {
            rep.push("pairing-involution", format!("pairing {k}"), "edge paired with itself".into());
        }
    }
    for b in &s.boundary {
        if !in_range(b.edge) {
            rep.push("edge-ref-range", format!("{:?}", b.edge), "boundary edge out of range".into());
        } else {
            *cover.entry(b.edge).or_insert(0) += 1;
        }
    }
    for p in 0..s.polygons.len() {
        for e in 0..s.polygons[p].len() {
            let r = eref(p, e);
            match cover.get(&r).copied().unwrap_or(0) {
                1 => {}
                0 => rep.push("edge-cover", format!("{}.{e}", s.names[p]), "edge neither paired nor boundary".into()),
                n => rep.push("edge-cover", format!("{}.{e}", s.names[p]), format!("edge referenced {n} times")),
            }
        }
    }
    if !rep.is_valid() {
        return rep;
    }

    // Pairing geometry: equal lengths and the orientation relation.
    for (k, p) in s.pairings.iter().enumerate() {
        let va = s.edge_vector(p.a);
        let vb = s.edge_vector(p.b);
        if (va.norm() - vb.norm()).abs() > EPS {
            rep.push(
                "pairing-length",
                format!("pairing {k}"),
                format!("lengths {} vs {}", va.norm(), vb.norm()),
            );
            continue;
        }
        let want = match p.sign {
            Sign::Plus => -va,
            Sign::Minus => va,
        };
        if (vb - want).norm() > EPS {
            rep.push(
                "pairing-orientation",
                format!("pairing {k}"),
                format!("edge_vector(b) = {vb:?}, expected {want:?} for sign {:?}", p.sign),
            );
        }
    }

    // Horizontal boundary edges must be horizontal in natural coordinates.
    for b in &s.boundary {
        if b.kind == BoundaryKind::Horizontal {
            let v = s.edge_vector(b.edge);
            if v.y.abs() > EPS {
                rep.push(
                    "boundary-horizontal",
                    format!("{}.{}", s.names[b.edge.polygon], b.edge.edge),
                    format!("imaginary part {} of edge vector", v.y),
                );
            }
        }
    }

    // Vertex cycle angles.
    for (cycle, total, loc) in s.vertex_cycles() {
        let must_be_pi_multiple = match loc {
            CycleLocation::Interior => true,
            CycleLocation::Boundary => s.cycle_boundary_all_horizontal(&cycle),
        };
        if must_be_pi_multiple {
            let m = (total / PI).round();
            if m < 1.0 || (total - m * PI).abs() > EPS {
                rep.push(
                    "cycle-angle",
                    format!("cycle at {}.v{}", s.names[cycle[0].polygon], cycle[0].vertex),
                    format!("total angle {total} is not a positive multiple of π"),
                );
            }
        }
    }

    // Marked points must lie in their polygon.
    for (k, m) in s.marked_points.iter().enumerate() {
        if m.point.polygon >= s.polygons.len()
            || !point_in_polygon_closed(&s.polygons[m.point.polygon].vertices, m.point.position, EPS)
        {
            rep.push("mark-position", format!("mark {k}"), "outside its polygon".into());
        }
    }

    // Finite positive total area.
    let area = s.area();
    if !(area.is_finite() && area > 0.0) {
        rep.push("total-area", "surface".into(), format!("area {area}"));
    }

    rep
}

/// Identification cycles with prong counts. Errors if an angle that must
/// be a multiple of π is not (structural defect).
pub fn cone_points(s: &HalfTranslationSurface) -> Result<Vec<ConePointReport>> {
    let mut out = Vec::new();
    for (cycle, total, loc) in s.vertex_cycles() {
        let exempt = loc == CycleLocation::Boundary && !s.cycle_boundary_all_horizontal(&cycle);
        let m = (total / PI).round();
        let angle_ok = m >= 1.0 && (total - m * PI).abs() <= EPS;
        if !angle_ok && !exempt {
            return Err(Error::InvalidSurface(format!(
                "vertex cycle at {}.v{} has angle {} (not an integer multiple of π)",
                s.names[cycle[0].polygon], cycle[0].vertex, total
            )));
        }
        let prongs = m.max(1.0) as usize;
        let singular = match loc {
            CycleLocation::Interior => prongs != 2,
            CycleLocation::Boundary => prongs != 1,
        };
        out.push(ConePointReport {
            vertex_cycle: cycle,
            total_angle: total,
            prongs,
            location: loc,
            singular: singular && !exempt,
            angle_ok: angle_ok || exempt,
        });
    }
    Ok(out)
}

/// Global Gauss-Bonnet balance against the combinatorial Euler
/// characteristic of the identified complex.
pub fn gauss_bonnet_global(s: &HalfTranslationSurface) -> Result<GaussBonnetReport> {
    let cycles = s.vertex_cycles();
    let mut lhs = 0.0;
    for (_, total, loc) in &cycles {
        lhs += match loc {
            CycleLocation::Interior => 2.0 * PI - total,
            CycleLocation::Boundary => PI - total,
        };
    }
    let v = cycles.len() as i64;
    let e = (s.pairings.len() + s.boundary.len()) as i64;
    let f = s.polygons.len() as i64;
    let chi = v - e + f;
    let residual = lhs - 2.0 * PI * chi as f64;
    Ok(GaussBonnetReport { lhs, chi, residual })
}

/// Flat area of the surface (the norm of the underlying differential).
pub fn area(s: &HalfTranslationSurface) -> f64 {
    s.area()
}

/// Split polygon `poly` along the diagonal from vertex `i` to vertex `j`
/// and re-pair the two halves along the cut. All external references are
/// remapped. The diagonal must be interior to the polygon.
pub fn subdivide_along_diagonal(
    s: &HalfTranslationSurface,
    poly: usize,
    i: usize,
    j: usize,
) -> Result<HalfTranslationSurface> {
    let p = &s.polygons[poly];
    let n = p.len();
    let (i, j) = (i % n, j % n);
    if i == j || (i + 1) % n == j || (j + 1) % n == i {
        return Err(Error::Precondition("diagonal endpoints must be non-adjacent vertices".into()));
    }
    let a = p.vertices[i];
    let b = p.vertices[j];
    if !crate::geom::segment_in_polygon(&p.vertices, a, b, EPS) {
        return Err(Error::Precondition("diagonal not interior to polygon".into()));
    }
    // First half: vertices i..=j; second half: vertices j..=i (cyclic).
    let mut verts1 = Vec::new();
    let mut k = i;
    loop {
        verts1.push(p.vertices[k]);
        if k == j {
            break;
        }
        k = (k + 1) % n;
    }
    let mut verts2 = Vec::new();
    let mut k = j;
    loop {
        verts2.push(p.vertices[k]);
        if k == i {
            break;
        }
        k = (k + 1) % n;
    }
    // Map old edge index -> (new polygon id, new edge index).
    // Half 1 (index `poly`): edges i, i+1, ..., j-1 become 0..;
    // its last edge (j -> i) is the diagonal.
    // Half 2 (new index): edges j, ..., i-1 become 0..; last is diagonal.
    let new_poly_id = s.polygons.len();
    let mut edge_map = std::collections::BTreeMap::new();
    let mut k = i;
    let mut idx = 0usize;
    while k != j {
        edge_map.insert(k, (poly, idx));
        idx += 1;
        k = (k + 1) % n;
    }
    let diag1 = idx; // edge j->i in half 1
    let mut k = j;
    let mut idx = 0usize;
    while k != i {
        edge_map.insert(k, (new_poly_id, idx));
        idx += 1;
        k = (k + 1) % n;
    }
    let diag2 = idx; // edge i->j in half 2

    let mut out = s.clone();
    out.polygons[poly] = Polygon::new(verts1);
    out.polygons.push(Polygon::new(verts2));
    out.names.push(format!("{}b", s.names[poly]));
    let remap = |e: EdgeRef| -> EdgeRef {
        if e.polygon == poly {
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
    out.pairings.push(Pairing { a: eref(poly, diag1), b: eref(new_poly_id, diag2), sign: Sign::Plus });
    // Marked points in the split polygon move to whichever half contains them.
    for m in &mut out.marked_points {
        if m.point.polygon == poly
            && !point_in_polygon_closed(&out.polygons[poly].vertices, m.point.position, EPS)
        {
            m.point.polygon = new_poly_id;
        }
    }
    Ok(out)
}

/// Insert a vertex at parameter `t` on edge `e` and at the matching
/// parameter on its partner (if paired), keeping the complex consistent.
pub fn split_edge(s: &HalfTranslationSurface, e: EdgeRef, t: f64) -> Result<HalfTranslationSurface> {
    if !(t > EPS && t < 1.0 - EPS) {
        return Err(Error::Precondition(format!("split parameter {t} out of (0,1)")));
    }
    let partner = s.partner(e);
    let mut out = s.clone();

    // Inserting a vertex shifts edge indices after the insertion point.
    let insert = |surf: &mut HalfTranslationSurface, e: EdgeRef, t: f64| {
        let poly = &mut surf.polygons[e.polygon];
        let (a, b) = poly.edge(e.edge);
        poly.vertices.insert(e.edge + 1, a.lerp(b, t));
    };
    let shift = |r: EdgeRef, at: EdgeRef| -> EdgeRef {
        if r.polygon == at.polygon && r.edge > at.edge {
            eref(r.polygon, r.edge + 1)
        } else {
            r
        }
    };

    match partner {
        None => {
            let kind = s.boundary_kind(e).ok_or_else(|| {
                Error::Precondition("edge neither paired nor boundary".into())
            })?;
            insert(&mut out, e, t);
            for pr in &mut out.pairings {
                pr.a = shift(pr.a, e);
                pr.b = shift(pr.b, e);
            }
            let mut new_bd = Vec::new();
            for bd in &mut out.boundary {
                if bd.edge == e {
                    new_bd.push(BoundaryEdge { edge: eref(e.polygon, e.edge + 1), kind });
                }
                bd.edge = shift(bd.edge, e);
            }
            out.boundary.extend(new_bd);
        }
        Some((f, sign)) => {
            // Matching point on the partner: parameter 1 - t.
            if f.polygon == e.polygon && f.edge == e.edge {
                return Err(Error::Precondition("edge paired with itself".into()));
            }
            // Insert into the later edge first so indices stay valid when
            // both edges share a polygon.
            let (first, second, tf, ts) = if (f.polygon, f.edge) > (e.polygon, e.edge) {
                (f, e, 1.0 - t, t)
            } else {
                (e, f, t, 1.0 - t)
            };
            insert(&mut out, first, tf);
            insert(&mut out, second, ts);
            let reshift = |r: EdgeRef| shift(shift(r, first), second);
            let pairing_idx = out
                .pairings
                .iter()
                .position(|p| (p.a == e && p.b == f) || (p.a == f && p.b == e))
                .expect("pairing exists");
            for (k, pr) in out.pairings.iter_mut().enumerate() {
                if k == pairing_idx {
                    continue;
                }
                pr.a = reshift(pr.a);
                pr.b = reshift(pr.b);
            }
            for bd in &mut out.boundary {
                bd.edge = reshift(bd.edge);
            }
            // Re-pair the four half-edges: e splits into e0=(e), e1=(e+1);
            // f into f0=(f), f1=(f+1). Gluing sends e's start to f's head:
            // e0 matches f1, e1 matches f0.
            let e0 = reshift(e);
            let f0 = reshift(f);
            let e1 = eref(e0.polygon, e0.edge + 1);
            let f1 = eref(f0.polygon, f0.edge + 1);
            out.pairings[pairing_idx] = Pairing { a: e0, b: f1, sign };
            out.pairings.push(Pairing { a: e1, b: f0, sign });
        }
    }
    Ok(out)
}

/// Canonical representative of a surface point: points within tolerance
/// of a paired edge are re-expressed on the smaller `(polygon, edge)`
/// side of that pairing.
pub fn canonicalize_point(s: &HalfTranslationSurface, p: SurfacePoint) -> SurfacePoint {
    let poly = &s.polygons[p.polygon];
    for e in 0..poly.len() {
        let (a, b) = poly.edge(e);
        if crate::geom::seg_point_distance(a, b, p.position) <= EPS {
            if let Some((f, _)) = s.partner(eref(p.polygon, e)) {
                if (f.polygon, f.edge) < (p.polygon, e) {
                    let (_, iso) = s.gluing_into(eref(f.polygon, f.edge)).unwrap();
                    // `iso` maps p.polygon coords into f.polygon coords
                    // (gluing into f across its edge comes from partner e).
                    return SurfacePoint { polygon: f.polygon, position: iso.apply(p.position) };
                }
            }
            return p;
        }
    }
    p
}

/// The interior wedge directions at a corner: (outgoing edge direction,
/// incoming-edge-reversed direction). The wedge spans counterclockwise
/// from the first to the second.
pub fn corner_wedge(s: &HalfTranslationSurface, c: Corner) -> (Vec2, Vec2) {
    let poly = &s.polygons[c.polygon];
    let n = poly.len();
    let cur = poly.vertices[c.vertex];
    let next = poly.vertices[(c.vertex + 1) % n];
    let prev = poly.vertices[(c.vertex + n - 1) % n];
    (next - cur, prev - cur)
}

/// Angle measured counterclockwise from the corner's outgoing-edge
/// direction to `dir`, for a direction inside the corner wedge.
pub fn angle_in_corner(s: &HalfTranslationSurface, c: Corner, dir: Vec2) -> f64 {
    let (a, _) = corner_wedge(s, c);
    angle_ccw(a, dir)
}

/// Sweep counterclockwise around the identified vertex from direction
/// `from_dir` at corner `from`, to direction `to_dir` at corner `to`.
/// Returns the swept angle in `[0, total_angle]`.
pub fn sweep_between(
    s: &HalfTranslationSurface,
    from: Corner,
    from_dir: Vec2,
    to: Corner,
    to_dir: Vec2,
) -> Result<f64> {
    let g1 = angle_in_corner(s, from, from_dir);
    let g2 = angle_in_corner(s, to, to_dir);
    if from == to && g2 >= g1 - 1e-12 {
        return Ok(g2 - g1);
    }
    let mut swept = interior_angle(&s.polygons[from.polygon].vertices, from.vertex) - g1;
    let mut cur = from;
    for _ in 0..4096 {
        match s.ccw_neighbor(cur) {
            Some(c) => {
                if c == to {
                    return Ok(swept + g2);
                }
                swept += interior_angle(&s.polygons[c.polygon].vertices, c.vertex);
                cur = c;
            }
            None => {
                return Err(Error::Precondition(
                    "sweep crossed the boundary before reaching the target corner".into(),
                ))
            }
        }
    }
    Err(Error::Precondition("vertex cycle too long".into()))
}

/// Build the unit square torus: opposite sides paired by translations.
pub fn square_torus() -> HalfTranslationSurface {
    let mut s = HalfTranslationSurface::new(vec![Polygon::new(vec![
        v2(0.0, 0.0),
        v2(1.0, 0.0),
        v2(1.0, 1.0),
        v2(0.0, 1.0),
    ])]);
    s.pair(eref(0, 0), eref(0, 2), Sign::Plus);
    s.pair(eref(0, 1), eref(0, 3), Sign::Plus);
    s
}

/// Flat cylinder `C(h)`: circumference 1, height `h`, horizontal boundary.
pub fn cylinder(h: f64) -> HalfTranslationSurface {
    cylinder_with_circumference(1.0, h)
}

/// Flat cylinder of arbitrary circumference and height.
pub fn cylinder_with_circumference(c: f64, h: f64) -> HalfTranslationSurface {
    let mut s = HalfTranslationSurface::new(vec![Polygon::new(vec![
        v2(0.0, 0.0),
        v2(c, 0.0),
        v2(c, h),
        v2(0.0, h),
    ])]);
    s.pair(eref(0, 1), eref(0, 3), Sign::Plus);
    s.set_boundary(eref(0, 0), BoundaryKind::Horizontal);
    s.set_boundary(eref(0, 2), BoundaryKind::Horizontal);
    s
}

/// Regular octagon with side 1 centered at the origin, opposite sides
/// paired by translations: the standard genus-2 surface with one 6π cone.
pub fn octagon() -> HalfTranslationSurface {
    let n = 8;
    let circum_r = 0.5 / (PI / n as f64).sin();
    let mut verts = Vec::new();
    for k in 0..n {
        // Bottom edge horizontal; edge k is antiparallel to edge k+4.
        let ang = -5.0 * PI / 8.0 + PI / 4.0 * k as f64;
        verts.push(v2(circum_r * ang.cos(), circum_r * ang.sin()));
    }
    let mut s = HalfTranslationSurface::new(vec![Polygon::new(verts)]);
    for k in 0..4 {
        s.pair(eref(0, k), eref(0, k + 4), Sign::Plus);
    }
    s
}

/// The pillowcase: two unit squares glued with four `z -> -z + c`
/// pairings; a flat sphere with four π cones (simple poles).
pub fn pillowcase() -> HalfTranslationSurface {
    let sq = || Polygon::new(vec![v2(0.0, 0.0), v2(1.0, 0.0), v2(1.0, 1.0), v2(0.0, 1.0)]);
    let mut s = HalfTranslationSurface::new(vec![sq(), sq()]);
    s.pair(eref(0, 1), eref(1, 3), Sign::Plus); // A.right - B.left
    s.pair(eref(0, 3), eref(1, 1), Sign::Plus); // A.left - B.right
    s.pair(eref(0, 0), eref(1, 0), Sign::Minus); // bottoms, flipped
    s.pair(eref(0, 2), eref(1, 2), Sign::Minus); // tops, flipped
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_torus_validates_and_balances() {
        let s = square_torus();
        let rep = validate_surface(&s);
        assert!(rep.is_valid(), "{:?}", rep.violations);
        let cones = cone_points(&s).unwrap();
        assert_eq!(cones.len(), 1);
        assert!((cones[0].total_angle - 2.0 * PI).abs() < EPS);
        assert_eq!(cones[0].prongs, 2);
        assert!(!cones[0].singular);
        let gb = gauss_bonnet_global(&s).unwrap();
        assert_eq!(gb.chi, 0);
        assert!(gb.lhs.abs() < EPS);
        assert!(gb.residual.abs() < EPS);
        assert!((area(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_fails_validation() {
        // Square with one pairing length off by 0.1.
        let mut s = HalfTranslationSurface::new(vec![
            Polygon::new(vec![v2(0.0, 0.0), v2(1.0, 0.0), v2(1.0, 1.0), v2(0.0, 1.0)]),
            Polygon::new(vec![v2(2.0, 0.0), v2(3.1, 0.0), v2(3.1, 1.0), v2(2.0, 1.0)]),
        ]);
        s.pair(eref(0, 0), eref(1, 2), Sign::Plus); // 1.0 vs 1.1
        for e in [eref(0, 1), eref(0, 2), eref(0, 3), eref(1, 0), eref(1, 1), eref(1, 3)] {
            s.set_boundary(e, BoundaryKind::Free);
        }
        let rep = validate_surface(&s);
        assert!(rep.violations.iter().any(|v| v.invariant == "pairing-length"));
    }

    #[test]
    fn cylinder_c2_validates() {
        let s = cylinder(2.0);
        let rep = validate_surface(&s);
        assert!(rep.is_valid(), "{:?}", rep.violations);
        let cones = cone_points(&s).unwrap();
        // Two boundary cycles, each of angle π (two right angles).
        assert_eq!(cones.len(), 2);
        for c in &cones {
            assert_eq!(c.location, CycleLocation::Boundary);
            assert!((c.total_angle - PI).abs() < EPS);
            assert_eq!(c.prongs, 1);
            assert!(!c.singular);
        }
        let gb = gauss_bonnet_global(&s).unwrap();
        assert_eq!(gb.chi, 0);
        assert!(gb.residual.abs() < EPS);
        assert!((area(&s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn octagon_has_one_six_prong_cone() {
        let s = octagon();
        let rep = validate_surface(&s);
        assert!(rep.is_valid(), "{:?}", rep.violations);
        let cones = cone_points(&s).unwrap();
        assert_eq!(cones.len(), 1);
        assert!((cones[0].total_angle - 6.0 * PI).abs() < EPS);
        assert_eq!(cones[0].prongs, 6);
        assert!(cones[0].singular);
        let gb = gauss_bonnet_global(&s).unwrap();
        assert_eq!(gb.chi, -2);
        assert!((gb.lhs + 4.0 * PI).abs() < EPS);
        assert!(gb.residual.abs() < EPS);
        let side = 1.0f64;
        let expected = 2.0 * (1.0 + 2.0f64.sqrt()) * side * side;
        assert!((area(&s) - expected).abs() < 1e-9, "{}", area(&s));
    }

    #[test]
    fn pillowcase_is_a_flat_sphere() {
        let s = pillowcase();
        let rep = validate_surface(&s);
        assert!(rep.is_valid(), "{:?}", rep.violations);
        let cones = cone_points(&s).unwrap();
        assert_eq!(cones.len(), 4);
        for c in &cones {
            assert!((c.total_angle - PI).abs() < EPS);
            assert_eq!(c.prongs, 1);
            assert!(c.singular);
        }
        let gb = gauss_bonnet_global(&s).unwrap();
        assert_eq!(gb.chi, 2);
        assert!(gb.residual.abs() < EPS);
    }

    #[test]
    fn subdivision_preserves_cones_and_area() {
        let s = square_torus();
        let s2 = subdivide_along_diagonal(&s, 0, 0, 2).unwrap();
        assert!(validate_surface(&s2).is_valid(), "{:?}", validate_surface(&s2).violations);
        let c1 = cone_points(&s).unwrap();
        let c2 = cone_points(&s2).unwrap();
        assert_eq!(c1.len(), c2.len());
        assert!((c1[0].total_angle - c2[0].total_angle).abs() < EPS);
        assert!((area(&s) - area(&s2)).abs() < 1e-12);
        assert!(gauss_bonnet_global(&s2).unwrap().residual.abs() < EPS);
    }

    #[test]
    fn split_edge_keeps_surface_valid() {
        let s = square_torus();
        let s2 = split_edge(&s, eref(0, 0), 0.3).unwrap();
        assert!(validate_surface(&s2).is_valid(), "{:?}", validate_surface(&s2).violations);
        assert!((area(&s2) - 1.0).abs() < 1e-12);
        assert!(gauss_bonnet_global(&s2).unwrap().residual.abs() < EPS);
        // The octagon's edge split also stays consistent.
        let o = octagon();
        let o2 = split_edge(&o, eref(0, 1), 0.5).unwrap();
        assert!(validate_surface(&o2).is_valid(), "{:?}", validate_surface(&o2).violations);
        let cones = cone_points(&o2).unwrap();
        let singular: Vec<_> = cones.iter().filter(|c| c.singular).collect();
        assert_eq!(singular.len(), 1);
        assert!((singular[0].total_angle - 6.0 * PI).abs() < EPS);
    }

    #[test]
    fn free_boundary_cycles_are_angle_exempt() {
        // A bare square with free boundary: corners have angle π/2, which
        // is not a multiple of π, but free boundary is exempt.
        let mut s = HalfTranslationSurface::new(vec![Polygon::new(vec![
            v2(0.0, 0.0),
            v2(1.0, 0.0),
            v2(1.0, 1.0),
            v2(0.0, 1.0),
        ])]);
        for e in 0..4 {
            s.set_boundary(eref(0, e), BoundaryKind::Free);
        }
        assert!(validate_surface(&s).is_valid());
        assert!(cone_points(&s).is_ok());
    }
}
