//! Piecewise-affine maps between flat surfaces: dilatation, Beltrami
//! coefficients, Teichmüller stretches, the embedding predicate with its
//! horizontal-complement report, the shear gadget, and point-pushing.

use crate::error::{Error, Result};
use crate::geom::{centroid, point_in_polygon, signed_area, v2, Vec2};
use crate::surface::{HalfTranslationSurface, Polygon};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// One face of a piecewise-affine map: `p -> M p + t`, carrying face
/// geometry so the map is self-contained for checks and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceMap {
    pub src_polygon: usize,
    pub dst_polygon: usize,
    pub matrix: [[f64; 2]; 2],
    pub translation: Vec2,
}

impl FaceMap {
    pub fn apply(&self, p: Vec2) -> Vec2 {
        v2(
            self.matrix[0][0] * p.x + self.matrix[0][1] * p.y + self.translation.x,
            self.matrix[1][0] * p.x + self.matrix[1][1] * p.y + self.translation.y,
        )
    }
    pub fn det(&self) -> f64 {
        self.matrix[0][0] * self.matrix[1][1] - self.matrix[0][1] * self.matrix[1][0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseAffineMap {
    pub faces: Vec<FaceMap>,
}

impl PiecewiseAffineMap {
    /// The face map for a source polygon, if present.
    pub fn face_for(&self, src_polygon: usize) -> Option<&FaceMap> {
        self.faces.iter().find(|f| f.src_polygon == src_polygon)
    }
}

/// Dilatation of a 2x2 matrix: ratio of singular values, computed as
/// `‖A‖² / det A`.
pub fn matrix_dilatation(m: &[[f64; 2]; 2]) -> Result<f64> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det <= 0.0 {
        return Err(Error::Precondition(format!(
            "orientation-reversing or singular face (det = {det})"
        )));
    }
    let s: f64 = m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1];
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let sigma1_sq = 0.5 * (s + disc);
    Ok(sigma1_sq / det)
}

/// Maximal face dilatation of a piecewise-affine map.
pub fn dilatation_of(m: &PiecewiseAffineMap) -> f64 {
    m.faces
        .iter()
        .map(|f| matrix_dilatation(&f.matrix).unwrap_or(f64::INFINITY))
        .fold(1.0, f64::max)
}

/// Per-face Beltrami coefficients `μ = ∂̄f / ∂f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltramiDatum {
    pub coefficients: Vec<Complex64>,
}

pub fn beltrami_of(m: &PiecewiseAffineMap) -> Result<BeltramiDatum> {
    let mut coefficients = Vec::new();
    for f in &m.faces {
        let a = f.matrix[0][0];
        let b = f.matrix[0][1];
        let c = f.matrix[1][0];
        let d = f.matrix[1][1];
        let dz = Complex64::new(a + d, c - b) * 0.5;
        let dzbar = Complex64::new(a - d, c + b) * 0.5;
        if dz.norm() < 1e-15 {
            return Err(Error::Precondition("∂f = 0 on a face; Beltrami undefined".into()));
        }
        coefficients.push(dzbar / dz);
    }
    Ok(BeltramiDatum { coefficients })
}

/// Horizontal stretch `x + iy -> Kx + iy` applied to every polygon.
/// Pairings and boundary flags transport unchanged; the map's dilatation
/// is exactly K and areas scale by K.
pub fn stretch_map(
    s: &HalfTranslationSurface,
    k: f64,
) -> Result<(HalfTranslationSurface, PiecewiseAffineMap)> {
    if k < 1.0 {
        return Err(Error::Precondition(format!("stretch factor K = {k} < 1")));
    }
    let mut out = s.clone();
    for poly in &mut out.polygons {
        for v in &mut poly.vertices {
            v.x *= k;
        }
    }
    let faces = (0..s.polygons.len())
        .map(|i| FaceMap {
            src_polygon: i,
            dst_polygon: i,
            matrix: [[k, 0.0], [0.0, 1.0]],
            translation: v2(0.0, 0.0),
        })
        .collect();
    Ok((out, PiecewiseAffineMap { faces }))
}

/// Whether two codomain points are equal or identified across a pairing.
fn identified_in(
    codomain: &HalfTranslationSurface,
    pa: (usize, Vec2),
    pb: (usize, Vec2),
) -> bool {
    if pa.0 == pb.0 && pa.1.dist(pb.1) <= 1e-9 {
        return true;
    }
    for q in &codomain.pairings {
        for (ea, eb) in [(q.a, q.b), (q.b, q.a)] {
            if ea.polygon == pa.0 && eb.polygon == pb.0 {
                if let Some((partner, iso)) = codomain.gluing_into(ea) {
                    if partner == eb && iso.apply(pb.1).dist(pa.1) <= 1e-9 {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Continuity and orientation validation of a map between two surfaces:
/// images of identified domain points are identified in the codomain, and
/// all determinants are positive.
pub fn validate_map(
    domain: &HalfTranslationSurface,
    codomain: &HalfTranslationSurface,
    m: &PiecewiseAffineMap,
) -> Result<()> {
    for f in &m.faces {
        if f.det() <= 0.0 {
            return Err(Error::Precondition(format!(
                "face for polygon {} is not orientation-preserving",
                f.src_polygon
            )));
        }
    }
    for p in &domain.pairings {
        let (fa, fb) = match (m.face_for(p.a.polygon), m.face_for(p.b.polygon)) {
            (Some(x), Some(y)) => (x, y),
            _ => continue,
        };
        // Identified points: a's start pairs with b's head and vice versa.
        let (a0, a1) = domain.edge_endpoints(p.a);
        let (b0, b1) = domain.edge_endpoints(p.b);
        let ok1 = identified_in(codomain, (fa.dst_polygon, fa.apply(a0)), (fb.dst_polygon, fb.apply(b1)));
        let ok2 = identified_in(codomain, (fa.dst_polygon, fa.apply(a1)), (fb.dst_polygon, fb.apply(b0)));
        if !ok1 || !ok2 {
            return Err(Error::Precondition(format!(
                "map discontinuous across pairing {:?} ~ {:?}",
                p.a, p.b
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComplementArc {
    pub dst_polygon: usize,
    pub a: Vec2,
    pub b: Vec2,
    pub horizontal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TeichmullerCheck {
    pub matrices_ok: bool,
    pub area_deficit: f64,
    pub complement_arcs: Vec<ComplementArc>,
    pub complement_horizontal: bool,
    pub pass: bool,
}

/// Teichmüller-embedding predicate: every face matrix is `±diag(K, 1)` up
/// to translation, and the closed complement of the image is a finite
/// union of points and horizontal arcs.
///
/// The complement is detected by area bookkeeping (the uncovered area must
/// vanish) together with the images of the domain's boundary edges: an
/// image boundary segment with covered surface on both sides is a slit of
/// the codomain and must be horizontal.
pub fn teichmuller_embedding_check(
    domain: &HalfTranslationSurface,
    codomain: &HalfTranslationSurface,
    m: &PiecewiseAffineMap,
    k: f64,
) -> Result<TeichmullerCheck> {
    let matrices_ok = m.faces.iter().all(|f| {
        let a = f.matrix;
        (a[0][1].abs() <= 1e-9 && a[1][0].abs() <= 1e-9)
            && ((a[0][0] - k).abs() <= 1e-9 && (a[1][1] - 1.0).abs() <= 1e-9
                || (a[0][0] + k).abs() <= 1e-9 && (a[1][1] + 1.0).abs() <= 1e-9)
    });

    let image_area: f64 = m
        .faces
        .iter()
        .map(|f| signed_area(&domain.polygons[f.src_polygon].vertices).abs() * f.det())
        .sum();
    let area_deficit = codomain.area() - image_area;

    // Image polygons grouped by codomain polygon.
    let mut images: Vec<(usize, Vec<Vec2>)> = Vec::new();
    for f in &m.faces {
        let pts = domain.polygons[f.src_polygon]
            .vertices
            .iter()
            .map(|&p| f.apply(p))
            .collect::<Vec<_>>();
        images.push((f.dst_polygon, pts));
    }
    let covered = |dst: usize, p: Vec2| -> bool {
        images
            .iter()
            .any(|(d, pts)| *d == dst && point_in_polygon(pts, p))
    };

    let mut complement_arcs: Vec<ComplementArc> = Vec::new();
    for b in &domain.boundary {
        let face = match m.face_for(b.edge.polygon) {
            Some(f) => f,
            None => continue,
        };
        let (p0, p1) = domain.edge_endpoints(b.edge);
        let (q0, q1) = (face.apply(p0), face.apply(p1));
        let mid = q0.lerp(q1, 0.5);
        let dir = (q1 - q0).unit();
        let off = dir.perp().scale(1e-6 * (q1 - q0).norm().max(1.0));
        let inside_both = covered(face.dst_polygon, mid + off) && covered(face.dst_polygon, mid - off);
        if inside_both {
            let horizontal = (q1.y - q0.y).abs() <= 1e-9;
            // Each slit has two lips mapping to the same segment; dedupe.
            let dup = complement_arcs.iter().any(|arc| {
                arc.dst_polygon == face.dst_polygon
                    && ((arc.a.dist(q0) < 1e-9 && arc.b.dist(q1) < 1e-9)
                        || (arc.a.dist(q1) < 1e-9 && arc.b.dist(q0) < 1e-9))
            });
            if !dup {
                complement_arcs.push(ComplementArc {
                    dst_polygon: face.dst_polygon,
                    a: q0,
                    b: q1,
                    horizontal,
                });
            }
        }
    }
    let complement_horizontal = complement_arcs.iter().all(|a| a.horizontal);
    let pass = matrices_ok
        && complement_horizontal
        && area_deficit.abs() <= 1e-9 * codomain.area().max(1.0);
    Ok(TeichmullerCheck { matrices_ok, area_deficit, complement_arcs, complement_horizontal, pass })
}

/// The dilatation-reduction gadget: the shear `[[1, (K-1)δ], [0, 1]]`.
/// Its dilatation is strictly increasing in δ and tends to 1 as δ -> 0.
pub fn shear_gadget(k: f64, delta: f64) -> Result<([[f64; 2]; 2], f64)> {
    if k < 1.0 || delta < 0.0 {
        return Err(Error::Precondition("shear gadget needs K ≥ 1 and δ ≥ 0".into()));
    }
    let b = (k - 1.0) * delta;
    let m = [[1.0, b], [0.0, 1.0]];
    let dil = matrix_dilatation(&m)?;
    Ok((m, dil))
}

/// Closed form for the shear dilatation: `((2 + b²) + b √(4 + b²)) / 2`.
pub fn shear_dilatation_closed_form(b: f64) -> f64 {
    ((2.0 + b * b) + b * (4.0 + b * b).sqrt()) / 2.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointPush {
    /// Source triangles and their affine images; identity outside.
    pub map: PiecewiseAffineMap,
    pub src_triangles: Vec<[Vec2; 3]>,
    pub dst_triangles: Vec<[Vec2; 3]>,
    pub dilatation: f64,
}

/// Point-pushing homeomorphism of the disk of radius `r`: identity on the
/// boundary, center moved by `displacement`. Two-ring simplicial
/// construction: the inner disk translates rigidly, the outer ring
/// interpolates to the identity. Dilatation tends to 1 with the
/// displacement.
pub fn push_point(radius: f64, displacement: Vec2) -> Result<PointPush> {
    let d = displacement.norm();
    if d >= radius {
        return Err(Error::Precondition(format!(
            "displacement {d} too large for disk radius {radius}"
        )));
    }
    let rho = 0.5 * (radius - d).min(radius * 0.5);
    let n = 32usize;
    let ring = |r: f64| -> Vec<Vec2> {
        (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                v2(r * a.cos(), r * a.sin())
            })
            .collect()
    };
    let inner = ring(rho);
    let outer = ring(radius);
    let center = v2(0.0, 0.0);

    let mut src_triangles = Vec::new();
    let mut dst_triangles = Vec::new();
    // Inner fan: translated rigidly.
    for k in 0..n {
        let (a, b) = (inner[k], inner[(k + 1) % n]);
        src_triangles.push([center, a, b]);
        dst_triangles.push([center + displacement, a + displacement, b + displacement]);
    }
    // Annulus triangles: inner vertices move, outer fixed.
    for k in 0..n {
        let (i0, i1) = (inner[k], inner[(k + 1) % n]);
        let (o0, o1) = (outer[k], outer[(k + 1) % n]);
        src_triangles.push([i0, o0, o1]);
        dst_triangles.push([i0 + displacement, o0, o1]);
        src_triangles.push([i0, o1, i1]);
        dst_triangles.push([i0 + displacement, o1, i1 + displacement]);
    }

    let mut faces = Vec::new();
    let mut max_dil = 1.0f64;
    for (idx, (src, dst)) in src_triangles.iter().zip(&dst_triangles).enumerate() {
        let m = affine_from_triangles(src, dst)?;
        if m.det() <= 0.0 {
            return Err(Error::Precondition("displacement too large: triangle flips".into()));
        }
        max_dil = max_dil.max(matrix_dilatation(&m.matrix)?);
        faces.push(FaceMap { src_polygon: idx, dst_polygon: idx, ..m });
    }
    Ok(PointPush {
        map: PiecewiseAffineMap { faces },
        src_triangles,
        dst_triangles,
        dilatation: max_dil,
    })
}

/// The unique affine map sending one triangle to another.
pub fn affine_from_triangles(src: &[Vec2; 3], dst: &[Vec2; 3]) -> Result<FaceMap> {
    let e1 = src[1] - src[0];
    let e2 = src[2] - src[0];
    let f1 = dst[1] - dst[0];
    let f2 = dst[2] - dst[0];
    let det = e1.cross(e2);
    if det.abs() < 1e-15 {
        return Err(Error::Precondition("degenerate source triangle".into()));
    }
    // M [e1 e2] = [f1 f2]  =>  M = [f1 f2] [e1 e2]^{-1}
    let inv = [[e2.y / det, -e2.x / det], [-e1.y / det, e1.x / det]];
    let m = [
        [f1.x * inv[0][0] + f2.x * inv[1][0], f1.x * inv[0][1] + f2.x * inv[1][1]],
        [f1.y * inv[0][0] + f2.y * inv[1][0], f1.y * inv[0][1] + f2.y * inv[1][1]],
    ];
    let t = dst[0] - v2(m[0][0] * src[0].x + m[0][1] * src[0].y, m[1][0] * src[0].x + m[1][1] * src[0].y);
    Ok(FaceMap { src_polygon: 0, dst_polygon: 0, matrix: m, translation: t })
}

/// Independent per-face dilatation via eigenvalues of AᵀA (test oracle
/// for the closed-form singular value route).
pub fn dilatation_via_gram(m: &[[f64; 2]; 2]) -> f64 {
    let a = m[0][0];
    let b = m[0][1];
    let c = m[1][0];
    let d = m[1][1];
    // AᵀA = [[a²+c², ab+cd], [ab+cd, b²+d²]]
    let p = a * a + c * c;
    let q = a * b + c * d;
    let r = b * b + d * d;
    let tr = p + r;
    let disc = ((p - r) * (p - r) + 4.0 * q * q).sqrt();
    let l1 = 0.5 * (tr + disc);
    let l2 = 0.5 * (tr - disc);
    (l1 / l2).sqrt()
}

/// Apply a single global matrix to a whole surface (valid for any
/// invertible matrix because `±z + c` gluings conjugate to gluings).
pub fn apply_global_matrix(
    s: &HalfTranslationSurface,
    m: [[f64; 2]; 2],
) -> Result<(HalfTranslationSurface, PiecewiseAffineMap)> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det <= 0.0 {
        return Err(Error::Precondition("matrix must preserve orientation".into()));
    }
    let mut out = s.clone();
    let apply = |p: Vec2| v2(m[0][0] * p.x + m[0][1] * p.y, m[1][0] * p.x + m[1][1] * p.y);
    for poly in &mut out.polygons {
        for v in &mut poly.vertices {
            *v = apply(*v);
        }
    }
    for mk in &mut out.marked_points {
        mk.point.position = apply(mk.point.position);
    }
    let faces = (0..s.polygons.len())
        .map(|i| FaceMap { src_polygon: i, dst_polygon: i, matrix: m, translation: v2(0.0, 0.0) })
        .collect();
    Ok((out, PiecewiseAffineMap { faces }))
}

/// Sorted multiset of edge lengths, for isometry surrogates in tests.
pub fn edge_length_multiset(s: &HalfTranslationSurface) -> Vec<f64> {
    let mut out = Vec::new();
    for p in &s.polygons {
        for e in 0..p.len() {
            out.push(p.edge_vector(e).norm());
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Identity map on a surface.
pub fn identity_map(s: &HalfTranslationSurface) -> PiecewiseAffineMap {
    PiecewiseAffineMap {
        faces: (0..s.polygons.len())
            .map(|i| FaceMap {
                src_polygon: i,
                dst_polygon: i,
                matrix: [[1.0, 0.0], [0.0, 1.0]],
                translation: v2(0.0, 0.0),
            })
            .collect(),
    }
}

/// Centroid helper for SVG scenes.
pub fn polygon_centroid(p: &Polygon) -> Vec2 {
    centroid(&p.vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{cylinder, square_torus};

    #[test]
    fn dilatation_of_basic_matrices() {
        assert!((matrix_dilatation(&[[1.0, 0.0], [0.0, 1.0]]).unwrap() - 1.0).abs() < 1e-15);
        assert!((matrix_dilatation(&[[2.0, 0.0], [0.0, 1.0]]).unwrap() - 2.0).abs() < 1e-12);
        let dil = matrix_dilatation(&[[1.0, 0.1], [0.0, 1.0]]).unwrap();
        assert!((dil - 1.105124921972504).abs() < 1e-12, "{dil}");
        assert!((dil - shear_dilatation_closed_form(0.1)).abs() < 1e-12);
    }

    #[test]
    fn beltrami_of_stretch_and_flip() {
        let s = square_torus();
        let (_, m) = stretch_map(&s, 2.0).unwrap();
        let b = beltrami_of(&m).unwrap();
        for mu in &b.coefficients {
            assert!((mu - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        }
        // Flip composed with stretch: matrix -diag(K, 1).
        let m2 = PiecewiseAffineMap {
            faces: vec![FaceMap {
                src_polygon: 0,
                dst_polygon: 0,
                matrix: [[-2.0, 0.0], [0.0, -1.0]],
                translation: v2(0.0, 0.0),
            }],
        };
        let b2 = beltrami_of(&m2).unwrap();
        assert!((b2.coefficients[0] - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        // Identity has μ = 0.
        let b3 = beltrami_of(&identity_map(&s)).unwrap();
        assert!(b3.coefficients[0].norm() < 1e-15);
    }

    #[test]
    fn stretch_scales_area_and_transports_structure() {
        let s = cylinder(2.0);
        let (sk, m) = stretch_map(&s, 3.0).unwrap();
        assert!((sk.area() - 3.0 * s.area()).abs() < 1e-12);
        assert!((dilatation_of(&m) - 3.0).abs() < 1e-12);
        assert!(crate::surface::validate_surface(&sk).is_valid());
        validate_map(&s, &sk, &m).unwrap();
        // K = 1 is an isometric copy.
        let (s1, m1) = stretch_map(&s, 1.0).unwrap();
        assert_eq!(s1, s);
        assert!((dilatation_of(&m1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stretch_then_inverse_restores_lengths() {
        let s = square_torus();
        let (sk, _) = stretch_map(&s, 2.0).unwrap();
        let (back, _) = apply_global_matrix(&sk, [[0.5, 0.0], [0.0, 1.0]]).unwrap();
        let a = edge_length_multiset(&s);
        let b = edge_length_multiset(&back);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shear_gadget_tends_to_identity() {
        let mut prev = f64::INFINITY;
        for e in 1..=6 {
            let delta = 10f64.powi(-e);
            let (_, dil) = shear_gadget(2.0, delta).unwrap();
            assert!(dil < prev, "dilatation must decrease as δ shrinks");
            assert!(dil >= 1.0);
            prev = dil;
        }
        assert!(prev - 1.0 < 1e-5);
        let (m, dil) = shear_gadget(1.0, 0.1).unwrap();
        assert_eq!(m, [[1.0, 0.0], [0.0, 1.0]]);
        assert!((dil - 1.0).abs() < 1e-15);
    }

    #[test]
    fn push_point_identity_and_monotonicity() {
        let p0 = push_point(1.0, v2(0.0, 0.0)).unwrap();
        assert!((p0.dilatation - 1.0).abs() < 1e-12);
        let p1 = push_point(1.0, v2(0.25, 0.0)).unwrap();
        let p2 = push_point(1.0, v2(0.5, 0.0)).unwrap();
        assert!(p1.dilatation < p2.dilatation);
        assert!(push_point(1.0, v2(1.5, 0.0)).is_err());
        // Closed-form dilatation agrees with the Gram-matrix oracle.
        for f in &p2.map.faces {
            let a = matrix_dilatation(&f.matrix).unwrap();
            let b = dilatation_via_gram(&f.matrix);
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn dilatation_submultiplicative_on_random_pairs() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut rand_mat = || {
                let th1: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s: f64 = rng.gen_range(1.0..3.0);
                let th2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let rot = |t: f64| [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
                let mul = |x: [[f64; 2]; 2], y: [[f64; 2]; 2]| {
                    [
                        [
                            x[0][0] * y[0][0] + x[0][1] * y[1][0],
                            x[0][0] * y[0][1] + x[0][1] * y[1][1],
                        ],
                        [
                            x[1][0] * y[0][0] + x[1][1] * y[1][0],
                            x[1][0] * y[0][1] + x[1][1] * y[1][1],
                        ],
                    ]
                };
                mul(mul(rot(th1), [[s, 0.0], [0.0, 1.0]]), rot(th2))
            };
            let a = rand_mat();
            let b = rand_mat();
            let ab = [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ];
            let ka = matrix_dilatation(&a).unwrap();
            let kb = matrix_dilatation(&b).unwrap();
            let kab = matrix_dilatation(&ab).unwrap();
            assert!(kab <= ka * kb + 1e-9, "{kab} > {ka} * {kb}");
        }
    }
}
