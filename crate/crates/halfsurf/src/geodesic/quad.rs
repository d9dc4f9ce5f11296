//! Divergence inequality for geodesic quadrilaterals: with equal side
//! lengths and base angles summing to at least π, the far side is at
//! least as long as the base, with equality only for regions developing
//! to Euclidean parallelograms.

use super::{geodesic_between, GeodesicPath};
use crate::error::{Error, Result};
use crate::geom::{angle_ccw, Vec2};
use crate::surface::{HalfTranslationSurface, SurfacePoint};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadReport {
    pub d_x: f64,
    pub d_y: f64,
    pub side_length: f64,
    pub angle_x0: f64,
    pub angle_x1: f64,
    pub holds: bool,
    pub equality: bool,
    /// On equality: angle sum of all four corners is 2π and no side
    /// bends at a cone, so the region develops to a parallelogram.
    pub parallelogram_certified: bool,
}

/// Direction of a geodesic at its start point, expressed in the chart of
/// `at` (mapping across the gluing when the first segment lives on the
/// partner side of an edge).
fn initial_direction(
    s: &HalfTranslationSurface,
    at: SurfacePoint,
    path: &GeodesicPath,
) -> Result<Vec2> {
    let seg = path
        .segments
        .first()
        .ok_or_else(|| Error::Precondition("degenerate geodesic in quadrilateral".into()))?;
    let dir = (seg.1.position - seg.0.position).unit();
    if seg.0.polygon == at.polygon && seg.0.position.dist(at.position) <= 1e-9 {
        return Ok(dir);
    }
    // The segment starts on the partner side of an edge through `at`.
    for e in 0..s.polygons[at.polygon].len() {
        let (p0, p1) = s.polygons[at.polygon].edge(e);
        if crate::geom::seg_point_distance(p0, p1, at.position) <= 1e-9 {
            if let Some((f, glue)) = s.gluing_into(crate::surface::eref(at.polygon, e)) {
                if f.polygon == seg.0.polygon
                    && glue.apply(seg.0.position).dist(at.position) <= 1e-9
                {
                    return Ok(glue.apply_dir(dir));
                }
            }
        }
    }
    Err(Error::Precondition("cannot express geodesic direction at the corner chart".into()))
}

fn final_reversed_direction(
    s: &HalfTranslationSurface,
    at: SurfacePoint,
    path: &GeodesicPath,
) -> Result<Vec2> {
    let seg = path
        .segments
        .last()
        .ok_or_else(|| Error::Precondition("degenerate geodesic in quadrilateral".into()))?;
    let dir = (seg.0.position - seg.1.position).unit();
    if seg.1.polygon == at.polygon && seg.1.position.dist(at.position) <= 1e-9 {
        return Ok(dir);
    }
    for e in 0..s.polygons[at.polygon].len() {
        let (p0, p1) = s.polygons[at.polygon].edge(e);
        if crate::geom::seg_point_distance(p0, p1, at.position) <= 1e-9 {
            if let Some((f, glue)) = s.gluing_into(crate::surface::eref(at.polygon, e)) {
                if f.polygon == seg.1.polygon
                    && glue.apply(seg.1.position).dist(at.position) <= 1e-9
                {
                    return Ok(glue.apply_dir(dir));
                }
            }
        }
    }
    Err(Error::Precondition("cannot express geodesic direction at the corner chart".into()))
}

/// Check `d(y0, y1) ≥ d(x0, x1)` for the geodesic quadrilateral
/// `x0, x1, y1, y0` (counterclockwise) with `d(x0,y0) = d(x1,y1)` and
/// interior angles at `x0` and `x1` summing to at least π.
pub fn quad_divergence(
    s: &HalfTranslationSurface,
    x0: SurfacePoint,
    x1: SurfacePoint,
    y0: SurfacePoint,
    y1: SurfacePoint,
    budget: usize,
) -> Result<QuadReport> {
    let x0 = crate::surface::canonicalize_point(s, x0);
    let x1 = crate::surface::canonicalize_point(s, x1);
    let y0 = crate::surface::canonicalize_point(s, y0);
    let y1 = crate::surface::canonicalize_point(s, y1);
    let side0 = geodesic_between(s, x0, y0, budget)?;
    let side1 = geodesic_between(s, x1, y1, budget)?;
    if (side0.length - side1.length).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "hypothesis failed: side lengths differ ({} vs {})",
            side0.length, side1.length
        )));
    }
    let base = geodesic_between(s, x0, x1, budget)?;
    let top = geodesic_between(s, y0, y1, budget)?;

    // Interior (left) angles of the counterclockwise loop
    // x0 -> x1 -> y1 -> y0 -> x0 at the two base corners.
    let base_init = initial_direction(s, x0, &base)?;
    let side0_init = initial_direction(s, x0, &side0)?;
    let angle_x0 = angle_ccw(base_init, side0_init);
    let side1_init = initial_direction(s, x1, &side1)?;
    let base_rev = final_reversed_direction(s, x1, &base)?;
    let angle_x1 = angle_ccw(side1_init, base_rev);
    if angle_x0 + angle_x1 < std::f64::consts::PI - 1e-9 {
        return Err(Error::Precondition(format!(
            "hypothesis failed: angle sum {} < π",
            angle_x0 + angle_x1
        )));
    }

    let d_x = base.length;
    let d_y = top.length;
    let holds = d_y >= d_x - 1e-8;
    let equality = (d_y - d_x).abs() <= 1e-8;
    let mut parallelogram_certified = false;
    if equality {
        // Total corner angle sum 2π and cone-free sides certify a flat
        // parallelogram development (Gauss-Bonnet for the quadrilateral).
        // Loop order at the far side: ... x1 -> y1 -> y0 -> x0 ...
        let y1_out = final_reversed_direction(s, y1, &top)?; // direction y1 -> y0
        let y1_in_rev = final_reversed_direction(s, y1, &side1)?; // direction y1 -> x1
        let angle_y1 = angle_ccw(y1_out, y1_in_rev);
        let y0_out = final_reversed_direction(s, y0, &side0)?; // direction y0 -> x0
        let y0_in_rev = initial_direction(s, y0, &top)?; // direction y0 -> y1
        let angle_y0 = angle_ccw(y0_out, y0_in_rev);
        let total = angle_x0 + angle_x1 + angle_y0 + angle_y1;
        let cone_free = side0.cone_hits.is_empty()
            && side1.cone_hits.is_empty()
            && base.cone_hits.is_empty()
            && top.cone_hits.is_empty();
        parallelogram_certified = cone_free && (total - 2.0 * std::f64::consts::PI).abs() <= 1e-7;
    }
    Ok(QuadReport {
        d_x,
        d_y,
        side_length: side0.length,
        angle_x0,
        angle_x1,
        holds,
        equality,
        parallelogram_certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{spoint, HalfTranslationSurface, Polygon};
    use crate::geom::v2;

    fn big_plane() -> HalfTranslationSurface {
        // A large square torus used as an essentially planar chart.
        let mut s = HalfTranslationSurface::new(vec![Polygon::new(vec![
            v2(-10.0, -10.0),
            v2(10.0, -10.0),
            v2(10.0, 10.0),
            v2(-10.0, 10.0),
        ])]);
        s.pair(crate::surface::eref(0, 0), crate::surface::eref(0, 2), crate::surface::Sign::Plus);
        s.pair(crate::surface::eref(0, 1), crate::surface::eref(0, 3), crate::surface::Sign::Plus);
        s
    }

    #[test]
    fn unit_square_is_a_parallelogram() {
        let s = big_plane();
        let rep = quad_divergence(
            &s,
            spoint(0, 0.0, 0.0),
            spoint(0, 1.0, 0.0),
            spoint(0, 0.0, 1.0),
            spoint(0, 1.0, 1.0),
            8,
        )
        .unwrap();
        assert!((rep.d_x - 1.0).abs() < 1e-12);
        assert!((rep.d_y - 1.0).abs() < 1e-12);
        assert!(rep.holds);
        assert!(rep.equality);
        assert!(rep.parallelogram_certified);
    }

    #[test]
    fn opened_quadrilateral_diverges() {
        let s = big_plane();
        // Legs tilted outwards: angle sum 4π/3, strict divergence.
        let a = 2.0 * std::f64::consts::PI / 3.0;
        let rep = quad_divergence(
            &s,
            spoint(0, 0.0, 0.0),
            spoint(0, 1.0, 0.0),
            spoint(0, a.cos(), a.sin()),
            spoint(0, 1.0 + 0.5, 0.8660254037844386),
            8,
        )
        .unwrap();
        assert!((rep.angle_x0 + rep.angle_x1 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-9);
        assert!((rep.d_y - 2.0).abs() < 1e-12, "{}", rep.d_y);
        assert!(rep.holds);
        assert!(!rep.equality);
    }

    #[test]
    fn small_angle_sum_is_rejected() {
        let s = big_plane();
        // Legs tilted inwards: angle sum π/2 < π.
        let err = quad_divergence(
            &s,
            spoint(0, 0.0, 0.0),
            spoint(0, 2.0, 0.0),
            spoint(0, 0.9659258262890683, 0.25881904510252074),
            spoint(0, 1.0340741737109317, 0.25881904510252074),
            8,
        );
        assert!(err.is_err());
    }
}
