//! Line-oriented text formats: `.hts` surfaces and `.poly` planar shapes.
//!
//! Surface grammar (UTF-8, `#` comments, locale-independent numbers):
//!
//! ```text
//! polygon <name>
//! <x> <y>            # one vertex per line, counterclockwise
//! ...
//! pair <name>.<edge> <name>.<edge> sign=<+1|-1>
//! boundary <name>.<edge> <horizontal|free>
//! mark <puncture|cone|plain> <name> <x> <y>
//! ```

use crate::error::{Error, Result};
use crate::geom::{v2, Vec2};
use crate::surface::{
    BoundaryKind, EdgeRef, HalfTranslationSurface, MarkRole, MarkedPoint, Pairing, Polygon, Sign,
    SurfacePoint,
};

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize, col: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| perr(line, col, format!("expected number, got '{tok}'")))
}

/// Parse `name.edge` into an EdgeRef given the name table.
fn parse_edge_ref(tok: &str, names: &[String], line: usize) -> Result<EdgeRef> {
    let (name, idx) = tok
        .rsplit_once('.')
        .ok_or_else(|| perr(line, 0, format!("expected <polygon>.<edge>, got '{tok}'")))?;
    let polygon = names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| perr(line, 0, format!("unknown polygon '{name}'")))?;
    let edge = idx
        .parse::<usize>()
        .map_err(|_| perr(line, 0, format!("bad edge index '{idx}'")))?;
    Ok(EdgeRef { polygon, edge })
}

pub fn parse_surface(text: &str) -> Result<HalfTranslationSurface> {
    let mut names: Vec<String> = Vec::new();
    let mut polygons: Vec<Polygon> = Vec::new();
    let mut pairings: Vec<Pairing> = Vec::new();
    let mut boundary = Vec::new();
    let mut marks = Vec::new();
    let mut current: Option<usize> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let toks: Vec<&str> = stripped.split_whitespace().collect();
        match toks[0] {
            "polygon" => {
                if toks.len() != 2 {
                    return Err(perr(line, 0, "polygon takes exactly one name"));
                }
                if names.iter().any(|n| n == toks[1]) {
                    return Err(perr(line, 0, format!("duplicate polygon name '{}'", toks[1])));
                }
                names.push(toks[1].to_string());
                polygons.push(Polygon::new(Vec::new()));
                current = Some(polygons.len() - 1);
            }
            "pair" => {
                if toks.len() != 4 {
                    return Err(perr(line, 0, "pair takes: <a> <b> sign=<+1|-1>"));
                }
                let a = parse_edge_ref(toks[1], &names, line)?;
                let b = parse_edge_ref(toks[2], &names, line)?;
                let sign = match toks[3] {
                    "sign=+1" => Sign::Plus,
                    // Accept both ASCII hyphen and U+2212.
                    "sign=-1" | "sign=\u{2212}1" => Sign::Minus,
                    other => return Err(perr(line, 0, format!("bad sign token '{other}'"))),
                };
                pairings.push(Pairing { a, b, sign });
                current = None;
            }
            "boundary" => {
                if toks.len() != 3 {
                    return Err(perr(line, 0, "boundary takes: <edge> <horizontal|free>"));
                }
                let e = parse_edge_ref(toks[1], &names, line)?;
                let kind = match toks[2] {
                    "horizontal" => BoundaryKind::Horizontal,
                    "free" => BoundaryKind::Free,
                    other => return Err(perr(line, 0, format!("bad boundary kind '{other}'"))),
                };
                boundary.push(crate::surface::BoundaryEdge { edge: e, kind });
                current = None;
            }
            "mark" => {
                if toks.len() != 5 {
                    return Err(perr(line, 0, "mark takes: <role> <polygon> <x> <y>"));
                }
                let role = match toks[1] {
                    "puncture" => MarkRole::Puncture,
                    "cone" => MarkRole::Cone,
                    "plain" => MarkRole::Plain,
                    other => return Err(perr(line, 0, format!("bad mark role '{other}'"))),
                };
                let polygon = names
                    .iter()
                    .position(|n| n == toks[2])
                    .ok_or_else(|| perr(line, 0, format!("unknown polygon '{}'", toks[2])))?;
                let x = parse_f64(toks[3], line, 3)?;
                let y = parse_f64(toks[4], line, 4)?;
                marks.push(MarkedPoint {
                    point: SurfacePoint { polygon, position: v2(x, y) },
                    role,
                });
                current = None;
            }
            _ => {
                // Vertex line for the current polygon.
                let Some(pid) = current else {
                    return Err(perr(line, 0, format!("unexpected token '{}'", toks[0])));
                };
                if toks.len() != 2 {
                    return Err(perr(line, 0, "vertex line takes: <x> <y>"));
                }
                let x = parse_f64(toks[0], line, 1)?;
                let y = parse_f64(toks[1], line, 2)?;
                polygons[pid].vertices.push(v2(x, y));
            }
        }
    }

    let s = HalfTranslationSurface { names, polygons, pairings, boundary, marked_points: marks };
    // Structural sanity that parsing alone can check: edge refs in range.
    for p in &s.pairings {
        for e in [p.a, p.b] {
            if e.polygon >= s.polygons.len() || e.edge >= s.polygons[e.polygon].len() {
                return Err(Error::InvalidSurface(format!(
                    "dangling pairing: edge {}.{} does not exist",
                    s.names.get(e.polygon).cloned().unwrap_or_else(|| format!("#{}", e.polygon)),
                    e.edge
                )));
            }
        }
    }
    for b in &s.boundary {
        let e = b.edge;
        if e.polygon >= s.polygons.len() || e.edge >= s.polygons[e.polygon].len() {
            return Err(Error::InvalidSurface(format!(
                "dangling boundary edge {}.{}",
                s.names.get(e.polygon).cloned().unwrap_or_else(|| format!("#{}", e.polygon)),
                e.edge
            )));
        }
    }
    Ok(s)
}

pub fn serialize_surface(s: &HalfTranslationSurface) -> String {
    let mut out = String::new();
    for (i, poly) in s.polygons.iter().enumerate() {
        out.push_str(&format!("polygon {}\n", s.names[i]));
        for v in &poly.vertices {
            out.push_str(&format!("{} {}\n", v.x, v.y));
        }
    }
    for p in &s.pairings {
        let sign = match p.sign {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        };
        out.push_str(&format!(
            "pair {}.{} {}.{} sign={}\n",
            s.names[p.a.polygon], p.a.edge, s.names[p.b.polygon], p.b.edge, sign
        ));
    }
    for b in &s.boundary {
        let kind = match b.kind {
            BoundaryKind::Horizontal => "horizontal",
            BoundaryKind::Free => "free",
        };
        out.push_str(&format!("boundary {}.{} {}\n", s.names[b.edge.polygon], b.edge.edge, kind));
    }
    for m in &s.marked_points {
        let role = match m.role {
            MarkRole::Puncture => "puncture",
            MarkRole::Cone => "cone",
            MarkRole::Plain => "plain",
        };
        out.push_str(&format!(
            "mark {} {} {} {}\n",
            role, s.names[m.point.polygon], m.point.position.x, m.point.position.y
        ));
    }
    out
}

pub fn read_surface_file(path: &std::path::Path) -> Result<HalfTranslationSurface> {
    let text = std::fs::read_to_string(path)?;
    let s = parse_surface(&text)?;
    let rep = crate::surface::validate_surface(&s);
    if !rep.is_valid() {
        let v = &rep.violations[0];
        return Err(Error::InvalidSurface(format!(
            "{} at {}: {}",
            v.invariant, v.element, v.detail
        )));
    }
    Ok(s)
}

/// Edge tag in a `.poly` file: electrode ids for the conductor problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    Electrode0,
    Electrode1,
    Insulated,
}

#[derive(Clone, Debug)]
pub struct PolyLoop {
    pub name: String,
    pub vertices: Vec<Vec2>,
    /// Tag of the edge starting at each vertex.
    pub tags: Vec<EdgeTag>,
}

/// Planar shape file: one or more loops of vertices with optional edge
/// tags (`e0`, `e1`, `ins`).
pub fn parse_poly(text: &str) -> Result<Vec<PolyLoop>> {
    let mut loops: Vec<PolyLoop> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let toks: Vec<&str> = stripped.split_whitespace().collect();
        if toks[0] == "loop" {
            let name = toks.get(1).unwrap_or(&"loop").to_string();
            loops.push(PolyLoop { name, vertices: Vec::new(), tags: Vec::new() });
        } else {
            let Some(l) = loops.last_mut() else {
                return Err(perr(line, 0, "vertex before any 'loop' header"));
            };
            if toks.len() < 2 {
                return Err(perr(line, 0, "vertex line takes: <x> <y> [tag]"));
            }
            let x = parse_f64(toks[0], line, 1)?;
            let y = parse_f64(toks[1], line, 2)?;
            let tag = match toks.get(2).copied() {
                None | Some("ins") => EdgeTag::Insulated,
                Some("e0") => EdgeTag::Electrode0,
                Some("e1") => EdgeTag::Electrode1,
                Some(other) => return Err(perr(line, 0, format!("bad edge tag '{other}'"))),
            };
            l.vertices.push(v2(x, y));
            l.tags.push(tag);
        }
    }
    if loops.is_empty() {
        return Err(Error::Parse { line: 0, col: 0, msg: "empty shape file".into() });
    }
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{square_torus, validate_surface};

    #[test]
    fn square_torus_file_round_trips() {
        let text = "\
# the square torus
polygon P0
0 0
1 0
1 1
0 1
pair P0.0 P0.2 sign=+1
pair P0.1 P0.3 sign=+1
";
        let s = parse_surface(text).unwrap();
        assert!(validate_surface(&s).is_valid());
        assert_eq!(s, square_torus());
        let s2 = parse_surface(&serialize_surface(&s)).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn dangling_pairing_is_reported() {
        let text = "\
polygon P0
0 0
1 0
1 1
0 1
pair P0.0 P0.7 sign=+1
";
        let err = parse_surface(text).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("P0.7"), "{msg}");
    }

    #[test]
    fn cylinder_file_parses_with_boundary() {
        let text = "\
polygon P0
0 0
1 0
1 2
0 2
pair P0.1 P0.3 sign=+1
boundary P0.0 horizontal
boundary P0.2 horizontal
";
        let s = parse_surface(text).unwrap();
        assert!(validate_surface(&s).is_valid());
        assert_eq!(s.boundary.len(), 2);
        assert_eq!(s, crate::surface::cylinder(2.0));
    }

    #[test]
    fn marks_round_trip() {
        let mut s = square_torus();
        s.marked_points.push(crate::surface::MarkedPoint {
            point: crate::surface::spoint(0, 0.25, 0.5),
            role: crate::surface::MarkRole::Puncture,
        });
        let s2 = parse_surface(&serialize_surface(&s)).unwrap();
        assert_eq!(s, s2);
    }
}
