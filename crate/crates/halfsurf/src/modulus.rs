//! Conformal modulus by finite differences: a 5-point Laplacian with
//! Dirichlet electrodes and natural no-flux sides, solved by SOR with a
//! fixed sweep order. Modulus = 1 / (Dirichlet energy of the harmonic
//! potential). Second-order convergence in the grid spacing is expected
//! for smooth boundaries.

use crate::error::{Error, Result};
use crate::geom::{point_in_polygon, seg_point_distance, Vec2};
use crate::io::{EdgeTag, PolyLoop};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq)]
enum Node {
    Outside,
    Interior,
    Fixed(f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusReport {
    pub modulus: f64,
    pub energy: f64,
    pub grid: (usize, usize),
    pub spacing: f64,
    pub sweeps: usize,
}

struct Grid {
    nx: usize,
    ny: usize,
    periodic_x: bool,
    nodes: Vec<Node>,
    values: Vec<f64>,
}

impl Grid {
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    fn neighbors(&self, i: usize, j: usize) -> [Option<(usize, usize)>; 4] {
        let left = if i > 0 {
            Some((i - 1, j))
        } else if self.periodic_x {
            Some((self.nx - 1, j))
        } else {
            None
        };
        let right = if i + 1 < self.nx {
            Some((i + 1, j))
        } else if self.periodic_x {
            Some((0, j))
        } else {
            None
        };
        let down = if j > 0 { Some((i, j - 1)) } else { None };
        let up = if j + 1 < self.ny { Some((i, j + 1)) } else { None };
        [left, right, down, up]
    }

    /// Gauss-Seidel SOR sweeps in a fixed order until the update norm
    /// drops below tolerance. Deterministic for a fixed grid.
    fn solve(&mut self) -> usize {
        let omega = 1.94;
        let mut sweeps = 0usize;
        loop {
            let mut max_delta = 0.0f64;
            for j in 0..self.ny {
                for i in 0..self.nx {
                    let id = self.idx(i, j);
                    if self.nodes[id] != Node::Interior {
                        continue;
                    }
                    let mut sum = 0.0;
                    let mut count = 0.0;
                    for nb in self.neighbors(i, j).into_iter().flatten() {
                        let nid = self.idx(nb.0, nb.1);
                        match self.nodes[nid] {
                            Node::Outside => {} // mirrored: no-flux
                            _ => {
                                sum += self.values[nid];
                                count += 1.0;
                            }
                        }
                    }
                    if count == 0.0 {
                        continue;
                    }
                    let gs = sum / count;
                    let new = self.values[id] + omega * (gs - self.values[id]);
                    max_delta = max_delta.max((new - self.values[id]).abs());
                    self.values[id] = new;
                }
            }
            sweeps += 1;
            if max_delta < 1e-11 || sweeps > 300_000 {
                return sweeps;
            }
        }
    }

    /// Dirichlet energy of the discrete solution: sum of squared
    /// differences over grid edges between non-outside nodes.
    fn energy(&self) -> f64 {
        let mut e = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let id = self.idx(i, j);
                if self.nodes[id] == Node::Outside {
                    continue;
                }
                // Right and up edges only, to count each once; plus the
                // periodic wrap edge at i = nx-1.
                let right = if i + 1 < self.nx {
                    Some((i + 1, j))
                } else if self.periodic_x {
                    Some((0, j))
                } else {
                    None
                };
                for nb in [right, if j + 1 < self.ny { Some((i, j + 1)) } else { None }]
                    .into_iter()
                    .flatten()
                {
                    let nid = self.idx(nb.0, nb.1);
                    if self.nodes[nid] == Node::Outside {
                        continue;
                    }
                    let d = self.values[id] - self.values[nid];
                    e += d * d;
                }
            }
        }
        e
    }
}

/// Conductance of a planar polygonal domain between its `e0` and `e1`
/// electrode arcs; all other boundary is insulated. The first loop is the
/// outer boundary (counterclockwise); the rest are holes (clockwise).
pub fn annulus_modulus_numeric(loops: &[PolyLoop], grid_h: f64) -> Result<ModulusReport> {
    if loops.is_empty() {
        return Err(Error::Precondition("empty domain".into()));
    }
    let mut min = loops[0].vertices[0];
    let mut max = min;
    for l in loops {
        for v in &l.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
    }
    let pad = 2.0 * grid_h;
    min = Vec2 { x: min.x - pad, y: min.y - pad };
    max = Vec2 { x: max.x + pad, y: max.y + pad };
    let nx = ((max.x - min.x) / grid_h).ceil() as usize + 1;
    let ny = ((max.y - min.y) / grid_h).ceil() as usize + 1;
    if nx * ny > 40_000_000 {
        return Err(Error::GridTooCoarse(format!(
            "grid {nx} x {ny} too large; increase grid_h"
        )));
    }

    let e0: Vec<(Vec2, Vec2)> = electrode_segments(loops, EdgeTag::Electrode0);
    let e1: Vec<(Vec2, Vec2)> = electrode_segments(loops, EdgeTag::Electrode1);
    if e0.is_empty() || e1.is_empty() {
        return Err(Error::Precondition("domain needs both electrode arcs (tags e0 and e1)".into()));
    }

    let inside = |p: Vec2| -> bool {
        if !point_in_polygon(&loops[0].vertices, p) {
            return false;
        }
        for hole in &loops[1..] {
            if point_in_polygon(&hole.vertices, p) {
                return false;
            }
        }
        true
    };
    let snap = grid_h * 0.75;
    let near = |segs: &[(Vec2, Vec2)], p: Vec2| segs.iter().any(|(a, b)| seg_point_distance(*a, *b, p) <= snap);

    let mut grid = Grid {
        nx,
        ny,
        periodic_x: false,
        nodes: vec![Node::Outside; nx * ny],
        values: vec![0.0; nx * ny],
    };
    let mut interior = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let p = Vec2 { x: min.x + i as f64 * grid_h, y: min.y + j as f64 * grid_h };
            let id = j * nx + i;
            if near(&e0, p) {
                grid.nodes[id] = Node::Fixed(0.0);
            } else if near(&e1, p) {
                grid.nodes[id] = Node::Fixed(1.0);
                grid.values[id] = 1.0;
            } else if inside(p) {
                grid.nodes[id] = Node::Interior;
                interior += 1;
                grid.values[id] = 0.5;
            }
        }
    }
    if interior == 0 {
        return Err(Error::GridTooCoarse("no interior nodes; grid too coarse to separate boundaries".into()));
    }
    let sweeps = grid.solve();
    let energy = grid.energy();
    if energy <= 0.0 {
        return Err(Error::GridTooCoarse("electrodes not separated on this grid".into()));
    }
    Ok(ModulusReport { modulus: 1.0 / energy, energy, grid: (nx, ny), spacing: grid_h, sweeps })
}

fn electrode_segments(loops: &[PolyLoop], tag: EdgeTag) -> Vec<(Vec2, Vec2)> {
    let mut out = Vec::new();
    for l in loops {
        let n = l.vertices.len();
        for i in 0..n {
            if l.tags[i] == tag {
                out.push((l.vertices[i], l.vertices[(i + 1) % n]));
            }
        }
    }
    out
}

/// Rectangle conductor: electrodes on the bottom and top sides, insulated
/// verticals. Closed form for the modulus is height / width.
pub fn rectangle_conductor(width: f64, height: f64) -> Vec<PolyLoop> {
    let vs = vec![
        Vec2 { x: 0.0, y: 0.0 },
        Vec2 { x: width, y: 0.0 },
        Vec2 { x: width, y: height },
        Vec2 { x: 0.0, y: height },
    ];
    vec![PolyLoop {
        name: "outer".into(),
        vertices: vs,
        tags: vec![EdgeTag::Electrode0, EdgeTag::Insulated, EdgeTag::Electrode1, EdgeTag::Insulated],
    }]
}

/// Round annulus r < |z| < R as polygon loops with n-gon boundaries;
/// closed form for the modulus is log(R/r) / 2π.
pub fn round_annulus(r: f64, big_r: f64, n: usize) -> Vec<PolyLoop> {
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for k in 0..n {
        let a = std::f64::consts::TAU * k as f64 / n as f64;
        outer.push(Vec2 { x: big_r * a.cos(), y: big_r * a.sin() });
        // Holes are clockwise.
        inner.push(Vec2 { x: r * (-a).cos(), y: r * (-a).sin() });
    }
    vec![
        PolyLoop { name: "outer".into(), vertices: outer, tags: vec![EdgeTag::Electrode0; n] },
        PolyLoop { name: "inner".into(), vertices: inner, tags: vec![EdgeTag::Electrode1; n] },
    ]
}

/// Modulus of the annulus obtained from the flat cylinder
/// (circumference `circ`, height `h`, periodic in x) minus a vertical
/// slit `{slit_x} × [slit_y0, slit_y1]`, between the bottom circle and
/// the slit ∪ top. Used as the extremal-annulus oracle for exclusion
/// certificates; pass `slit_y0 = slit_y1` for no slit.
pub fn cylinder_slit_modulus(
    circ: f64,
    h: f64,
    slit_x: f64,
    slit_y0: f64,
    slit_y1: f64,
    n_circ: usize,
) -> Result<ModulusReport> {
    let nx = n_circ;
    let grid_h = circ / nx as f64;
    let ny = (h / grid_h).round() as usize + 1;
    let mut grid = Grid {
        nx,
        ny,
        periodic_x: true,
        nodes: vec![Node::Interior; nx * ny],
        values: vec![0.5; nx * ny],
    };
    let slit_i = ((slit_x / circ) * nx as f64).round() as usize % nx;
    let has_slit = slit_y1 > slit_y0;
    for j in 0..ny {
        let y = j as f64 * grid_h;
        for i in 0..nx {
            let id = j * nx + i;
            if j == 0 {
                grid.nodes[id] = Node::Fixed(0.0);
                grid.values[id] = 0.0;
            } else if j == ny - 1 {
                grid.nodes[id] = Node::Fixed(1.0);
                grid.values[id] = 1.0;
            } else if has_slit
                && i == slit_i
                && y >= slit_y0 - 0.5 * grid_h
                && y <= slit_y1 + 0.5 * grid_h
            {
                grid.nodes[id] = Node::Fixed(1.0);
                grid.values[id] = 1.0;
            }
        }
    }
    let sweeps = grid.solve();
    let energy = grid.energy();
    if energy <= 0.0 {
        return Err(Error::GridTooCoarse("degenerate cylinder grid".into()));
    }
    Ok(ModulusReport { modulus: 1.0 / energy, energy, grid: (nx, ny), spacing: grid_h, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_conductor_matches_closed_form() {
        for (w, h, want) in [(1.0, 2.0, 2.0), (1.0, 1.0, 1.0)] {
            let loops = rectangle_conductor(w, h);
            let rep = annulus_modulus_numeric(&loops, w.max(h) / 128.0).unwrap();
            let rel = (rep.modulus - want).abs() / want;
            assert!(rel < 0.02, "modulus {} vs {want} (rel {rel})", rep.modulus);
        }
    }

    #[test]
    fn round_annulus_modest_ratio() {
        // 1 < |z| < e^π has modulus 1/2.
        let r_outer = std::f64::consts::PI.exp();
        let loops = round_annulus(1.0, r_outer, 720);
        let rep = annulus_modulus_numeric(&loops, 2.0 * r_outer / 360.0).unwrap();
        let rel = (rep.modulus - 0.5).abs() / 0.5;
        assert!(rel < 0.02, "modulus {} (rel {rel})", rep.modulus);
    }

    #[test]
    fn plain_cylinder_modulus_is_height() {
        let rep = cylinder_slit_modulus(1.0, 2.0, 0.5, 1.0, 1.0, 96).unwrap();
        let rel = (rep.modulus - 2.0).abs() / 2.0;
        assert!(rel < 0.02, "modulus {} (rel {rel})", rep.modulus);
    }

    #[test]
    fn slit_raises_available_modulus_above_height() {
        // Slit from height 1.5 to the top of a height-2 cylinder: the
        // bottom-class annulus has modulus a bit more than 1.5.
        let rep = cylinder_slit_modulus(1.0, 2.0, 0.5, 1.5, 2.0, 96).unwrap();
        assert!(rep.modulus > 1.5, "modulus {}", rep.modulus);
        assert!(rep.modulus < 2.0, "modulus {}", rep.modulus);
    }
}
