//! Refined-mesh shortest paths: sample points on every edge, identify
//! them across pairings, and run Dijkstra over in-polygon visibility
//! edges. The result is an upper bound for the flat geodesic length and
//! serves as an independent cross-check of the unfolding search.

use crate::error::{Error, Result};
use crate::geom::{segment_in_polygon, Vec2};
use crate::surface::{HalfTranslationSurface, SurfacePoint};

pub struct MeshGraph<'a> {
    s: &'a HalfTranslationSurface,
    /// Node instances per polygon: (node id, position in polygon coords).
    per_polygon: Vec<Vec<(usize, Vec2)>>,
    node_count: usize,
    convex: Vec<bool>,
}

fn polygon_is_convex(pts: &[Vec2]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let c = pts[(i + 2) % n];
        if (b - a).cross(c - b) < -1e-12 {
            return false;
        }
    }
    true
}

impl<'a> MeshGraph<'a> {
    /// Build mesh nodes with spacing `eps` along every edge.
    pub fn build(s: &'a HalfTranslationSurface, eps: f64) -> Result<MeshGraph<'a>> {
        if eps <= 0.0 {
            return Err(Error::Precondition("mesh spacing must be positive".into()));
        }
        let mut per_polygon: Vec<Vec<(usize, Vec2)>> = vec![Vec::new(); s.polygons.len()];
        let mut node_count = 0usize;

        // One node set per pairing (shared by both sides) and per
        // boundary edge.
        for p in &s.pairings {
            let (a0, a1) = s.edge_endpoints(p.a);
            let len = a0.dist(a1);
            let k = (len / eps).ceil().max(1.0) as usize;
            let (_, glue) = s.gluing_into(p.a).expect("paired edge");
            // glue maps the partner side (p.b polygon) into p.a coords;
            // its inverse sends p.a coords to the p.b chart.
            let inv = glue.inverse();
            for j in 1..k {
                let t = j as f64 / k as f64;
                let pos_a = a0.lerp(a1, t);
                let id = node_count;
                node_count += 1;
                per_polygon[p.a.polygon].push((id, pos_a));
                per_polygon[p.b.polygon].push((id, inv.apply(pos_a)));
            }
        }
        for b in &s.boundary {
            let (a0, a1) = s.edge_endpoints(b.edge);
            let len = a0.dist(a1);
            let k = (len / eps).ceil().max(1.0) as usize;
            for j in 1..k {
                let t = j as f64 / k as f64;
                let id = node_count;
                node_count += 1;
                per_polygon[b.edge.polygon].push((id, a0.lerp(a1, t)));
            }
        }
        // One node per vertex class.
        for (cycle, _, _) in s.vertex_cycles() {
            let id = node_count;
            node_count += 1;
            for c in cycle {
                per_polygon[c.polygon].push((id, s.polygons[c.polygon].vertices[c.vertex]));
            }
        }
        let convex = s.polygons.iter().map(|p| polygon_is_convex(&p.vertices)).collect();
        Ok(MeshGraph { s, per_polygon, node_count, convex })
    }

    fn visible(&self, poly: usize, a: Vec2, b: Vec2) -> bool {
        if self.convex[poly] {
            return true;
        }
        segment_in_polygon(&self.s.polygons[poly].vertices, a, b, 1e-9)
    }

    /// Shortest mesh path length between two surface points.
    pub fn shortest(&self, p: SurfacePoint, q: SurfacePoint) -> Result<f64> {
        let total = self.node_count + 2;
        let (pid, qid) = (self.node_count, self.node_count + 1);
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); total];
        for (poly, nodes) in self.per_polygon.iter().enumerate() {
            let mut all: Vec<(usize, Vec2)> = nodes.clone();
            if p.polygon == poly {
                all.push((pid, p.position));
            }
            if q.polygon == poly {
                all.push((qid, q.position));
            }
            for i in 0..all.len() {
                for j in i + 1..all.len() {
                    let (ni, pi) = all[i];
                    let (nj, pj) = all[j];
                    if ni == nj {
                        continue;
                    }
                    let d = pi.dist(pj);
                    if d < 1e-12 || !self.visible(poly, pi, pj) {
                        continue;
                    }
                    adj[ni].push((nj, d));
                    adj[nj].push((ni, d));
                }
            }
        }
        // Dijkstra.
        let mut dist = vec![f64::INFINITY; total];
        let mut done = vec![false; total];
        dist[pid] = 0.0;
        let mut heap = std::collections::BinaryHeap::new();
        heap.push(HeapItem { d: 0.0, id: pid });
        while let Some(HeapItem { d, id }) = heap.pop() {
            if done[id] {
                continue;
            }
            done[id] = true;
            if id == qid {
                return Ok(d);
            }
            for &(nb, w) in &adj[id] {
                let nd = d + w;
                if nd < dist[nb] {
                    dist[nb] = nd;
                    heap.push(HeapItem { d: nd, id: nb });
                }
            }
        }
        Err(Error::Precondition("mesh graph disconnected between the endpoints".into()))
    }
}

struct HeapItem {
    d: f64,
    id: usize,
}
impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.d == other.d && self.id == other.id
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Min-heap on distance.
        other.d.partial_cmp(&self.d).unwrap().then(other.id.cmp(&self.id))
    }
}

/// Largest pairwise vertex distance within any single polygon, as the
/// mesh-resolution scale.
pub fn diameter_estimate(s: &HalfTranslationSurface) -> f64 {
    s.polygons
        .iter()
        .map(|p| crate::geom::polygon_diameter(&p.vertices))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesic::{geodesic_between, DEFAULT_BUDGET};
    use crate::surface::{octagon, spoint, square_torus};

    #[test]
    fn mesh_path_bounds_geodesic_on_torus() {
        let s = square_torus();
        let mesh = MeshGraph::build(&s, 0.02).unwrap();
        let p = spoint(0, 0.1, 0.1);
        let q = spoint(0, 0.8, 0.6);
        let g = geodesic_between(&s, p, q, DEFAULT_BUDGET).unwrap();
        let m = mesh.shortest(p, q).unwrap();
        assert!(g.length <= m + 1e-12, "geodesic {} > mesh {m}", g.length);
        assert!((m - g.length) / g.length < 5e-3, "mesh {m} vs geodesic {}", g.length);
    }

    #[test]
    fn mesh_path_bounds_geodesic_on_octagon() {
        let s = octagon();
        let mesh = MeshGraph::build(&s, 0.02).unwrap();
        let p = spoint(0, 0.3, -0.4);
        let q = spoint(0, -0.6, 0.7);
        let g = geodesic_between(&s, p, q, DEFAULT_BUDGET).unwrap();
        let m = mesh.shortest(p, q).unwrap();
        assert!(g.length <= m + 1e-12);
        assert!((m - g.length) / g.length < 5e-3, "mesh {m} vs geodesic {}", g.length);
    }
}
