//! Independent oracles for the integration and acceptance tests.
//!
//! `breach_radius` answers vacant questions without touching the disc
//! union-find: the crossing path that stays farthest from every center can
//! be pushed onto the Voronoi diagram of the centers or onto the boundary
//! of the rectangle, so a bottleneck search over that finite graph gives
//! the exact value.

#![allow(dead_code)]

use std::collections::HashMap;

use crosswidth::union_find::DisjointSets;
use crosswidth::{Orientation, Point, Rect};
use spade::handles::VoronoiVertex;
use spade::{DelaunayTriangulation, Point2, Triangulation};

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a.0 + t * dx - p.0).powi(2) + (a.1 + t * dy - p.1).powi(2)).sqrt()
}

/// Liang-Barsky clip of `a + t (b - a)`, `t ∈ [0, 1]`.
fn clip(a: (f64, f64), b: (f64, f64), r: &Rect) -> Option<(f64, f64)> {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-dx, a.0 - r.x_min),
        (dx, r.x_max - a.0),
        (-dy, a.1 - r.y_min),
        (dy, r.y_max - a.1),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Largest `ρ` such that some path inside `rect` joining the sides picked
/// by `orientation` keeps distance `≥ ρ` from every center. `+∞` without
/// centers. A vacant crossing exists iff the value exceeds 1.
pub fn breach_radius(centers: &[Point], rect: &Rect, orientation: Orientation) -> f64 {
    match orientation {
        Orientation::Vertical => breach_vertical(centers, rect),
        Orientation::Horizontal => {
            let swapped: Vec<Point> = centers.iter().map(|c| Point::new(c.y, c.x)).collect();
            let r = Rect::new(rect.y_min, rect.y_max, rect.x_min, rect.x_max).unwrap();
            breach_vertical(&swapped, &r)
        }
    }
}

fn breach_vertical(centers: &[Point], rect: &Rect) -> f64 {
    if centers.is_empty() {
        return f64::INFINITY;
    }
    let tri: DelaunayTriangulation<Point2<f64>> =
        DelaunayTriangulation::bulk_load(centers.iter().map(|c| Point2::new(c.x, c.y)).collect()).unwrap();
    let (w, h) = (rect.width(), rect.height());
    let reach = 4.0 * (w + h) + 10.0;
    let inside = |p: (f64, f64)| p.0 >= rect.x_min && p.0 <= rect.x_max && p.1 >= rect.y_min && p.1 <= rect.y_max;

    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    let mut on_boundary: Vec<(f64, usize)> = Vec::new();
    let mut face_node: HashMap<usize, usize> = HashMap::new();
    let perimeter = |p: (f64, f64)| -> f64 {
        let d = [
            (p.1 - rect.y_min).abs(),
            (rect.x_max - p.0).abs(),
            (rect.y_max - p.1).abs(),
            (p.0 - rect.x_min).abs(),
        ];
        let side = (0..4).min_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap();
        match side {
            0 => p.0 - rect.x_min,
            1 => w + (p.1 - rect.y_min),
            2 => w + h + (rect.x_max - p.0),
            _ => 2.0 * w + h + (rect.y_max - p.1),
        }
    };

    for corner in [
        (rect.x_min, rect.y_min),
        (rect.x_max, rect.y_min),
        (rect.x_max, rect.y_max),
        (rect.x_min, rect.y_max),
    ] {
        nodes.push(corner);
        on_boundary.push((perimeter(corner), nodes.len() - 1));
    }

    for edge in tri.undirected_voronoi_edges() {
        let delaunay = edge.as_delaunay_edge();
        let [p, q] = delaunay.positions();
        let (p, q) = ((p.x, p.y), (q.x, q.y));
        let [from, to] = edge.vertices();
        let normal = {
            let (nx, ny) = (-(q.1 - p.1), q.0 - p.0);
            let len = (nx * nx + ny * ny).sqrt();
            (nx / len, ny / len)
        };
        // Endpoints as (position, face index if a Voronoi vertex).
        let point_of = |v: &VoronoiVertex<_, _, _, _>| -> Option<((f64, f64), usize)> {
            v.as_delaunay_face().map(|f| {
                let c = f.circumcenter();
                ((c.x, c.y), f.fix().index())
            })
        };
        let (a, fa, b, fb) = match (point_of(&from), point_of(&to)) {
            (Some((a, fa)), Some((b, fb))) => (a, Some(fa), b, Some(fb)),
            (Some((c, fc)), None) | (None, Some((c, fc))) => {
                // ray across a hull edge, away from the inner triangle
                let inner = if from.as_delaunay_face().is_some() { &from } else { &to };
                let third = inner
                    .as_delaunay_face()
                    .unwrap()
                    .positions()
                    .into_iter()
                    .map(|v| (v.x, v.y))
                    .find(|&v| v != p && v != q)
                    .unwrap();
                let side = normal.0 * (third.0 - p.0) + normal.1 * (third.1 - p.1);
                let s = if side > 0.0 { -1.0 } else { 1.0 };
                (c, Some(fc), (c.0 + s * reach * normal.0, c.1 + s * reach * normal.1), None)
            }
            (None, None) => {
                let m = ((p.0 + q.0) / 2.0, (p.1 + q.1) / 2.0);
                (
                    (m.0 - reach * normal.0, m.1 - reach * normal.1),
                    None,
                    (m.0 + reach * normal.0, m.1 + reach * normal.1),
                    None,
                )
            }
        };
        let Some((t0, t1)) = clip(a, b, rect) else {
            continue;
        };
        let at = |t: f64| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        let mut endpoint = |t: f64, pos: (f64, f64), face: Option<usize>, nodes: &mut Vec<(f64, f64)>| -> usize {
            let exact = (t == 0.0 || t == 1.0) && inside(pos);
            match face.filter(|_| exact) {
                Some(f) => *face_node.entry(f).or_insert_with(|| {
                    nodes.push(pos);
                    nodes.len() - 1
                }),
                None => {
                    let c = at(t);
                    nodes.push(c);
                    on_boundary.push((perimeter(c), nodes.len() - 1));
                    nodes.len() - 1
                }
            }
        };
        let u = endpoint(t0, a, fa, &mut nodes);
        let v = endpoint(t1, b, fb, &mut nodes);
        let weight = seg_dist(p, nodes[u], nodes[v]);
        edges.push((weight, u, v));
    }

    on_boundary.sort_by(|x, y| x.0.total_cmp(&y.0));
    let k = on_boundary.len();
    for i in 0..k {
        let (u, v) = (on_boundary[i].1, on_boundary[(i + 1) % k].1);
        let (a, b) = (nodes[u], nodes[v]);
        let mid = Point2::new((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
        let site = tri.nearest_neighbor(mid).unwrap().position();
        edges.push((seg_dist((site.x, site.y), a, b), u, v));
    }

    let start = nodes.len();
    let end = start + 1;
    let mut uf = DisjointSets::new(nodes.len() + 2);
    for &(s, id) in &on_boundary {
        if s <= w {
            uf.union(start, id);
        }
        if s >= w + h && s <= 2.0 * w + h {
            uf.union(end, id);
        }
    }
    edges.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (weight, u, v) in edges {
        uf.union(u, v);
        if uf.same(start, end) {
            return weight;
        }
    }
    unreachable!("the boundary cycle joins both sides")
}
