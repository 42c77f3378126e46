//! Exact occupied/vacant crossing decisions and bottleneck radii.
//!
//! A disc clipped to a rectangle is convex, so two clipped discs of radius
//! `r` meet exactly when their [`activation_radius`] is at most `r`, and a
//! clipped disc touches a side exactly when its [`boundary_activation`] is
//! at most `r`. Crossing is then plain graph connectivity between two
//! virtual side nodes. Discs are closed: tangency connects.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, PercolationError, Result};
use crate::geometry::{activation_radius, boundary_activation, Orientation, Point, Rect, Segment};
use crate::sampler::{MarkedSample, PointSample};
use crate::scalar::Scalar;
use crate::spatial::HashGrid;
use crate::union_find::DisjointSets;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingQuery<T> {
    pub rect: Rect<T>,
    pub orientation: Orientation,
    pub radius: T,
}

impl<T: Scalar> CrossingQuery<T> {
    pub fn new(rect: Rect<T>, orientation: Orientation, radius: T) -> Result<Self> {
        if !radius.is_finite() || radius <= T::zero() {
            return Err(invalid(format!("disc radius must be > 0, got {radius}")));
        }
        Ok(Self {
            rect,
            orientation,
            radius,
        })
    }

    /// Unit-radius query.
    pub fn unit(rect: Rect<T>, orientation: Orientation) -> Self {
        Self {
            rect,
            orientation,
            radius: T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckResult<T> {
    /// Smallest radius at which an occupied crossing exists; `+∞` when the
    /// sample has no centers.
    pub r_star: T,
    /// Center indices of a chain realising `r_star`, ordered from the
    /// starting side to the finishing side.
    pub witness: Vec<usize>,
    /// True when `r_star` exceeds the sampled margin, so centers outside the
    /// window could have produced a smaller value.
    pub censored: bool,
}

pub(crate) fn require_margin<T: Scalar>(sample: &PointSample<T>, rect: &Rect<T>, radius: T) -> Result<()> {
    let available = sample.margin_around(rect);
    if available < radius {
        return Err(PercolationError::Censored {
            required: radius.to_f64_lossy(),
            available: available.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Connectivity of the clipped discs of one query, with side nodes
/// `start` and `end` appended after the relevant centers.
pub(crate) struct Clusters<T> {
    pub uf: DisjointSets,
    /// Relevant centers (within `radius` of the rectangle).
    pub points: Vec<Point<T>>,
    pub grid: HashGrid<T>,
    pub start: usize,
    pub end: usize,
    pub crossed: bool,
}

impl<T: Scalar> Clusters<T> {
    pub fn build(centers: &[Point<T>], query: &CrossingQuery<T>, stop_when_crossed: bool) -> Self {
        let CrossingQuery {
            rect,
            orientation,
            radius,
        } = *query;
        let points: Vec<Point<T>> = centers
            .iter()
            .copied()
            .filter(|c| rect.distance_to(c) <= radius)
            .collect();
        let m = points.len();
        let (start, end) = (m, m + 1);
        let mut uf = DisjointSets::new(m + 2);
        let (s_side, e_side) = rect.sides(orientation);
        let mut crossed = false;

        for (i, c) in points.iter().enumerate() {
            if boundary_activation(c, &s_side) <= radius {
                uf.union(i, start);
            }
            if boundary_activation(c, &e_side) <= radius {
                uf.union(i, end);
            }
        }
        let grid = HashGrid::build(&points, T::two() * radius);
        if uf.same(start, end) {
            crossed = true;
            if stop_when_crossed {
                return Self { uf, points, grid, start, end, crossed };
            }
        }
        let reach2 = (T::two() * radius) * (T::two() * radius);
        grid.for_each_near_pair(|i, j| {
            let (a, b) = (&points[i], &points[j]);
            if a.dist2(b) <= reach2 && activation_radius(a, b, &rect) <= radius && uf.union(i, j) && !crossed {
                crossed = uf.same(start, end);
                if crossed && stop_when_crossed {
                    return false;
                }
            }
            true
        });
        Self { uf, points, grid, start, end, crossed }
    }
}

/// Whether the union of closed discs of radius `query.radius` contains a
/// path inside `query.rect` joining the two sides picked by the orientation.
pub fn occupied_crossing<T: Scalar>(sample: &PointSample<T>, query: &CrossingQuery<T>) -> Result<bool> {
    require_margin(sample, &query.rect, query.radius)?;
    Ok(Clusters::build(&sample.centers, query, true).crossed)
}

/// Vacant crossing of `rect` in `orientation` by the complement of the unit
/// discs. By planar duality this is exactly the absence of an occupied
/// crossing in the transposed orientation; tangencies count as occupied.
pub fn vacant_crossing<T: Scalar>(
    sample: &PointSample<T>,
    rect: &Rect<T>,
    orientation: Orientation,
) -> Result<bool> {
    let query = CrossingQuery::unit(*rect, orientation.transposed());
    Ok(!occupied_crossing(sample, &query)?)
}

#[derive(Clone, Copy)]
struct Edge<T> {
    weight: T,
    a: u32,
    b: u32,
}

/// Minimum over side-to-side chains of the largest activation radius along
/// the chain, by Kruskal over lazily generated candidate edges. The search
/// radius starts near the percolation scale of the sample density and
/// doubles until the sides connect.
pub fn bottleneck_radius<T: Scalar>(
    sample: &PointSample<T>,
    rect: &Rect<T>,
    orientation: Orientation,
) -> Result<BottleneckResult<T>> {
    let rect = Rect::new(rect.x_min, rect.x_max, rect.y_min, rect.y_max)?;
    let margin = sample.margin_around(&rect);
    let centers = &sample.centers;
    if centers.is_empty() {
        return Ok(BottleneckResult {
            r_star: T::infinity(),
            witness: Vec::new(),
            censored: true,
        });
    }
    let (s_side, e_side) = rect.sides(orientation);
    let span = {
        let w = rect.x_max.max(sample.region.x_max) - rect.x_min.min(sample.region.x_min);
        let h = rect.y_max.max(sample.region.y_max) - rect.y_min.min(sample.region.y_min);
        w.hypot(h)
    };
    let density = T::of(centers.len() as f64) / sample.region.area().max(T::min_positive_value());
    let mut search = T::of(0.7) / density.sqrt();

    loop {
        if let Some((r_star, witness)) = kruskal_within(centers, &rect, &s_side, &e_side, search) {
            return Ok(BottleneckResult {
                r_star,
                witness,
                censored: r_star > margin,
            });
        }
        // Once search ≥ span every side edge is present and any single
        // center joins both sides.
        debug_assert!(search < span);
        search = search * T::two();
    }
}

fn kruskal_within<T: Scalar>(
    centers: &[Point<T>],
    rect: &Rect<T>,
    s_side: &Segment<T>,
    e_side: &Segment<T>,
    search: T,
) -> Option<(T, Vec<usize>)> {
    let ids: Vec<usize> = (0..centers.len())
        .filter(|&i| rect.distance_to(&centers[i]) <= search)
        .collect();
    let points: Vec<Point<T>> = ids.iter().map(|&i| centers[i]).collect();
    let m = points.len();
    if m == 0 {
        return None;
    }
    let (start, end) = (m as u32, m as u32 + 1);
    let mut edges: Vec<Edge<T>> = Vec::with_capacity(4 * m);
    for (i, c) in points.iter().enumerate() {
        let ws = boundary_activation(c, s_side);
        if ws <= search {
            edges.push(Edge { weight: ws, a: i as u32, b: start });
        }
        let we = boundary_activation(c, e_side);
        if we <= search {
            edges.push(Edge { weight: we, a: i as u32, b: end });
        }
    }
    let reach = T::two() * search;
    let reach2 = reach * reach;
    let grid = HashGrid::build(&points, reach);
    grid.for_each_near_pair(|i, j| {
        let (a, b) = (&points[i], &points[j]);
        if a.dist2(b) <= reach2 {
            let w = activation_radius(a, b, rect);
            if w <= search {
                let (lo, hi) = (i.min(j) as u32, i.max(j) as u32);
                edges.push(Edge { weight: w, a: lo, b: hi });
            }
        }
        true
    });
    edges.sort_unstable_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });

    let mut uf = DisjointSets::new(m + 2);
    let mut tree: Vec<Vec<u32>> = vec![Vec::new(); m + 2];
    for e in &edges {
        if uf.union(e.a as usize, e.b as usize) {
            tree[e.a as usize].push(e.b);
            tree[e.b as usize].push(e.a);
            if uf.same(start as usize, end as usize) {
                let chain = tree_path(&tree, start as usize, end as usize);
                let witness = chain
                    .into_iter()
                    .filter(|&v| v < m)
                    .map(|v| ids[v])
                    .collect();
                return Some((e.weight, witness));
            }
        }
    }
    None
}

/// Vertex sequence of the unique forest path between `from` and `to`.
fn tree_path(tree: &[Vec<u32>], from: usize, to: usize) -> Vec<usize> {
    let mut parent = vec![u32::MAX; tree.len()];
    let mut queue = std::collections::VecDeque::from([from]);
    parent[from] = from as u32;
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &w in &tree[v] {
            if parent[w as usize] == u32::MAX {
                parent[w as usize] = v as u32;
                queue.push_back(w as usize);
            }
        }
    }
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = parent[v] as usize;
        path.push(v);
    }
    path.reverse();
    path
}

/// Largest activation radius along consecutive links of a witness chain,
/// including the two side links.
pub fn chain_bottleneck<T: Scalar>(
    centers: &[Point<T>],
    witness: &[usize],
    rect: &Rect<T>,
    orientation: Orientation,
) -> T {
    if witness.is_empty() {
        return T::infinity();
    }
    let (s_side, e_side) = rect.sides(orientation);
    let first = boundary_activation(&centers[witness[0]], &s_side);
    let last = boundary_activation(&centers[*witness.last().unwrap()], &e_side);
    witness
        .windows(2)
        .map(|w| activation_radius(&centers[w[0]], &centers[w[1]], rect))
        .fold(first.max(last), T::max)
}

/// Smallest intensity `λ ≤ lambda_max` at which the thinned sample has an
/// occupied unit-disc crossing, or `+∞` if even the full sample does not
/// cross. Points are added in increasing thinning threshold and merged
/// incrementally, so the whole crossing curve of one sample costs one pass.
pub fn critical_intensity<T: Scalar>(
    sample: &MarkedSample<T>,
    rect: &Rect<T>,
    orientation: Orientation,
) -> Result<f64> {
    let available = sample.region.margin_around(rect);
    if available < T::one() {
        return Err(PercolationError::Censored {
            required: 1.0,
            available: available.to_f64_lossy(),
        });
    }
    let ids: Vec<usize> = (0..sample.centers.len())
        .filter(|&i| rect.distance_to(&sample.centers[i]) <= T::one())
        .collect();
    let points: Vec<Point<T>> = ids.iter().map(|&i| sample.centers[i]).collect();
    let m = points.len();
    let (start, end) = (m, m + 1);
    let (s_side, e_side) = rect.sides(orientation);

    // Adjacency of the full sample in compressed form.
    let grid = HashGrid::build(&points, T::two());
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    grid.for_each_near_pair(|i, j| {
        if points[i].dist2(&points[j]) <= T::of(4.0) && activation_radius(&points[i], &points[j], rect) <= T::one() {
            pairs.push((i as u32, j as u32));
        }
        true
    });
    let mut offsets = vec![0u32; m + 1];
    for &(a, b) in &pairs {
        offsets[a as usize + 1] += 1;
        offsets[b as usize + 1] += 1;
    }
    for i in 0..m {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut adj = vec![0u32; 2 * pairs.len()];
    for &(a, b) in &pairs {
        adj[fill[a as usize] as usize] = b;
        fill[a as usize] += 1;
        adj[fill[b as usize] as usize] = a;
        fill[b as usize] += 1;
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&a, &b| {
        sample.activation[ids[a]]
            .total_cmp(&sample.activation[ids[b]])
            .then(a.cmp(&b))
    });
    let mut present = vec![false; m];
    let mut uf = DisjointSets::new(m + 2);
    for &i in &order {
        present[i] = true;
        if boundary_activation(&points[i], &s_side) <= T::one() {
            uf.union(i, start);
        }
        if boundary_activation(&points[i], &e_side) <= T::one() {
            uf.union(i, end);
        }
        for &j in &adj[offsets[i] as usize..offsets[i + 1] as usize] {
            if present[j as usize] {
                uf.union(i, j as usize);
            }
        }
        if uf.same(start, end) {
            return Ok(sample.activation[ids[i]]);
        }
    }
    Ok(f64::INFINITY)
}
