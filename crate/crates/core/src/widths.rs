//! Maximal crossing widths.
//!
//! The vacant width is exact: a vacant crossing at distance `> ε` from the
//! occupied set exists iff discs enlarged to radius `1 + ε` leave a vacant
//! crossing, i.e. iff the enlarged discs do not cross in the transposed
//! direction. So `w* = 2 (r* − 1)⁺` with `r*` the vertical bottleneck
//! radius. The occupied width has only an exact lower bound (shrunk-disc
//! chains); the width itself is estimated on a grid by a distance
//! transform followed by a maximin path search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::crossing::{bottleneck_radius, occupied_crossing, require_margin, CrossingQuery};
use crate::error::{invalid, Result};
use crate::geometry::{Orientation, Point, Rect};
use crate::sampler::PointSample;
use crate::scalar::Scalar;
use crate::spatial::HashGrid;

/// Distance field sampled on the nodes `origin + (i h, j h)`,
/// `0 ≤ i < nx`, `0 ≤ j < ny`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub origin: Point<T>,
    pub pitch: T,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(origin: Point<T>, pitch: T, nx: usize, ny: usize, values: Vec<T>) -> Result<Self> {
        if !(pitch > T::zero()) {
            return Err(invalid(format!("pitch must be > 0, got {pitch}")));
        }
        if nx == 0 || ny == 0 || values.len() != nx * ny {
            return Err(invalid(format!(
                "field of {} values does not match {nx} x {ny}",
                values.len()
            )));
        }
        Ok(Self { origin, pitch, nx, ny, values })
    }

    pub fn constant(origin: Point<T>, pitch: T, nx: usize, ny: usize, value: T) -> Result<Self> {
        Self::new(origin, pitch, nx, ny, vec![value; nx * ny])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    pub fn node(&self, i: usize, j: usize) -> Point<T> {
        Point::new(
            self.origin.x + T::of(i as f64) * self.pitch,
            self.origin.y + T::of(j as f64) * self.pitch,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMethod {
    ExactBottleneck,
    ExactLowerBound,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthResult<T> {
    pub width: T,
    pub method: WidthMethod,
    pub censored: bool,
    /// Certified absolute error of the grid method; zero for exact methods.
    pub grid_error_bound: T,
}

/// Default grid pitch for scale `n`: `min(0.05, n / 400)`.
pub fn default_pitch(n: f64) -> f64 {
    (n / 400.0).min(0.05)
}

/// Absolute error bound of a grid width at pitch `h`.
pub fn grid_error_bound<T: Scalar>(h: T) -> T {
    T::two() * T::SQRT_2() * h
}

fn check_scale<T: Scalar>(n: T) -> Result<()> {
    if !n.is_finite() || n <= T::zero() {
        return Err(invalid(format!("scale n must be > 0, got {n}")));
    }
    Ok(())
}

fn check_pitch<T: Scalar>(h: T) -> Result<()> {
    if !h.is_finite() || h <= T::zero() {
        return Err(invalid(format!("pitch must be > 0, got {h}")));
    }
    Ok(())
}

/// Maximal width `w*_n` of vacant horizontal crossings of `[-n, n]²`.
/// `+∞` for a sample without centers; `censored` when the vertical
/// bottleneck radius exceeds the sampled margin.
pub fn vacant_width<T: Scalar>(sample: &PointSample<T>, n: T) -> Result<WidthResult<T>> {
    check_scale(n)?;
    let square = Rect::square(n)?;
    require_margin(sample, &square, T::one())?;
    let b = bottleneck_radius(sample, &square, Orientation::Vertical)?;
    let width = if b.r_star.is_infinite() {
        T::infinity()
    } else {
        T::two() * (b.r_star - T::one()).max(T::zero())
    };
    Ok(WidthResult {
        width,
        method: WidthMethod::ExactBottleneck,
        censored: b.censored,
        grid_error_bound: T::zero(),
    })
}

/// Rectangle `[-(n + √(1 − r²)), n + √(1 − r²)] × [-(n − 1), n − 1]` of the
/// shrunk-disc lower bound.
fn lower_bound_rect<T: Scalar>(n: T, r: T) -> Result<Rect<T>> {
    let stretch = (T::one() - r * r).max(T::zero()).sqrt();
    Rect::centered(n + stretch, n - T::one())
}

/// Bisection tolerance on the shrunk radius.
pub const LOWER_BOUND_TOLERANCE: f64 = 1e-9;

/// Exact lower bound `2 √(1 − r₀²)` on the occupied width, where `r₀` is the
/// smallest radius `r ≤ 1` at which discs of radius `r` cross the stretched
/// rectangle of [`lower_bound_rect`]. The crossing indicator is monotone in
/// `r` (larger discs, shorter rectangle), so `r₀` is found by bisection.
pub fn occupied_width_lower<T: Scalar>(sample: &PointSample<T>, n: T) -> Result<WidthResult<T>> {
    check_scale(n)?;
    if n <= T::one() {
        return Err(invalid(format!("lower bound needs n > 1, got {n}")));
    }
    // Widest rectangle (r → 0) plus unit discs.
    let widest = Rect::centered(n + T::one(), n - T::one())?;
    require_margin(sample, &widest, T::one())?;

    let crosses = |r: T| -> Result<bool> {
        let q = CrossingQuery::new(lower_bound_rect(n, r)?, Orientation::Horizontal, r)?;
        occupied_crossing(sample, &q)
    };
    let zero = WidthResult {
        width: T::zero(),
        method: WidthMethod::ExactLowerBound,
        censored: false,
        grid_error_bound: T::zero(),
    };
    if !crosses(T::one())? {
        return Ok(zero);
    }
    let tol = T::of(LOWER_BOUND_TOLERANCE);
    let (mut lo, mut hi) = (T::zero(), T::one());
    while hi - lo > tol {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(WidthResult {
        width: T::two() * (T::one() - hi * hi).max(T::zero()).sqrt(),
        ..zero
    })
}

/// Exact distance from `x` to the occupied set: `(min_i |x − c_i| − 1)⁺`,
/// `+∞` without centers.
pub fn vacant_distance<T: Scalar>(x: &Point<T>, sample: &PointSample<T>) -> T {
    let nearest = sample
        .centers
        .iter()
        .map(|c| c.dist(x))
        .fold(T::infinity(), T::min);
    (nearest - T::one()).max(T::zero())
}

/// Node layout of a field covering `rect` at pitch `h`, extended by `pad`
/// whole nodes on every side. Nodes of `rect` sit exactly at
/// `rect.x_min + k h`.
struct Lattice<T> {
    origin: Point<T>,
    pitch: T,
    nx: usize,
    ny: usize,
    pad: usize,
    inner_nx: usize,
    inner_ny: usize,
}

impl<T: Scalar> Lattice<T> {
    fn new(rect: &Rect<T>, h: T, pad_len: T) -> Self {
        let count = |len: T| (len / h + T::of(1e-9)).floor().to_usize().unwrap_or(0) + 1;
        let inner_nx = count(rect.width());
        let inner_ny = count(rect.height());
        let pad = (pad_len / h).ceil().to_usize().unwrap_or(0);
        let shift = T::of(pad as f64) * h;
        Self {
            origin: Point::new(rect.x_min - shift, rect.y_min - shift),
            pitch: h,
            nx: inner_nx + 2 * pad,
            ny: inner_ny + 2 * pad,
            pad,
            inner_nx,
            inner_ny,
        }
    }

    fn node(&self, i: usize, j: usize) -> Point<T> {
        Point::new(
            self.origin.x + T::of(i as f64) * self.pitch,
            self.origin.y + T::of(j as f64) * self.pitch,
        )
    }

    /// Index range of nodes whose coordinate lies in `[lo, hi]`.
    fn span(&self, lo: T, hi: T, origin: T, count: usize) -> std::ops::Range<usize> {
        let a = ((lo - origin) / self.pitch).ceil().max(T::zero());
        let b = ((hi - origin) / self.pitch).floor();
        if b < T::zero() {
            return 0..0;
        }
        let a = a.to_usize().unwrap_or(count).min(count);
        let b = (b.to_usize().unwrap_or(count) + 1).min(count);
        a..b.max(a)
    }

    fn crop(&self, full: Vec<T>) -> ScalarField<T> {
        let mut values = Vec::with_capacity(self.inner_nx * self.inner_ny);
        for j in self.pad..self.pad + self.inner_ny {
            let row = j * self.nx;
            values.extend_from_slice(&full[row + self.pad..row + self.pad + self.inner_nx]);
        }
        ScalarField {
            origin: self.node(self.pad, self.pad),
            pitch: self.pitch,
            nx: self.inner_nx,
            ny: self.inner_ny,
            values,
        }
    }
}

/// Padding (length units) of the occupied distance field beyond the query
/// rectangle; vacant points farther out than this are not seen.
pub const FIELD_PADDING: f64 = 2.0;

/// Grid approximation of `dist(x, V)` on the nodes of `rect` at pitch `h`,
/// within `h / √2` at every node. Nodes closer than `ρ = h / √2` to the
/// vacant set are marked vacant and every other node gets the Euclidean
/// distance to the nearest marked node. Marking by distance rather than by
/// node coverage matters: a vacant sliver thinner than `h` can slip between
/// nodes, but every vacant point has a node within `ρ`. Needs a sampled
/// margin of at least `FIELD_PADDING + 1` around `rect`.
pub fn occupied_distance_field<T: Scalar>(
    sample: &PointSample<T>,
    rect: &Rect<T>,
    h: T,
) -> Result<ScalarField<T>> {
    check_pitch(h)?;
    let rect = Rect::new(rect.x_min, rect.x_max, rect.y_min, rect.y_max)?;
    let pad = T::of(FIELD_PADDING);
    require_margin(sample, &rect, pad + T::one())?;
    let lat = Lattice::new(&rect, h, pad);
    let (nx, ny) = (lat.nx, lat.ny);
    let rho = h * T::of(std::f64::consts::FRAC_1_SQRT_2);
    let deep2 = (T::one() - rho).max(T::zero()).powi(2);

    // 0: outside every disc, 1: covered but within `rho` of a circle, 2: deep
    let mut state = vec![0u8; nx * ny];
    let extent = rect.dilate(pad);
    let near: Vec<Point<T>> = sample
        .centers
        .iter()
        .filter(|c| extent.distance_to(c) <= T::one() + rho)
        .copied()
        .collect();
    let x_hi = lat.origin.x + T::of((nx - 1) as f64) * h;
    let y_hi = lat.origin.y + T::of((ny - 1) as f64) * h;
    for c in &near {
        let xs = lat.span(c.x - T::one(), (c.x + T::one()).min(x_hi), lat.origin.x, nx);
        let ys = lat.span(c.y - T::one(), (c.y + T::one()).min(y_hi), lat.origin.y, ny);
        for j in ys {
            let dy = lat.origin.y + T::of(j as f64) * h - c.y;
            let row = j * nx;
            for i in xs.clone() {
                let dx = lat.origin.x + T::of(i as f64) * h - c.x;
                let d2 = dx * dx + dy * dy;
                let k = row + i;
                if d2 <= deep2 && rho < T::one() {
                    state[k] = 2;
                } else if d2 <= T::one() && state[k] == 0 {
                    state[k] = 1;
                }
            }
        }
    }

    let grid = HashGrid::build(&near, T::two());
    let mut local = Vec::new();
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            inside[k] = match state[k] {
                2 => true,
                1 => {
                    let x = lat.node(i, j);
                    local.clear();
                    grid.for_each_candidate(&x, T::one() + rho, |id| {
                        if near[id].dist(&x) < T::one() + rho {
                            local.push(near[id]);
                        }
                    });
                    !vacancy_within(&x, rho, &local)
                }
                _ => false,
            };
        }
    }

    let sq = squared_edt(&inside, nx, ny);
    let full: Vec<T> = sq.iter().map(|&d| h * T::of(d.sqrt())).collect();
    Ok(lat.crop(full))
}

/// Intersection points of two circles; none when they are disjoint,
/// nested or concentric.
fn circle_meet<T: Scalar>(c0: &Point<T>, r0: T, c1: &Point<T>, r1: T) -> Option<[Point<T>; 2]> {
    let d2 = c0.dist2(c1);
    let d = d2.sqrt();
    if d == T::zero() || d > r0 + r1 || d < (r0 - r1).abs() {
        return None;
    }
    let a = (r0 * r0 - r1 * r1 + d2) / (T::two() * d);
    let off = (r0 * r0 - a * a).max(T::zero()).sqrt();
    let (ux, uy) = ((c1.x - c0.x) / d, (c1.y - c0.y) / d);
    let base = Point::new(c0.x + a * ux, c0.y + a * uy);
    Some([
        Point::new(base.x - off * uy, base.y + off * ux),
        Point::new(base.x + off * uy, base.y - off * ux),
    ])
}

/// Whether the closed disc `B(x, rho)` meets the closure of the vacant set
/// of the unit discs at `discs` (all discs within `1 + rho` of `x`, with
/// `x` covered). An uncovered part of `B(x, rho)` has a corner on its
/// boundary: a point where a unit circle crosses `∂B(x, rho)` or two unit
/// circles cross inside `B(x, rho)`, lying in no other open disc.
fn vacancy_within<T: Scalar>(x: &Point<T>, rho: T, discs: &[Point<T>]) -> bool {
    let free = |p: &Point<T>, a: usize, b: usize| {
        discs
            .iter()
            .enumerate()
            .all(|(k, c)| k == a || k == b || c.dist2(p) >= T::one())
    };
    for (i, c) in discs.iter().enumerate() {
        if let Some(pts) = circle_meet(c, T::one(), x, rho) {
            if pts.iter().any(|p| free(p, i, i)) {
                return true;
            }
        }
    }
    for i in 0..discs.len() {
        for j in i + 1..discs.len() {
            if let Some(pts) = circle_meet(&discs[i], T::one(), &discs[j], T::one()) {
                if pts.iter().any(|p| p.dist2(x) <= rho * rho && free(p, i, j)) {
                    return true;
                }
            }
        }
    }
    false
}

/// Exact `dist(x, O)` on the nodes of `rect` at pitch `h`.
pub fn vacant_distance_field<T: Scalar>(
    sample: &PointSample<T>,
    rect: &Rect<T>,
    h: T,
) -> Result<ScalarField<T>> {
    check_pitch(h)?;
    let rect = Rect::new(rect.x_min, rect.x_max, rect.y_min, rect.y_max)?;
    let lat = Lattice::new(&rect, h, T::zero());
    let (nx, ny) = (lat.nx, lat.ny);
    if sample.centers.is_empty() {
        return ScalarField::constant(lat.origin, h, nx, ny, T::infinity());
    }
    // Nearest-center distance, painted exactly within `reach` of each
    // center; remaining nodes fall back to a grid nearest-neighbour query.
    let reach = T::of(1.5);
    let mut nearest = vec![T::infinity(); nx * ny];
    let x_hi = lat.origin.x + T::of((nx - 1) as f64) * h;
    let y_hi = lat.origin.y + T::of((ny - 1) as f64) * h;
    for c in sample.centers.iter().filter(|c| rect.distance_to(c) <= reach) {
        let xs = lat.span(c.x - reach, (c.x + reach).min(x_hi), lat.origin.x, nx);
        let ys = lat.span(c.y - reach, (c.y + reach).min(y_hi), lat.origin.y, ny);
        for j in ys {
            let dy = lat.origin.y + T::of(j as f64) * h - c.y;
            let row = j * nx;
            for i in xs.clone() {
                let dx = lat.origin.x + T::of(i as f64) * h - c.x;
                let d = (dx * dx + dy * dy).sqrt();
                if d < nearest[row + i] {
                    nearest[row + i] = d;
                }
            }
        }
    }
    let grid = HashGrid::build(&sample.centers, T::two());
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if nearest[k] > reach {
                let p = lat.node(i, j);
                nearest[k] = grid.nearest(&sample.centers, &p).map_or(T::infinity(), |(_, d)| d);
            }
        }
    }
    let values = nearest.into_iter().map(|d| (d - T::one()).max(T::zero())).collect();
    ScalarField::new(lat.origin, h, nx, ny, values)
}

const FAR: f64 = 1e30;

/// Squared Euclidean distance (in node units) from every `true` node to
/// the nearest `false` node; zero at `false` nodes. Separable lower-envelope
/// transform, linear in the number of nodes.
pub fn squared_edt(inside: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    assert_eq!(inside.len(), nx * ny);
    let mut grid: Vec<f64> = inside.iter().map(|&b| if b { FAR } else { 0.0 }).collect();
    let len = nx.max(ny);
    let mut f = vec![0.0; len];
    let mut out = vec![0.0; len];
    let mut v = vec![0usize; len];
    let mut z = vec![0.0; len + 1];

    for j in 0..ny {
        let row = &mut grid[j * nx..(j + 1) * nx];
        f[..nx].copy_from_slice(row);
        lower_envelope(&f[..nx], &mut out[..nx], &mut v, &mut z);
        row.copy_from_slice(&out[..nx]);
    }
    for i in 0..nx {
        for j in 0..ny {
            f[j] = grid[j * nx + i];
        }
        lower_envelope(&f[..ny], &mut out[..ny], &mut v, &mut z);
        for j in 0..ny {
            grid[j * nx + i] = out[j];
        }
    }
    grid
}

/// One-dimensional squared distance transform of the sampled function `f`
/// (lower envelope of the parabolas `(q − p)² + f(p)`).
fn lower_envelope(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] >= FAR {
            continue;
        }
        if f[v[0]] >= FAR {
            // Only far parabolas so far: restart the envelope at q.
            v[0] = q;
            k = 0;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            let p = v[k];
            let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    if f[v[0]] >= FAR {
        out.iter_mut().for_each(|o| *o = FAR);
        return;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

#[derive(Clone, Copy)]
struct Frontier<T> {
    value: T,
    node: u32,
}

impl<T: Scalar> PartialEq for Frontier<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Frontier<T> {}
impl<T: Scalar> PartialOrd for Frontier<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Frontier<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Largest `m` such that some 8-connected node path joining the two sides
/// of the field picked by `orientation` has all values `≥ m`
/// (bottleneck Dijkstra with a max-heap on path minima).
pub fn widest_path<T: Scalar>(field: &ScalarField<T>, orientation: Orientation) -> T {
    let (nx, ny) = (field.nx, field.ny);
    let is_target = |k: usize| match orientation {
        Orientation::Horizontal => k % nx == nx - 1,
        Orientation::Vertical => k / nx == ny - 1,
    };
    let sources: Vec<usize> = match orientation {
        Orientation::Horizontal => (0..ny).map(|j| j * nx).collect(),
        Orientation::Vertical => (0..nx).collect(),
    };
    let mut best = vec![T::neg_infinity(); nx * ny];
    let mut heap = BinaryHeap::with_capacity(sources.len() * 4);
    for &s in &sources {
        best[s] = field.values[s];
        heap.push(Frontier { value: field.values[s], node: s as u32 });
    }
    while let Some(Frontier { value, node }) = heap.pop() {
        let k = node as usize;
        if value < best[k] {
            continue;
        }
        if is_target(k) {
            return value;
        }
        let (i, j) = ((k % nx) as isize, (k / nx) as isize);
        for dj in -1isize..=1 {
            for di in -1isize..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= nx as isize || b >= ny as isize {
                    continue;
                }
                let w = b as usize * nx + a as usize;
                let cand = value.min(field.values[w]);
                if cand > best[w] {
                    best[w] = cand;
                    heap.push(Frontier { value: cand, node: w as u32 });
                }
            }
        }
    }
    unreachable!("a nonempty field always connects its two sides")
}

/// Grid estimate of the maximal occupied width `w_n` of `[-n, n]²` at
/// pitch `h`, with certified error `2√2 h`.
pub fn occupied_width<T: Scalar>(sample: &PointSample<T>, n: T, h: T) -> Result<WidthResult<T>> {
    check_scale(n)?;
    check_pitch(h)?;
    let square = Rect::square(n)?;
    let field = occupied_distance_field(sample, &square, h)?;
    Ok(WidthResult {
        width: T::two() * widest_path(&field, Orientation::Horizontal),
        method: WidthMethod::Grid,
        censored: false,
        grid_error_bound: grid_error_bound(h),
    })
}

/// Grid estimate of the vacant width via [`vacant_distance_field`]; an
/// independent route to [`vacant_width`].
pub fn vacant_width_grid<T: Scalar>(sample: &PointSample<T>, n: T, h: T) -> Result<WidthResult<T>> {
    check_scale(n)?;
    check_pitch(h)?;
    let square = Rect::square(n)?;
    require_margin(sample, &square, T::one())?;
    let field = vacant_distance_field(sample, &square, h)?;
    Ok(WidthResult {
        width: T::two() * widest_path(&field, Orientation::Horizontal),
        method: WidthMethod::Grid,
        censored: false,
        grid_error_bound: grid_error_bound(h),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::sample_padded;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fixed(raw: &[(f64, f64)], n: f64) -> PointSample<f64> {
        let region = Rect::square(n + 4.0).unwrap();
        let centers = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
        PointSample::from_centers(centers, region, 4.0).unwrap()
    }

    fn chain(spacing: f64, half_len: f64, y: f64) -> Vec<(f64, f64)> {
        let k = (half_len / spacing).ceil() as i64;
        (-k..=k).map(|i| (i as f64 * spacing, y)).collect()
    }

    #[test]
    fn vacant_width_single_obstacle() {
        let w = vacant_width(&fixed(&[(0.0, 0.0)], 5.0), 5.0).unwrap();
        assert_eq!(w.width, 8.0);
        assert_eq!(w.method, WidthMethod::ExactBottleneck);
    }

    #[test]
    fn vacant_width_empty_is_infinite() {
        let w = vacant_width(&fixed(&[], 5.0), 5.0).unwrap();
        assert!(w.width.is_infinite());
    }

    #[test]
    fn lower_bound_empty_is_zero() {
        let w = occupied_width_lower(&fixed(&[], 5.0), 5.0).unwrap();
        assert_eq!(w.width, 0.0);
    }

    #[test]
    fn lower_bound_collinear_chain() {
        let s = fixed(&chain(1.2, 8.0, 0.0), 5.0);
        let w = occupied_width_lower(&s, 5.0).unwrap();
        assert_abs_diff_eq!(w.width, 1.6, epsilon = 1e-6);
    }

    #[test]
    fn vacant_distance_examples() {
        let s = fixed(&[(3.0, 4.0)], 5.0);
        assert_eq!(vacant_distance(&Point::origin(), &s), 4.0);
        assert_eq!(vacant_distance(&Point::new(3.2, 4.1), &s), 0.0);
        assert!(vacant_distance(&Point::origin(), &fixed(&[], 5.0)).is_infinite());
    }

    #[test]
    fn edt_single_hole() {
        let (nx, ny) = (7, 5);
        let mut inside = vec![true; nx * ny];
        inside[2 * nx + 3] = false;
        let d = squared_edt(&inside, nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                let expect = (i as f64 - 3.0).powi(2) + (j as f64 - 2.0).powi(2);
                assert_eq!(d[j * nx + i], expect);
            }
        }
    }

    #[test]
    fn edt_no_holes_stays_far() {
        let d = squared_edt(&[true; 6], 3, 2);
        assert!(d.iter().all(|&v| v >= FAR));
    }

    proptest! {
        #[test]
        fn edt_matches_brute_force(mask in prop::collection::vec(prop::bool::weighted(0.8), 1..120), nx in 1usize..12) {
            let ny = mask.len() / nx;
            prop_assume!(ny > 0);
            let inside = &mask[..nx * ny];
            prop_assume!(inside.iter().any(|&b| !b));
            let d = squared_edt(inside, nx, ny);
            for j in 0..ny {
                for i in 0..nx {
                    let mut best = f64::INFINITY;
                    for b in 0..ny {
                        for a in 0..nx {
                            if !inside[b * nx + a] {
                                let e = (a as f64 - i as f64).powi(2) + (b as f64 - j as f64).powi(2);
                                best = best.min(e);
                            }
                        }
                    }
                    prop_assert_eq!(d[j * nx + i], best);
                }
            }
        }

        #[test]
        fn widest_path_matches_threshold_search(values in prop::collection::vec(0u8..6, 1..80), nx in 1usize..10) {
            let ny = values.len() / nx;
            prop_assume!(ny > 0);
            let vals: Vec<f64> = values[..nx * ny].iter().map(|&v| v as f64).collect();
            let field = ScalarField::new(Point::origin(), 1.0, nx, ny, vals.clone()).unwrap();
            for orient in [Orientation::Horizontal, Orientation::Vertical] {
                let got = widest_path(&field, orient);
                let oracle = threshold_oracle(&vals, nx, ny, orient);
                prop_assert_eq!(got, oracle);
            }
        }
    }

    /// Largest threshold t among the field values such that the nodes with
    /// value ≥ t connect the two sides (8-connectivity), by BFS.
    fn threshold_oracle(vals: &[f64], nx: usize, ny: usize, orient: Orientation) -> f64 {
        let mut levels: Vec<f64> = vals.to_vec();
        levels.sort_by(|a, b| b.total_cmp(a));
        levels.dedup();
        for t in levels {
            let open: Vec<bool> = vals.iter().map(|&v| v >= t).collect();
            let mut seen = vec![false; nx * ny];
            let mut stack: Vec<usize> = match orient {
                Orientation::Horizontal => (0..ny).map(|j| j * nx).collect(),
                Orientation::Vertical => (0..nx).collect(),
            };
            stack.retain(|&k| open[k]);
            for &k in &stack {
                seen[k] = true;
            }
            while let Some(k) = stack.pop() {
                let hit = match orient {
                    Orientation::Horizontal => k % nx == nx - 1,
                    Orientation::Vertical => k / nx == ny - 1,
                };
                if hit {
                    return t;
                }
                let (i, j) = ((k % nx) as isize, (k / nx) as isize);
                for dj in -1..=1 {
                    for di in -1..=1 {
                        let (a, b) = (i + di, j + dj);
                        if a >= 0 && b >= 0 && a < nx as isize && b < ny as isize {
                            let w = b as usize * nx + a as usize;
                            if open[w] && !seen[w] {
                                seen[w] = true;
                                stack.push(w);
                            }
                        }
                    }
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn widest_path_constant_field() {
        let f = ScalarField::constant(Point::origin(), 0.5, 9, 4, 2.5).unwrap();
        assert_eq!(widest_path(&f, Orientation::Horizontal), 2.5);
        assert_eq!(widest_path(&f, Orientation::Vertical), 2.5);
    }

    #[test]
    fn single_obstacle_widest_path_hugs_edge() {
        let s = fixed(&[(0.0, 0.0)], 5.0);
        let h = 0.05;
        let field = vacant_distance_field(&s, &Rect::square(5.0).unwrap(), h).unwrap();
        let m = widest_path(&field, Orientation::Horizontal);
        assert!((m - 4.0).abs() <= 2f64.sqrt() * h, "{m}");
    }

    #[test]
    fn occupied_field_empty_and_single_disc() {
        let h = 0.05;
        let rect = Rect::square(3.0).unwrap();
        let empty = occupied_distance_field(&fixed(&[], 3.0), &rect, h).unwrap();
        assert!(empty.values.iter().all(|&v| v == 0.0));

        let c = Point::new(0.3, -0.2);
        let one = occupied_distance_field(&fixed(&[(c.x, c.y)], 3.0), &rect, h).unwrap();
        for j in 0..one.ny {
            for i in 0..one.nx {
                let x = one.node(i, j);
                let expect = (1.0 - x.dist(&c)).max(0.0);
                assert!((one.get(i, j) - expect).abs() <= 2f64.sqrt() * h);
            }
        }
    }

    #[test]
    fn pinhole_between_nodes_is_seen() {
        // three discs leave a vacant hole of radius 0.01 off the lattice
        let (hx, hy) = (0.037, 0.041);
        let raw: Vec<(f64, f64)> = (0..3)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 3.0;
                (hx + 1.01 * t.cos(), hy + 1.01 * t.sin())
            })
            .collect();
        let h = 0.1;
        let field = occupied_distance_field(&fixed(&raw, 3.0), &Rect::square(3.0).unwrap(), h).unwrap();
        let (i, j) = (((hx + 3.0) / h).round() as usize, ((hy + 3.0) / h).round() as usize);
        let node = field.node(i, j);
        let exact = node.dist(&Point::new(hx, hy)) - 0.01;
        assert!(field.get(i, j) <= exact + h / 2f64.sqrt(), "{} vs {exact}", field.get(i, j));
    }

    #[test]
    fn occupied_field_two_discs_matches_boundary_sampling() {
        let h = 0.05;
        let s = fixed(&[(-0.5, 0.0), (0.5, 0.0)], 3.0);
        let field = occupied_distance_field(&s, &Rect::square(3.0).unwrap(), h).unwrap();
        let k = (3.0 / h).round() as usize;
        let got = field.get(k, k);
        // Oracle: sample 1e5 points on both circles, keep those not inside
        // the other disc (the union boundary), take the nearest one.
        let mut oracle = f64::INFINITY;
        let m = 100_000;
        for t in 0..m {
            let a = t as f64 / m as f64 * std::f64::consts::TAU;
            for (cx, other) in [(-0.5, 0.5), (0.5, -0.5)] {
                let p = Point::new(cx + a.cos(), a.sin());
                if p.dist(&Point::new(other, 0.0)) >= 1.0 {
                    oracle = oracle.min(p.dist(&Point::origin()));
                }
            }
        }
        assert_abs_diff_eq!(oracle, 0.75f64.sqrt(), epsilon = 1e-4);
        assert!((got - oracle).abs() <= 2f64.sqrt() * h, "{got} vs {oracle}");
    }

    #[test]
    fn occupied_width_collinear_chain() {
        let h = 0.05;
        let s = fixed(&chain(1.2, 8.0, 0.0), 5.0);
        let w = occupied_width(&s, 5.0, h).unwrap();
        assert!((w.width - 1.6).abs() <= grid_error_bound(h), "{}", w.width);
    }

    #[test]
    fn double_chain_beats_lower_bound() {
        let h = 0.05;
        let mut raw = chain(1.2, 8.0, 0.5);
        raw.extend(chain(1.2, 8.0, -0.5));
        let s = fixed(&raw, 5.0);
        let lower = occupied_width_lower(&s, 5.0).unwrap().width;
        let grid = occupied_width(&s, 5.0, h).unwrap().width;
        assert!(grid > lower + grid_error_bound(h), "grid {grid} lower {lower}");
    }

    #[test]
    fn empty_occupied_width_is_zero() {
        let w = occupied_width(&fixed(&[], 5.0), 5.0, 0.05).unwrap();
        assert_eq!(w.width, 0.0);
        assert!(occupied_width(&fixed(&[], 5.0), 5.0, 0.0).is_err());
    }

    #[test]
    fn vacant_width_agrees_with_grid_on_random_samples() {
        let rect = Rect::<f64>::square(6.0).unwrap();
        let h = 0.05;
        for stream in 0..8 {
            let s = sample_padded(&rect, 4.0, 0.36, 21, stream).unwrap();
            let exact = vacant_width(&s, 6.0).unwrap().width;
            let grid = vacant_width_grid(&s, 6.0, h).unwrap().width;
            assert!((exact - grid).abs() <= grid_error_bound(h) + 1e-9, "{exact} vs {grid}");
        }
    }

    #[test]
    fn sandwich_on_random_samples() {
        let rect = Rect::<f64>::square(5.0).unwrap();
        let h = 0.05;
        for stream in 0..8 {
            let s = sample_padded(&rect, 4.0, 0.6, 3, stream).unwrap();
            let lower = occupied_width_lower(&s, 5.0).unwrap().width;
            let grid = occupied_width(&s, 5.0, h).unwrap().width;
            assert!(lower <= grid + grid_error_bound(h), "{lower} > {grid}");
        }
    }
}
