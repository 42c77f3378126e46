//! Uniform hash grid over a point set, stored as compressed cell buckets.

use crate::geometry::Point;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct HashGrid<T> {
    x0: T,
    y0: T,
    cell: T,
    nx: usize,
    ny: usize,
    /// `start[c]..start[c + 1]` indexes `items` for cell `c`.
    start: Vec<u32>,
    items: Vec<u32>,
}

impl<T: Scalar> HashGrid<T> {
    /// Buckets `points` into square cells of side at least `cell`. The cell
    /// may be enlarged so the number of cells stays proportional to the
    /// number of points; every guarantee below holds for the actual side.
    pub fn build(points: &[Point<T>], cell: T) -> Self {
        assert!(cell > T::zero() && cell.is_finite(), "cell size must be positive");
        if points.is_empty() {
            return Self {
                x0: T::zero(),
                y0: T::zero(),
                cell,
                nx: 1,
                ny: 1,
                start: vec![0, 0],
                items: Vec::new(),
            };
        }
        let (mut x0, mut x1, mut y0, mut y1) = (points[0].x, points[0].x, points[0].y, points[0].y);
        for p in points {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let budget = T::of((4 * points.len() + 64) as f64);
        let area = (x1 - x0 + cell) * (y1 - y0 + cell);
        let cell = cell.max((area / budget).sqrt());
        let nx = ((x1 - x0) / cell).floor().to_usize().unwrap_or(0) + 1;
        let ny = ((y1 - y0) / cell).floor().to_usize().unwrap_or(0) + 1;

        let mut grid = Self {
            x0,
            y0,
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: vec![0; points.len()],
        };
        let cells: Vec<usize> = points.iter().map(|p| grid.cell_index(p)).collect();
        for &c in &cells {
            grid.start[c + 1] += 1;
        }
        for c in 0..nx * ny {
            grid.start[c + 1] += grid.start[c];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    pub fn cell_size(&self) -> T {
        self.cell
    }

    fn coords(&self, p: &Point<T>) -> (isize, isize) {
        let ix = ((p.x - self.x0) / self.cell).floor().to_isize().unwrap_or(isize::MIN / 4);
        let iy = ((p.y - self.y0) / self.cell).floor().to_isize().unwrap_or(isize::MIN / 4);
        (ix, iy)
    }

    fn cell_index(&self, p: &Point<T>) -> usize {
        let (ix, iy) = self.coords(p);
        let ix = ix.clamp(0, self.nx as isize - 1) as usize;
        let iy = iy.clamp(0, self.ny as isize - 1) as usize;
        iy * self.nx + ix
    }

    fn bucket(&self, ix: isize, iy: isize) -> &[u32] {
        if ix < 0 || iy < 0 || ix >= self.nx as isize || iy >= self.ny as isize {
            return &[];
        }
        let c = iy as usize * self.nx + ix as usize;
        &self.items[self.start[c] as usize..self.start[c + 1] as usize]
    }

    /// Calls `f(i, j)` once for every unordered pair of points in the same
    /// or adjacent cells, hence for every pair closer than the cell side.
    /// Order is deterministic.
    pub fn for_each_near_pair(&self, mut f: impl FnMut(usize, usize) -> bool) {
        const FORWARD: [(isize, isize); 4] = [(1, 0), (-1, 1), (0, 1), (1, 1)];
        for iy in 0..self.ny as isize {
            for ix in 0..self.nx as isize {
                let here = self.bucket(ix, iy);
                for (k, &a) in here.iter().enumerate() {
                    for &b in &here[k + 1..] {
                        if !f(a as usize, b as usize) {
                            return;
                        }
                    }
                }
                for (dx, dy) in FORWARD {
                    let there = self.bucket(ix + dx, iy + dy);
                    for &a in here {
                        for &b in there {
                            if !f(a as usize, b as usize) {
                                return;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Calls `f(i)` for every point that may lie within `radius` of `p`
    /// (a superset: all points in cells meeting the bounding square).
    pub fn for_each_candidate(&self, p: &Point<T>, radius: T, mut f: impl FnMut(usize)) {
        let lo = self.coords(&Point::new(p.x - radius, p.y - radius));
        let hi = self.coords(&Point::new(p.x + radius, p.y + radius));
        let x_lo = lo.0.max(0);
        let y_lo = lo.1.max(0);
        let x_hi = hi.0.min(self.nx as isize - 1);
        let y_hi = hi.1.min(self.ny as isize - 1);
        for iy in y_lo..=y_hi {
            for ix in x_lo..=x_hi {
                for &i in self.bucket(ix, iy) {
                    f(i as usize);
                }
            }
        }
    }

    /// Index and distance of the point nearest to `p` by expanding square
    /// rings of cells. `None` for an empty grid.
    pub fn nearest(&self, points: &[Point<T>], p: &Point<T>) -> Option<(usize, T)> {
        if self.items.is_empty() {
            return None;
        }
        let (cx, cy) = self.coords(p);
        // Ring 0 is the cell (clamped into the grid) nearest to p.
        let cx = cx.clamp(0, self.nx as isize - 1);
        let cy = cy.clamp(0, self.ny as isize - 1);
        let mut best: Option<(usize, T)> = None;
        let max_ring = self.nx.max(self.ny) as isize;
        for ring in 0..=max_ring {
            // Any point in ring k lies at least (k - 1) cells (plus the
            // offset of p from its clamped cell) away.
            if let Some((_, d)) = best {
                let reach = self.ring_lower_bound(p, cx, cy, ring);
                if reach > d {
                    break;
                }
            }
            let mut visit = |ix: isize, iy: isize| {
                for &i in self.bucket(ix, iy) {
                    let d = points[i as usize].dist(p);
                    match best {
                        Some((bi, bd)) if d > bd || (d == bd && i as usize > bi) => {}
                        _ => best = Some((i as usize, d)),
                    }
                }
            };
            if ring == 0 {
                visit(cx, cy);
                continue;
            }
            for ix in cx - ring..=cx + ring {
                visit(ix, cy - ring);
                visit(ix, cy + ring);
            }
            for iy in cy - ring + 1..=cy + ring - 1 {
                visit(cx - ring, iy);
                visit(cx + ring, iy);
            }
        }
        best
    }

    /// Lower bound on the distance from `p` to any point stored in a cell
    /// of Chebyshev ring `ring` around cell `(cx, cy)`.
    fn ring_lower_bound(&self, p: &Point<T>, cx: isize, cy: isize, ring: isize) -> T {
        let lo_x = self.x0 + T::of((cx - ring + 1) as f64) * self.cell;
        let hi_x = self.x0 + T::of((cx + ring) as f64) * self.cell;
        let lo_y = self.y0 + T::of((cy - ring + 1) as f64) * self.cell;
        let hi_y = self.y0 + T::of((cy + ring) as f64) * self.cell;
        // Distance from p to the complement of the inner (ring - 1) block.
        let gaps = [p.x - lo_x, hi_x - p.x, p.y - lo_y, hi_y - p.y];
        gaps.iter().fold(T::infinity(), |m, &g| m.min(g)).max(T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn pts(raw: &[(f64, f64)]) -> Vec<Point<f64>> {
        raw.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    proptest! {
        #[test]
        fn near_pairs_cover_all_close_pairs(
            raw in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 0..80),
            cell in 0.3f64..4.0,
        ) {
            let points = pts(&raw);
            let grid = HashGrid::build(&points, cell);
            let mut seen = BTreeSet::new();
            grid.for_each_near_pair(|a, b| {
                assert!(seen.insert((a.min(b), a.max(b))), "pair visited twice");
                true
            });
            for i in 0..points.len() {
                for j in i + 1..points.len() {
                    if points[i].dist(&points[j]) < cell {
                        prop_assert!(seen.contains(&(i, j)));
                    }
                }
            }
        }

        #[test]
        fn nearest_matches_brute_force(
            raw in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..60),
            q in (-15.0f64..15.0, -15.0f64..15.0),
            cell in 0.2f64..3.0,
        ) {
            let points = pts(&raw);
            let grid = HashGrid::build(&points, cell);
            let q = Point::new(q.0, q.1);
            let (_, d) = grid.nearest(&points, &q).unwrap();
            let brute = points.iter().map(|p| p.dist(&q)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d, brute);
        }
    }

    #[test]
    fn empty_grid() {
        let grid = HashGrid::<f64>::build(&[], 1.0);
        assert!(grid.nearest(&[], &Point::origin()).is_none());
        let mut n = 0;
        grid.for_each_near_pair(|_, _| {
            n += 1;
            true
        });
        assert_eq!(n, 0);
    }
}
