//! Planar primitives: points, axis-aligned rectangles and the two exact
//! activation radii used by the crossing engine.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{norm2, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dist2(&self, other: &Point<T>) -> T {
        norm2(self.x - other.x, self.y - other.y)
    }

    pub fn dist(&self, other: &Point<T>) -> T {
        self.dist2(other).sqrt()
    }

    pub fn midpoint(&self, other: &Point<T>) -> Point<T> {
        Point::new(
            (self.x + other.x) * T::half(),
            (self.y + other.y) * T::half(),
        )
    }

    pub fn scaled(&self, factor: T) -> Point<T> {
        Point::new(self.x * factor, self.y * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Crossing direction: `Horizontal` joins the left and right sides,
/// `Vertical` joins the bottom and top sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    pub fn transposed(self) -> Self {
        match self {
            Orientation::Horizontal => Orientation::Vertical,
            Orientation::Vertical => Orientation::Horizontal,
        }
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Orientation::Horizontal => write!(f, "horizontal"),
            Orientation::Vertical => write!(f, "vertical"),
        }
    }
}

impl std::str::FromStr for Orientation {
    type Err = crate::error::PercolationError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "horizontal" | "h" => Ok(Orientation::Horizontal),
            "vertical" | "v" => Ok(Orientation::Vertical),
            other => Err(invalid(format!("unknown orientation '{other}'"))),
        }
    }
}

/// Closed segment between two points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub a: Point<T>,
    pub b: Point<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(a: Point<T>, b: Point<T>) -> Self {
        Self { a, b }
    }

    /// Parameter of the orthogonal projection of `p`, clamped to `[0, 1]`.
    fn clamped_projection(&self, p: &Point<T>) -> T {
        let dx = self.b.x - self.a.x;
        let dy = self.b.y - self.a.y;
        let len2 = norm2(dx, dy);
        if len2 == T::zero() {
            return T::zero();
        }
        let t = ((p.x - self.a.x) * dx + (p.y - self.a.y) * dy) / len2;
        t.max(T::zero()).min(T::one())
    }

    pub fn at(&self, t: T) -> Point<T> {
        Point::new(
            self.a.x + t * (self.b.x - self.a.x),
            self.a.y + t * (self.b.y - self.a.y),
        )
    }

    pub fn distance_to(&self, p: &Point<T>) -> T {
        // Axis-aligned sides are the common case; avoid the projection
        // rounding there so distances stay exact under power-of-two scaling.
        if self.a.x == self.b.x {
            let (lo, hi) = min_max(self.a.y, self.b.y);
            let dy = clamp_gap(p.y, lo, hi);
            return norm2(p.x - self.a.x, dy).sqrt();
        }
        if self.a.y == self.b.y {
            let (lo, hi) = min_max(self.a.x, self.b.x);
            let dx = clamp_gap(p.x, lo, hi);
            return norm2(dx, p.y - self.a.y).sqrt();
        }
        let t = self.clamped_projection(p);
        self.at(t).dist(p)
    }
}

#[inline]
fn min_max<T: Scalar>(a: T, b: T) -> (T, T) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Signed-free gap from `v` to the interval `[lo, hi]` (zero inside).
#[inline]
fn clamp_gap<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        T::zero()
    }
}

/// Closed axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x_min: T,
    pub x_max: T,
    pub y_min: T,
    pub y_max: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x_min: T, x_max: T, y_min: T, y_max: T) -> Result<Self> {
        let all_finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !all_finite || !(x_min < x_max) || !(y_min < y_max) {
            return Err(invalid(format!(
                "degenerate rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
        })
    }

    /// `[-half_width, half_width] × [-half_height, half_height]`.
    pub fn centered(half_width: T, half_height: T) -> Result<Self> {
        Self::new(-half_width, half_width, -half_height, half_height)
    }

    /// The square `[-n, n]²`.
    pub fn square(n: T) -> Result<Self> {
        Self::centered(n, n)
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point<T> {
        Point::new(
            (self.x_min + self.x_max) * T::half(),
            (self.y_min + self.y_max) * T::half(),
        )
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_rect(&self, other: &Rect<T>) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }

    /// Rectangle grown by `margin` on every side.
    pub fn dilate(&self, margin: T) -> Rect<T> {
        Rect {
            x_min: self.x_min - margin,
            x_max: self.x_max + margin,
            y_min: self.y_min - margin,
            y_max: self.y_max + margin,
        }
    }

    pub fn scaled(&self, factor: T) -> Rect<T> {
        Rect {
            x_min: self.x_min * factor,
            x_max: self.x_max * factor,
            y_min: self.y_min * factor,
            y_max: self.y_max * factor,
        }
    }

    /// Largest `m` such that `inner.dilate(m)` is contained in `self`.
    /// Negative when `inner` sticks out.
    pub fn margin_around(&self, inner: &Rect<T>) -> T {
        (inner.x_min - self.x_min)
            .min(self.x_max - inner.x_max)
            .min(inner.y_min - self.y_min)
            .min(self.y_max - inner.y_max)
    }

    /// Euclidean distance from `p` to the rectangle (zero inside).
    pub fn distance_to(&self, p: &Point<T>) -> T {
        let dx = clamp_gap(p.x, self.x_min, self.x_max);
        let dy = clamp_gap(p.y, self.y_min, self.y_max);
        norm2(dx, dy).sqrt()
    }

    pub fn left(&self) -> Segment<T> {
        Segment::new(
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_min, self.y_max),
        )
    }

    pub fn right(&self) -> Segment<T> {
        Segment::new(
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
        )
    }

    pub fn bottom(&self) -> Segment<T> {
        Segment::new(
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
        )
    }

    pub fn top(&self) -> Segment<T> {
        Segment::new(
            Point::new(self.x_min, self.y_max),
            Point::new(self.x_max, self.y_max),
        )
    }

    /// The two opposite sides a crossing in `orientation` must join.
    pub fn sides(&self, orientation: Orientation) -> (Segment<T>, Segment<T>) {
        match orientation {
            Orientation::Horizontal => (self.left(), self.right()),
            Orientation::Vertical => (self.bottom(), self.top()),
        }
    }

    pub fn edges(&self) -> [Segment<T>; 4] {
        [self.bottom(), self.right(), self.top(), self.left()]
    }
}

/// Smallest `r` for which `B(c1, r) ∩ B(c2, r) ∩ rect` is nonempty, i.e.
/// `min_{x ∈ rect} max(|x − c1|, |x − c2|)`.
pub fn activation_radius<T: Scalar>(c1: &Point<T>, c2: &Point<T>, rect: &Rect<T>) -> T {
    let mid = c1.midpoint(c2);
    if rect.contains(&mid) {
        return c1.dist(c2) * T::half();
    }
    // The objective is convex with its free minimiser outside the
    // rectangle, so the constrained minimum sits on the boundary.
    rect.edges()
        .iter()
        .map(|edge| segment_minmax(c1, c2, edge))
        .fold(T::infinity(), T::min)
}

/// `min_{x ∈ seg} max(|x − c1|, |x − c2|)` by enumerating the finitely many
/// candidate minimisers of the convex one-dimensional objective.
fn segment_minmax<T: Scalar>(c1: &Point<T>, c2: &Point<T>, seg: &Segment<T>) -> T {
    let objective = |t: T| {
        let p = seg.at(t);
        p.dist2(c1).max(p.dist2(c2))
    };
    let mut best = objective(T::zero()).min(objective(T::one()));
    best = best.min(objective(seg.clamped_projection(c1)));
    best = best.min(objective(seg.clamped_projection(c2)));

    // Equidistant point: 2 p(t)·e = |c2|² − |c1|² with e = c2 − c1.
    let dx = seg.b.x - seg.a.x;
    let dy = seg.b.y - seg.a.y;
    let ex = c2.x - c1.x;
    let ey = c2.y - c1.y;
    let denom = T::two() * (dx * ex + dy * ey);
    if denom != T::zero() {
        let k = norm2(c2.x, c2.y) - norm2(c1.x, c1.y);
        let t = (k - T::two() * (seg.a.x * ex + seg.a.y * ey)) / denom;
        if t >= T::zero() && t <= T::one() {
            best = best.min(objective(t));
        }
    }
    best.sqrt()
}

/// Smallest `r` for which `B(c, r)` touches `side`.
pub fn boundary_activation<T: Scalar>(c: &Point<T>, side: &Segment<T>) -> T {
    side.distance_to(c)
}
