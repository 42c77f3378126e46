//! Pivotal points, four-arm events and the Russo derivative check.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::crossing::{critical_intensity, require_margin, Clusters, CrossingQuery};
use crate::error::{invalid, PercolationError, Result};
use crate::geometry::{activation_radius, boundary_activation, Orientation, Point, Rect, Segment};
use crate::parallel::fold_samples;
use crate::rng::{derive_seed, substream};
use crate::sampler::{sample_marked, sample_padded, PointSample};
use crate::scalar::Scalar;
use crate::stats::{z_score, Proportion, Welford};
use crate::union_find::DisjointSets;

/// Sampling margin used by the Monte Carlo estimators of this module.
pub const ARM_MARGIN: f64 = 4.0;

/// Raster pitch for annulus arms when none is given: `min(0.05, r_inner / 4)`.
pub fn default_arm_pitch(r_inner: f64) -> f64 {
    (r_inner / 4.0).min(0.05)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmQuery<T> {
    pub r_inner: T,
    pub r_outer: T,
    pub pitch: T,
}

impl<T: Scalar> ArmQuery<T> {
    pub fn new(r_inner: T, r_outer: T, pitch: T) -> Result<Self> {
        if !(r_inner > T::zero() && r_inner <= r_outer && r_outer.is_finite()) {
            return Err(invalid(format!(
                "annulus needs 0 < r_inner <= r_outer < inf, got {r_inner}, {r_outer}"
            )));
        }
        if !(pitch > T::zero() && pitch.is_finite()) {
            return Err(invalid(format!("pitch must be > 0, got {pitch}")));
        }
        Ok(Self { r_inner, r_outer, pitch })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pi4Method {
    /// Pivotality of the box center for the square crossing.
    Pivotal,
    /// Rasterised four-arm event in the annulus `A₄(1, n)`.
    Annulus,
}

impl fmt::Display for Pi4Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pi4Method::Pivotal => "pivotal",
            Pi4Method::Annulus => "annulus",
        })
    }
}

impl FromStr for Pi4Method {
    type Err = PercolationError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pivotal" => Ok(Pi4Method::Pivotal),
            "annulus" => Ok(Pi4Method::Annulus),
            other => Err(invalid(format!("unknown pi4 method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pi4Estimate {
    pub value: f64,
    pub stderr: f64,
    pub method: Pi4Method,
    pub n_samples: u64,
}

impl Pi4Estimate {
    fn from_counts(p: Proportion, method: Pi4Method) -> Self {
        Self {
            value: p.value(),
            stderr: p.stderr(),
            method,
            n_samples: p.trials,
        }
    }
}

/// Pivotality queries against one sample. The clusters of the sample are
/// built once; a point `x` is pivotal when the crossing is absent and a
/// unit disc at `x` touches both a start-attached and an end-attached
/// cluster.
pub struct PivotalProbe<T> {
    rect: Rect<T>,
    points: Vec<Point<T>>,
    grid: crate::spatial::HashGrid<T>,
    /// Cluster label of every relevant center.
    label: Vec<u32>,
    start_label: u32,
    end_label: u32,
    sides: (Segment<T>, Segment<T>),
    crossed: bool,
}

impl<T: Scalar> PivotalProbe<T> {
    pub fn new(sample: &PointSample<T>, rect: &Rect<T>, orientation: Orientation) -> Result<Self> {
        require_margin(sample, rect, T::one())?;
        let query = CrossingQuery::unit(*rect, orientation);
        let Clusters {
            mut uf,
            points,
            grid,
            start,
            end,
            crossed,
        } = Clusters::build(&sample.centers, &query, true);
        let label = (0..points.len()).map(|i| uf.find(i) as u32).collect();
        Ok(Self {
            rect: *rect,
            start_label: uf.find(start) as u32,
            end_label: uf.find(end) as u32,
            points,
            grid,
            label,
            sides: rect.sides(orientation),
            crossed,
        })
    }

    /// Whether the sample already crosses without any extra disc.
    pub fn crossed(&self) -> bool {
        self.crossed
    }

    pub fn is_pivotal(&self, x: &Point<T>) -> bool {
        if self.crossed || self.rect.distance_to(x) > T::one() {
            return false;
        }
        let mut to_start = boundary_activation(x, &self.sides.0) <= T::one();
        let mut to_end = boundary_activation(x, &self.sides.1) <= T::one();
        let four = T::of(4.0);
        self.grid.for_each_candidate(x, T::two(), |j| {
            if to_start && to_end {
                return;
            }
            let c = &self.points[j];
            if c.dist2(x) <= four && activation_radius(x, c, &self.rect) <= T::one() {
                to_start |= self.label[j] == self.start_label;
                to_end |= self.label[j] == self.end_label;
            }
        });
        to_start && to_end
    }
}

/// Whether a unit disc at `x` is pivotal for the horizontal occupied
/// crossing of `rect`: the crossing is absent without it and present with it.
pub fn is_pivotal<T: Scalar>(sample: &PointSample<T>, rect: &Rect<T>, x: &Point<T>) -> Result<bool> {
    Ok(PivotalProbe::new(sample, rect, Orientation::Horizontal)?.is_pivotal(x))
}

/// Rasterised four-arm event in the annulus centred at the origin.
///
/// Nodes at pitch `h` with `r_inner ≤ |x| ≤ r_outer` are labelled occupied
/// or vacant. Occupied nodes are joined along the 8 neighbours, vacant
/// ones along the 4 axis neighbours (a matching pair on the square lattice,
/// so the two kinds cannot cross each other). Components meeting both the
/// inner and the outer band of width `h` are arms. Two distinct occupied
/// arms are separated on both sides by vacant arms (otherwise an occupied
/// path across the sector between them would merge them), so the cyclic
/// alternation occupied, vacant, occupied, vacant holds exactly when there
/// are at least two arms of each kind. Counting components avoids reading
/// angles off a band that is a few nodes thick, where one boundary between
/// two arms can zigzag in angle.
pub fn four_arm_annulus<T: Scalar>(sample: &PointSample<T>, query: &ArmQuery<T>) -> Result<bool> {
    let ArmQuery { r_inner, r_outer, pitch: h } = ArmQuery::new(query.r_inner, query.r_outer, query.pitch)?;
    if h > r_inner / T::of(4.0) {
        return Err(invalid(format!("pitch {h} is coarser than r_inner / 4 = {}", r_inner / T::of(4.0))));
    }
    if r_inner == r_outer {
        return Ok(true);
    }
    require_margin(sample, &Rect::square(r_outer)?, T::one())?;

    let r = r_inner.to_f64_lossy();
    let big_r = r_outer.to_f64_lossy();
    let h = h.to_f64_lossy();
    let half = (big_r / h).floor() as isize;
    let side = (2 * half + 1) as usize;
    let coord = |k: usize| (k as isize - half) as f64 * h;
    let dist: Vec<f64> = (0..side * side).map(|k| coord(k % side).hypot(coord(k / side))).collect();
    let in_annulus = |i: usize, j: usize| {
        let d = dist[j * side + i];
        d >= r && d <= big_r
    };

    let mut occupied = vec![false; side * side];
    for c in &sample.centers {
        let (cx, cy) = (c.x.to_f64_lossy(), c.y.to_f64_lossy());
        if cx.hypot(cy) > big_r + 1.0 {
            continue;
        }
        let lo = |v: f64| (((v - 1.0) / h).ceil() as isize + half).max(0) as usize;
        let hi = |v: f64| ((((v + 1.0) / h).floor() as isize + half).min(side as isize - 1)).max(-1);
        let (x_hi, y_hi) = (hi(cx), hi(cy));
        if x_hi < 0 || y_hi < 0 {
            continue;
        }
        for j in lo(cy)..=y_hi as usize {
            let dy = coord(j) - cy;
            for i in lo(cx)..=x_hi as usize {
                let dx = coord(i) - cx;
                if dx * dx + dy * dy <= 1.0 {
                    occupied[j * side + i] = true;
                }
            }
        }
    }

    let mut uf = DisjointSets::new(side * side);
    for j in 0..side {
        for i in 0..side {
            if !in_annulus(i, j) {
                continue;
            }
            let k = j * side + i;
            let kind = occupied[k];
            let mut link = |i2: usize, j2: usize| {
                let k2 = j2 * side + i2;
                if in_annulus(i2, j2) && occupied[k2] == kind {
                    uf.union(k, k2);
                }
            };
            if i + 1 < side {
                link(i + 1, j);
            }
            if j + 1 < side {
                link(i, j + 1);
                if kind {
                    if i + 1 < side {
                        link(i + 1, j + 1);
                    }
                    if i > 0 {
                        link(i - 1, j + 1);
                    }
                }
            }
        }
    }

    // Roots of components meeting the inner band, then of those also
    // meeting the outer band.
    let mut touches_inner = vec![false; side * side];
    let mut band = Vec::new();
    for j in 0..side {
        for i in 0..side {
            if !in_annulus(i, j) {
                continue;
            }
            let k = j * side + i;
            let d = dist[k];
            if d <= r + h {
                let root = uf.find(k);
                touches_inner[root] = true;
            }
            if d >= big_r - h {
                band.push(k);
            }
        }
    }
    let mut arms: Vec<(usize, bool)> = band
        .into_iter()
        .filter_map(|k| {
            let root = uf.find(k);
            touches_inner[root].then_some((root, occupied[k]))
        })
        .collect();
    arms.sort_unstable();
    arms.dedup();
    let occupied_arms = arms.iter().filter(|a| a.1).count();
    let vacant_arms = arms.len() - occupied_arms;
    Ok(occupied_arms >= 2 && vacant_arms >= 2)
}

pub(crate) fn check_samples(samples: u64) -> Result<()> {
    if samples == 0 {
        return Err(invalid("samples must be >= 1"));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(format!("intensity must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Monte Carlo estimate of `π₄(n)` at intensity `lambda`: either the
/// probability that the center of `[-n, n]²` is pivotal for its horizontal
/// crossing, or the probability of `A₄(1, n)` rasterised at
/// [`default_arm_pitch`].
pub fn estimate_pi4(lambda: f64, n: f64, samples: u64, method: Pi4Method, seed: u64) -> Result<Pi4Estimate> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    match method {
        Pi4Method::Pivotal => {
            let rect = Rect::square(n)?;
            let counts = fold_samples(
                samples,
                Proportion::default,
                |acc, i| {
                    let sample = sample_padded(&rect, ARM_MARGIN, lambda, seed, i)?;
                    acc.push(is_pivotal(&sample, &rect, &Point::origin())?);
                    Ok(())
                },
                Proportion::merge,
            )?;
            Ok(Pi4Estimate::from_counts(counts, method))
        }
        Pi4Method::Annulus => {
            let query = ArmQuery::new(1.0, n, default_arm_pitch(1.0))?;
            four_arm_probability(lambda, &query, samples, seed)
        }
    }
}

/// Monte Carlo estimate of `P_λ[A₄(r_inner, r_outer)]`.
pub fn four_arm_probability(lambda: f64, query: &ArmQuery<f64>, samples: u64, seed: u64) -> Result<Pi4Estimate> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    let rect = Rect::square(query.r_outer)?;
    let counts = fold_samples(
        samples,
        Proportion::default,
        |acc, i| {
            let sample = sample_padded(&rect, ARM_MARGIN, lambda, seed, i)?;
            acc.push(four_arm_annulus(&sample, query)?);
            Ok(())
        },
        Proportion::merge,
    )?;
    Ok(Pi4Estimate::from_counts(counts, Pi4Method::Annulus))
}

/// `α_n = 1 / (n² π₄(n))` and its delta-method standard error.
pub fn alpha_n(pi4: &Pi4Estimate, n: f64) -> Result<(f64, f64)> {
    if !(pi4.value > 0.0) {
        return Err(PercolationError::Undefined(format!(
            "alpha_n needs a positive pi4 estimate, got {}",
            pi4.value
        )));
    }
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid(format!("scale n must be > 0, got {n}")));
    }
    let alpha = 1.0 / (pi4.value * n * n);
    Ok((alpha, alpha * pi4.stderr / pi4.value))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RussoCheck {
    /// Central finite difference of the crossing probability in `λ`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Integral of the pivotal probability over the plane.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub z: f64,
}

/// Uniform points per sample in the pivotal integral.
pub const PIVOTAL_POINTS_PER_SAMPLE: usize = 8;

/// Monte Carlo integral `∫ P_λ[x pivotal for cross(n)] dx`. Only discs
/// meeting the box can be pivotal, so `x` is drawn uniformly from the box
/// dilated by 1 and the mean is scaled by that area. `x_seed` drives the
/// integration points independently of the point process.
pub fn pivotal_integral(lambda: f64, n: f64, samples: u64, seed: u64, x_seed: u64) -> Result<(f64, f64)> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    let rect = Rect::square(n)?;
    let window = rect.dilate(1.0);
    let acc = fold_samples(
        samples,
        Welford::default,
        |acc, i| {
            let sample = sample_padded(&rect, ARM_MARGIN, lambda, seed, i)?;
            let probe = PivotalProbe::new(&sample, &rect, Orientation::Horizontal)?;
            let mut rng = substream(x_seed, i);
            let mut hits = 0usize;
            for _ in 0..PIVOTAL_POINTS_PER_SAMPLE {
                let x = Point::new(
                    window.x_min + rng.random::<f64>() * window.width(),
                    window.y_min + rng.random::<f64>() * window.height(),
                );
                hits += probe.is_pivotal(&x) as usize;
            }
            acc.push(hits as f64 / PIVOTAL_POINTS_PER_SAMPLE as f64);
            Ok(())
        },
        Welford::merge,
    )?;
    let area = window.area();
    Ok((area * acc.mean, area * acc.stderr()))
}

/// Russo's formula at desk scale. The finite difference is taken on a
/// single coupled family: each sample at `λ + dλ` is thinned to `λ − dλ`,
/// so the difference of crossing probabilities is the probability that the
/// sample's crossing intensity falls in `(λ − dλ, λ + dλ]`. The pivotal
/// integral uses independent samples at `λ`.
pub fn russo_check(lambda: f64, n: f64, d_lambda: f64, samples: u64, seed: u64) -> Result<RussoCheck> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    if !(d_lambda > 0.0 && d_lambda.is_finite()) {
        return Err(invalid(format!("d_lambda must be > 0, got {d_lambda}")));
    }
    let rect = Rect::square(n)?;
    let upper = lambda + d_lambda;
    let lower = (lambda - d_lambda).max(0.0);
    let diff_seed = derive_seed(seed, 1);
    let flips = fold_samples(
        samples,
        Proportion::default,
        |acc, i| {
            let marked = sample_marked(&rect, ARM_MARGIN, upper, diff_seed, i)?;
            let at = critical_intensity(&marked, &rect, Orientation::Horizontal)?;
            acc.push(at > lower && at <= upper);
            Ok(())
        },
        Proportion::merge,
    )?;
    let span = upper - lower;
    let lhs = flips.value() / span;
    let lhs_stderr = flips.stderr() / span;
    let (rhs, rhs_stderr) = pivotal_integral(lambda, n, samples, derive_seed(seed, 2), derive_seed(seed, 3))?;
    Ok(RussoCheck {
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        z: z_score(lhs, lhs_stderr, rhs, rhs_stderr),
    })
}
