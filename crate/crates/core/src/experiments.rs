//! Monte Carlo harness.
//!
//! Every estimator is a pure function of its arguments. Sample `i` of a
//! family draws from stream `i` of the family seed, families inside one
//! experiment get seeds from [`derive_seed`], and sums are merged in a fixed
//! order, so a record replays bit-identically on any number of workers.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arms::{check_lambda, check_samples};
use crate::conditioned::{ConditionedChain, CrossingEvent};
use crate::crossing::{critical_intensity, occupied_crossing, vacant_crossing, CrossingQuery};
use crate::error::{invalid, PercolationError, Result};
use crate::geometry::{Orientation, Rect};
use crate::parallel::{fold_samples, map_samples};
use crate::rng::derive_seed;
use crate::sampler::{sample_marked, sample_padded, PointSample};
use crate::stats::{bootstrap_stderr, least_squares, quantile, quantile_stderr, z_score, Proportion};
use crate::widths::{default_pitch, grid_error_bound, occupied_width, vacant_width};

/// Sampling margin around every query rectangle.
pub const DEFAULT_MARGIN: f64 = 4.0;
/// Samples per bootstrap batch.
pub const BATCH: u64 = 100;
pub const BOOTSTRAP_REPS: usize = 200;
/// Published continuum estimate of the critical intensity for unit discs.
pub const LAMBDA_C_REFERENCE: f64 = 0.3591;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub experiment: String,
    pub lambda: f64,
    pub n: f64,
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub params: Value,
}

impl EstimateRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        experiment: &str,
        lambda: f64,
        n: f64,
        quantity: &str,
        value: f64,
        stderr: f64,
        n_samples: u64,
        seed: u64,
        params: Value,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            lambda,
            n,
            quantity: quantity.to_string(),
            value,
            stderr,
            n_samples,
            seed,
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<EstimateRecord>,
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
}

impl SweepResult {
    /// First record with the given quantity and scale.
    pub fn find(&self, quantity: &str, n: f64) -> Option<&EstimateRecord> {
        self.records.iter().find(|r| r.quantity == quantity && r.n == n)
    }
}

fn check_scale(n: f64) -> Result<()> {
    if !(n.is_finite() && n > 0.0) {
        return Err(invalid(format!("scale n must be > 0, got {n}")));
    }
    Ok(())
}

fn rect_json(rect: &Rect<f64>) -> Value {
    json!([rect.x_min, rect.x_max, rect.y_min, rect.y_max])
}

fn half_side(rect: &Rect<f64>) -> f64 {
    rect.width().min(rect.height()) / 2.0
}

fn event_holds(sample: &PointSample<f64>, rect: &Rect<f64>, event: CrossingEvent) -> Result<bool> {
    match event {
        CrossingEvent::Occupied(o) => occupied_crossing(sample, &CrossingQuery::unit(*rect, o)),
        CrossingEvent::Vacant(o) => vacant_crossing(sample, rect, o),
    }
}

/// Hit count of `event` over `samples` padded samples of `rect`.
pub fn event_counts(lambda: f64, rect: &Rect<f64>, event: CrossingEvent, samples: u64, seed: u64) -> Result<Proportion> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    fold_samples(
        samples,
        Proportion::default,
        |acc, i| {
            let sample = sample_padded(rect, DEFAULT_MARGIN, lambda, seed, i)?;
            acc.push(event_holds(&sample, rect, event)?);
            Ok(())
        },
        Proportion::merge,
    )
}

/// Binomial estimate of the occupied crossing probability of `rect`.
pub fn crossing_probability(
    lambda: f64,
    rect: &Rect<f64>,
    orientation: Orientation,
    samples: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    let p = event_counts(lambda, rect, CrossingEvent::Occupied(orientation), samples, seed)?;
    Ok(EstimateRecord::new(
        "cross_prob",
        lambda,
        half_side(rect),
        "p_cross",
        p.value(),
        p.stderr(),
        p.trials,
        seed,
        json!({"rect": rect_json(rect), "orientation": orientation, "margin": DEFAULT_MARGIN, "event": "occupied"}),
    ))
}

/// Crossing intensities of `samples` marked samples of `rect` up to
/// `lambda_max`; `+∞` where the full sample does not cross.
pub fn crossing_intensities(
    rect: &Rect<f64>,
    orientation: Orientation,
    lambda_max: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_samples(samples)?;
    check_lambda(lambda_max)?;
    map_samples(samples, |i| {
        let marked = sample_marked(rect, DEFAULT_MARGIN, lambda_max, seed, i)?;
        critical_intensity(&marked, rect, orientation)
    })
}

fn fraction_at_most(sorted: &[f64], lambda: f64) -> Proportion {
    Proportion::new(sorted.partition_point(|&x| x <= lambda) as u64, sorted.len() as u64)
}

/// Crossing probability of `rect` at every intensity of `lambdas`, from one
/// family of nested thinned samples.
pub fn crossing_curve(
    rect: &Rect<f64>,
    orientation: Orientation,
    lambdas: &[f64],
    samples: u64,
    seed: u64,
) -> Result<Vec<EstimateRecord>> {
    let Some(&top) = lambdas.iter().max_by(|a, b| a.total_cmp(b)) else {
        return Err(invalid("crossing curve needs at least one intensity"));
    };
    let mut at = crossing_intensities(rect, orientation, top, samples, seed)?;
    at.sort_by(f64::total_cmp);
    Ok(lambdas
        .iter()
        .map(|&l| {
            let p = fraction_at_most(&at, l);
            EstimateRecord::new(
                "cross_curve",
                l,
                half_side(rect),
                "p_cross",
                p.value(),
                p.stderr(),
                p.trials,
                seed,
                json!({"rect": rect_json(rect), "orientation": orientation, "margin": DEFAULT_MARGIN,
                       "lambda_max": top, "coupling": "thinning"}),
            )
        })
        .collect())
}

/// Intensity grid on which crossing curves are tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            lo: 0.2,
            hi: 0.6,
            step: 0.0025,
        }
    }
}

impl LambdaGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.lo >= 0.0 && self.hi > self.lo && self.step > 0.0 && self.hi.is_finite()) {
            return Err(invalid(format!("bad intensity grid {self:?}")));
        }
        let k = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        Ok((0..=k).map(|i| self.lo + i as f64 * self.step).collect())
    }
}

/// Intersection of two tabulated curves: the roots of
/// `small − large` where it changes sign from positive to negative
/// (stretches where the curves agree exactly carry no information and are
/// skipped), located by linear interpolation. Several such roots are
/// resolved by their median.
pub fn curve_intersection(grid: &[f64], small: &[f64], large: &[f64]) -> Result<f64> {
    if grid.len() != small.len() || grid.len() != large.len() {
        return Err(invalid("curves and grid differ in length"));
    }
    let mut roots = Vec::new();
    let mut last_positive: Option<usize> = None;
    for g in 0..grid.len() {
        let d = small[g] - large[g];
        if d > 0.0 {
            last_positive = Some(g);
        } else if d < 0.0 {
            if let Some(p) = last_positive.take() {
                let dp = small[p] - large[p];
                roots.push(grid[p] + (grid[g] - grid[p]) * dp / (dp - d));
            }
        }
    }
    if roots.is_empty() {
        return Err(PercolationError::Range(format!(
            "crossing curves do not cross on [{}, {}]",
            grid.first().copied().unwrap_or(f64::NAN),
            grid.last().copied().unwrap_or(f64::NAN)
        )));
    }
    roots.sort_by(f64::total_cmp);
    Ok(quantile(&roots, 0.5))
}

/// Number of positive-to-negative sign changes of `small − large`.
pub fn curve_crossings(small: &[f64], large: &[f64]) -> usize {
    let mut count = 0;
    let mut positive = false;
    for (s, l) in small.iter().zip(large) {
        if s > l {
            positive = true;
        } else if s < l && positive {
            count += 1;
            positive = false;
        }
    }
    count
}

/// Cumulative crossing counts on `grid`, one row per batch of [`BATCH`].
fn batch_counts(at: &[f64], grid: &[f64]) -> Vec<Vec<u64>> {
    at.chunks(BATCH as usize)
        .map(|chunk| {
            let mut sorted = chunk.to_vec();
            sorted.sort_by(f64::total_cmp);
            grid.iter().map(|&l| sorted.partition_point(|&x| x <= l) as u64).collect()
        })
        .collect()
}

fn pooled_curve(batches: &[Vec<u64>], pick: &[usize], sizes: &[u64]) -> Vec<f64> {
    let width = batches[0].len();
    let mut hits = vec![0u64; width];
    let mut total = 0u64;
    for &b in pick {
        total += sizes[b];
        for (h, c) in hits.iter_mut().zip(&batches[b]) {
            *h += c;
        }
    }
    hits.into_iter().map(|h| h as f64 / total as f64).collect()
}

/// Crossing curves of `[-n, n]²` for the two largest scales of `n_list`
/// on `grid`, each from its own family of thinned samples.
pub struct LambdaCCurves {
    pub grid: Vec<f64>,
    pub scales: (f64, f64),
    pub small: Vec<f64>,
    pub large: Vec<f64>,
    batches: (Vec<Vec<u64>>, Vec<Vec<u64>>),
    sizes: (Vec<u64>, Vec<u64>),
}

pub fn lambda_c_curves(n_list: &[f64], samples: u64, seed: u64, grid: &LambdaGrid) -> Result<LambdaCCurves> {
    check_samples(samples)?;
    let mut scales: Vec<f64> = n_list.to_vec();
    for &n in &scales {
        check_scale(n)?;
    }
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    if scales.len() < 2 {
        return Err(invalid("lambda_c needs at least two distinct scales"));
    }
    let (n_small, n_large) = (scales[scales.len() - 2], scales[scales.len() - 1]);
    let points = grid.points()?;
    let tabulate = |n: f64| -> Result<(Vec<Vec<u64>>, Vec<u64>)> {
        let rect = Rect::square(n)?;
        let at = crossing_intensities(&rect, Orientation::Horizontal, grid.hi, samples, derive_seed(seed, n.to_bits()))?;
        let sizes = at.chunks(BATCH as usize).map(|c| c.len() as u64).collect();
        Ok((batch_counts(&at, &points), sizes))
    };
    let (bs, ss) = tabulate(n_small)?;
    let (bl, sl) = tabulate(n_large)?;
    let all_s: Vec<usize> = (0..bs.len()).collect();
    let all_l: Vec<usize> = (0..bl.len()).collect();
    Ok(LambdaCCurves {
        small: pooled_curve(&bs, &all_s, &ss),
        large: pooled_curve(&bl, &all_l, &sl),
        grid: points,
        scales: (n_small, n_large),
        batches: (bs, bl),
        sizes: (ss, sl),
    })
}

impl LambdaCCurves {
    pub fn intersection(&self) -> Result<f64> {
        curve_intersection(&self.grid, &self.small, &self.large)
    }

    /// Bootstrap over batches of both families.
    pub fn bootstrap_stderr(&self, reps: usize, seed: u64) -> Result<f64> {
        bootstrap_stderr(&[self.batches.0.len(), self.batches.1.len()], reps, seed, |idx| {
            let small = pooled_curve(&self.batches.0, &idx[0], &self.sizes.0);
            let large = pooled_curve(&self.batches.1, &idx[1], &self.sizes.1);
            curve_intersection(&self.grid, &small, &large)
        })
    }
}

/// Critical intensity as the crossing point of the square-crossing curves
/// of the two largest scales.
pub fn estimate_lambda_c(n_list: &[f64], samples: u64, seed: u64) -> Result<EstimateRecord> {
    estimate_lambda_c_on(n_list, samples, seed, &LambdaGrid::default())
}

pub fn estimate_lambda_c_on(n_list: &[f64], samples: u64, seed: u64, grid: &LambdaGrid) -> Result<EstimateRecord> {
    let curves = lambda_c_curves(n_list, samples, seed, grid)?;
    let value = curves.intersection()?;
    let stderr = if curves.batches.0.len() >= 2 && curves.batches.1.len() >= 2 {
        curves.bootstrap_stderr(BOOTSTRAP_REPS, derive_seed(seed, 0xB007))?
    } else {
        f64::NAN
    };
    Ok(EstimateRecord::new(
        "lambda_c",
        value,
        curves.scales.1,
        "lambda_c",
        value,
        stderr,
        samples,
        seed,
        json!({"n_pair": [curves.scales.0, curves.scales.1], "grid": grid, "batch": BATCH,
               "bootstrap_reps": BOOTSTRAP_REPS, "margin": DEFAULT_MARGIN}),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthKind {
    Occupied,
    Vacant,
}

impl std::fmt::Display for WidthKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WidthKind::Occupied => "occupied",
            WidthKind::Vacant => "vacant",
        })
    }
}

impl std::str::FromStr for WidthKind {
    type Err = PercolationError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "occupied" => Ok(WidthKind::Occupied),
            "vacant" => Ok(WidthKind::Vacant),
            other => Err(invalid(format!("unknown width kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSettings {
    pub chains: u64,
    /// Sweeps discarded before the first record.
    pub burn_in: u64,
    /// Sweeps between records.
    pub spacing: u64,
}

impl Default for ChainSettings {
    fn default() -> Self {
        Self {
            chains: 8,
            burn_in: 100,
            spacing: 2,
        }
    }
}

/// How the crossing condition of a width distribution is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Draw unconditioned samples and keep those in the event.
    Rejection,
    /// Birth-death chains restricted to the event.
    Chain(ChainSettings),
}

/// Conditioned widths of one scale, ascending, with `+∞` and censored
/// values replaced by the cap `2 (margin − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedWidths {
    pub widths: Vec<f64>,
    pub censored: u64,
    /// Configurations examined (unconditioned draws or chain records).
    pub draws: u64,
    /// Configurations in the event.
    pub accepted: u64,
}

/// Right-censoring cap of widths.
pub fn width_cap() -> f64 {
    2.0 * (DEFAULT_MARGIN - 1.0)
}

fn event_of(which: WidthKind) -> CrossingEvent {
    match which {
        WidthKind::Occupied => CrossingEvent::Occupied(Orientation::Horizontal),
        WidthKind::Vacant => CrossingEvent::Vacant(Orientation::Horizontal),
    }
}

/// Width of a sample known to be in the event, as `(value, censored)`.
fn width_given_event(sample: &PointSample<f64>, n: f64, which: WidthKind, h: f64) -> Result<(f64, bool)> {
    let w = match which {
        WidthKind::Occupied => occupied_width(sample, n, h)?,
        WidthKind::Vacant => vacant_width(sample, n)?,
    };
    let cap = width_cap();
    let censored = w.censored || !(w.width <= cap);
    Ok((if censored { w.width.min(cap) } else { w.width }, censored))
}

/// Width of the maximal crossing of `[-n, n]²` conditioned on a crossing.
/// The vacant condition is `w*_n > 0`, which is the vacant crossing event
/// itself. The occupied condition is the exact occupied crossing; the width
/// is then the grid estimate at pitch `h`.
pub fn conditioned_widths(
    lambda: f64,
    n: f64,
    which: WidthKind,
    samples: u64,
    seed: u64,
    h: f64,
    conditioning: Conditioning,
) -> Result<ConditionedWidths> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    check_scale(n)?;
    let rect = Rect::square(n)?;
    let event = event_of(which);
    let outcomes: Vec<Option<(f64, bool)>> = match conditioning {
        Conditioning::Rejection => map_samples(samples, |i| {
            let sample = sample_padded(&rect, DEFAULT_MARGIN, lambda, seed, i)?;
            if !event_holds(&sample, &rect, event)? {
                return Ok(None);
            }
            width_given_event(&sample, n, which, h).map(Some)
        })?,
        Conditioning::Chain(cs) => {
            if cs.chains == 0 {
                return Err(invalid("chain conditioning needs at least one chain"));
            }
            let chain_seed = derive_seed(seed, 0xC4A1);
            let ring_seed = derive_seed(seed, 0x0E7);
            let per_chain: Vec<Vec<(f64, bool)>> = map_samples(cs.chains, |c| {
                let quota = samples / cs.chains + u64::from(c < samples % cs.chains);
                let mut chain = ConditionedChain::new(rect, event, lambda, chain_seed, c)?;
                for _ in 0..cs.burn_in {
                    chain.sweep();
                }
                let mut out = Vec::with_capacity(quota as usize);
                for k in 0..quota {
                    for _ in 0..cs.spacing.max(1) {
                        chain.sweep();
                    }
                    let sample = chain.snapshot(DEFAULT_MARGIN, ring_seed, (c << 32) | k)?;
                    out.push(width_given_event(&sample, n, which, h)?);
                }
                Ok(out)
            })?;
            per_chain.into_iter().flatten().map(Some).collect()
        }
    };
    let draws = outcomes.len() as u64;
    let mut widths = Vec::new();
    let mut censored = 0;
    for (w, c) in outcomes.into_iter().flatten() {
        widths.push(w);
        censored += c as u64;
    }
    widths.sort_by(f64::total_cmp);
    Ok(ConditionedWidths {
        accepted: widths.len() as u64,
        widths,
        censored,
        draws,
    })
}

fn conditioning_json(c: &Conditioning) -> Value {
    match c {
        Conditioning::Rejection => json!({"mode": "rejection"}),
        Conditioning::Chain(s) => json!({"mode": "chain", "chains": s.chains, "burn_in": s.burn_in, "spacing": s.spacing}),
    }
}

/// Quantiles of the conditioned width at one scale, by rejection, at
/// pitch `h` (default [`default_pitch`]).
pub fn width_distribution(
    lambda: f64,
    n: f64,
    which: WidthKind,
    samples: u64,
    seed: u64,
    h: Option<f64>,
) -> Result<SweepResult> {
    width_distribution_with(lambda, n, which, samples, seed, h, Conditioning::Rejection)
}

pub fn width_distribution_with(
    lambda: f64,
    n: f64,
    which: WidthKind,
    samples: u64,
    seed: u64,
    h: Option<f64>,
    conditioning: Conditioning,
) -> Result<SweepResult> {
    check_scale(n)?;
    let h = h.unwrap_or_else(|| default_pitch(n));
    let cw = conditioned_widths(lambda, n, which, samples, seed, h, conditioning)?;
    let params = json!({
        "which": which,
        "pitch": h,
        "grid_error_bound": if which == WidthKind::Occupied { grid_error_bound(h) } else { 0.0 },
        "margin": DEFAULT_MARGIN,
        "cap": width_cap(),
        "conditioning": conditioning_json(&conditioning),
    });
    let k = cw.accepted;
    let rec = |quantity: &str, value: f64, stderr: f64, count: u64| {
        EstimateRecord::new("width_dist", lambda, n, quantity, value, stderr, count, seed, params.clone())
    };
    let mut records = Vec::new();
    let acceptance = Proportion::new(cw.accepted, cw.draws);
    records.push(rec("acceptance", acceptance.value(), acceptance.stderr(), cw.draws));
    for (name, q) in [("q10", 0.1), ("q50", 0.5), ("q90", 0.9)] {
        records.push(rec(name, quantile(&cw.widths, q), quantile_stderr(&cw.widths, q), k));
    }
    let censored = Proportion::new(cw.censored, k);
    records.push(rec("censored_fraction", censored.value(), censored.stderr(), k));
    Ok(SweepResult {
        records,
        fitted_slope: None,
        slope_stderr: None,
    })
}

/// Log-log slope of medians against scale: `(slope, stderr)`.
pub fn scaling_fit(n_values: &[f64], medians: &[f64]) -> Result<(f64, f64)> {
    if n_values.len() != medians.len() || n_values.len() < 3 {
        return Err(invalid(format!(
            "scaling fit needs >= 3 matching scales, got {} and {}",
            n_values.len(),
            medians.len()
        )));
    }
    if n_values.iter().chain(medians).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(invalid("scaling fit needs positive finite scales and medians"));
    }
    let xs: Vec<f64> = n_values.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|v| v.ln()).collect();
    let (slope, _, stderr) = least_squares(&xs, &ys)?;
    Ok((slope, stderr))
}

/// Width distributions over `n_values` with a log-log fit of the medians.
/// The conditioning of each scale is chosen by `conditioning(n)`. The slope
/// is absent when fewer than three medians are positive and finite.
pub fn width_scaling(
    lambda: f64,
    n_values: &[f64],
    which: WidthKind,
    samples: u64,
    seed: u64,
    h: Option<f64>,
    conditioning: impl Fn(f64) -> Conditioning,
) -> Result<SweepResult> {
    let mut out = SweepResult::default();
    let mut fit = (Vec::new(), Vec::new());
    for &n in n_values {
        let r = width_distribution_with(lambda, n, which, samples, derive_seed(seed, n.to_bits()), h, conditioning(n))?;
        if let Some(m) = r.find("q50", n) {
            if m.value > 0.0 && m.value.is_finite() {
                fit.0.push(n);
                fit.1.push(m.value);
            }
        }
        out.records.extend(r.records);
    }
    if let Ok((slope, se)) = scaling_fit(&fit.0, &fit.1) {
        out.fitted_slope = Some(slope);
        out.slope_stderr = Some(se);
    }
    Ok(out)
}

/// How the intensity transforms when the plane is shrunk by a factor `s`.
/// A Poisson process pushed forward by `x ↦ x / s` has intensity `λ s²`;
/// `Linear` is the first-power variant, kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityScaling {
    #[default]
    Area,
    Linear,
}

impl IntensityScaling {
    pub fn apply(self, lambda: f64, s: f64) -> f64 {
        match self {
            IntensityScaling::Area => lambda * s * s,
            IntensityScaling::Linear => lambda * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingCheck {
    pub p1: f64,
    pub p1_stderr: f64,
    pub p2: f64,
    pub p2_stderr: f64,
    pub z: f64,
    /// Intensity used for the rescaled crossing.
    pub lambda_rescaled: f64,
}

/// Two-sample test of `P_λ[w*_n ≤ 2a] = P_λ'[cross(n / (1 + a))]`: a vacant
/// path of width `2a` avoids discs of radius `1 + a`, and shrinking the
/// plane by `1 + a` turns those into unit discs at intensity `λ'`.
pub fn coupling_identity_check(lambda: f64, a: f64, n: f64, samples: u64, seed: u64) -> Result<CouplingCheck> {
    coupling_identity_check_with(lambda, a, n, samples, seed, IntensityScaling::Area)
}

pub fn coupling_identity_check_with(
    lambda: f64,
    a: f64,
    n: f64,
    samples: u64,
    seed: u64,
    scaling: IntensityScaling,
) -> Result<CouplingCheck> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    check_scale(n)?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid(format!("width threshold a must be >= 0, got {a}")));
    }
    let square = Rect::square(n)?;
    let s1 = derive_seed(seed, 1);
    let p1 = fold_samples(
        samples,
        Proportion::default,
        |acc, i| {
            let sample = sample_padded(&square, DEFAULT_MARGIN, lambda, s1, i)?;
            acc.push(vacant_width(&sample, n)?.width <= 2.0 * a);
            Ok(())
        },
        Proportion::merge,
    )?;
    let lambda_rescaled = scaling.apply(lambda, 1.0 + a);
    let shrunk = Rect::square(n / (1.0 + a))?;
    let p2 = event_counts(
        lambda_rescaled,
        &shrunk,
        CrossingEvent::Occupied(Orientation::Horizontal),
        samples,
        derive_seed(seed, 2),
    )?;
    Ok(CouplingCheck {
        p1: p1.value(),
        p1_stderr: p1.stderr(),
        p2: p2.value(),
        p2_stderr: p2.stderr(),
        z: z_score(p1.value(), p1.stderr(), p2.value(), p2.stderr()),
        lambda_rescaled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundCheck {
    /// `P̂_λ[w_n > 2a]` from grid widths.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Rescaled crossing probability of the stretched rectangle.
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// `(rhs − lhs) / σ`; positive values count against the bound.
    pub z: f64,
    pub lambda_rescaled: f64,
}

/// One-sided test of `P_λ[w_n > 2a] ≥ P_λ'[cross((n + a)/s, (n − 1)/s)]`
/// with `s = √(1 − a²)`: discs of radius `s` crossing the stretched
/// rectangle leave room for a path of width `2a` inside the unit discs.
pub fn occupied_lower_bound_check(
    lambda: f64,
    a: f64,
    n: f64,
    samples: u64,
    seed: u64,
    h: Option<f64>,
    scaling: IntensityScaling,
) -> Result<LowerBoundCheck> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    if !(n > 1.0 && n.is_finite()) {
        return Err(invalid(format!("lower-bound check needs n > 1, got {n}")));
    }
    if !(0.0..1.0).contains(&a) {
        return Err(invalid(format!("width threshold a must lie in [0, 1), got {a}")));
    }
    let h = h.unwrap_or_else(|| default_pitch(n));
    let square = Rect::square(n)?;
    let s1 = derive_seed(seed, 1);
    let lhs = fold_samples(
        samples,
        Proportion::default,
        |acc, i| {
            let sample = sample_padded(&square, DEFAULT_MARGIN, lambda, s1, i)?;
            acc.push(occupied_width(&sample, n, h)?.width > 2.0 * a);
            Ok(())
        },
        Proportion::merge,
    )?;
    let s = (1.0 - a * a).sqrt();
    let lambda_rescaled = scaling.apply(lambda, s);
    let stretched = Rect::centered((n + a) / s, (n - 1.0) / s)?;
    let rhs = event_counts(
        lambda_rescaled,
        &stretched,
        CrossingEvent::Occupied(Orientation::Horizontal),
        samples,
        derive_seed(seed, 2),
    )?;
    let spread = (lhs.stderr().powi(2) + rhs.stderr().powi(2)).sqrt();
    let gap = rhs.value() - lhs.value();
    let z = if spread > 0.0 {
        gap / spread
    } else if gap > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(LowerBoundCheck {
        lhs: lhs.value(),
        lhs_stderr: lhs.stderr(),
        rhs: rhs.value(),
        rhs_stderr: rhs.stderr(),
        z,
        lambda_rescaled,
    })
}

/// Smallest `n` in the doubling sweep `1, 2, 4, … ≤ n_max` at which the
/// dominant crossing of `[-n, n]²` has estimated probability `≥ 1 − δ`:
/// occupied above `lambda_c`, vacant at or below it. `+∞` when no scale
/// qualifies. The value is a deterministic function of the samples, so the
/// record carries a zero standard error.
pub fn characteristic_length(
    lambda: f64,
    delta: f64,
    n_max: f64,
    samples: u64,
    seed: u64,
    lambda_c: f64,
) -> Result<EstimateRecord> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(n_max >= 1.0 && n_max.is_finite()) {
        return Err(invalid(format!("n_max must be >= 1, got {n_max}")));
    }
    let (branch, event) = if lambda > lambda_c {
        ("occupied", CrossingEvent::Occupied(Orientation::Horizontal))
    } else {
        ("vacant", CrossingEvent::Vacant(Orientation::Horizontal))
    };
    let mut n = 1.0;
    let mut found = f64::INFINITY;
    let mut trail = Vec::new();
    while n <= n_max {
        let p = event_counts(lambda, &Rect::square(n)?, event, samples, derive_seed(seed, n.to_bits()))?;
        trail.push(json!([n, p.value()]));
        if p.value() >= 1.0 - delta {
            found = n;
            break;
        }
        n *= 2.0;
    }
    Ok(EstimateRecord::new(
        "char_length",
        lambda,
        found,
        "char_length",
        found,
        0.0,
        samples,
        seed,
        json!({"delta": delta, "n_max": n_max, "lambda_c": lambda_c, "branch": branch,
               "margin": DEFAULT_MARGIN, "sweep": trail}),
    ))
}

/// Crossing probabilities of `cross(n, 2n)` below and `cross(2n, n)` above
/// `lambda_c` at offsets `C α_n`, each curve from one thinned family. The
/// summary rows give the smallest `C` reaching `≤ 0.25` below and `≥ 0.75`
/// above (`+∞` if none) and the largest probability shift within
/// `0.1 α_n` of `lambda_c`.
pub fn near_critical_window_check(
    n: f64,
    c_grid: &[f64],
    samples: u64,
    seed: u64,
    lambda_c: f64,
    alpha: f64,
) -> Result<SweepResult> {
    check_samples(samples)?;
    check_scale(n)?;
    check_lambda(lambda_c)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("alpha must be > 0, got {alpha}")));
    }
    if c_grid.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
        return Err(invalid("window constants must be finite and >= 0"));
    }
    let mut cs = c_grid.to_vec();
    cs.sort_by(f64::total_cmp);
    let c_top = cs.last().copied().unwrap_or(0.0).max(0.1);
    let tall = Rect::centered(n, 2.0 * n)?;
    let wide = Rect::centered(2.0 * n, n)?;
    let wiggle = 0.1 * alpha;
    let mut below = crossing_intensities(&tall, Orientation::Horizontal, lambda_c + wiggle, samples, derive_seed(seed, 1))?;
    let mut above = crossing_intensities(&wide, Orientation::Horizontal, lambda_c + c_top * alpha, samples, derive_seed(seed, 2))?;
    below.sort_by(f64::total_cmp);
    above.sort_by(f64::total_cmp);
    let params = |c: f64| json!({"c": c, "alpha": alpha, "lambda_c": lambda_c, "margin": DEFAULT_MARGIN});
    let mut out = SweepResult::default();
    let mut c_below = f64::INFINITY;
    let mut c_above = f64::INFINITY;
    for &c in &cs {
        let lb = (lambda_c - c * alpha).max(0.0);
        let pb = fraction_at_most(&below, lb);
        if pb.value() <= 0.25 && c_below.is_infinite() {
            c_below = c;
        }
        out.records.push(EstimateRecord::new(
            "window_check", lb, n, "p_cross_n_2n", pb.value(), pb.stderr(), samples, seed, params(c),
        ));
        let la = lambda_c + c * alpha;
        let pa = fraction_at_most(&above, la);
        if pa.value() >= 0.75 && c_above.is_infinite() {
            c_above = c;
        }
        out.records.push(EstimateRecord::new(
            "window_check", la, n, "p_cross_2n_n", pa.value(), pa.stderr(), samples, seed, params(c),
        ));
    }
    let lo = (lambda_c - wiggle).max(0.0);
    let mut shift: f64 = 0.0;
    for at in [&below, &above] {
        let mid = fraction_at_most(at, lambda_c).value();
        shift = shift
            .max((fraction_at_most(at, lo).value() - mid).abs())
            .max((fraction_at_most(at, lambda_c + wiggle).value() - mid).abs());
    }
    let summary = json!({"alpha": alpha, "lambda_c": lambda_c, "c_grid": cs, "margin": DEFAULT_MARGIN});
    for (quantity, value) in [("c_below", c_below), ("c_above", c_above), ("stability_shift", shift)] {
        out.records.push(EstimateRecord::new(
            "window_check", lambda_c, n, quantity, value, 0.0, samples, seed, summary.clone(),
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FkgCounts {
    pub trials: u64,
    pub horizontal: u64,
    pub vertical: u64,
    pub both: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkgCheck {
    pub p_horizontal: f64,
    pub p_vertical: f64,
    pub p_both: f64,
    /// `P̂[H ∩ V] − P̂[H] P̂[V]`.
    pub covariance: f64,
    pub stderr: f64,
    /// `covariance / stderr`; a violation is `z < −3`.
    pub z: f64,
}

impl FkgCounts {
    /// Delta-method test of positive correlation. The covariance estimate
    /// has influence function `1_{HV} − p_V 1_H − p_H 1_V`, whose variance
    /// follows from the three frequencies since `1_H 1_V = 1_{HV}`.
    pub fn check(&self) -> FkgCheck {
        let t = self.trials as f64;
        let (ph, pv, pb) = (self.horizontal as f64 / t, self.vertical as f64 / t, self.both as f64 / t);
        let covariance = pb - ph * pv;
        let second = pb + pv * pv * ph + ph * ph * pv - 2.0 * pv * pb - 2.0 * ph * pb + 2.0 * ph * pv * pb;
        let first = pb - 2.0 * ph * pv;
        let stderr = ((second - first * first).max(0.0) / t).sqrt();
        let z = if stderr > 0.0 {
            covariance / stderr
        } else if covariance < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        FkgCheck {
            p_horizontal: ph,
            p_vertical: pv,
            p_both: pb,
            covariance,
            stderr,
            z,
        }
    }
}

/// Correlation of the horizontal and vertical occupied crossings of
/// `[-n, n]²` on the same samples.
pub fn fkg_check(lambda: f64, n: f64, samples: u64, seed: u64) -> Result<FkgCheck> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    let rect = Rect::square(n)?;
    let counts = fold_samples(
        samples,
        FkgCounts::default,
        |acc, i| {
            let sample = sample_padded(&rect, DEFAULT_MARGIN, lambda, seed, i)?;
            let h = occupied_crossing(&sample, &CrossingQuery::unit(rect, Orientation::Horizontal))?;
            let v = occupied_crossing(&sample, &CrossingQuery::unit(rect, Orientation::Vertical))?;
            acc.trials += 1;
            acc.horizontal += h as u64;
            acc.vertical += v as u64;
            acc.both += (h && v) as u64;
            Ok(())
        },
        |a, b| FkgCounts {
            trials: a.trials + b.trials,
            horizontal: a.horizontal + b.horizontal,
            vertical: a.vertical + b.vertical,
            both: a.both + b.both,
        },
    )?;
    Ok(counts.check())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrrCheck {
    pub p_square: f64,
    pub p_long: f64,
    /// `P̂[cross(R)] − P̂[cross(R + r, R)]` on shared samples.
    pub difference: f64,
    pub stderr: f64,
    /// `difference · R / r`.
    pub constant: f64,
    pub constant_stderr: f64,
    /// Samples crossing the long rectangle but not the square.
    pub inclusion_violations: u64,
}

/// Cost of lengthening a square crossing. Both events are read off the
/// same sample; crossing `[-(R+r), R+r] × [-R, R]` implies crossing
/// `[-R, R]²`, so the per-sample difference is an indicator.
pub fn rrr_check(big_r: f64, r: f64, lambda: f64, samples: u64, seed: u64) -> Result<RrrCheck> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    if !(r >= 1.0 && big_r >= r && big_r.is_finite()) {
        return Err(invalid(format!("need 1 <= r <= R, got r = {r}, R = {big_r}")));
    }
    let square = Rect::square(big_r)?;
    let long = Rect::centered(big_r + r, big_r)?;
    let (sq, lg, diff, bad) = fold_samples(
        samples,
        || (0u64, 0u64, 0u64, 0u64),
        |acc, i| {
            let sample = sample_padded(&long, DEFAULT_MARGIN, lambda, seed, i)?;
            let a = occupied_crossing(&sample, &CrossingQuery::unit(square, Orientation::Horizontal))?;
            let b = occupied_crossing(&sample, &CrossingQuery::unit(long, Orientation::Horizontal))?;
            acc.0 += a as u64;
            acc.1 += b as u64;
            acc.2 += (a && !b) as u64;
            acc.3 += (b && !a) as u64;
            Ok(())
        },
        |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2, a.3 + b.3),
    )?;
    let d = Proportion::new(diff, samples);
    let scale = big_r / r;
    Ok(RrrCheck {
        p_square: sq as f64 / samples as f64,
        p_long: lg as f64 / samples as f64,
        difference: (sq as f64 - lg as f64) / samples as f64,
        stderr: d.stderr(),
        constant: (sq as f64 - lg as f64) / samples as f64 * scale,
        constant_stderr: d.stderr() * scale,
        inclusion_violations: bad,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub median_ms: f64,
    pub mean_points: f64,
    pub samples_per_second: f64,
}

/// Wall-clock cost of one sample plus one crossing decision of
/// `[-n, n]²`, timed sequentially on the calling thread.
pub fn throughput(lambda: f64, n: f64, samples: u64, seed: u64) -> Result<Throughput> {
    check_samples(samples)?;
    check_lambda(lambda)?;
    let rect = Rect::square(n)?;
    let query = CrossingQuery::unit(rect, Orientation::Horizontal);
    let mut times = Vec::with_capacity(samples as usize);
    let mut points = 0usize;
    let start = Instant::now();
    for i in 0..samples {
        let t = Instant::now();
        let sample = sample_padded(&rect, 1.0, lambda, seed, i)?;
        std::hint::black_box(occupied_crossing(&sample, &query)?);
        times.push(t.elapsed().as_secs_f64() * 1e3);
        points += sample.len();
    }
    let total = start.elapsed().as_secs_f64();
    times.sort_by(f64::total_cmp);
    Ok(Throughput {
        median_ms: quantile(&times, 0.5),
        mean_points: points as f64 / samples as f64,
        samples_per_second: samples as f64 / total,
    })
}
