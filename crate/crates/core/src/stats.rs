//! Small estimators shared by the Monte Carlo experiments.

use rand::Rng;

use crate::error::{invalid, PercolationError, Result};
use crate::rng::substream;

/// Success count out of a number of Bernoulli trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn new(hits: u64, trials: u64) -> Self {
        debug_assert!(hits <= trials);
        Self { hits, trials }
    }

    pub fn push(&mut self, hit: bool) {
        self.trials += 1;
        self.hits += hit as u64;
    }

    pub fn merge(self, other: Self) -> Self {
        Self::new(self.hits + other.hits, self.trials + other.trials)
    }

    pub fn value(&self) -> f64 {
        if self.trials == 0 {
            return f64::NAN;
        }
        self.hits as f64 / self.trials as f64
    }

    /// Binomial standard error `√(p(1−p)/N)`.
    pub fn stderr(&self) -> f64 {
        let p = self.value();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Running mean and variance, mergeable in any grouping.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64) / count as f64;
        Self { count, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.m2 / (self.count - 1) as f64
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::default();
        for x in iter {
            w.push(x);
        }
        w
    }
}

/// Linear-interpolation quantile of ascending `sorted` data. Interpolating
/// towards `+∞` yields `+∞`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 {
        return sorted[lo];
    }
    if sorted[hi].is_infinite() {
        return sorted[hi];
    }
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Distribution-free standard error of the `q` quantile of ascending
/// `sorted` data: half the spread between the order statistics one
/// binomial standard deviation either side of rank `k q`.
pub fn quantile_stderr(sorted: &[f64], q: f64) -> f64 {
    let k = sorted.len();
    if k < 2 {
        return f64::NAN;
    }
    let centre = k as f64 * q;
    let spread = (k as f64 * q * (1.0 - q)).sqrt();
    let lo = (centre - spread).floor().clamp(0.0, (k - 1) as f64) as usize;
    let hi = (centre + spread).ceil().clamp(0.0, (k - 1) as f64) as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if b.is_infinite() {
        return f64::INFINITY;
    }
    (b - a) / 2.0
}

/// Ordinary least squares of `ys` on `xs`: `(slope, intercept, slope stderr)`.
/// The standard error comes from the residuals and is zero for an exact fit.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid(format!(
            "regression needs matching series of length >= 2, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if xs.len() > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (ssr / (k - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok((slope, intercept, stderr))
}

/// `|a − b|` in units of the combined standard error. Zero spread gives 0
/// for equal values and `+∞` otherwise.
pub fn z_score(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let spread = (se_a * se_a + se_b * se_b).sqrt();
    let gap = (a - b).abs();
    if spread > 0.0 {
        gap / spread
    } else if gap == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Standard deviation of a statistic over bootstrap resamples of batches.
/// `groups[g]` is the number of batches of group `g`; every replicate
/// resamples each group independently and passes the chosen batch indices
/// to `stat`. The resampling stream is fixed by `seed`, so the result
/// replays. Replicates on which the statistic is undefined (a range error
/// or a non-finite value) are skipped, up to a tenth of them.
pub fn bootstrap_stderr(
    groups: &[usize],
    reps: usize,
    seed: u64,
    mut stat: impl FnMut(&[Vec<usize>]) -> Result<f64>,
) -> Result<f64> {
    if groups.is_empty() || groups.contains(&0) || reps < 2 {
        return Err(invalid("bootstrap needs nonempty groups and two replicates"));
    }
    let mut rng = substream(seed, 0);
    let mut idx: Vec<Vec<usize>> = groups.iter().map(|&b| vec![0; b]).collect();
    let mut acc = Welford::default();
    let mut failures = 0usize;
    for _ in 0..reps {
        for (g, &b) in groups.iter().enumerate() {
            for slot in idx[g].iter_mut() {
                *slot = rng.random_range(0..b);
            }
        }
        match stat(&idx) {
            Ok(v) if v.is_finite() => acc.push(v),
            Ok(_) | Err(PercolationError::Range(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    if acc.count < 2 || failures * 10 > reps {
        return Err(PercolationError::Range(format!(
            "bootstrap statistic undefined on {failures} of {reps} resamples"
        )));
    }
    Ok(acc.variance().sqrt())
}
