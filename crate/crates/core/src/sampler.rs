//! Homogeneous Poisson point samples on padded rectangles.
//!
//! Counts are drawn with `rand_distr::Poisson` (multiplicative inversion
//! below mean 12, Cauchy-envelope rejection above), positions as i.i.d.
//! uniforms. Both consume the per-sample ChaCha8 stream from [`crate::rng`],
//! so `(region, intensity, seed, stream)` replays bit-exactly.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{Point, Rect};
use crate::rng::{substream, StreamRng};
use crate::scalar::Scalar;

/// One realisation of the Poisson process restricted to `region`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample<T> {
    pub centers: Vec<Point<T>>,
    pub intensity: T,
    pub seed: u64,
    /// Stream index under `seed` (the Monte Carlo sample index).
    pub stream: u64,
    /// Sampling window; contains every center.
    pub region: Rect<T>,
    /// Padding that was added around the query rectangle to form `region`.
    pub margin: T,
}

impl<T: Scalar> PointSample<T> {
    /// A sample with explicitly chosen centers (used for constructions and
    /// tests). Centers outside `region` are rejected.
    pub fn from_centers(centers: Vec<Point<T>>, region: Rect<T>, margin: T) -> Result<Self> {
        if let Some(bad) = centers.iter().find(|c| !region.contains(c)) {
            return Err(invalid(format!("center {bad:?} lies outside the region")));
        }
        Ok(Self {
            centers,
            intensity: T::zero(),
            seed: 0,
            stream: 0,
            region,
            margin,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Margin by which `region` extends beyond `query`.
    pub fn margin_around(&self, query: &Rect<T>) -> T {
        self.region.margin_around(query)
    }

    /// Copy with one more center appended at the end.
    pub fn with_extra_center(&self, x: Point<T>) -> Self {
        let mut out = self.clone();
        out.centers.push(x);
        out
    }
}

fn check_intensity<T: Scalar>(lambda: T) -> Result<()> {
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(invalid(format!("intensity must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn draw_count(rng: &mut StreamRng, mean: f64) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| invalid(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

fn draw_point<T: Scalar>(rng: &mut StreamRng, region: &Rect<T>) -> Point<T> {
    let ux: f64 = rng.random();
    let uy: f64 = rng.random();
    let x0 = region.x_min.to_f64_lossy();
    let y0 = region.y_min.to_f64_lossy();
    let w = region.width().to_f64_lossy();
    let h = region.height().to_f64_lossy();
    // Clamp guards against rounding past x_max when T is narrower than f64.
    let x = T::of(x0 + ux * w).min(region.x_max);
    let y = T::of(y0 + uy * h).min(region.y_max);
    Point::new(x, y)
}

/// Poisson sample on `region` using stream `stream` of `seed`.
pub fn sample_stream<T: Scalar>(
    region: Rect<T>,
    lambda: T,
    seed: u64,
    stream: u64,
) -> Result<PointSample<T>> {
    check_intensity(lambda)?;
    let region = Rect::new(region.x_min, region.x_max, region.y_min, region.y_max)?;
    let mut rng = substream(seed, stream);
    let mean = lambda.to_f64_lossy() * region.area().to_f64_lossy();
    let count = draw_count(&mut rng, mean)?;
    let centers = (0..count).map(|_| draw_point(&mut rng, &region)).collect();
    Ok(PointSample {
        centers,
        intensity: lambda,
        seed,
        stream,
        region,
        margin: T::zero(),
    })
}

/// Poisson sample on `region`, stream 0 of `seed`.
pub fn sample_poisson<T: Scalar>(region: Rect<T>, lambda: T, seed: u64) -> Result<PointSample<T>> {
    sample_stream(region, lambda, seed, 0)
}

/// Poisson sample on `query` dilated by `margin`, so every disc of radius
/// up to `margin` that meets `query` has its center sampled.
pub fn sample_padded<T: Scalar>(
    query: &Rect<T>,
    margin: T,
    lambda: T,
    seed: u64,
    stream: u64,
) -> Result<PointSample<T>> {
    if !margin.is_finite() || margin < T::zero() {
        return Err(invalid(format!("margin must be finite and >= 0, got {margin}")));
    }
    let mut sample = sample_stream(query.dilate(margin), lambda, seed, stream)?;
    sample.margin = margin;
    Ok(sample)
}

/// Maps every center `x` to `x / r`. The pushforward of a Poisson process
/// of intensity `λ` is Poisson with intensity `λ r²`.
pub fn rescale_sample<T: Scalar>(sample: &PointSample<T>, r: T) -> Result<PointSample<T>> {
    if !r.is_finite() || r <= T::zero() {
        return Err(invalid(format!("rescale factor must be > 0, got {r}")));
    }
    Ok(PointSample {
        centers: sample
            .centers
            .iter()
            .map(|c| Point::new(c.x / r, c.y / r))
            .collect(),
        intensity: sample.intensity * r * r,
        seed: sample.seed,
        stream: sample.stream,
        region: divide_rect(&sample.region, r),
        margin: sample.margin / r,
    })
}

/// `rect / r`, coordinate-wise division (matches [`rescale_sample`]).
pub fn divide_rect<T: Scalar>(rect: &Rect<T>, r: T) -> Rect<T> {
    Rect {
        x_min: rect.x_min / r,
        x_max: rect.x_max / r,
        y_min: rect.y_min / r,
        y_max: rect.y_max / r,
    }
}

/// Poisson sample at intensity `lambda_max` where every point carries an
/// independent uniform mark. Keeping the points with
/// `mark · lambda_max ≤ λ` yields a Poisson sample of intensity `λ`, and
/// these thinned samples are nested in `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedSample<T> {
    pub centers: Vec<Point<T>>,
    /// Thinning threshold of each point: the point is present at every
    /// intensity `λ ≥ activation[i]`. Uniform on `[0, lambda_max)`.
    pub activation: Vec<f64>,
    pub lambda_max: f64,
    pub seed: u64,
    pub stream: u64,
    pub region: Rect<T>,
    pub margin: T,
}

impl<T: Scalar> MarkedSample<T> {
    /// The nested Poisson sample of intensity `lambda ≤ lambda_max`.
    pub fn thin(&self, lambda: f64) -> Result<PointSample<T>> {
        if !(0.0..=self.lambda_max).contains(&lambda) {
            return Err(invalid(format!(
                "thinning intensity {lambda} outside [0, {}]",
                self.lambda_max
            )));
        }
        let centers = self
            .centers
            .iter()
            .zip(&self.activation)
            .filter(|(_, &a)| a <= lambda)
            .map(|(c, _)| *c)
            .collect();
        Ok(PointSample {
            centers,
            intensity: T::of(lambda),
            seed: self.seed,
            stream: self.stream,
            region: self.region,
            margin: self.margin,
        })
    }
}

/// Marked sample on `query` dilated by `margin`.
pub fn sample_marked<T: Scalar>(
    query: &Rect<T>,
    margin: T,
    lambda_max: f64,
    seed: u64,
    stream: u64,
) -> Result<MarkedSample<T>> {
    if !lambda_max.is_finite() || lambda_max < 0.0 {
        return Err(invalid(format!("lambda_max must be finite and >= 0, got {lambda_max}")));
    }
    let region = query.dilate(margin);
    let region = Rect::new(region.x_min, region.x_max, region.y_min, region.y_max)?;
    let mut rng = substream(seed, stream);
    let count = draw_count(&mut rng, lambda_max * region.area().to_f64_lossy())?;
    let mut centers = Vec::with_capacity(count);
    let mut activation = Vec::with_capacity(count);
    for _ in 0..count {
        centers.push(draw_point(&mut rng, &region));
        let u: f64 = rng.random();
        activation.push(u * lambda_max);
    }
    Ok(MarkedSample {
        centers,
        activation,
        lambda_max,
        seed,
        stream,
        region,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect<f64> {
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn zero_intensity_is_empty() {
        let s = sample_poisson(Rect::square(10.0).unwrap(), 0.0, 99).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_poisson(unit(), f64::NAN, 1).is_err());
        assert!(sample_poisson(unit(), -1.0, 1).is_err());
        assert!(sample_poisson(Rect { x_min: 0.0, x_max: 0.0, y_min: 0.0, y_max: 1.0 }, 1.0, 1).is_err());
        let s = sample_poisson(unit(), 1.0, 1).unwrap();
        assert!(rescale_sample(&s, 0.0).is_err());
        assert!(rescale_sample(&s, -2.0).is_err());
    }

    #[test]
    fn replay_is_bit_exact() {
        let a = sample_stream(Rect::square(8.0).unwrap(), 0.36, 11, 5).unwrap();
        let b = sample_stream(Rect::square(8.0).unwrap(), 0.36, 11, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_stream(Rect::square(8.0).unwrap(), 0.36, 11, 6).unwrap();
        assert_ne!(a.centers, c.centers);
        assert!(a.centers.iter().all(|p| a.region.contains(p)));
    }

    #[test]
    fn rescale_identity_and_linear() {
        let s = sample_poisson(Rect::square(3.0).unwrap(), 1.0, 4).unwrap();
        assert_eq!(rescale_sample(&s, 1.0).unwrap(), s);
        let one = PointSample::from_centers(vec![Point::new(2.0, 2.0)], Rect::square(4.0).unwrap(), 0.0)
            .unwrap();
        let r = rescale_sample(&one, 2.0).unwrap();
        assert_eq!(r.centers, vec![Point::new(1.0, 1.0)]);
        assert_eq!(r.region, Rect::square(2.0).unwrap());
    }

    #[test]
    fn rescale_scales_intensity_by_area() {
        let mut s = sample_poisson(unit(), 2.0, 4).unwrap();
        s.intensity = 2.0;
        let r = rescale_sample(&s, 3.0).unwrap();
        assert_eq!(r.intensity, 18.0);
    }

    #[test]
    fn thinning_is_nested() {
        let m = sample_marked(&Rect::square(4.0).unwrap(), 1.0, 1.0, 3, 0).unwrap();
        let a = m.thin(0.3).unwrap();
        let b = m.thin(0.6).unwrap();
        assert!(a.len() <= b.len());
        assert!(a.centers.iter().all(|c| b.centers.contains(c)));
        assert_eq!(m.thin(1.0).unwrap().len(), m.centers.len());
        assert!(m.thin(1.5).is_err());
    }

    #[test]
    fn single_precision_sample() {
        let s = sample_poisson(Rect::<f32>::square(5.0).unwrap(), 0.5, 2).unwrap();
        assert!(s.centers.iter().all(|p| s.region.contains(p)));
        assert!(!s.is_empty());
    }
}
