use crosswidth::crossing::{bottleneck_radius, occupied_crossing};
use crosswidth::sampler::{divide_rect, rescale_sample, sample_padded, sample_poisson, sample_stream};
use crosswidth::{CrossingQuery, Orientation, Rect};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

#[test]
fn poisson_mean_on_unit_square() {
    let unit = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
    let counts: Vec<f64> = (0..10_000)
        .map(|s| sample_poisson(unit, 100.0, s).unwrap().len() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    assert!((mean - 100.0).abs() < 3.0 * (100.0f64 / 1e4).sqrt(), "mean {mean}");
}

#[test]
fn counts_pass_chi_square() {
    let region = Rect::new(0.0, 5.0, 0.0, 2.0).unwrap();
    let mean = 10.0;
    let samples = 10_000u64;
    let mut hist = vec![0u64; 64];
    for i in 0..samples {
        let k = sample_stream(region, 1.0, 17, i).unwrap().len();
        hist[k.min(63)] += 1;
    }
    let law = Poisson::new(mean).unwrap();
    // pool the tails so every bin expects at least 5
    let (mut lo, mut hi) = (0usize, 63usize);
    while law.cdf(lo as u64) * samples as f64 <= 5.0 {
        lo += 1;
    }
    while law.sf(hi as u64 - 1) * samples as f64 <= 5.0 {
        hi -= 1;
    }
    let mut stat = 0.0;
    let mut bins = 0;
    for k in lo..=hi {
        let p = if k == lo {
            law.cdf(lo as u64)
        } else if k == hi {
            law.sf(hi as u64 - 1)
        } else {
            law.pmf(k as u64)
        };
        let observed: u64 = if k == lo {
            hist[..=lo].iter().sum()
        } else if k == hi {
            hist[hi..].iter().sum()
        } else {
            hist[k]
        };
        let expected = p * samples as f64;
        stat += (observed as f64 - expected).powi(2) / expected;
        bins += 1;
    }
    let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi-square {stat} over {bins} bins, critical {critical}");
}

#[test]
fn x_coordinates_pass_kolmogorov_smirnov() {
    let region = Rect::new(-3.0, 5.0, 0.0, 1.0).unwrap();
    let mut xs = Vec::new();
    let mut stream = 0;
    while xs.len() < 100_000 {
        let s = sample_stream(region, 50.0, 3, stream).unwrap();
        xs.extend(s.centers.iter().map(|c| (c.x + 3.0) / 8.0));
        stream += 1;
    }
    xs.truncate(100_000);
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / m).max((i + 1) as f64 / m - u))
        .fold(0.0, f64::max);
    assert!(d < 1.628 / m.sqrt(), "KS statistic {d}");
}

#[test]
fn replay_is_independent_of_thread_count() {
    let rect = Rect::square(8.0).unwrap();
    let draw = || -> Vec<Vec<(u64, u64)>> {
        use rayon::prelude::*;
        (0..64u64)
            .into_par_iter()
            .map(|i| {
                let s = sample_padded(&rect, 4.0, 0.36, 99, i).unwrap();
                s.centers.iter().map(|c| (c.x.to_bits(), c.y.to_bits())).collect()
            })
            .collect()
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    assert_eq!(one.install(draw), four.install(draw));
}

#[test]
fn rescaled_crossings_agree_sample_by_sample() {
    let rect = Rect::square(6.0).unwrap();
    for i in 0..1000u64 {
        let r = 0.6 + (i % 7) as f64 * 0.15;
        let s = sample_padded(&rect, 4.0, 0.36 / (r * r), 5, i).unwrap();
        let direct = occupied_crossing(&s, &CrossingQuery::new(rect, Orientation::Horizontal, r).unwrap()).unwrap();
        let scaled = rescale_sample(&s, r).unwrap();
        let small = divide_rect(&rect, r);
        let via = occupied_crossing(&scaled, &CrossingQuery::unit(small, Orientation::Horizontal)).unwrap();
        assert_eq!(direct, via, "sample {i} at r = {r}");
    }
}

#[test]
fn bottleneck_is_scale_equivariant() {
    let rect = Rect::square(6.0).unwrap();
    for i in 0..200u64 {
        let s = sample_padded(&rect, 4.0, 0.36, 8, i).unwrap();
        let b = bottleneck_radius(&s, &rect, Orientation::Vertical).unwrap();
        for r in [2.0, 0.5, 1.7] {
            let scaled = bottleneck_radius(&rescale_sample(&s, r).unwrap(), &divide_rect(&rect, r), Orientation::Vertical).unwrap();
            if r == 2.0 || r == 0.5 {
                assert_eq!(scaled.r_star, b.r_star / r);
            } else {
                assert!((scaled.r_star - b.r_star / r).abs() <= 1e-12 * b.r_star.max(1.0));
            }
            assert_eq!(scaled.witness, b.witness);
        }
    }
}
