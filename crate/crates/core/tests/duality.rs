mod common;

use common::breach_radius;
use crosswidth::crossing::{bottleneck_radius, occupied_crossing, vacant_crossing};
use crosswidth::sampler::sample_padded;
use crosswidth::{CrossingQuery, Orientation, Point, PointSample, Rect};
use proptest::prelude::*;

#[test]
fn breach_of_simple_layouts() {
    let rect = Rect::square(2.0).unwrap();
    assert!(breach_radius(&[], &rect, Orientation::Horizontal).is_infinite());
    // one center at the origin: the best left-right path hugs the top or bottom side
    let one = [Point::new(0.0, 0.0)];
    assert!((breach_radius(&one, &rect, Orientation::Horizontal) - 2.0).abs() < 1e-12);
    // a row of centers on the mid-line
    let row: Vec<Point> = (-3..=3).map(|i| Point::new(0.0, i as f64)).collect();
    assert!((breach_radius(&row, &rect, Orientation::Vertical) - 2.0).abs() < 1e-12);
    assert!(breach_radius(&row, &rect, Orientation::Horizontal) < 0.5 + 1e-12);
}

#[test]
fn vacant_bottleneck_equals_breach() {
    for (lambda, n) in [(0.2, 6.0), (0.36, 8.0), (0.5, 8.0), (0.8, 5.0)] {
        let rect = Rect::square(n).unwrap();
        for i in 0..200 {
            let s = sample_padded(&rect, 4.0, lambda, 42, i).unwrap();
            let b = bottleneck_radius(&s, &rect, Orientation::Vertical).unwrap();
            let breach = breach_radius(&s.centers, &rect, Orientation::Horizontal);
            if b.censored {
                continue;
            }
            assert!(
                (b.r_star - breach).abs() < 1e-9 * (1.0 + breach),
                "lambda {lambda} sample {i}: r* {} vs breach {breach}",
                b.r_star
            );
        }
    }
}

fn occupied_xor_vacant(s: &PointSample, rect: &Rect) -> bool {
    let occ = occupied_crossing(s, &CrossingQuery::unit(*rect, Orientation::Horizontal)).unwrap();
    let vac = breach_radius(&s.centers, rect, Orientation::Vertical) > 1.0;
    occ ^ vac
}

#[test]
fn duality_against_independent_vacant_test() {
    for (lambda, n) in [(0.2, 8.0), (0.36, 8.0), (0.5, 16.0)] {
        let rect = Rect::square(n).unwrap();
        for i in 0..300 {
            let s = sample_padded(&rect, 4.0, lambda, 9, i).unwrap();
            assert!(occupied_xor_vacant(&s, &rect), "lambda {lambda} n {n} sample {i}");
            let vac = vacant_crossing(&s, &rect, Orientation::Vertical).unwrap();
            assert_eq!(vac, breach_radius(&s.centers, &rect, Orientation::Vertical) > 1.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn duality_on_arbitrary_rectangles(
        hw in 1.0f64..8.0,
        hh in 1.0f64..8.0,
        lambda in 0.05f64..1.2,
        seed in any::<u64>(),
    ) {
        let rect = Rect::centered(hw, hh).unwrap();
        let s = sample_padded(&rect, 2.0, lambda, seed, 0).unwrap();
        prop_assert!(occupied_xor_vacant(&s, &rect));
    }
}
