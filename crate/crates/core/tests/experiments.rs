use crosswidth::experiments::*;
use crosswidth::stats::z_score;
use crosswidth::{Orientation, Rect};

#[test]
fn crossing_probability_grows_with_intensity() {
    let rect = Rect::square(16.0).unwrap();
    let lo = crossing_probability(0.25, &rect, Orientation::Horizontal, 2000, 1).unwrap();
    let hi = crossing_probability(0.5, &rect, Orientation::Horizontal, 2000, 2).unwrap();
    assert!(z_score(hi.value, hi.stderr, lo.value, lo.stderr) > 3.0, "{} vs {}", hi.value, lo.value);
}

#[test]
fn crossing_curve_is_nondecreasing() {
    // one thinned family per curve, so monotone sample by sample
    let rect = Rect::square(8.0).unwrap();
    let lambdas: Vec<f64> = (0..=20).map(|k| 0.2 + 0.02 * k as f64).collect();
    let curve = crossing_curve(&rect, Orientation::Horizontal, &lambdas, 300, 5).unwrap();
    let values: Vec<f64> = curve.iter().map(|r| r.value).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]), "{values:?}");
}

#[test]
fn intersection_of_known_curves() {
    let grid: Vec<f64> = (0..=100).map(|k| 0.2 + 0.004 * k as f64).collect();
    let logistic = |x: f64, s: f64| 1.0 / (1.0 + (-(x - 0.35) * s).exp());
    // the steeper curve sits below before 0.35 and above after: one root at 0.35
    let small: Vec<f64> = grid.iter().map(|&x| logistic(x, 20.0)).collect();
    let large: Vec<f64> = grid.iter().map(|&x| logistic(x, 60.0)).collect();
    let root = curve_intersection(&grid, &small, &large).unwrap();
    assert!((root - 0.35).abs() < 1e-3, "{root}");
    assert_eq!(curve_crossings(&small, &large), 1);
    assert!(curve_intersection(&grid, &large, &large.iter().map(|v| v + 0.1).collect::<Vec<_>>()).is_err());
}

#[test]
fn scaling_fit_recovers_power_laws() {
    let ns = [16.0, 32.0, 64.0, 128.0];
    for slope in [-1.0, -0.5, 0.25] {
        let ys: Vec<f64> = ns.iter().map(|n: &f64| 3.0 * n.powf(slope)).collect();
        let (fit, se) = scaling_fit(&ns, &ys).unwrap();
        assert!((fit - slope).abs() < 1e-12 && se < 1e-9);
    }
    assert!(scaling_fit(&ns[..2], &[1.0, 0.5]).is_err());
}

#[test]
fn characteristic_length_examples() {
    let l1 = characteristic_length(1.0, 0.25, 64.0, 400, 3, LAMBDA_C_REFERENCE).unwrap();
    assert!(l1.value <= 16.0, "{}", l1.value);
    let near = characteristic_length(0.37, 0.25, 128.0, 200, 4, LAMBDA_C_REFERENCE).unwrap();
    let far = characteristic_length(0.40, 0.25, 128.0, 200, 4, LAMBDA_C_REFERENCE).unwrap();
    assert!(far.value < near.value, "L(0.40) = {}, L(0.37) = {}", far.value, near.value);
    // below the threshold the vacant branch is used
    let sub = characteristic_length(0.2, 0.25, 64.0, 200, 5, LAMBDA_C_REFERENCE).unwrap();
    assert_eq!(sub.params["branch"], "vacant");
    assert!(sub.value.is_finite());
}

#[test]
fn corrected_coupling_identity_holds() {
    let c = coupling_identity_check(0.36, 0.2, 16.0, 3000, 8).unwrap();
    assert!(c.z.abs() < 3.0, "{c:?}");
    assert!((c.lambda_rescaled - 0.36 * 1.44).abs() < 1e-12);
    assert_eq!(IntensityScaling::Linear.apply(0.36, 1.2), 0.36 * 1.2);
}

#[test]
fn lengthening_a_crossing_only_loses_it() {
    let r = rrr_check(8.0, 2.0, 0.36, 2000, 9).unwrap();
    assert_eq!(r.inclusion_violations, 0);
    assert!(r.difference >= 0.0 && r.p_long <= r.p_square);
    assert!((r.constant - r.difference * 4.0).abs() < 1e-12);
}

#[test]
fn fkg_counts_oracles() {
    // independent events at the product frequency: zero covariance
    let c = FkgCounts { trials: 400, horizontal: 200, vertical: 100, both: 50 }.check();
    assert!(c.covariance.abs() < 1e-15 && c.z.abs() < 1e-12);
    // identical events: covariance p(1 - p)
    let c = FkgCounts { trials: 100, horizontal: 30, vertical: 30, both: 30 }.check();
    assert!((c.covariance - 0.21).abs() < 1e-12 && c.z > 3.0);
    let f = fkg_check(0.36, 8.0, 3000, 10).unwrap();
    assert!(f.z > -3.0, "{f:?}");
}

#[test]
fn chain_matches_rejection_on_small_boxes() {
    let (lambda, n) = (0.42, 6.0);
    let rej = conditioned_widths(lambda, n, WidthKind::Vacant, 30000, 11, 0.05, Conditioning::Rejection).unwrap();
    let settings = ChainSettings { chains: 8, burn_in: 200, spacing: 5 };
    let chain = conditioned_widths(lambda, n, WidthKind::Vacant, 3000, 12, 0.05, Conditioning::Chain(settings)).unwrap();
    assert!(rej.widths.len() > 1000, "{}", rej.widths.len());
    for q in [0.25, 0.5, 0.75] {
        let a = crosswidth::stats::quantile(&rej.widths, q);
        let b = crosswidth::stats::quantile(&chain.widths, q);
        // chain records are correlated; allow a wider band than iid
        let se = crosswidth::stats::quantile_stderr(&rej.widths, q) + 2.0 * crosswidth::stats::quantile_stderr(&chain.widths, q);
        assert!((a - b).abs() < 4.0 * se, "q{q}: rejection {a}, chain {b}, se {se}");
    }
}

#[test]
fn window_check_rows() {
    let s = near_critical_window_check(4.0, &[0.0, 2.0, 8.0], 300, 13, LAMBDA_C_REFERENCE, 0.02).unwrap();
    for q in ["c_below", "c_above", "stability_shift"] {
        assert!(s.find(q, 4.0).is_some(), "{q}");
    }
    let tall: Vec<f64> = s.records.iter().filter(|r| r.quantity == "p_cross_n_2n").map(|r| r.lambda).collect();
    assert_eq!(tall.len(), 3);
    assert!(tall.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn width_distribution_records() {
    let s = width_distribution(0.3, 8.0, WidthKind::Vacant, 400, 14, None).unwrap();
    for q in ["acceptance", "q10", "q50", "q90", "censored_fraction"] {
        let r = s.records.iter().find(|r| r.quantity == q).unwrap_or_else(|| panic!("{q}"));
        assert!(r.value.is_finite());
    }
    let q: Vec<f64> = ["q10", "q50", "q90"].iter().map(|k| s.records.iter().find(|r| r.quantity == *k).unwrap().value).collect();
    assert!(q[0] <= q[1] && q[1] <= q[2]);
}
