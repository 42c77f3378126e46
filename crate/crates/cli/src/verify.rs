//! Self-checks behind `crosswidth verify`.

use crosswidth::arms::russo_check;
use crosswidth::experiments::{coupling_identity_check, fkg_check, EstimateRecord, DEFAULT_MARGIN};
use crosswidth::parallel::fold_samples;
use crosswidth::rng::derive_seed;
use crosswidth::sampler::sample_padded;
use crosswidth::widths::{grid_error_bound, vacant_width_grid};
use crosswidth::crossing::{bottleneck_radius, occupied_crossing};
use crosswidth::{CrossingQuery, Orientation, Point, PointSample, Rect};
use serde_json::json;

use crate::CliError;

const Z_LIMIT: f64 = 3.0;
const PITCH: f64 = 0.05;
const BRACKET: f64 = 1e-9;

#[derive(Default)]
struct Tally {
    trials: u64,
    violations: u64,
    undecided: u64,
}

fn merge(a: Tally, b: Tally) -> Tally {
    Tally {
        trials: a.trials + b.trials,
        violations: a.violations + b.violations,
        undecided: a.undecided + b.undecided,
    }
}

fn transposed(s: &PointSample) -> PointSample {
    let centers = s.centers.iter().map(|c| Point::new(c.y, c.x)).collect();
    let r = &s.region;
    let region = Rect::new(r.y_min, r.y_max, r.x_min, r.x_max).expect("transposed region");
    PointSample::from_centers(centers, region, s.margin).expect("transposed sample")
}

/// Runs every suite; returns the records and the names of failed suites.
pub fn run_suites(lambda: f64, n: f64, samples: u64, seed: u64) -> Result<(Vec<EstimateRecord>, Vec<String>), CliError> {
    let mut out = Vec::new();
    let mut failures = Vec::new();
    let rect = Rect::square(n)?;
    let mut push = |suite: &str, quantity: &str, value: f64, stderr: f64, pass: bool, params: serde_json::Value| {
        let tag = format!("{suite}_{quantity}");
        out.push(EstimateRecord::new("verify", lambda, n, &tag, value, stderr, samples, seed, params.clone()));
        out.push(EstimateRecord::new("verify", lambda, n, &format!("{suite}_pass"), pass as u8 as f64, 0.0, samples, seed, params));
        if !pass {
            failures.push(suite.to_string());
        }
    };

    // Occupied left-right crossing from the union-find against the vacant
    // top-bottom width from the distance grid: a certified positive grid
    // width rules the occupied crossing out.
    let dual_seed = derive_seed(seed, 1);
    let bound = grid_error_bound(PITCH);
    let t = fold_samples(
        samples,
        Tally::default,
        |acc, i| {
            let s = sample_padded(&rect, DEFAULT_MARGIN, lambda, dual_seed, i)?;
            let occupied = occupied_crossing(&s, &CrossingQuery::unit(rect, Orientation::Horizontal))?;
            let w = vacant_width_grid(&transposed(&s), n, PITCH)?.width;
            acc.trials += 1;
            if w > bound {
                acc.violations += occupied as u64;
            } else if !occupied {
                acc.undecided += 1;
            }
            Ok(())
        },
        merge,
    )?;
    let params = json!({"pitch": PITCH, "undecided": t.undecided});
    push("duality", "violations", t.violations as f64, 0.0, t.violations == 0, params);

    let bn_seed = derive_seed(seed, 2);
    let t = fold_samples(
        samples,
        Tally::default,
        |acc, i| {
            let s = sample_padded(&rect, DEFAULT_MARGIN, lambda, bn_seed, i)?;
            let r = bottleneck_radius(&s, &rect, Orientation::Horizontal)?;
            acc.trials += 1;
            if r.censored || !r.r_star.is_finite() || r.r_star * (1.0 + BRACKET) > s.margin {
                acc.undecided += 1;
                return Ok(());
            }
            let at = |radius: f64| CrossingQuery::new(rect, Orientation::Horizontal, radius).and_then(|q| occupied_crossing(&s, &q));
            let ok = at(r.r_star * (1.0 + BRACKET))? && !at(r.r_star * (1.0 - BRACKET))?;
            acc.violations += !ok as u64;
            Ok(())
        },
        merge,
    )?;
    let params = json!({"bracket": BRACKET, "censored": t.undecided});
    push("bottleneck", "violations", t.violations as f64, 0.0, t.violations == 0, params);

    let a = 0.2;
    let c = coupling_identity_check(lambda, a, n, samples, derive_seed(seed, 3))?;
    let params = json!({"a": a, "p1": c.p1, "p2": c.p2, "lambda_rescaled": c.lambda_rescaled});
    push("coupling", "z", c.z, 0.0, c.z.abs() < Z_LIMIT, params);

    let d_lambda = 0.01;
    let r = russo_check(lambda, n, d_lambda, samples, derive_seed(seed, 4))?;
    let params = json!({"d_lambda": d_lambda, "lhs": r.lhs, "rhs": r.rhs});
    push("russo", "z", r.z, 0.0, r.z.abs() < Z_LIMIT, params);

    let f = fkg_check(lambda, n, samples, derive_seed(seed, 5))?;
    let params = json!({"covariance": f.covariance, "stderr": f.stderr});
    push("fkg", "z", f.z, 0.0, f.z > -Z_LIMIT, params);

    Ok((out, failures))
}
