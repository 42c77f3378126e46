//! Command-line runner: resolves a config, runs one experiment on a
//! sized worker pool and writes the CSV plus its manifest sidecar.

pub mod cli;
pub mod config;
pub mod output;
mod verify;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crosswidth::arms::{alpha_n, estimate_pi4, Pi4Method};
use crosswidth::experiments::{
    characteristic_length, coupling_identity_check_with, crossing_probability, estimate_lambda_c,
    near_critical_window_check, throughput, width_scaling, EstimateRecord, DEFAULT_MARGIN,
};
use crosswidth::rng::derive_seed;
use crosswidth::sampler::sample_padded;
use crosswidth::widths::default_pitch;
use crosswidth::{PercolationError, Point, Rect};
use serde_json::{json, Value};
use thiserror::Error;

pub use config::{Command, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Model(#[from] PercolationError),
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Model(PercolationError::InvalidParameter(_)) => 2,
            CliError::Io(_) | CliError::Csv(_) => 3,
            CliError::Model(_) => 4,
            CliError::Failed(_) => 1,
        }
    }
}

/// What a subcommand produced.
pub enum Produced {
    Records(Vec<EstimateRecord>),
    Points(Vec<Point>),
}

pub struct RunSummary {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
    /// Names of failed checks (`verify` only).
    pub failures: Vec<String>,
    pub extra: Value,
}

/// Seed used when the config names none; recorded in every row.
pub fn fresh_seed() -> u64 {
    let t = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    derive_seed(t.as_secs(), t.subsec_nanos() as u64)
}

/// Runs the configured experiment and writes its outputs. A failed
/// `verify` still writes both files before reporting the failure.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    if cfg.command != Command::Sample && cfg.margin != DEFAULT_MARGIN {
        return Err(CliError::Usage(format!(
            "margin {} is only adjustable for `sample`; estimators sample with margin {DEFAULT_MARGIN}",
            cfg.margin
        )));
    }
    let started = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    let clock = Instant::now();
    let (produced, failures, extra) = if cfg.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cfg.threads)))?;
        pool.install(|| execute(cfg))?
    } else {
        execute(cfg)?
    };
    let rows = match &produced {
        Produced::Records(r) => {
            output::write_records(&cfg.output, r)?;
            r.len()
        }
        Produced::Points(p) => {
            output::write_points(&cfg.output, p)?;
            p.len()
        }
    };
    let manifest = output::manifest_path(&cfg.output);
    output::write_manifest(
        &manifest,
        &json!({
            "command": cfg.command.name(),
            "config": cfg.to_raw(),
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix_seconds": started.as_secs_f64(),
            "wall_time_seconds": clock.elapsed().as_secs_f64(),
            "threads": if cfg.threads > 0 { cfg.threads } else { rayon::current_num_threads() },
            "rows": rows,
            "failures": failures,
            "extra": extra,
        }),
    )?;
    let summary = RunSummary {
        csv: cfg.output.clone(),
        manifest,
        rows,
        failures,
        extra,
    };
    if !summary.failures.is_empty() {
        return Err(CliError::Failed(summary.failures.join(", ")));
    }
    Ok(summary)
}

fn need(values: &[f64], what: &str, command: Command) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Usage(format!("`{command}` needs --{what}")));
    }
    Ok(())
}

fn first_or(values: &[f64], default: f64) -> f64 {
    values.first().copied().unwrap_or(default)
}

type Executed = (Produced, Vec<String>, Value);

fn execute(cfg: &ExperimentConfig) -> Result<Executed, CliError> {
    let seed = cfg.seed;
    let samples = cfg.samples;
    let records = |r: Vec<EstimateRecord>| Ok((Produced::Records(r), Vec::new(), Value::Null));
    match cfg.command {
        Command::Sample => {
            need(&cfg.lambda, "lambda", cfg.command)?;
            need(&cfg.n, "n", cfg.command)?;
            let rect = Rect::square(cfg.n[0])?;
            let s = sample_padded(&rect, cfg.margin, cfg.lambda[0], seed, 0)?;
            Ok((Produced::Points(s.centers), Vec::new(), Value::Null))
        }
        Command::CrossProb => {
            need(&cfg.lambda, "lambda", cfg.command)?;
            need(&cfg.n, "n", cfg.command)?;
            let mut out = Vec::new();
            for &lambda in &cfg.lambda {
                for &n in &cfg.n {
                    let rect = Rect::centered(cfg.aspect * n, n)?;
                    out.push(crossing_probability(lambda, &rect, cfg.orientation, samples, seed)?);
                }
            }
            records(out)
        }
        Command::WidthDist => {
            need(&cfg.lambda, "lambda", cfg.command)?;
            need(&cfg.n, "n", cfg.command)?;
            let mut out = Vec::new();
            for &lambda in &cfg.lambda {
                let sweep = width_scaling(lambda, &cfg.n, cfg.which, samples, seed, cfg.pitch, |_| cfg.conditioning())?;
                out.extend(sweep.records);
                if let (Some(slope), Some(se)) = (sweep.fitted_slope, sweep.slope_stderr) {
                    out.push(EstimateRecord::new(
                        "width_dist",
                        lambda,
                        f64::NAN,
                        "loglog_slope",
                        slope,
                        if se.is_nan() { 0.0 } else { se },
                        samples,
                        seed,
                        json!({"n_values": cfg.n, "which": cfg.which, "statistic": "q50"}),
                    ));
                }
            }
            records(out)
        }
        Command::Pi4 | Command::Alpha => {
            need(&cfg.n, "n", cfg.command)?;
            let lambdas = if cfg.lambda.is_empty() { vec![cfg.lambda_c] } else { cfg.lambda.clone() };
            let mut out = Vec::new();
            for &lambda in &lambdas {
                for &n in &cfg.n {
                    let est = estimate_pi4(lambda, n, samples, cfg.pi4_method, seed)?;
                    let params = json!({"method": cfg.pi4_method, "margin": DEFAULT_MARGIN,
                        "pitch": if cfg.pi4_method == Pi4Method::Annulus { json!(crosswidth::arms::default_arm_pitch(1.0)) } else { Value::Null }});
                    out.push(EstimateRecord::new(
                        "pi4", lambda, n, "pi4", est.value, est.stderr, est.n_samples, seed, params.clone(),
                    ));
                    if cfg.command == Command::Alpha {
                        let (alpha, se) = alpha_n(&est, n)?;
                        out.push(EstimateRecord::new("alpha", lambda, n, "alpha_n", alpha, se, est.n_samples, seed, params));
                    }
                }
            }
            records(out)
        }
        Command::LambdaC => {
            need(&cfg.n, "n", cfg.command)?;
            records(vec![estimate_lambda_c(&cfg.n, samples, seed)?])
        }
        Command::CharLength => {
            need(&cfg.lambda, "lambda", cfg.command)?;
            let mut out = Vec::new();
            for &lambda in &cfg.lambda {
                out.push(characteristic_length(lambda, cfg.delta, cfg.n_max, samples, seed, cfg.lambda_c)?);
            }
            records(out)
        }
        Command::WindowCheck => {
            need(&cfg.n, "n", cfg.command)?;
            let mut out = Vec::new();
            for &n in &cfg.n {
                let alpha = match cfg.alpha {
                    Some(a) => a,
                    None => {
                        let pi4_seed = derive_seed(seed, 0xA1FA);
                        let est = estimate_pi4(cfg.lambda_c, n, samples, cfg.pi4_method, pi4_seed)?;
                        let (alpha, se) = alpha_n(&est, n)?;
                        out.push(EstimateRecord::new(
                            "window_check", cfg.lambda_c, n, "alpha_n", alpha, se, samples, pi4_seed,
                            json!({"method": cfg.pi4_method}),
                        ));
                        alpha
                    }
                };
                out.extend(near_critical_window_check(n, &cfg.c_grid, samples, seed, cfg.lambda_c, alpha)?.records);
            }
            records(out)
        }
        Command::CouplingCheck => {
            need(&cfg.lambda, "lambda", cfg.command)?;
            need(&cfg.n, "n", cfg.command)?;
            let mut out = Vec::new();
            for &lambda in &cfg.lambda {
                for &n in &cfg.n {
                    let c = coupling_identity_check_with(lambda, cfg.a, n, samples, seed, cfg.scaling)?;
                    let params = json!({"a": cfg.a, "scaling": cfg.scaling, "lambda_rescaled": c.lambda_rescaled,
                        "margin": DEFAULT_MARGIN});
                    let rec = |q: &str, v: f64, se: f64| {
                        EstimateRecord::new("coupling_check", lambda, n, q, v, se, samples, seed, params.clone())
                    };
                    out.push(rec("p1", c.p1, c.p1_stderr));
                    out.push(rec("p2", c.p2, c.p2_stderr));
                    out.push(rec("z", c.z, 0.0));
                }
            }
            records(out)
        }
        Command::Verify => {
            let lambda = first_or(&cfg.lambda, 0.36);
            let n = first_or(&cfg.n, 8.0);
            let (out, failures) = verify::run_suites(lambda, n, samples, seed)?;
            Ok((Produced::Records(out), failures, Value::Null))
        }
        Command::Bench => {
            let lambda = first_or(&cfg.lambda, 0.36);
            let n = first_or(&cfg.n, 256.0);
            let t = throughput(lambda, n, samples, seed)?;
            let params = json!({"margin": 1.0, "threads": 1, "pitch": default_pitch(n)});
            let rec = |q: &str, v: f64| EstimateRecord::new("bench", lambda, n, q, v, 0.0, samples, seed, params.clone());
            let out = vec![
                rec("median_ms", t.median_ms),
                rec("samples_per_second", t.samples_per_second),
                rec("mean_points", t.mean_points),
            ];
            let extra = serde_json::to_value(t).unwrap_or(Value::Null);
            Ok((Produced::Records(out), Vec::new(), extra))
        }
    }
}
