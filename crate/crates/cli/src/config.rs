//! Flat `key = value` experiment configuration.
//!
//! A config is kept as an ordered string map until it is resolved into
//! [`ExperimentConfig`]. Files and flags layer onto the same map, so
//! command-line flags override file entries key by key, and the resolved
//! config writes back to the same format without loss.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crosswidth::arms::Pi4Method;
use crosswidth::experiments::{ChainSettings, Conditioning, IntensityScaling, WidthKind, LAMBDA_C_REFERENCE};
use crosswidth::Orientation;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    CrossProb,
    WidthDist,
    Pi4,
    Alpha,
    LambdaC,
    CharLength,
    WindowCheck,
    CouplingCheck,
    Verify,
    Bench,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::CrossProb => "cross-prob",
            Command::WidthDist => "width-dist",
            Command::Pi4 => "pi4",
            Command::Alpha => "alpha",
            Command::LambdaC => "lambda-c",
            Command::CharLength => "char-length",
            Command::WindowCheck => "window-check",
            Command::CouplingCheck => "coupling-check",
            Command::Verify => "verify",
            Command::Bench => "bench",
        }
    }

    pub const ALL: [Command; 11] = [
        Command::Sample,
        Command::CrossProb,
        Command::WidthDist,
        Command::Pi4,
        Command::Alpha,
        Command::LambdaC,
        Command::CharLength,
        Command::WindowCheck,
        Command::CouplingCheck,
        Command::Verify,
        Command::Bench,
    ];
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditioningMode {
    Rejection,
    Chain,
}

/// Every setting of a run. Fields that only some subcommands read are
/// still validated and echoed so a manifest replays the run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub lambda: Vec<f64>,
    pub n: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub margin: f64,
    /// Grid pitch; absent means `min(0.05, n / 400)` per scale.
    pub pitch: Option<f64>,
    pub threads: usize,
    pub output: PathBuf,
    pub orientation: Orientation,
    /// Half-width over half-height of the `cross-prob` rectangle.
    pub aspect: f64,
    pub which: WidthKind,
    pub conditioning: ConditioningMode,
    pub chains: u64,
    pub burn_in: u64,
    pub spacing: u64,
    pub pi4_method: Pi4Method,
    pub a: f64,
    pub scaling: IntensityScaling,
    pub delta: f64,
    pub n_max: f64,
    pub d_lambda: f64,
    pub lambda_c: f64,
    /// Window scale for `window-check`; absent means estimate it.
    pub alpha: Option<f64>,
    pub c_grid: Vec<f64>,
}

pub const KEYS: [&str; 25] = [
    "command",
    "lambda",
    "n",
    "samples",
    "seed",
    "margin",
    "pitch",
    "threads",
    "output",
    "orientation",
    "aspect",
    "which",
    "conditioning",
    "chains",
    "burn_in",
    "spacing",
    "pi4_method",
    "a",
    "scaling",
    "delta",
    "n_max",
    "d_lambda",
    "lambda_c",
    "alpha",
    "c_grid",
];

pub type RawConfig = BTreeMap<String, String>;

/// Parses `key = value` lines. `#` starts a comment; keys accept `-` or `_`.
pub fn parse_config_text(text: &str) -> Result<RawConfig, CliError> {
    let mut map = RawConfig::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", lineno + 1)));
        };
        let key = normalize_key(k);
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key {:?}", lineno + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("{key}: cannot parse {v:?}: {e}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse(key, x)).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Usage(format!("{key} must be a positive number, got {v}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Resolves a raw map. A missing seed is filled in by `fresh_seed`.
    pub fn from_raw(raw: &RawConfig, fresh_seed: impl FnOnce() -> u64) -> Result<Self, CliError> {
        if let Some(bad) = raw.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown key {bad:?}")));
        }
        let get = |k: &str| raw.get(k).map(String::as_str);
        let command: Command = get("command")
            .ok_or_else(|| CliError::Usage("no subcommand given".into()))?
            .parse()?;
        let enum_of = |k: &str, default: &str| -> Result<String, CliError> {
            Ok(get(k).unwrap_or(default).trim().to_ascii_lowercase())
        };
        let cfg = ExperimentConfig {
            command,
            lambda: get("lambda").map_or(Ok(Vec::new()), |v| parse_list("lambda", v))?,
            n: get("n").map_or(Ok(Vec::new()), |v| parse_list("n", v))?,
            samples: get("samples").map_or(Ok(1000), |v| parse("samples", v))?,
            seed: match get("seed") {
                Some(v) => parse("seed", v)?,
                None => fresh_seed(),
            },
            margin: get("margin").map_or(Ok(4.0), |v| parse("margin", v))?,
            pitch: get("pitch").map(|v| parse("pitch", v)).transpose()?,
            threads: get("threads").map_or(Ok(0), |v| parse("threads", v))?,
            output: PathBuf::from(get("output").unwrap_or(&format!("{}.csv", command.name()))),
            orientation: enum_of("orientation", "horizontal")?
                .parse()
                .map_err(|e| CliError::Usage(format!("orientation: {e}")))?,
            aspect: get("aspect").map_or(Ok(1.0), |v| parse("aspect", v))?,
            which: enum_of("which", "vacant")?.parse().map_err(|e| CliError::Usage(format!("which: {e}")))?,
            conditioning: match enum_of("conditioning", "rejection")?.as_str() {
                "rejection" => ConditioningMode::Rejection,
                "chain" => ConditioningMode::Chain,
                other => return Err(CliError::Usage(format!("conditioning: unknown mode {other:?}"))),
            },
            chains: get("chains").map_or(Ok(ChainSettings::default().chains), |v| parse("chains", v))?,
            burn_in: get("burn_in").map_or(Ok(ChainSettings::default().burn_in), |v| parse("burn_in", v))?,
            spacing: get("spacing").map_or(Ok(ChainSettings::default().spacing), |v| parse("spacing", v))?,
            pi4_method: enum_of("pi4_method", "pivotal")?
                .parse()
                .map_err(|e| CliError::Usage(format!("pi4_method: {e}")))?,
            a: get("a").map_or(Ok(0.2), |v| parse("a", v))?,
            scaling: match enum_of("scaling", "area")?.as_str() {
                "area" => IntensityScaling::Area,
                "linear" => IntensityScaling::Linear,
                other => return Err(CliError::Usage(format!("scaling: unknown mode {other:?}"))),
            },
            delta: get("delta").map_or(Ok(0.25), |v| parse("delta", v))?,
            n_max: get("n_max").map_or(Ok(256.0), |v| parse("n_max", v))?,
            d_lambda: get("d_lambda").map_or(Ok(0.01), |v| parse("d_lambda", v))?,
            lambda_c: get("lambda_c").map_or(Ok(LAMBDA_C_REFERENCE), |v| parse("lambda_c", v))?,
            alpha: get("alpha").map(|v| parse("alpha", v)).transpose()?,
            c_grid: get("c_grid").map_or(Ok(vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]), |v| parse_list("c_grid", v))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for &l in &self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(CliError::Usage(format!("lambda must be finite and >= 0, got {l}")));
            }
        }
        for &n in &self.n {
            positive("n", n)?;
        }
        if self.samples == 0 {
            return Err(CliError::Usage("samples must be >= 1".into()));
        }
        positive("margin", self.margin)?;
        if let Some(h) = self.pitch {
            positive("pitch", h)?;
        }
        positive("aspect", self.aspect)?;
        if self.chains == 0 {
            return Err(CliError::Usage("chains must be >= 1".into()));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(CliError::Usage(format!("a must be >= 0, got {}", self.a)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CliError::Usage(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        positive("n_max", self.n_max)?;
        positive("d_lambda", self.d_lambda)?;
        positive("lambda_c", self.lambda_c)?;
        if let Some(a) = self.alpha {
            positive("alpha", a)?;
        }
        if self.c_grid.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(CliError::Usage("c_grid entries must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn chain_settings(&self) -> ChainSettings {
        ChainSettings {
            chains: self.chains,
            burn_in: self.burn_in,
            spacing: self.spacing,
        }
    }

    pub fn conditioning(&self) -> Conditioning {
        match self.conditioning {
            ConditioningMode::Rejection => Conditioning::Rejection,
            ConditioningMode::Chain => Conditioning::Chain(self.chain_settings()),
        }
    }

    /// Every key, including defaults; `pitch` and `alpha` only when set.
    pub fn to_raw(&self) -> RawConfig {
        let mut m = RawConfig::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("command", self.command.name().into());
        put("lambda", join(&self.lambda));
        put("n", join(&self.n));
        put("samples", self.samples.to_string());
        put("seed", self.seed.to_string());
        put("margin", self.margin.to_string());
        if let Some(h) = self.pitch {
            put("pitch", h.to_string());
        }
        put("threads", self.threads.to_string());
        put("output", self.output.display().to_string());
        put("orientation", self.orientation.to_string());
        put("aspect", self.aspect.to_string());
        put("which", self.which.to_string());
        put(
            "conditioning",
            match self.conditioning {
                ConditioningMode::Rejection => "rejection",
                ConditioningMode::Chain => "chain",
            }
            .into(),
        );
        put("chains", self.chains.to_string());
        put("burn_in", self.burn_in.to_string());
        put("spacing", self.spacing.to_string());
        put("pi4_method", self.pi4_method.to_string());
        put("a", self.a.to_string());
        put(
            "scaling",
            match self.scaling {
                IntensityScaling::Area => "area",
                IntensityScaling::Linear => "linear",
            }
            .into(),
        );
        put("delta", self.delta.to_string());
        put("n_max", self.n_max.to_string());
        put("d_lambda", self.d_lambda.to_string());
        put("lambda_c", self.lambda_c.to_string());
        if let Some(a) = self.alpha {
            put("alpha", a.to_string());
        }
        put("c_grid", join(&self.c_grid));
        m
    }

    pub fn to_config_text(&self) -> String {
        self.to_raw().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(pairs: &[(&str, &str)]) -> RawConfig {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn round_trip_is_lossless() {
        let cfg = ExperimentConfig::from_raw(
            &raw(&[
                ("command", "width-dist"),
                ("lambda", "0.1,0.30000000000000004"),
                ("n", "16,32"),
                ("pitch", "0.025"),
                ("conditioning", "chain"),
                ("alpha", "0.0123"),
            ]),
            || 99,
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        let text = cfg.to_config_text();
        let back = ExperimentConfig::from_raw(&parse_config_text(&text).unwrap(), || 0).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(back.lambda[1], 0.30000000000000004);
    }

    #[test]
    fn rejects_bad_values() {
        let base = [("command", "cross-prob")];
        assert!(ExperimentConfig::from_raw(&raw(&base), || 1).is_ok());
        for bad in [("samples", "0"), ("lambda", "-1"), ("n", "0"), ("delta", "1.5"), ("bogus", "1"), ("pitch", "nan")] {
            let mut r = raw(&base);
            r.insert(bad.0.into(), bad.1.into());
            assert!(ExperimentConfig::from_raw(&r, || 1).is_err(), "{bad:?}");
        }
        assert!(parse_config_text("lambda 0.3").is_err());
        assert!(parse_config_text("nope = 1").is_err());
        assert!("frobnicate".parse::<Command>().is_err());
    }

    #[test]
    fn comments_and_dashes() {
        let m = parse_config_text("# header\nburn-in = 5  # trailing\n\nn = 8\n").unwrap();
        assert_eq!(m.get("burn_in").unwrap(), "5");
        assert_eq!(m.get("n").unwrap(), "8");
    }
}
