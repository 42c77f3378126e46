//! Argument parsing. Every config key is also a flag; flags override the
//! entries of `--config`.

use std::cell::Cell;
use std::fs;
use std::path::PathBuf;

use clap::Parser;

use crate::config::{normalize_key, parse_config_text, ExperimentConfig, RawConfig};
use crate::{fresh_seed, CliError, Command};

#[derive(Debug, Parser)]
#[command(name = "crosswidth", version, about = "Crossing and width experiments for the Poisson Boolean model")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// `key = value` file; flags given here win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Intensity, or a comma-separated list.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Half side length, or a comma-separated list.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub margin: Option<String>,
    #[arg(long)]
    pub pitch: Option<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<String>,
    #[arg(long, short)]
    pub output: Option<String>,
    #[arg(long)]
    pub orientation: Option<String>,
    #[arg(long)]
    pub aspect: Option<String>,
    /// `occupied` or `vacant`.
    #[arg(long)]
    pub which: Option<String>,
    /// `rejection` or `chain`.
    #[arg(long)]
    pub conditioning: Option<String>,
    #[arg(long)]
    pub chains: Option<String>,
    #[arg(long)]
    pub burn_in: Option<String>,
    #[arg(long)]
    pub spacing: Option<String>,
    /// `pivotal` or `annulus`.
    #[arg(long)]
    pub pi4_method: Option<String>,
    #[arg(long)]
    pub a: Option<String>,
    /// `area` or `linear` rescaling in `coupling-check`.
    #[arg(long)]
    pub scaling: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub n_max: Option<String>,
    #[arg(long)]
    pub d_lambda: Option<String>,
    #[arg(long)]
    pub lambda_c: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub c_grid: Option<String>,
}

impl Cli {
    fn flags(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("lambda", &self.lambda),
            ("n", &self.n),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("margin", &self.margin),
            ("pitch", &self.pitch),
            ("threads", &self.threads),
            ("output", &self.output),
            ("orientation", &self.orientation),
            ("aspect", &self.aspect),
            ("which", &self.which),
            ("conditioning", &self.conditioning),
            ("chains", &self.chains),
            ("burn_in", &self.burn_in),
            ("spacing", &self.spacing),
            ("pi4_method", &self.pi4_method),
            ("a", &self.a),
            ("scaling", &self.scaling),
            ("delta", &self.delta),
            ("n_max", &self.n_max),
            ("d_lambda", &self.d_lambda),
            ("lambda_c", &self.lambda_c),
            ("alpha", &self.alpha),
            ("c_grid", &self.c_grid),
        ]
    }

    /// Config file, then flags, then defaults. The second value is true
    /// when the seed had to be generated.
    pub fn resolve(&self) -> Result<(ExperimentConfig, bool), CliError> {
        let mut raw = match &self.config {
            Some(path) => parse_config_text(&fs::read_to_string(path)?)?,
            None => RawConfig::new(),
        };
        if let Some(file_cmd) = raw.get("command") {
            let file_cmd: Command = file_cmd.parse()?;
            if file_cmd != self.command {
                return Err(CliError::Usage(format!(
                    "config is for `{file_cmd}` but the subcommand is `{}`",
                    self.command
                )));
            }
        }
        raw.insert("command".into(), self.command.name().into());
        for (k, v) in self.flags() {
            if let Some(v) = v {
                raw.insert(normalize_key(k), v.clone());
            }
        }
        let generated = Cell::new(false);
        let cfg = ExperimentConfig::from_raw(&raw, || {
            generated.set(true);
            fresh_seed()
        })?;
        Ok((cfg, generated.get()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_cover_every_key() {
        let cli = Cli::parse_from(["crosswidth", "sample"]);
        let mut keys: Vec<&str> = cli.flags().into_iter().map(|(k, _)| k).collect();
        keys.push("command");
        keys.sort();
        let mut all = crate::config::KEYS.to_vec();
        all.sort();
        assert_eq!(keys, all);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("crosswidth-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        fs::write(&path, "lambda = 0.3\nsamples = 5 # few\nseed = 11\n").unwrap();
        let cli = Cli::parse_from(["crosswidth", "cross-prob", "--config", path.to_str().unwrap(), "--samples", "9", "--n", "4"]);
        let (cfg, generated) = cli.resolve().unwrap();
        assert!(!generated);
        assert_eq!((cfg.lambda.clone(), cfg.samples, cfg.seed), (vec![0.3], 9, 11));
        fs::write(&path, "command = pi4\n").unwrap();
        assert!(matches!(cli.resolve(), Err(CliError::Usage(_))));
        fs::remove_dir_all(&dir).unwrap();
    }
}
