//! CSV and manifest writers.

use std::fs;
use std::path::{Path, PathBuf};

use crosswidth::experiments::EstimateRecord;
use crosswidth::Point;
use serde_json::Value;

use crate::CliError;

pub const HEADER: [&str; 9] = [
    "experiment",
    "lambda",
    "n",
    "quantity",
    "value",
    "stderr",
    "n_samples",
    "seed",
    "params_json",
];

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn num(x: f64) -> String {
    // shortest round-trip form; NaN and inf as most CSV readers spell them
    x.to_string()
}

pub fn record_row(r: &EstimateRecord) -> [String; 9] {
    [
        r.experiment.clone(),
        num(r.lambda),
        num(r.n),
        r.quantity.clone(),
        num(r.value),
        num(r.stderr),
        r.n_samples.to_string(),
        r.seed.to_string(),
        serde_json::to_string(&r.params).unwrap_or_else(|_| "null".into()),
    ]
}

pub fn write_records(path: &Path, records: &[EstimateRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(record_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points(path: &Path, points: &[Point]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y"])?;
    for p in points {
        w.write_record([num(p.x), num(p.y)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(path: &Path, manifest: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Io(e.into()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rows_follow_header_order() {
        let r = EstimateRecord::new("x", 0.36, 16.0, "p", 0.5, f64::NAN, 10, 7, json!({"b": 1, "a": [1.5]}));
        let row = record_row(&r);
        assert_eq!(row[1], "0.36");
        assert_eq!(row[5], "NaN");
        assert_eq!(row[8], r#"{"a":[1.5],"b":1}"#);
        assert_eq!(manifest_path(Path::new("d/out.csv")), PathBuf::from("d/out.csv.manifest.json"));
    }
}
