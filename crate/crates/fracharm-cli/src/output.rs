//! CSV and JSON manifest writers.

use crate::checks::{Outcome, Table};
use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// 17 significant digits; round-trips every f64.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn csv_string(t: &Table) -> String {
    let mut s = t.header.join(",");
    s.push('\n');
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

pub fn write_csv(dir: &Path, t: &Table) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", t.name));
    std::fs::write(&path, csv_string(t)).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Manifest with a fixed key order. `inputs` keeps the order it was built in.
pub fn manifest(command: &str, seed: u64, inputs: &[(String, Value)], out: &Outcome, artifacts: &[String], timestamp: u64) -> Value {
    let mut inp = Map::new();
    for (k, v) in inputs {
        inp.insert(k.clone(), v.clone());
    }
    let mut res = Map::new();
    for (k, v) in &out.results {
        res.insert(k.clone(), v.clone());
    }
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": fracharm::VERSION,
        "parallel": fracharm::par::is_parallel(),
        "seed": seed,
        "inputs": Value::Object(inp),
        "results": Value::Object(res),
        "checks": out.checks.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
        "artifacts": artifacts,
        "passed": out.passed(),
        "timestamp": timestamp,
    })
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Writes every table plus `<command>.json`; returns the manifest path.
pub fn write_all(dir: &Path, command: &str, seed: u64, inputs: &[(String, Value)], out: &Outcome) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut artifacts = Vec::new();
    for t in &out.tables {
        write_csv(dir, t)?;
        artifacts.push(format!("{}.csv", t.name));
    }
    let m = manifest(command, seed, inputs, out, &artifacts, now());
    let path = dir.join(format!("{command}.json"));
    let mut text = serde_json::to_string_pretty(&m)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
