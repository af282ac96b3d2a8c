//! On-disk result bundle: CSV tables plus `summary.json`.

use std::fs;
use std::io;
use std::path::Path;
use std::time::Duration;

use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::scenario::Outcome;

pub const SUMMARY: &str = "summary.json";

fn metadata(config: &ScenarioConfig, wall: Duration) -> Value {
    json!({
        "tool": "nhtdse",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": config.kind.as_str(),
        "config_hash": config.hash(),
        "seed": config.seed,
        "wall_time_s": wall.as_secs_f64(),
    })
}

fn write_summary(dir: &Path, summary: &Value) -> io::Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(dir.join(SUMMARY), text + "\n")
}

/// Writes every table and a successful summary.
pub fn write_success(dir: &Path, config: &ScenarioConfig, outcome: &Outcome, wall: Duration) -> io::Result<Value> {
    fs::create_dir_all(dir)?;
    for table in &outcome.tables {
        fs::write(dir.join(&table.name), &table.bytes)?;
    }
    let mut summary = metadata(config, wall);
    summary["status"] = json!("ok");
    summary["error"] = Value::Null;
    summary["tables"] = json!(outcome.tables.iter().map(|t| t.name.as_str()).collect::<Vec<_>>());
    summary["results"] = outcome.results.clone();
    write_summary(dir, &summary)?;
    Ok(summary)
}

/// Writes only a summary naming the numerical failure.
pub fn write_failure(
    dir: &Path,
    config: &ScenarioConfig,
    error: &nhtdse_core::Error,
    wall: Duration,
) -> io::Result<Value> {
    fs::create_dir_all(dir)?;
    let mut summary = metadata(config, wall);
    summary["status"] = json!("numerical-error");
    summary["error"] = json!({ "name": error.name(), "message": error.to_string() });
    summary["tables"] = json!([]);
    summary["results"] = Value::Null;
    write_summary(dir, &summary)?;
    Ok(summary)
}
