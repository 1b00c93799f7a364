//! Result files. Everything is CSV or JSON with stable column and field order.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{SchedulerComparison, SweepPoint};
use crate::kernel::trace::write_trace;
use crate::mobility::{write_hourly_counts, write_migration_log};
use crate::workload::write_json;
use crate::world::RunOutput;

pub const METRICS_FILE: &str = "metrics.json";
pub const MIGRATIONS_FILE: &str = "migrations.csv";
pub const HOURLY_FILE: &str = "migrations_per_hour.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_JSON: &str = "comparison.json";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Write one run's files into `dir`. `events.csv` is written only when
/// `with_trace` is set.
pub fn write_run(dir: &Path, out: &RunOutput, with_trace: bool) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join(METRICS_FILE), &out.metrics)?;
    write_migration_log(&out.migrations, create(&dir.join(MIGRATIONS_FILE))?)?;
    write_hourly_counts(&out.metrics.migrations_per_hour, create(&dir.join(HOURLY_FILE))?)?;
    if with_trace {
        write_trace(&out.trace, create(&dir.join(EVENTS_FILE))?)?;
    }
    Ok(())
}

pub fn write_aggregate<T: Serialize>(dir: &Path, value: &T) -> Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join(AGGREGATE_FILE), value)
}

pub fn write_sweep(dir: &Path, points: &[SweepPoint]) -> Result<()> {
    write_aggregate(dir, &points)
}

/// `comparison.csv` has one row per hour and one column of seed-averaged
/// migrations per scheduler; `comparison.json` holds the full summaries.
pub fn write_comparison(dir: &Path, results: &[SchedulerComparison]) -> Result<()> {
    ensure_dir(dir)?;
    let path = dir.join(COMPARISON_CSV);
    let mut w = csv::Writer::from_writer(create(&path)?);
    let mut header = vec!["hour".to_string()];
    header.extend(results.iter().map(|r| r.scheduler.clone()));
    w.write_record(&header)?;
    for h in 0..24 {
        let mut row = vec![h.to_string()];
        row.extend(results.iter().map(|r| format!("{:.3}", r.hourly_mean.get(h).copied().unwrap_or(0.0))));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&dir.join(COMPARISON_JSON), &results)
}
