//! Parking-transaction and user-activity CSV traces.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use log::warn;

use super::profile::HourlyProfile;
use crate::error::{Error, Result};
use crate::scheduling::{build_residency_model, ResidencyModel};

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
];

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParkingRow {
    pub entry: NaiveDateTime,
    pub exit: NaiveDateTime,
}

impl ParkingRow {
    /// Length of stay in whole seconds, `None` if the row exits before it enters.
    pub fn stay_secs(&self) -> Option<u64> {
        let secs = (self.exit - self.entry).num_seconds();
        u64::try_from(secs).ok()
    }

    pub fn entry_second_of_day(&self) -> u64 {
        u64::from(self.entry.num_seconds_from_midnight())
    }
}

/// Rows of (entry, exit) wall-clock timestamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParkingTrace {
    rows: Vec<ParkingRow>,
}

impl ParkingTrace {
    pub fn new(rows: Vec<ParkingRow>) -> Self {
        ParkingTrace { rows }
    }

    pub fn rows(&self) -> &[ParkingRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of calendar days from the first to the last entry, inclusive.
    pub fn span_days(&self) -> u64 {
        let dates = self.rows.iter().map(|r| r.entry.date());
        match (dates.clone().min(), dates.max()) {
            (Some(lo), Some(hi)) => (hi - lo).num_days() as u64 + 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub value: T,
    pub rows: usize,
    pub skipped: usize,
}

fn check_malformed_ratio(what: &str, rows: usize, skipped: usize) -> Result<()> {
    if rows > 0 && skipped * 2 > rows {
        return Err(Error::data(format!(
            "{what}: {skipped} of {rows} rows malformed; wrong file?"
        )));
    }
    if skipped > 0 {
        warn!("{what}: skipped {skipped} of {rows} malformed rows");
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::data(format!("missing column '{name}'")))
}

/// Parse a parking CSV with header `entry_time,exit_time`. Rows that fail to
/// parse or exit before they enter are skipped and counted.
pub fn read_parking_csv<R: Read>(input: R) -> Result<Ingested<ParkingTrace>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let (ci, co) = (column(&headers, "entry_time")?, column(&headers, "exit_time")?);
    let mut rows = Vec::new();
    let (mut total, mut skipped) = (0, 0);
    for rec in rdr.records() {
        total += 1;
        let parsed = rec.ok().and_then(|r| {
            let entry = parse_timestamp(r.get(ci)?)?;
            let exit = parse_timestamp(r.get(co)?)?;
            (exit >= entry).then_some(ParkingRow { entry, exit })
        });
        match parsed {
            Some(row) => rows.push(row),
            None => skipped += 1,
        }
    }
    check_malformed_ratio("parking trace", total, skipped)?;
    Ok(Ingested {
        value: ParkingTrace::new(rows),
        rows: total,
        skipped,
    })
}

pub fn ingest_parking_csv(path: &Path) -> Result<Ingested<ParkingTrace>> {
    read_parking_csv(open(path)?)
}

pub fn write_parking_csv<W: Write>(trace: &ParkingTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["entry_time", "exit_time"])?;
    for r in trace.rows() {
        w.write_record([
            r.entry.format("%Y-%m-%dT%H:%M:%S").to_string(),
            r.exit.format("%Y-%m-%dT%H:%M:%S").to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("parking csv", e))?;
    Ok(())
}

/// Parse a user-activity CSV with header `hour,avg_sessions`. Hours missing
/// from the file get rate zero; out-of-range or duplicate hours are skipped as
/// malformed.
pub fn read_user_csv<R: Read>(input: R) -> Result<Ingested<HourlyProfile>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    let (ch, cs) = (column(&headers, "hour")?, column(&headers, "avg_sessions")?);
    let mut rates: BTreeMap<usize, f64> = BTreeMap::new();
    let (mut total, mut skipped) = (0, 0);
    for rec in rdr.records() {
        total += 1;
        let parsed = rec.ok().and_then(|r| {
            let hour: usize = r.get(ch)?.trim().parse().ok()?;
            let rate: f64 = r.get(cs)?.trim().parse().ok()?;
            (hour < 24 && rate.is_finite() && rate >= 0.0).then_some((hour, rate))
        });
        match parsed {
            Some((h, r)) if !rates.contains_key(&h) => {
                rates.insert(h, r);
            }
            _ => skipped += 1,
        }
    }
    check_malformed_ratio("user activity trace", total, skipped)?;
    let profile = HourlyProfile::new((0..24).map(|h| rates.get(&h).copied().unwrap_or(0.0)).collect())?;
    Ok(Ingested {
        value: profile,
        rows: total,
        skipped,
    })
}

pub fn ingest_user_csv(path: &Path) -> Result<Ingested<HourlyProfile>> {
    read_user_csv(open(path)?)
}

/// Hourly arrival rates averaged over the days the trace spans, plus the
/// binned residency model.
pub fn derive_profiles(trace: &ParkingTrace, bin_minutes: u32) -> Result<(HourlyProfile, ResidencyModel)> {
    if trace.is_empty() {
        return Err(Error::data("cannot derive profiles from an empty parking trace"));
    }
    let days = trace.span_days() as f64;
    let mut counts = [0u64; 24];
    for r in trace.rows() {
        counts[r.entry.hour() as usize] += 1;
    }
    let profile = HourlyProfile::new(counts.iter().map(|c| *c as f64 / days).collect())?;
    let (model, _) = build_residency_model(trace, bin_minutes)?;
    Ok((profile, model))
}

pub fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, 4).expect("valid date")
}
