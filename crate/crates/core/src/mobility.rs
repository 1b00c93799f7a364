//! Application mobility: moving applications off departing vehicles onto the
//! host's local infrastructure.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{AppId, VehicleId};
use crate::error::{Error, Result};
use crate::kernel::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MigrationOutcome {
    Pending,
    Completed,
    Cancelled,
}

/// One remote-to-local relocation triggered by a vehicle departure. The
/// destination is always the local VI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationEvent {
    pub app_id: AppId,
    pub vehicle_id: VehicleId,
    pub triggered_at: SimTime,
    pub transfer_started_at: Option<SimTime>,
    pub completed_at: Option<SimTime>,
    pub context_bytes: u64,
    pub outcome: MigrationOutcome,
}

impl MigrationEvent {
    pub fn new(app_id: AppId, vehicle_id: VehicleId, at: SimTime, context_bytes: u64) -> Self {
        MigrationEvent {
            app_id,
            vehicle_id,
            triggered_at: at,
            transfer_started_at: None,
            completed_at: None,
            context_bytes,
            outcome: MigrationOutcome::Pending,
        }
    }

    /// Interval during which the user's context was in transit.
    pub fn service_gap(&self) -> Option<SimDuration> {
        if self.outcome != MigrationOutcome::Completed {
            return None;
        }
        Some(self.completed_at?.saturating_since(self.transfer_started_at?))
    }
}

/// Serialization time of `bytes` at `rate_bps` bits per second.
pub fn transfer_time(bytes: u64, rate_bps: f64) -> SimDuration {
    SimDuration::from_secs_f64(bytes as f64 * 8.0 / rate_bps)
}

/// Number of migrations triggered in each hour of the day.
pub fn migrations_per_hour(log: &[MigrationEvent]) -> Vec<u64> {
    let mut out = vec![0; 24];
    for m in log {
        out[m.triggered_at.hour_of_day()] += 1;
    }
    out
}

#[derive(Serialize)]
struct Row {
    app_id: u32,
    vehicle_id: u32,
    triggered_us: u64,
    completed_us: Option<u64>,
    context_bytes: u64,
    outcome: MigrationOutcome,
}

/// Per-migration log with columns
/// `app_id,vehicle_id,triggered_us,completed_us,context_bytes,outcome`.
pub fn write_migration_log<W: Write>(log: &[MigrationEvent], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["app_id", "vehicle_id", "triggered_us", "completed_us", "context_bytes", "outcome"])?;
    for m in log {
        w.serialize(Row {
            app_id: m.app_id.0,
            vehicle_id: m.vehicle_id.0,
            triggered_us: m.triggered_at.as_micros(),
            completed_us: m.completed_at.map(SimTime::as_micros),
            context_bytes: m.context_bytes,
            outcome: m.outcome,
        })?;
    }
    w.flush().map_err(|e| Error::io("migrations.csv", e))
}

/// Hourly counts with columns `hour,count`.
pub fn write_hourly_counts<W: Write>(counts: &[u64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "count"])?;
    for (h, c) in counts.iter().enumerate() {
        w.write_record([h.to_string(), c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("migrations_per_hour.csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_mebibyte_at_100_mbit() {
        // 8 * 2^20 / 1e8 s = 83.886 ms
        assert_eq!(transfer_time(1 << 20, 100e6), SimDuration(83_886));
        assert_eq!(transfer_time(0, 100e6), SimDuration::ZERO);
    }

    #[test]
    fn hourly_counts() {
        assert_eq!(migrations_per_hour(&[]), vec![0; 24]);
        let at = SimTime::from_secs(12 * 3600 + 1800);
        let log: Vec<_> = (0..3).map(|i| MigrationEvent::new(AppId(i), VehicleId(1), at, 0)).collect();
        let h = migrations_per_hour(&log);
        assert_eq!(h[12], 3);
        assert_eq!(h.iter().sum::<u64>(), 3);
    }

    #[test]
    fn log_columns() {
        let mut m = MigrationEvent::new(AppId(4), VehicleId(2), SimTime(10), 1024);
        m.outcome = MigrationOutcome::Completed;
        m.transfer_started_at = Some(SimTime(20));
        m.completed_at = Some(SimTime(50));
        assert_eq!(m.service_gap(), Some(SimDuration(30)));
        let mut buf = Vec::new();
        write_migration_log(&[m], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "app_id,vehicle_id,triggered_us,completed_us,context_bytes,outcome\n4,2,10,50,1024,completed\n"
        );
    }
}
