//! Residency-time statistics and the residency-predictive scheduler.
//!
//! The day is split into fixed-width bins by time of entry. Each bin carries
//! the mean and (population) standard deviation of how long vehicles entering
//! in that bin stayed parked. A vehicle's remaining residency is predicted as
//! its bin mean minus the time it has already spent in the pool.

use serde::{Deserialize, Serialize};

use super::Scheduler;
use crate::domain::{fits, Placement, ResourceVector};
use crate::error::{Error, Result};
use crate::kernel::time::SECS_PER_DAY;
use crate::kernel::{SimDuration, SimTime};
use crate::orchestration::PoolSnapshot;
use crate::workload::ParkingTrace;

pub const DEFAULT_BIN_MINUTES: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidencyBin {
    pub mean_s: f64,
    pub std_s: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ResidencyModel {
    bin_minutes: u32,
    bins: Vec<ResidencyBin>,
}

#[derive(Deserialize)]
struct RawModel {
    bin_minutes: u32,
    bins: Vec<ResidencyBin>,
}

impl TryFrom<RawModel> for ResidencyModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        ResidencyModel::new(raw.bin_minutes, raw.bins)
    }
}

impl ResidencyModel {
    pub fn new(bin_minutes: u32, bins: Vec<ResidencyBin>) -> Result<Self> {
        if bin_minutes == 0 || 1440 % bin_minutes != 0 {
            return Err(Error::config(format!(
                "bin_minutes {bin_minutes} does not divide a day"
            )));
        }
        let expected = (1440 / bin_minutes) as usize;
        if bins.len() != expected {
            return Err(Error::config(format!(
                "residency model with {bin_minutes}-minute bins needs {expected} bins, got {}",
                bins.len()
            )));
        }
        for (i, b) in bins.iter().enumerate() {
            if !(b.mean_s >= 0.0 && b.std_s >= 0.0 && b.mean_s.is_finite() && b.std_s.is_finite())
            {
                return Err(Error::config(format!("residency bin {i} has negative or non-finite stats")));
            }
        }
        Ok(ResidencyModel { bin_minutes, bins })
    }

    /// Same statistics in every bin.
    pub fn constant(bin_minutes: u32, mean_s: f64, std_s: f64) -> Result<Self> {
        let n = (1440 / bin_minutes.max(1)) as usize;
        ResidencyModel::new(bin_minutes, vec![ResidencyBin { mean_s, std_s, n: 0 }; n])
    }

    pub fn bin_minutes(&self) -> u32 {
        self.bin_minutes
    }

    pub fn bins(&self) -> &[ResidencyBin] {
        &self.bins
    }

    /// Index of the bin containing the time of day of `t`.
    pub fn bin_of(&self, t: SimTime) -> usize {
        (t.second_of_day() / (u64::from(self.bin_minutes) * 60)) as usize
    }

    pub fn bin_of_second_of_day(&self, sec: u64) -> usize {
        ((sec % SECS_PER_DAY) / (u64::from(self.bin_minutes) * 60)) as usize
    }

    pub fn bin_for(&self, t: SimTime) -> &ResidencyBin {
        &self.bins[self.bin_of(t)]
    }

    /// Sample-weighted mean over all bins that have samples.
    pub fn global_mean(&self) -> Option<f64> {
        let n: u64 = self.bins.iter().map(|b| b.n).sum();
        if n == 0 {
            return None;
        }
        Some(self.bins.iter().map(|b| b.mean_s * b.n as f64).sum::<f64>() / n as f64)
    }

    /// Multiply every bin mean by `factor`.
    pub fn scaled(&self, factor: f64) -> ResidencyModel {
        let mut m = self.clone();
        for b in &mut m.bins {
            b.mean_s *= factor;
        }
        m
    }
}

/// `max(0, mean(bin(join_time)) - (now - join_time))`.
pub fn predict_remaining(model: &ResidencyModel, join_time: SimTime, now: SimTime) -> SimDuration {
    let mean = SimDuration::from_secs_f64(model.bin_for(join_time).mean_s);
    let elapsed = now.saturating_since(join_time);
    SimDuration(mean.0.saturating_sub(elapsed.0))
}

/// Group stays by entry-time bin and compute per-bin mean and population
/// standard deviation. Bins without samples take the trace-wide mean and
/// standard deviation with `n = 0`. Returns the model and the number of rows
/// skipped because they exit before they enter.
pub fn build_residency_model(trace: &ParkingTrace, bin_minutes: u32) -> Result<(ResidencyModel, usize)> {
    if bin_minutes == 0 || 1440 % bin_minutes != 0 {
        return Err(Error::config(format!("bin_minutes {bin_minutes} does not divide a day")));
    }
    let nbins = (1440 / bin_minutes) as usize;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); nbins];
    let mut skipped = 0;
    for row in trace.rows() {
        let Some(stay) = row.stay_secs() else {
            skipped += 1;
            continue;
        };
        let bin = (row.entry_second_of_day() / (u64::from(bin_minutes) * 60)) as usize;
        groups[bin].push(stay as f64);
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::data("parking trace has no usable rows"));
    }
    let (gmean, gstd) = mean_std(&all);
    let bins = groups
        .iter()
        .map(|g| {
            if g.is_empty() {
                ResidencyBin {
                    mean_s: gmean,
                    std_s: gstd,
                    n: 0,
                }
            } else {
                let (mean_s, std_s) = mean_std(g);
                ResidencyBin {
                    mean_s,
                    std_s,
                    n: g.len() as u64,
                }
            }
        })
        .collect();
    Ok((ResidencyModel::new(bin_minutes, bins)?, skipped))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Assigns to the fitting vehicle with the longest predicted remaining
/// residency. Ties go to the earlier join time, then the lower vehicle id.
#[derive(Debug, Clone)]
pub struct ResidencyScheduler {
    model: std::sync::Arc<ResidencyModel>,
}

impl ResidencyScheduler {
    pub const NAME: &'static str = "residency";

    pub fn new(model: std::sync::Arc<ResidencyModel>) -> Self {
        ResidencyScheduler { model }
    }

    pub fn model(&self) -> &ResidencyModel {
        &self.model
    }
}

impl Scheduler for ResidencyScheduler {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn decide(&mut self, snapshot: &PoolSnapshot, demand: &ResourceVector, now: SimTime) -> Placement {
        snapshot
            .vehicles
            .iter()
            .filter(|e| fits(demand, &e.free))
            .map(|e| (predict_remaining(&self.model, e.join_time, now), e))
            .max_by(|(ra, a), (rb, b)| {
                ra.cmp(rb)
                    .then_with(|| b.join_time.cmp(&a.join_time))
                    .then_with(|| b.vehicle.cmp(&a.vehicle))
            })
            .map_or(Placement::None, |(_, e)| Placement::Remote(e.vehicle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::VehicleId;
    use crate::orchestration::{PoolEntry, PoolSnapshot};
    use crate::workload::{ParkingRow, ParkingTrace};
    use chrono::NaiveDate;
    use std::sync::Arc;

    fn row(h: u32, m: u32, stay_s: i64) -> ParkingRow {
        let entry = NaiveDate::from_ymd_opt(2024, 3, 4)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap();
        ParkingRow {
            entry,
            exit: entry + chrono::Duration::seconds(stay_s),
        }
    }

    #[test]
    fn predict_examples() {
        let m = ResidencyModel::constant(10, 3600.0, 0.0).unwrap();
        let join = SimTime::from_secs(100);
        assert_eq!(
            predict_remaining(&m, join, join + SimDuration::from_secs(1800)),
            SimDuration::from_secs(1800)
        );
        assert_eq!(
            predict_remaining(&m, join, join + SimDuration::from_secs(5000)),
            SimDuration::ZERO
        );
    }

    #[test]
    fn single_row_bin_48() {
        let trace = ParkingTrace::new(vec![row(8, 0, 7200)]);
        let (m, skipped) = build_residency_model(&trace, 10).unwrap();
        assert_eq!(skipped, 0);
        assert_eq!(m.bins()[48], ResidencyBin { mean_s: 7200.0, std_s: 0.0, n: 1 });
    }

    #[test]
    fn population_std() {
        let trace = ParkingTrace::new(vec![row(8, 1, 3600), row(8, 5, 3 * 3600)]);
        let (m, _) = build_residency_model(&trace, 10).unwrap();
        let b = m.bins()[48];
        assert_eq!((b.mean_s, b.std_s, b.n), (7200.0, 3600.0, 2));
    }

    #[test]
    fn empty_bins_fall_back_to_trace_mean() {
        let trace = ParkingTrace::new(vec![row(8, 0, 1000), row(9, 0, 3000), row(9, 5, 5000)]);
        let (m, _) = build_residency_model(&trace, 10).unwrap();
        // Independent: the trace-wide mean of all stays.
        let trace_mean = (1000.0 + 3000.0 + 5000.0) / 3.0;
        assert_eq!(m.bins()[0].n, 0);
        assert!((m.bins()[0].mean_s - trace_mean).abs() < 1e-9);
        assert!((m.bins()[100].mean_s - trace_mean).abs() < 1e-9);
        assert!((m.global_mean().unwrap() - trace_mean).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ResidencyModel::new(7, vec![]).is_err());
        assert!(ResidencyModel::new(10, vec![]).is_err());
        let json = r#"{"bin_minutes":720,"bins":[{"mean_s":1,"std_s":0,"n":1},{"mean_s":-1,"std_s":0,"n":1}]}"#;
        assert!(serde_json::from_str::<ResidencyModel>(json).is_err());
    }

    #[test]
    fn json_schema() {
        let m = ResidencyModel::constant(720, 10.0, 1.0).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["bin_minutes"], 720);
        assert_eq!(v["bins"][1]["mean_s"], 10.0);
        assert_eq!(v["bins"][1]["n"], 0);
    }

    fn entry(id: u32, seq: u64, cpu: u64, join_s: u64) -> PoolEntry {
        PoolEntry {
            vehicle: VehicleId(id),
            seq,
            free: ResourceVector::new(cpu, 1 << 20, 1 << 20),
            join_time: SimTime::from_secs(join_s),
            location: Default::default(),
        }
    }

    fn snap(entries: Vec<PoolEntry>) -> PoolSnapshot {
        PoolSnapshot {
            vehicles: entries,
            local_free: ResourceVector::ZERO,
            snapshot_time: SimTime::ZERO,
        }
    }

    #[test]
    fn argmax_of_remaining() {
        let m = ResidencyModel::constant(10, 7200.0, 0.0).unwrap();
        let mut s = ResidencyScheduler::new(Arc::new(m));
        // At t=5400: v1 joined at 0 (1800 left), v2 joined at 1800 (3600 left).
        let sn = snap(vec![entry(1, 0, 4, 0), entry(2, 1, 4, 1800)]);
        let d = ResourceVector::new(1, 0, 0);
        assert_eq!(s.decide(&sn, &d, SimTime::from_secs(5400)), Placement::Remote(VehicleId(2)));
    }

    #[test]
    fn tie_goes_to_earlier_join_then_lower_id() {
        let m = ResidencyModel::constant(10, 100.0, 0.0).unwrap();
        let mut s = ResidencyScheduler::new(Arc::new(m));
        let d = ResourceVector::new(1, 0, 0);
        // Both overdue (remaining 0); earlier join wins.
        let sn = snap(vec![entry(5, 0, 4, 20), entry(3, 1, 4, 10)]);
        assert_eq!(s.decide(&sn, &d, SimTime::from_secs(9000)), Placement::Remote(VehicleId(3)));
        let sn = snap(vec![entry(5, 0, 4, 10), entry(3, 1, 4, 10)]);
        assert_eq!(s.decide(&sn, &d, SimTime::from_secs(9000)), Placement::Remote(VehicleId(3)));
    }

    #[test]
    fn capacity_gates_prediction_ranks() {
        let m = ResidencyModel::constant(10, 7200.0, 0.0).unwrap();
        let mut s = ResidencyScheduler::new(Arc::new(m));
        let sn = snap(vec![entry(1, 0, 4, 0), entry(2, 1, 0, 3000)]);
        let d = ResourceVector::new(1, 0, 0);
        assert_eq!(s.decide(&sn, &d, SimTime::from_secs(6000)), Placement::Remote(VehicleId(1)));
        let sn = snap(vec![entry(1, 0, 0, 0)]);
        assert_eq!(s.decide(&sn, &d, SimTime::from_secs(6000)), Placement::None);
    }
}
