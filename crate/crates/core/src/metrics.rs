//! Per-run metrics and their aggregation across seeds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::domain::{AppId, VehicleId};
use crate::lifecycle::{AcquisitionSession, ReleaseSession};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySample {
    pub time_us: u64,
    pub pool_size: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub scheduler: String,
    pub events_processed: u64,
    /// Reward request sent to VIM pool insertion, per registered vehicle.
    pub join_times_us: BTreeMap<VehicleId, u64>,
    /// Leave publication to VIM pool removal, per departed vehicle.
    pub release_times_us: BTreeMap<VehicleId, u64>,
    /// First VI allocate command to its acknowledgement, per completed app.
    pub allocation_delays_us: BTreeMap<AppId, u64>,
    pub migrations_per_hour: Vec<u64>,
    pub migrations_completed: u64,
    pub migrations_cancelled: u64,
    pub completed_requests: u64,
    pub rejected_requests: u64,
    /// Applications lost because a migration could not complete.
    pub service_losses: u64,
    pub service_gaps_us: Vec<u64>,
    pub occupancy: Vec<OccupancySample>,
    pub acquisitions: Vec<AcquisitionSession>,
    pub releases: Vec<ReleaseSession>,
}

fn mean_u64<'a>(xs: impl IntoIterator<Item = &'a u64>) -> Option<f64> {
    let mut v: Vec<u64> = xs.into_iter().copied().collect();
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    Some(v.iter().map(|x| *x as f64).sum::<f64>() / v.len() as f64)
}

impl RunMetrics {
    pub fn mean_join_ms(&self) -> Option<f64> {
        mean_u64(self.join_times_us.values()).map(|x| x / 1000.0)
    }

    pub fn mean_release_ms(&self) -> Option<f64> {
        mean_u64(self.release_times_us.values()).map(|x| x / 1000.0)
    }

    pub fn mean_allocation_ms(&self) -> Option<f64> {
        mean_u64(self.allocation_delays_us.values()).map(|x| x / 1000.0)
    }

    pub fn mean_service_gap_ms(&self) -> Option<f64> {
        mean_u64(&self.service_gaps_us).map(|x| x / 1000.0)
    }

    pub fn total_migrations(&self) -> u64 {
        self.migrations_per_hour.iter().sum()
    }
}

/// Statistics of one scalar across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Half-width of the 95% Student-t confidence interval of the mean.
    pub ci95: f64,
}

impl Stat {
    /// `None` for an empty input. Values are sorted first, so the result does
    /// not depend on input order.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let mut sq: Vec<f64> = v.iter().map(|x| (x - mean).powi(2)).collect();
            sq.sort_by(f64::total_cmp);
            (sq.iter().sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let ci95 = if n > 1 {
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("dof > 0");
            t.inverse_cdf(0.975) * std / (n as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat {
            n,
            mean,
            std,
            min: v[0],
            max: v[n - 1],
            ci95,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub runs: usize,
    pub join_time_ms: Option<Stat>,
    pub release_time_ms: Option<Stat>,
    pub allocation_delay_ms: Option<Stat>,
    pub service_gap_ms: Option<Stat>,
    pub rejected_requests: Option<Stat>,
    pub total_migrations: Option<Stat>,
    pub migrations_per_hour: Vec<Option<Stat>>,
}

/// Summarize `runs`: per-run means of each metric, then their statistics
/// across runs.
pub fn aggregate(runs: &[RunMetrics]) -> SummaryStats {
    let col = |f: &dyn Fn(&RunMetrics) -> Option<f64>| -> Option<Stat> {
        Stat::of(&runs.iter().filter_map(f).collect::<Vec<_>>())
    };
    SummaryStats {
        runs: runs.len(),
        join_time_ms: col(&RunMetrics::mean_join_ms),
        release_time_ms: col(&RunMetrics::mean_release_ms),
        allocation_delay_ms: col(&RunMetrics::mean_allocation_ms),
        service_gap_ms: col(&RunMetrics::mean_service_gap_ms),
        rejected_requests: col(&|r| Some(r.rejected_requests as f64)),
        total_migrations: col(&|r| Some(r.total_migrations() as f64)),
        migrations_per_hour: (0..24)
            .map(|h| col(&|r| r.migrations_per_hour.get(h).map(|c| *c as f64)))
            .collect(),
    }
}
