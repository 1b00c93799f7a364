//! Multi-seed experiments: protocol timing, allocation delay and scheduler
//! comparison. Runs execute in parallel, one engine per seed, and results are
//! returned in seed order so outputs do not depend on thread scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{aggregate, RunMetrics, Stat, SummaryStats};
use crate::workload::{HourlyProfile, ScenarioConfig, UserSource, VehicleSource};
use crate::world::{run, RunOptions, RunOutput};

/// Seeds `base, base + 1, ..., base + n - 1`.
pub fn seed_range(base: u64, n: u32) -> Vec<u64> {
    (0..n as u64).map(|i| base + i).collect()
}

/// Run `cfg` once per seed in parallel; results are in `seeds` order.
pub fn run_seeds(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<RunOutput>> {
    seeds
        .par_iter()
        .map(|s| run(cfg, *s, &RunOptions::default()))
        .collect()
}

fn metrics_of(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<RunMetrics>> {
    Ok(run_seeds(cfg, seeds)?.into_iter().map(|o| o.metrics).collect())
}

/// `template` with its vehicle burst resized to `vehicles` simultaneous
/// arrivals and no users.
pub fn protocol_scenario(template: &ScenarioConfig, vehicles: u32) -> Result<ScenarioConfig> {
    let mut cfg = template.clone();
    match &mut cfg.vehicles {
        VehicleSource::Burst { count, .. } => *count = vehicles,
        _ => return Err(Error::config("protocol experiment needs a burst vehicle source")),
    }
    cfg.users = UserSource::None;
    Ok(cfg)
}

/// `template` with `cars` parked vehicles and a burst of `requests` users.
pub fn allocation_scenario(template: &ScenarioConfig, requests: u32, cars: u32) -> Result<ScenarioConfig> {
    let mut cfg = template.clone();
    match (&mut cfg.vehicles, &mut cfg.users) {
        (VehicleSource::Burst { count: c, .. }, UserSource::Burst { count: r, .. }) => {
            *c = cars;
            *r = requests;
        }
        _ => return Err(Error::config("allocation experiment needs burst vehicle and user sources")),
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolPoint {
    pub vehicles: u32,
    pub join_ms: Stat,
    pub release_ms: Stat,
}

/// Mean join and release time per simultaneous-arrival count.
pub fn protocol_sweep(template: &ScenarioConfig, counts: &[u32], seeds: &[u64]) -> Result<Vec<ProtocolPoint>> {
    let cfgs = counts
        .iter()
        .map(|n| protocol_scenario(template, *n))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = (0..cfgs.len()).flat_map(|i| seeds.iter().map(move |s| (i, *s))).collect();
    let runs: Vec<RunMetrics> = jobs
        .par_iter()
        .map(|(i, s)| run(&cfgs[*i], *s, &RunOptions::default()).map(|o| o.metrics))
        .collect::<Result<_>>()?;
    counts
        .iter()
        .zip(runs.chunks(seeds.len().max(1)))
        .map(|(n, chunk)| {
            let s = aggregate(chunk);
            let missing = || Error::data(format!("no vehicle completed the protocol with {n} arrivals"));
            Ok(ProtocolPoint {
                vehicles: *n,
                join_ms: s.join_time_ms.ok_or_else(missing)?,
                release_ms: s.release_time_ms.ok_or_else(missing)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPoint {
    pub cars: u32,
    pub requests: u32,
    pub delay_ms: Stat,
}

/// Mean allocation delay for every `(cars, requests)` pair, cars outermost.
pub fn allocation_sweep(
    template: &ScenarioConfig,
    cars: &[u32],
    requests: &[u32],
    seeds: &[u64],
) -> Result<Vec<AllocationPoint>> {
    let mut grid = Vec::new();
    for c in cars {
        for r in requests {
            grid.push((*c, *r, allocation_scenario(template, *r, *c)?));
        }
    }
    let jobs: Vec<(usize, u64)> = (0..grid.len()).flat_map(|i| seeds.iter().map(move |s| (i, *s))).collect();
    let runs: Vec<RunMetrics> = jobs
        .par_iter()
        .map(|(i, s)| run(&grid[*i].2, *s, &RunOptions::default()).map(|o| o.metrics))
        .collect::<Result<_>>()?;
    grid.iter()
        .zip(runs.chunks(seeds.len().max(1)))
        .map(|((c, r, _), chunk)| {
            let delay = aggregate(chunk)
                .allocation_delay_ms
                .ok_or_else(|| Error::data(format!("no allocation completed with {c} cars, {r} requests")))?;
            Ok(AllocationPoint { cars: *c, requests: *r, delay_ms: delay })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerComparison {
    pub scheduler: String,
    pub seeds: Vec<u64>,
    /// Total migrations of each run, in `seeds` order.
    pub totals: Vec<u64>,
    /// Migrations per hour of day, averaged over seeds.
    pub hourly_mean: Vec<f64>,
    pub summary: SummaryStats,
}

impl SchedulerComparison {
    /// Hour with the most migrations on average (earliest on ties).
    pub fn peak_hour(&self) -> usize {
        let mut best = 0;
        for (h, m) in self.hourly_mean.iter().enumerate() {
            if *m > self.hourly_mean[best] {
                best = h;
            }
        }
        best
    }
}

/// Run `cfg` under each named scheduler with the same seeds.
pub fn compare_schedulers(cfg: &ScenarioConfig, names: &[String], seeds: &[u64]) -> Result<Vec<SchedulerComparison>> {
    names
        .iter()
        .map(|name| {
            let mut c = cfg.clone();
            c.scheduler = name.clone();
            let runs = metrics_of(&c, seeds)?;
            let summary = aggregate(&runs);
            let hourly_mean = summary
                .migrations_per_hour
                .iter()
                .map(|s| s.map_or(0.0, |s| s.mean))
                .collect();
            Ok(SchedulerComparison {
                scheduler: name.clone(),
                seeds: seeds.to_vec(),
                totals: runs.iter().map(RunMetrics::total_migrations).collect(),
                hourly_mean,
                summary,
            })
        })
        .collect()
}

/// One grid point of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Dotted config path to the value applied at this point.
    pub overrides: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub summary: SummaryStats,
}

/// Parse `KEY=V1,V2,...`.
pub fn parse_vary(arg: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = arg
        .split_once('=')
        .ok_or_else(|| Error::config(format!("--vary expects KEY=V1,V2,..., got {arg:?}")))?;
    let values: Vec<String> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).map(String::from).collect();
    if key.trim().is_empty() || values.is_empty() {
        return Err(Error::config(format!("--vary expects KEY=V1,V2,..., got {arg:?}")));
    }
    Ok((key.trim().to_string(), values))
}

/// Run every combination of `vary` values (the last key varies fastest).
pub fn sweep(cfg: &ScenarioConfig, vary: &[(String, Vec<String>)], seeds: &[u64]) -> Result<Vec<SweepPoint>> {
    let mut grid: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for (key, values) in vary {
        grid = grid
            .into_iter()
            .flat_map(|point| {
                values.iter().map(move |v| {
                    let mut p = point.clone();
                    p.insert(key.clone(), v.clone());
                    p
                })
            })
            .collect();
    }
    grid.into_iter()
        .map(|overrides| {
            let mut c = cfg.clone();
            for (k, v) in &overrides {
                c = c.with_override(k, v)?;
            }
            let runs = metrics_of(&c, seeds)?;
            Ok(SweepPoint { overrides, seeds: seeds.to_vec(), summary: aggregate(&runs) })
        })
        .collect()
}

/// Hours whose rate is at least `fraction` of the profile's peak.
pub fn busy_hours(profile: &HourlyProfile, fraction: f64) -> Vec<usize> {
    let peak = profile.rates().iter().copied().fold(0.0, f64::max);
    (0..24).filter(|h| peak > 0.0 && profile.rate(*h) >= fraction * peak).collect()
}

/// Coefficient of variation (population std over mean) of `values` at `hours`.
pub fn hourly_cv(values: &[f64], hours: &[usize]) -> Option<f64> {
    let v: Vec<f64> = hours.iter().filter_map(|h| values.get(*h).copied()).collect();
    if v.is_empty() {
        return None;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
    (mean > 0.0).then(|| var.sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vary_parsing() {
        assert_eq!(
            parse_vary("scheduler=best-first, round-robin").unwrap(),
            ("scheduler".to_string(), vec!["best-first".to_string(), "round-robin".to_string()])
        );
        assert!(parse_vary("scheduler").is_err());
        assert!(parse_vary("=1,2").is_err());
        assert!(parse_vary("x=").is_err());
    }

    #[test]
    fn busy_hours_and_cv() {
        let mut rates = vec![0.0; 24];
        rates[10] = 10.0;
        rates[11] = 6.0;
        rates[12] = 4.0;
        let p = HourlyProfile::new(rates).unwrap();
        assert_eq!(busy_hours(&p, 0.5), vec![10, 11]);
        assert_eq!(hourly_cv(&[2.0, 2.0, 2.0], &[0, 1, 2]), Some(0.0));
        // mean 2, population std 1
        assert_eq!(hourly_cv(&[1.0, 3.0], &[0, 1]), Some(0.5));
        assert_eq!(hourly_cv(&[0.0, 0.0], &[0, 1]), None);
    }

    #[test]
    fn seeds() {
        assert_eq!(seed_range(5, 3), vec![5, 6, 7]);
    }
}
