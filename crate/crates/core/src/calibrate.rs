//! Fitting the latency model to two timing anchors and two congestion points.
//!
//! A solo join crosses three vehicle-to-broker hops and one broker-to-host hop
//! before the VIM inserts the vehicle; a release crosses one of each before
//! the VIM removes it. With per-hop bases `a` (vehicle to broker) and `b`
//! (broker to host) and no jitter, `join = 3a + b` and `release = a + b`.
//! Queuing increments are then fitted by bisection against simulated means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{allocation_scenario, protocol_scenario, run_seeds};
use crate::kernel::{LatencyModel, LinkClass};
use crate::workload::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub solo_join_ms: f64,
    pub release_ms: f64,
}

/// Jitter as a fraction of each calibrated base.
pub const JITTER_FRACTION: f64 = 0.1;

/// Per-hop bases `(vehicle_to_broker, broker_to_host)` in microseconds.
pub fn solve_hops(t: &CalibrationTargets) -> Result<(u64, u64)> {
    if !(t.solo_join_ms > 0.0 && t.release_ms > 0.0) {
        return Err(Error::config("calibration targets must be positive"));
    }
    let a = (t.solo_join_ms - t.release_ms) / 2.0;
    let b = (3.0 * t.release_ms - t.solo_join_ms) / 2.0;
    if a < 0.0 || b < 0.0 {
        return Err(Error::config(format!(
            "targets join {} ms / release {} ms need a negative per-hop latency ({a} ms, {b} ms)",
            t.solo_join_ms, t.release_ms
        )));
    }
    Ok(((a * 1000.0).round() as u64, (b * 1000.0).round() as u64))
}

/// `base` with the protocol links set from `t`. Queuing increments and the
/// other links are kept.
pub fn calibrate_latency(base: &LatencyModel, t: &CalibrationTargets) -> Result<LatencyModel> {
    let (a, b) = solve_hops(t)?;
    let mut m = base.clone();
    for (link, us) in [(LinkClass::VehicleToBroker, a), (LinkClass::BrokerToHost, b)] {
        let p = m.get_mut(link)?;
        p.base_us = us;
        p.jitter_us = (us as f64 * JITTER_FRACTION).round() as u64;
    }
    Ok(m)
}

/// Smallest integer `x` in `[0, max]` with `measure(x) >= target`, or the
/// closer of the two bracketing values. `measure` must be non-decreasing.
pub fn bisect_increment<F>(measure: F, target: f64, max: u64) -> Result<u64>
where
    F: Fn(u64) -> Result<f64>,
{
    let at_zero = measure(0)?;
    if at_zero >= target {
        return Ok(0);
    }
    let mut hi = 1;
    let mut hi_val = measure(hi)?;
    while hi_val < target {
        if hi >= max {
            return Err(Error::config(format!("target {target} not reached with an increment of {max} us")));
        }
        hi = (hi * 2).min(max);
        hi_val = measure(hi)?;
    }
    let (mut lo, mut lo_val) = (hi / 2, if hi == 1 { at_zero } else { measure(hi / 2)? });
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = measure(mid)?;
        if v >= target {
            hi = mid;
            hi_val = v;
        } else {
            lo = mid;
            lo_val = v;
        }
    }
    Ok(if target - lo_val <= hi_val - target { lo } else { hi })
}

const MAX_INCREMENT_US: u64 = 1 << 20;

fn with_increment(m: &LatencyModel, link: LinkClass, inc: u64) -> Result<LatencyModel> {
    let mut m = m.clone();
    m.get_mut(link)?.queue_increment_us = inc;
    Ok(m)
}

/// Fit the vehicle-to-broker increment so that `vehicles` simultaneous joins
/// average `target_ms` over `seeds`.
pub fn fit_join_increment(
    template: &ScenarioConfig,
    vehicles: u32,
    target_ms: f64,
    seeds: &[u64],
) -> Result<LatencyModel> {
    let link = LinkClass::VehicleToBroker;
    let measure = |inc: u64| -> Result<f64> {
        let mut cfg = protocol_scenario(template, vehicles)?;
        cfg.latency = with_increment(&template.latency, link, inc)?;
        mean_over(&cfg, seeds, |m| m.mean_join_ms())
    };
    let inc = bisect_increment(measure, target_ms, MAX_INCREMENT_US)?;
    with_increment(&template.latency, link, inc)
}

/// Fit the radio-link increment so that `requests` simultaneous requests on
/// `cars` vehicles average `target_ms` of allocation delay over `seeds`.
pub fn fit_allocation_increment(
    template: &ScenarioConfig,
    requests: u32,
    cars: u32,
    target_ms: f64,
    seeds: &[u64],
) -> Result<LatencyModel> {
    let link = LinkClass::UeToHost;
    let measure = |inc: u64| -> Result<f64> {
        let mut cfg = allocation_scenario(template, requests, cars)?;
        cfg.latency = with_increment(&template.latency, link, inc)?;
        mean_over(&cfg, seeds, |m| m.mean_allocation_ms())
    };
    let inc = bisect_increment(measure, target_ms, MAX_INCREMENT_US)?;
    with_increment(&template.latency, link, inc)
}

fn mean_over(
    cfg: &ScenarioConfig,
    seeds: &[u64],
    f: impl Fn(&crate::metrics::RunMetrics) -> Option<f64>,
) -> Result<f64> {
    let vals: Vec<f64> = run_seeds(cfg, seeds)?.iter().filter_map(|o| f(&o.metrics)).collect();
    if vals.is_empty() {
        return Err(Error::data("calibration scenario produced no samples"));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}
