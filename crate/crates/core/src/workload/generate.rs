//! Arrival processes and the random distributions scenarios draw from.

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::profile::HourlyProfile;
use super::trace::{ParkingRow, ParkingTrace};
use crate::domain::ResourceVector;
use crate::error::{Error, Result};
use crate::kernel::{SimDuration, SimRng, SimTime};
use crate::scheduling::ResidencyModel;

/// Non-homogeneous Poisson arrivals whose rate is constant within each hour
/// and repeats daily. Exponential gaps are redrawn at every hour boundary,
/// which is exact because the process is memoryless.
pub struct PiecewisePoisson<'a, R: Rng> {
    profile: &'a HourlyProfile,
    rng: &'a mut R,
    horizon_s: f64,
    t: f64,
    hour: u64,
}

impl<'a, R: Rng> PiecewisePoisson<'a, R> {
    pub fn new(profile: &'a HourlyProfile, horizon: SimTime, rng: &'a mut R) -> Self {
        PiecewisePoisson {
            profile,
            rng,
            horizon_s: horizon.as_secs_f64(),
            t: 0.0,
            hour: 0,
        }
    }
}

impl<R: Rng> Iterator for PiecewisePoisson<'_, R> {
    type Item = SimTime;

    fn next(&mut self) -> Option<SimTime> {
        loop {
            let hour_end = ((self.hour + 1) * 3600) as f64;
            if self.t >= self.horizon_s {
                return None;
            }
            let rate = self.profile.rate((self.hour % 24) as usize) / 3600.0;
            if rate > 0.0 {
                let gap = Exp::new(rate).expect("positive rate").sample(self.rng);
                let cand = self.t + gap;
                if cand < hour_end {
                    self.t = cand;
                    if cand >= self.horizon_s {
                        return None;
                    }
                    return Some(SimTime::from_secs_f64(cand));
                }
            }
            self.t = hour_end;
            self.hour += 1;
        }
    }
}

/// A duration distribution in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DurationDist {
    Constant { secs: f64 },
    Uniform { min_s: f64, max_s: f64 },
    Normal {
        mean_s: f64,
        std_s: f64,
        #[serde(default = "default_min_secs")]
        min_s: f64,
    },
    Exponential {
        mean_s: f64,
        #[serde(default = "default_min_secs")]
        min_s: f64,
    },
}

fn default_min_secs() -> f64 {
    1.0
}

impl DurationDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DurationDist::Constant { secs } => secs > 0.0,
            DurationDist::Uniform { min_s, max_s } => min_s > 0.0 && max_s >= min_s,
            DurationDist::Normal { mean_s, std_s, min_s } => mean_s > 0.0 && std_s >= 0.0 && min_s > 0.0,
            DurationDist::Exponential { mean_s, min_s } => mean_s > 0.0 && min_s > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid duration distribution {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SimDuration {
        let secs = match *self {
            DurationDist::Constant { secs } => secs,
            DurationDist::Uniform { min_s, max_s } => {
                if max_s > min_s {
                    rng.random_range(min_s..max_s)
                } else {
                    min_s
                }
            }
            DurationDist::Normal { mean_s, std_s, min_s } => truncated_normal(mean_s, std_s, min_s, rng),
            DurationDist::Exponential { mean_s, min_s } => {
                Exp::new(1.0 / mean_s).expect("positive mean").sample(rng).max(min_s)
            }
        };
        SimDuration::from_secs_f64(secs)
    }
}

/// Normal(mean, std) conditioned on `x >= min`, by rejection. Falls back to
/// `min` when the acceptance region is too improbable to hit.
pub fn truncated_normal<R: Rng + ?Sized>(mean: f64, std: f64, min: f64, rng: &mut R) -> f64 {
    if std <= 0.0 {
        return mean.max(min);
    }
    let n = Normal::new(mean, std).expect("finite normal");
    for _ in 0..64 {
        let x = n.sample(rng);
        if x >= min {
            return x;
        }
    }
    min
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weighted<T> {
    pub weight: f64,
    pub value: T,
}

/// Draw from a discrete weighted list. An empty list is a config error caught
/// at validation.
pub fn pick_weighted<'a, T, R: Rng + ?Sized>(items: &'a [Weighted<T>], rng: &mut R) -> &'a T {
    if items.len() == 1 {
        return &items[0].value;
    }
    let total: f64 = items.iter().map(|w| w.weight).sum();
    let mut x = rng.random_range(0.0..total);
    for w in items {
        if x < w.weight {
            return &w.value;
        }
        x -= w.weight;
    }
    &items[items.len() - 1].value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleArrival {
    pub arrival: SimTime,
    pub residency: SimDuration,
    pub capacity: ResourceVector,
}

/// Vehicle arrivals from `profile`, each staying a truncated-Gaussian
/// residency drawn from the bin of its arrival time.
pub fn gen_vehicle_process<'a, R: Rng>(
    profile: &'a HourlyProfile,
    residency: &'a ResidencyModel,
    capacities: &'a [Weighted<ResourceVector>],
    min_residency: SimDuration,
    horizon: SimTime,
    rng: &'a mut R,
) -> Vec<VehicleArrival> {
    let arrivals: Vec<SimTime> = PiecewisePoisson::new(profile, horizon, rng).collect();
    arrivals
        .into_iter()
        .map(|arrival| {
            let bin = residency.bin_for(arrival);
            let stay = truncated_normal(bin.mean_s, bin.std_s, min_residency.as_secs_f64(), rng);
            VehicleArrival {
                arrival,
                residency: SimDuration::from_secs_f64(stay),
                capacity: *pick_weighted(capacities, rng),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserArrival {
    pub arrival: SimTime,
    pub session: SimDuration,
    pub demand: ResourceVector,
}

/// User arrivals from `profile`; each yields one application request.
pub fn gen_user_process<R: Rng>(
    profile: &HourlyProfile,
    session: &DurationDist,
    demands: &[Weighted<ResourceVector>],
    horizon: SimTime,
    rng: &mut R,
) -> Vec<UserArrival> {
    let arrivals: Vec<SimTime> = PiecewisePoisson::new(profile, horizon, rng).collect();
    arrivals
        .into_iter()
        .map(|arrival| UserArrival {
            arrival,
            session: session.sample(rng),
            demand: *pick_weighted(demands, rng),
        })
        .collect()
}

/// `count` arrival instants spread uniformly over `[at, at + window)`, sorted.
/// A zero window puts every arrival at `at`.
pub fn burst_times<R: Rng>(count: u32, at: SimTime, window: SimDuration, rng: &mut R) -> Vec<SimTime> {
    let mut out: Vec<SimTime> = (0..count)
        .map(|_| {
            if window.0 == 0 {
                at
            } else {
                at + SimDuration(rng.random_range(0..window.0))
            }
        })
        .collect();
    out.sort();
    out
}

/// Synthesize a multi-day parking trace from arrival and residency models.
pub fn synth_parking_trace(
    profile: &HourlyProfile,
    residency: &ResidencyModel,
    min_residency: SimDuration,
    days: u32,
    start: NaiveDate,
    rng: &mut SimRng,
) -> ParkingTrace {
    let horizon = SimTime::from_secs(u64::from(days) * 86_400);
    let cap = [Weighted {
        weight: 1.0,
        value: ResourceVector::ZERO,
    }];
    let midnight = start.and_hms_opt(0, 0, 0).expect("midnight");
    let rows = gen_vehicle_process(profile, residency, &cap, min_residency, horizon, rng)
        .into_iter()
        .map(|v| {
            let entry = midnight + chrono::Duration::seconds(v.arrival.as_secs() as i64);
            let stay = v.residency.as_secs_f64().round() as i64;
            ParkingRow {
                entry,
                exit: entry + chrono::Duration::seconds(stay),
            }
        })
        .collect();
    ParkingTrace::new(rows)
}
