//! Statistical recovery checks for the workload generators. Each returns a
//! one-line summary on success and the first violation otherwise.
//!
//! A check compares many cells (hours, bins) at once. Each family of cells is
//! held to the false-alarm rate of a single two-sided 3-sigma test, split
//! across its cells (Sidak), so a correct generator fails as rarely as one
//! 3-sigma comparison would. Summaries also report how many cells lie beyond
//! a plain 3 sigma next to the number expected by chance.

use statrs::distribution::{ContinuousCDF, Normal};
use vmec::domain::ResourceVector;
use vmec::kernel::rng::{RngStreams, USERS, VEHICLES};
use vmec::kernel::{SimDuration, SimTime};
use vmec::scheduling::{ResidencyBin, ResidencyModel};
use vmec::workload::{
    default_start_date, derive_profiles, gen_user_process, gen_vehicle_process, synth_parking_trace, DurationDist,
    HourlyProfile, Weighted,
};

pub const SIGMAS: f64 = 3.0;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Per-cell |z| bound for `cells` comparisons at a family-wise 3-sigma level.
pub fn family_bound(cells: usize) -> f64 {
    let n = std_normal();
    let alpha = 2.0 * (1.0 - n.cdf(SIGMAS));
    let per_cell = 1.0 - (1.0 - alpha).powf(1.0 / cells as f64);
    n.inverse_cdf(1.0 - per_cell / 2.0)
}

/// Standard scores of one family of cells.
struct Family {
    name: &'static str,
    z: Vec<(String, f64)>,
}

impl Family {
    fn new(name: &'static str) -> Self {
        Family { name, z: Vec::new() }
    }

    fn push(&mut self, cell: String, z: f64) {
        self.z.push((cell, z));
    }

    fn judge(&self) -> Result<String, String> {
        let bound = family_bound(self.z.len());
        let alpha = 2.0 * (1.0 - std_normal().cdf(SIGMAS));
        let beyond = self.z.iter().filter(|(_, z)| z.abs() > SIGMAS).count();
        let (cell, worst) = self
            .z
            .iter()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(c, z)| (c.as_str(), *z))
            .unwrap_or(("-", 0.0));
        let line = format!(
            "{}: {} cells, max |z| {:.2} at {cell} (bound {bound:.2}), {beyond} beyond 3 sigma ({:.2} expected)",
            self.name,
            self.z.len(),
            worst.abs(),
            alpha * self.z.len() as f64
        );
        if self.z.is_empty() || worst.abs() > bound {
            Err(line)
        } else {
            Ok(line)
        }
    }
}

fn unit_capacity() -> Vec<Weighted<ResourceVector>> {
    vec![Weighted { weight: 1.0, value: ResourceVector::new(1, 1, 1) }]
}

/// A daily arrival shape with quiet nights, a zero hour and a midday peak.
pub fn test_profile() -> HourlyProfile {
    let mut rates: Vec<f64> = (0..24).map(|h| 2.0 + 18.0 * (-((h as f64 - 13.0) / 4.0).powi(2)).exp()).collect();
    rates[3] = 0.0;
    HourlyProfile::new(rates).unwrap()
}

/// Bin means from 1 h to 5 h with a 15% spread, far enough above the
/// truncation floor that truncation is negligible.
pub fn test_residency() -> ResidencyModel {
    let bins = (0..48)
        .map(|b| {
            let mean_s = 3600.0 * (1.0 + 4.0 * b as f64 / 47.0);
            ResidencyBin { mean_s, std_s: 0.15 * mean_s, n: 0 }
        })
        .collect();
    ResidencyModel::new(30, bins).unwrap()
}

fn check_counts(name: &'static str, profile: &HourlyProfile, days: u32, arrivals: &[SimTime]) -> Result<String, String> {
    let mut counts = [0u64; 24];
    for t in arrivals {
        counts[t.hour_of_day()] += 1;
    }
    let mut fam = Family::new(name);
    for (h, n) in counts.iter().enumerate() {
        let expect = profile.rate(h) * f64::from(days);
        if expect == 0.0 {
            if *n != 0 {
                return Err(format!("{name}: hour {h} has rate 0 but {n} arrivals"));
            }
            continue;
        }
        fam.push(format!("hour {h}"), (*n as f64 - expect) / expect.sqrt());
    }
    fam.judge()
}

/// Vehicle and user arrival counts per hour of day against Poisson(rate x days).
pub fn poisson_hourly_counts(seed: u64, days: u32) -> Result<String, String> {
    let profile = test_profile();
    let horizon = SimTime::from_secs(u64::from(days) * 86_400);
    let streams = RngStreams::new(seed);

    let residency = test_residency();
    let caps = unit_capacity();
    let mut rng = streams.stream(VEHICLES);
    let vehicles = gen_vehicle_process(&profile, &residency, &caps, SimDuration::from_secs(60), horizon, &mut rng);
    let v: Vec<SimTime> = vehicles.iter().map(|a| a.arrival).collect();
    let a = check_counts("vehicles", &profile, days, &v)?;

    let mut rng = streams.stream(USERS);
    let session = DurationDist::Constant { secs: 60.0 };
    let users = gen_user_process(&profile, &session, &caps, horizon, &mut rng);
    let u: Vec<SimTime> = users.iter().map(|a| a.arrival).collect();
    let b = check_counts("users", &profile, days, &u)?;
    Ok(format!("{a}; {b}"))
}

/// Sample mean and standard deviation of generated residencies per entry bin
/// against the model, using standard errors `s / sqrt(n)` and `s / sqrt(2n)`.
pub fn gaussian_bin_means(seed: u64, days: u32) -> Result<String, String> {
    let profile = HourlyProfile::constant(30.0).unwrap();
    let model = test_residency();
    let horizon = SimTime::from_secs(u64::from(days) * 86_400);
    let mut rng = RngStreams::new(seed).stream(VEHICLES);
    let caps = unit_capacity();
    let arrivals = gen_vehicle_process(&profile, &model, &caps, SimDuration::from_secs(60), horizon, &mut rng);
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); model.bins().len()];
    for a in &arrivals {
        groups[model.bin_of(a.arrival)].push(a.residency.as_secs_f64());
    }
    let mut means = Family::new("bin means");
    let mut stds = Family::new("bin stds");
    for (b, g) in groups.iter().enumerate() {
        let bin = model.bins()[b];
        let n = g.len() as f64;
        if n < 30.0 {
            return Err(format!("bin {b}: only {n} samples"));
        }
        let mean = g.iter().sum::<f64>() / n;
        let std = (g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        means.push(format!("bin {b}"), (mean - bin.mean_s) / (bin.std_s / n.sqrt()));
        stds.push(format!("bin {b}"), (std - bin.std_s) / (bin.std_s / (2.0 * n).sqrt()));
    }
    let a = means.judge()?;
    let b = stds.judge()?;
    Ok(format!("{} stays; {a}; {b}", arrivals.len()))
}

/// Profiles derived from a synthetic trace agree with the profiles it was
/// generated from, with standard errors `sqrt(rate / days)` for hourly rates
/// and `std / sqrt(n)` for bin means.
pub fn preprocess_round_trip(seed: u64, days: u32) -> Result<String, String> {
    let profile = test_profile();
    let model = test_residency();
    let mut rng = RngStreams::new(seed).stream(VEHICLES);
    let trace = synth_parking_trace(&profile, &model, SimDuration::from_secs(60), days, default_start_date(), &mut rng);
    let (p2, m2) = derive_profiles(&trace, model.bin_minutes()).map_err(|e| e.to_string())?;
    let mut rates = Family::new("hourly rates");
    for h in 0..24 {
        let r = profile.rate(h);
        if r == 0.0 {
            if p2.rate(h) != 0.0 {
                return Err(format!("hour {h}: rate 0 recovered as {}", p2.rate(h)));
            }
            continue;
        }
        rates.push(format!("hour {h}"), (p2.rate(h) - r) / (r / f64::from(days)).sqrt());
    }
    let mut means = Family::new("bin means");
    for (b, (orig, got)) in model.bins().iter().zip(m2.bins()).enumerate() {
        if got.n >= 10 {
            means.push(format!("bin {b}"), (got.mean_s - orig.mean_s) / (orig.std_s / (got.n as f64).sqrt()));
        }
    }
    if means.z.len() < model.bins().len() / 2 {
        return Err(format!("only {} bins had enough stays", means.z.len()));
    }
    let a = rates.judge()?;
    let b = means.judge()?;
    Ok(format!("{} rows over {days} days; {a}; {b}", trace.len()))
}
