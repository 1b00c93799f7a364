//! Scenario configuration, read from and written to JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::generate::{DurationDist, Weighted};
use super::profile::HourlyProfile;
use crate::domain::{AreaOfInterest, GeoPoint, ResourceVector, DEFAULT_CONTEXT_BYTES};
use crate::error::{Error, Result};
use crate::kernel::LatencyModel;
use crate::scheduling::ResidencyModel;

/// A value given inline or as a path to a JSON file, relative to the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

impl<T: DeserializeOwned + Clone> Source<T> {
    pub fn resolve(&self, base_dir: &Path) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v.clone()),
            Source::Path(p) => read_json(&base_dir.join(p)),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostConfig {
    pub aoi: AreaOfInterest,
    #[serde(default = "default_reward")]
    pub reward_offer: i64,
    #[serde(default = "default_local_capacity")]
    pub local_capacity: ResourceVector,
}

fn default_reward() -> i64 {
    10
}

/// Large enough that migrations always find room.
fn default_local_capacity() -> ResourceVector {
    ResourceVector::new(1_000_000, 1_000_000_000, 1_000_000_000)
}

impl Default for HostConfig {
    fn default() -> Self {
        HostConfig {
            aoi: AreaOfInterest::new(GeoPoint::default(), 500.0),
            reward_offer: default_reward(),
            local_capacity: default_local_capacity(),
        }
    }
}

/// Where parked vehicles come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VehicleSource {
    /// Poisson arrivals with binned Gaussian residency.
    Profile {
        arrivals: Source<HourlyProfile>,
        residency: Source<ResidencyModel>,
        #[serde(default = "default_min_residency")]
        min_residency_s: f64,
    },
    /// Replay a parking CSV; the first entry's midnight is simulation time 0.
    Trace { path: String },
    /// `count` vehicles arriving uniformly within `window_s` of `at_s`.
    Burst {
        count: u32,
        #[serde(default)]
        at_s: f64,
        #[serde(default)]
        window_s: f64,
        residency: DurationDist,
    },
    None,
}

fn default_min_residency() -> f64 {
    60.0
}

/// Where application requests come from. Each user issues exactly one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UserSource {
    Profile {
        arrivals: Source<HourlyProfile>,
        session: DurationDist,
    },
    /// Hourly activity CSV (`hour,avg_sessions`).
    Trace { path: String, session: DurationDist },
    Burst {
        count: u32,
        #[serde(default)]
        at_s: f64,
        #[serde(default)]
        window_s: f64,
        session: DurationDist,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationConfig {
    #[serde(default = "default_context_bytes")]
    pub context_bytes: u64,
    #[serde(default = "default_transfer_rate")]
    pub transfer_rate_bps: f64,
    /// Drop a departing vehicle as soon as its leave is acknowledged instead
    /// of waiting for its applications to move off.
    #[serde(default)]
    pub hard_cutoff: bool,
}

fn default_context_bytes() -> u64 {
    DEFAULT_CONTEXT_BYTES
}

fn default_transfer_rate() -> f64 {
    100e6
}

impl Default for MigrationConfig {
    fn default() -> Self {
        MigrationConfig {
            context_bytes: default_context_bytes(),
            transfer_rate_bps: default_transfer_rate(),
            hard_cutoff: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub horizon_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub latency: LatencyModel,
    #[serde(default = "default_hosts")]
    pub hosts: Vec<HostConfig>,
    /// Vehicles park uniformly inside this disk.
    #[serde(default = "default_parking_lot")]
    pub parking_lot: AreaOfInterest,
    pub vehicles: VehicleSource,
    pub users: UserSource,
    #[serde(default = "default_vehicle_capacity")]
    pub vehicle_capacity: Vec<Weighted<ResourceVector>>,
    #[serde(default = "default_app_demand")]
    pub app_demand: Vec<Weighted<ResourceVector>>,
    #[serde(default = "default_scheduler")]
    pub scheduler: String,
    /// Predictor for the residency scheduler. Defaults to the vehicle
    /// source's own residency model when that is a profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residency_model: Option<Source<ResidencyModel>>,
    #[serde(default)]
    pub migration: MigrationConfig,
    /// Multiplier from user-activity rates to application request rates.
    #[serde(default = "one")]
    pub user_rate_scale: f64,
    /// Smallest reward a vehicle accepts.
    #[serde(default)]
    pub min_reward: i64,
    #[serde(default = "yes")]
    pub check_invariants: bool,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_hosts() -> Vec<HostConfig> {
    vec![HostConfig::default()]
}

fn default_parking_lot() -> AreaOfInterest {
    AreaOfInterest::new(GeoPoint::default(), 100.0)
}

fn default_vehicle_capacity() -> Vec<Weighted<ResourceVector>> {
    vec![Weighted {
        weight: 1.0,
        value: ResourceVector::new(4, 2048, 1000),
    }]
}

fn default_app_demand() -> Vec<Weighted<ResourceVector>> {
    vec![Weighted {
        weight: 1.0,
        value: ResourceVector::new(1, 256, 100),
    }]
}

fn default_scheduler() -> String {
    "round-robin".to_string()
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    /// A scenario with defaults everywhere and no workload.
    pub fn empty(horizon_s: f64) -> Self {
        ScenarioConfig {
            horizon_s,
            seed: 0,
            latency: LatencyModel::default(),
            hosts: default_hosts(),
            parking_lot: default_parking_lot(),
            vehicles: VehicleSource::None,
            users: UserSource::None,
            vehicle_capacity: default_vehicle_capacity(),
            app_demand: default_app_demand(),
            scheduler: default_scheduler(),
            residency_model: None,
            migration: MigrationConfig::default(),
            user_rate_scale: 1.0,
            min_reward: 0,
            check_invariants: true,
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = read_json(path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_s.is_finite() && self.horizon_s >= 0.0) {
            return Err(Error::config("horizon_s must be a non-negative number"));
        }
        self.latency.validate()?;
        if self.hosts.iter().any(|h| !h.aoi.is_valid()) {
            return Err(Error::config("every host needs an area of interest with radius > 0"));
        }
        if !self.parking_lot.is_valid() {
            return Err(Error::config("parking_lot radius must be > 0"));
        }
        check_weights("vehicle_capacity", &self.vehicle_capacity)?;
        check_weights("app_demand", &self.app_demand)?;
        if self.vehicle_capacity.iter().any(|w| w.value.is_zero()) {
            return Err(Error::config("vehicles must offer a non-zero capacity"));
        }
        if !(self.migration.transfer_rate_bps > 0.0 && self.migration.transfer_rate_bps.is_finite()) {
            return Err(Error::config("migration.transfer_rate_bps must be positive"));
        }
        if !(self.user_rate_scale >= 0.0 && self.user_rate_scale.is_finite()) {
            return Err(Error::config("user_rate_scale must be non-negative"));
        }
        match &self.vehicles {
            VehicleSource::Burst { residency, at_s, window_s, .. } => {
                residency.validate()?;
                check_window(*at_s, *window_s)?;
            }
            VehicleSource::Profile { min_residency_s, .. } if *min_residency_s < 0.0 => {
                return Err(Error::config("min_residency_s must be non-negative"));
            }
            _ => {}
        }
        match &self.users {
            UserSource::Profile { session, .. } | UserSource::Trace { session, .. } => session.validate()?,
            UserSource::Burst { session, at_s, window_s, .. } => {
                session.validate()?;
                check_window(*at_s, *window_s)?;
            }
            UserSource::None => {}
        }
        Ok(())
    }

    /// Residency model for the predictive scheduler, if one can be found.
    pub fn resolve_residency_model(&self) -> Result<Option<ResidencyModel>> {
        if let Some(src) = &self.residency_model {
            return src.resolve(&self.base_dir).map(Some);
        }
        match &self.vehicles {
            VehicleSource::Profile { residency, .. } => residency.resolve(&self.base_dir).map(Some),
            _ => Ok(None),
        }
    }

    /// Return a copy with the field at dotted `path` replaced by `value`.
    /// `value` is parsed as JSON when possible and taken as a string
    /// otherwise, so `scheduler=best-first` and `users.count=50` both work.
    pub fn with_override(&self, path: &str, value: &str) -> Result<Self> {
        let mut doc = serde_json::to_value(self)?;
        let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        let mut node = &mut doc;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            let last = i + 1 == keys.len();
            node = match node {
                Value::Object(map) => {
                    if last {
                        map.insert((*key).to_string(), parsed);
                        break;
                    }
                    map.get_mut(*key)
                        .ok_or_else(|| Error::config(format!("no config key '{path}'")))?
                }
                Value::Array(items) => {
                    let idx: usize = key
                        .parse()
                        .map_err(|_| Error::config(format!("'{key}' in '{path}' is not an index")))?;
                    let slot = items
                        .get_mut(idx)
                        .ok_or_else(|| Error::config(format!("index {idx} out of range in '{path}'")))?;
                    if last {
                        *slot = parsed;
                        break;
                    }
                    slot
                }
                _ => return Err(Error::config(format!("cannot descend into '{key}' of '{path}'"))),
            };
        }
        let mut cfg: ScenarioConfig = serde_json::from_value(doc)
            .map_err(|e| Error::config(format!("override {path}={value}: {e}")))?;
        cfg.base_dir = self.base_dir.clone();
        cfg.validate()?;
        Ok(cfg)
    }
}

fn check_weights<T>(what: &str, items: &[Weighted<T>]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::config(format!("{what} must list at least one entry")));
    }
    if items.iter().any(|w| !(w.weight.is_finite() && w.weight > 0.0)) {
        return Err(Error::config(format!("{what} weights must be positive")));
    }
    Ok(())
}

fn check_window(at_s: f64, window_s: f64) -> Result<()> {
    if at_s >= 0.0 && window_s >= 0.0 && at_s.is_finite() && window_s.is_finite() {
        Ok(())
    } else {
        Err(Error::config("burst at_s and window_s must be non-negative"))
    }
}
