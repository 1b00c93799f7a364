//! Command-line front end. [`main`] returns the process exit code: 0 on
//! success, 1 for usage, configuration and I/O errors, 2 when a run trips a
//! simulation invariant.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate_latency, fit_allocation_increment, fit_join_increment, CalibrationTargets};
use crate::error::{Error, Result};
use crate::experiments::{compare_schedulers, parse_vary, seed_range, sweep};
use crate::kernel::rng::{RngStreams, VEHICLES};
use crate::kernel::SimDuration;
use crate::output::{write_comparison, write_run, write_sweep};
use crate::scheduling::residency::DEFAULT_BIN_MINUTES;
use crate::scheduling::ResidencyModel;
use crate::workload::{
    default_start_date, derive_profiles, read_json, read_parking_csv, read_user_csv, synth_parking_trace,
    write_json, write_parking_csv, HourlyProfile, ScenarioConfig,
};
use crate::world::{run, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "vmec", version, about = "Vehicular MEC resource-pool simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario with one seed.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write events.csv with every processed event.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a grid of config overrides over several seeds.
    Sweep {
        #[command(flatten)]
        seeds: SeedArgs,
        /// `KEY=V1,V2,...` with a dotted config path; repeat for a grid.
        #[arg(long, required = true)]
        vary: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Migrations per hour under several schedulers.
    CompareSchedulers {
        #[command(flatten)]
        seeds: SeedArgs,
        #[arg(long, value_delimiter = ',', default_value = "best-first,round-robin,residency")]
        schedulers: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive arrival and residency profiles from a parking CSV.
    PreprocessParking {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_MINUTES)]
        bin_minutes: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive an hourly user profile from a user-activity CSV.
    PreprocessUsers {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic parking CSV from parking profiles.
    GenTraces {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        days: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the latency model to join/release and congestion targets.
    Calibrate {
        /// Burst-arrival scenario for join and release timing.
        #[arg(long)]
        protocol: PathBuf,
        /// Burst-request scenario for allocation delay.
        #[arg(long)]
        allocation: PathBuf,
        #[arg(long, default_value_t = 13.0)]
        join_ms: f64,
        #[arg(long, default_value_t = 7.0)]
        release_ms: f64,
        #[arg(long, default_value_t = 50)]
        join_vehicles: u32,
        #[arg(long, default_value_t = 40.0)]
        congested_join_ms: f64,
        #[arg(long, default_value_t = 300)]
        requests: u32,
        #[arg(long, default_value_t = 20)]
        cars: u32,
        #[arg(long, default_value_t = 40.0)]
        allocation_ms: f64,
        #[arg(long, default_value_t = 10)]
        seeds: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of seeds.
    #[arg(long, default_value_t = 10)]
    seeds: u32,
    /// First seed; defaults to the scenario's seed.
    #[arg(long)]
    seed_base: Option<u64>,
}

impl SeedArgs {
    fn load(&self) -> Result<(ScenarioConfig, Vec<u64>)> {
        let cfg = ScenarioConfig::load(&self.config)?;
        if self.seeds == 0 {
            return Err(Error::config("--seeds must be at least 1"));
        }
        let seeds = seed_range(self.seed_base.unwrap_or(cfg.seed), self.seeds);
        Ok((cfg, seeds))
    }
}

/// Output of `preprocess-parking` and input of `gen-traces`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParkingProfiles {
    pub arrivals: HourlyProfile,
    pub residency: ResidencyModel,
    #[serde(default = "default_min_residency")]
    pub min_residency_s: f64,
}

fn default_min_residency() -> f64 {
    60.0
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    ensure_parent(path)?;
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    write_json(path, value)
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate { config, seed, trace, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seed);
            let result = run(&cfg, seed, &RunOptions { trace })?;
            info!(
                "seed {seed}: {} events, {} migrations",
                result.metrics.events_processed,
                result.migrations.len()
            );
            write_run(&out, &result, trace)
        }
        Command::Sweep { seeds, vary, out } => {
            let (cfg, seeds) = seeds.load()?;
            let vary = vary.iter().map(|v| parse_vary(v)).collect::<Result<Vec<_>>>()?;
            let points = sweep(&cfg, &vary, &seeds)?;
            write_sweep(&out, &points)
        }
        Command::CompareSchedulers { seeds, schedulers, out } => {
            let (cfg, seeds) = seeds.load()?;
            let results = compare_schedulers(&cfg, &schedulers, &seeds)?;
            for r in &results {
                info!("{}: peak hour {}, totals {:?}", r.scheduler, r.peak_hour(), r.totals);
            }
            write_comparison(&out, &results)
        }
        Command::PreprocessParking { input, bin_minutes, out } => {
            let ingested = read_parking_csv(open(&input)?)?;
            if ingested.skipped > 0 {
                log::warn!("{}: skipped {} malformed rows", input.display(), ingested.skipped);
            }
            let (arrivals, residency) = derive_profiles(&ingested.value, bin_minutes)?;
            let profiles = ParkingProfiles { arrivals, residency, min_residency_s: default_min_residency() };
            write_json_file(&out, &profiles)
        }
        Command::PreprocessUsers { input, out } => {
            let ingested = read_user_csv(open(&input)?)?;
            if ingested.skipped > 0 {
                log::warn!("{}: skipped {} malformed rows", input.display(), ingested.skipped);
            }
            write_json_file(&out, &ingested.value)
        }
        Command::GenTraces { profile, days, seed, out } => {
            let p: ParkingProfiles = read_json(&profile)?;
            if days == 0 {
                return Err(Error::config("--days must be at least 1"));
            }
            let mut rng = RngStreams::new(seed).stream(VEHICLES);
            let trace = synth_parking_trace(
                &p.arrivals,
                &p.residency,
                SimDuration::from_secs_f64(p.min_residency_s),
                days,
                default_start_date(),
                &mut rng,
            );
            write_parking_csv(&trace, create(&out)?)
        }
        Command::Calibrate {
            protocol,
            allocation,
            join_ms,
            release_ms,
            join_vehicles,
            congested_join_ms,
            requests,
            cars,
            allocation_ms,
            seeds,
            out,
        } => {
            let seeds = seed_range(0, seeds.max(1));
            let mut proto = ScenarioConfig::load(&protocol)?;
            let targets = CalibrationTargets { solo_join_ms: join_ms, release_ms };
            proto.latency = calibrate_latency(&proto.latency, &targets)?;
            let model = fit_join_increment(&proto, join_vehicles, congested_join_ms, &seeds)?;
            let mut alloc = ScenarioConfig::load(&allocation)?;
            alloc.latency = model;
            let model = fit_allocation_increment(&alloc, requests, cars, allocation_ms, &seeds)?;
            write_json_file(&out, &model)
        }
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_invariant() {
                2
            } else {
                1
            }
        }
    }
}
