//! Scenario generation: arrival processes, hourly profiles, trace ingestion
//! and the scenario configuration.

pub mod config;
pub mod generate;
pub mod profile;
pub mod trace;

pub use config::{
    read_json, write_json, HostConfig, MigrationConfig, ScenarioConfig, Source, UserSource,
    VehicleSource,
};
pub use generate::{
    burst_times, gen_user_process, gen_vehicle_process, pick_weighted, synth_parking_trace,
    truncated_normal, DurationDist, PiecewisePoisson, UserArrival, VehicleArrival, Weighted,
};
pub use profile::HourlyProfile;
pub use trace::{
    default_start_date, derive_profiles, ingest_parking_csv, ingest_user_csv, parse_timestamp,
    read_parking_csv, read_user_csv, write_parking_csv, Ingested, ParkingRow, ParkingTrace,
};
