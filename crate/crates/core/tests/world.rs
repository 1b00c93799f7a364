use std::collections::BTreeMap;

use vmec::domain::{AreaOfInterest, GeoPoint, ResourceVector, VehicleId};
use vmec::kernel::{LatencyModel, LinkClass, LinkLatency};
use vmec::lifecycle::{ACQUISITION_MESSAGES, RELEASE_MESSAGES};
use vmec::mobility::MigrationOutcome;
use vmec::workload::{DurationDist, HostConfig, ScenarioConfig, UserSource, VehicleSource, Weighted};
use vmec::world::{run, RunOptions};

const V2B: u64 = 3_000;
const B2H: u64 = 4_000;
const UE: u64 = 5_000;
const HI: u64 = 100;
const SYS: u64 = 2_000;

/// Jitter-free latencies with distinct values per link class.
fn fixed_latency() -> LatencyModel {
    LatencyModel::new()
        .with(LinkClass::VehicleToBroker, LinkLatency::fixed(V2B))
        .with(LinkClass::BrokerToHost, LinkLatency::fixed(B2H))
        .with(LinkClass::UeToHost, LinkLatency::fixed(UE))
        .with(LinkClass::HostInternal, LinkLatency::fixed(HI))
        .with(LinkClass::SystemLevel, LinkLatency::fixed(SYS))
}

fn burst_vehicles(count: u32, residency_s: f64) -> VehicleSource {
    VehicleSource::Burst {
        count,
        at_s: 0.0,
        window_s: 0.0,
        residency: DurationDist::Constant { secs: residency_s },
    }
}

fn burst_users(count: u32, at_s: f64, session_s: f64) -> UserSource {
    UserSource::Burst {
        count,
        at_s,
        window_s: 0.0,
        session: DurationDist::Constant { secs: session_s },
    }
}

fn trace_opts() -> RunOptions {
    RunOptions { trace: true }
}

#[test]
fn single_vehicle_join_and_release_timing() {
    let mut cfg = ScenarioConfig::empty(100.0);
    cfg.latency = fixed_latency();
    cfg.vehicles = burst_vehicles(1, 50.0);
    let out = run(&cfg, 1, &trace_opts()).unwrap();
    let m = &out.metrics;
    assert_eq!(m.join_times_us[&VehicleId(0)], 3 * V2B + B2H);
    assert_eq!(m.release_times_us[&VehicleId(0)], V2B + B2H);
    assert_eq!(m.acquisitions.len(), 1);
    assert_eq!(m.acquisitions[0].messages, ACQUISITION_MESSAGES);
    assert_eq!(m.releases[0].messages, RELEASE_MESSAGES);
    assert!(m.releases[0].completed_at.is_some());

    let kinds: Vec<&str> = out.trace.iter().map(|r| r.kind.as_str()).collect();
    assert_eq!(
        kinds,
        [
            "VehicleArrive",
            "RewardRequest",
            "RewardOffer",
            "ResourcePost",
            "JoinNotify",
            "RegistrationAck",
            "JoinConfirm",
            "VehicleLeave",
            "LeavePublish",
            "LeaveAck",
            "LeaveNotify",
            "ReleaseAck",
        ]
    );
    let sizes: Vec<u32> = m.occupancy.iter().map(|o| o.pool_size).collect();
    assert_eq!(sizes, [1, 0]);
}

#[test]
fn vehicle_outside_every_area_is_not_admitted() {
    let mut cfg = ScenarioConfig::empty(10.0);
    cfg.hosts = vec![HostConfig {
        aoi: AreaOfInterest::new(GeoPoint::new(10_000.0, 0.0), 50.0),
        ..HostConfig::default()
    }];
    cfg.vehicles = burst_vehicles(3, 5.0);
    let out = run(&cfg, 2, &RunOptions::default()).unwrap();
    assert!(out.metrics.join_times_us.is_empty());
    assert!(out.metrics.acquisitions.iter().all(|s| s.aborted.is_some()));
    assert!(out.metrics.releases.is_empty());
}

#[test]
fn reward_below_minimum_is_declined() {
    let mut cfg = ScenarioConfig::empty(10.0);
    cfg.min_reward = 100;
    cfg.vehicles = burst_vehicles(2, 5.0);
    let out = run(&cfg, 3, &RunOptions::default()).unwrap();
    assert!(out.metrics.join_times_us.is_empty());
}

#[test]
fn allocation_path_timing() {
    let mut cfg = ScenarioConfig::empty(60.0);
    cfg.latency = fixed_latency();
    cfg.vehicles = burst_vehicles(1, 50.0);
    cfg.users = burst_users(1, 1.0, 10.0);
    let out = run(&cfg, 4, &trace_opts()).unwrap();
    let m = &out.metrics;
    assert_eq!(m.completed_requests, 1);
    // allocate and its ack over the vehicle radio link
    assert_eq!(m.allocation_delays_us.values().copied().collect::<Vec<_>>(), [2 * UE]);
    let kinds: Vec<&str> = out
        .trace
        .iter()
        .filter(|r| r.detail.contains("request=") || r.detail.contains("app="))
        .map(|r| r.kind.as_str())
        .collect();
    assert_eq!(
        kinds,
        ["AppRequest", "ToOrchestrator", "ToPlatformManager", "ToVim", "Allocate", "ViAck", "Release", "ViAck"]
    );
    assert_eq!(out.open_requests, 0);
}

#[test]
fn no_vehicles_falls_back_to_local() {
    let mut cfg = ScenarioConfig::empty(60.0);
    cfg.latency = fixed_latency();
    cfg.users = burst_users(5, 1.0, 10.0);
    let out = run(&cfg, 5, &RunOptions::default()).unwrap();
    assert_eq!(out.metrics.completed_requests, 5);
    assert!(out.metrics.allocation_delays_us.values().all(|d| *d == 2 * HI));
}

#[test]
fn requests_rejected_without_capacity() {
    let mut cfg = ScenarioConfig::empty(60.0);
    cfg.hosts[0].local_capacity = ResourceVector::ZERO;
    cfg.users = burst_users(4, 1.0, 10.0);
    let out = run(&cfg, 6, &RunOptions::default()).unwrap();
    assert_eq!(out.metrics.rejected_requests, 4);
    assert_eq!(out.metrics.completed_requests, 0);
    assert_eq!(out.open_requests, 0);
}

#[test]
fn vehicle_capacity_limits_remote_placements() {
    let mut cfg = ScenarioConfig::empty(60.0);
    cfg.hosts[0].local_capacity = ResourceVector::ZERO;
    cfg.vehicles = burst_vehicles(2, 50.0);
    // 4 cpu per vehicle, 1 per app
    cfg.users = burst_users(10, 1.0, 30.0);
    let out = run(&cfg, 7, &RunOptions::default()).unwrap();
    assert_eq!(out.metrics.completed_requests, 8);
    assert_eq!(out.metrics.rejected_requests, 2);
}

#[test]
fn departure_migrates_running_apps() {
    let mut cfg = ScenarioConfig::empty(200.0);
    cfg.latency = fixed_latency();
    cfg.vehicles = burst_vehicles(1, 20.0);
    cfg.users = burst_users(3, 1.0, 100.0);
    let out = run(&cfg, 8, &RunOptions::default()).unwrap();
    let m = &out.metrics;
    assert_eq!(out.migrations.len(), 3);
    assert!(out.migrations.iter().all(|e| e.outcome == MigrationOutcome::Completed));
    assert_eq!(m.migrations_completed, 3);
    assert_eq!(m.service_losses, 0);
    assert_eq!(m.total_migrations(), 3);
    assert_eq!(m.releases[0].pending_migrations.len(), 3);
    // context serialization plus one radio hop
    let expect = 83_886 + UE;
    assert!(m.service_gaps_us.iter().all(|g| *g == expect), "{:?}", m.service_gaps_us);
}

#[test]
fn migration_without_local_capacity_is_a_service_loss() {
    let mut cfg = ScenarioConfig::empty(200.0);
    cfg.hosts[0].local_capacity = ResourceVector::ZERO;
    cfg.vehicles = burst_vehicles(1, 20.0);
    cfg.users = burst_users(2, 1.0, 100.0);
    let out = run(&cfg, 9, &RunOptions::default()).unwrap();
    assert_eq!(out.metrics.service_losses, 2);
    assert!(out.migrations.iter().all(|e| e.outcome == MigrationOutcome::Cancelled));
}

#[test]
fn hard_cutoff_loses_unmigrated_apps() {
    let mut cfg = ScenarioConfig::empty(200.0);
    cfg.latency = fixed_latency();
    cfg.migration.hard_cutoff = true;
    cfg.vehicles = burst_vehicles(1, 20.0);
    cfg.users = burst_users(2, 1.0, 100.0);
    let out = run(&cfg, 10, &RunOptions::default()).unwrap();
    // The leave ack reaches the vehicle before the VIM even learns of the
    // departure, so nothing can be prepared in time.
    assert_eq!(out.metrics.service_losses, 2);
    assert_eq!(out.metrics.migrations_completed, 0);
}

#[test]
fn sessions_ending_before_departure_do_not_migrate() {
    let mut cfg = ScenarioConfig::empty(200.0);
    cfg.vehicles = burst_vehicles(1, 50.0);
    cfg.users = burst_users(3, 1.0, 10.0);
    let out = run(&cfg, 11, &RunOptions::default()).unwrap();
    assert!(out.migrations.is_empty());
    assert_eq!(out.metrics.completed_requests, 3);
}

#[test]
fn leave_during_join_is_deferred() {
    let mut cfg = ScenarioConfig::empty(10.0);
    cfg.latency = fixed_latency();
    // Residency shorter than the acquisition exchange.
    cfg.vehicles = burst_vehicles(1, 0.005);
    let out = run(&cfg, 12, &trace_opts()).unwrap();
    let m = &out.metrics;
    assert_eq!(m.acquisitions[0].messages, ACQUISITION_MESSAGES);
    assert_eq!(m.releases.len(), 1);
    let confirm = m.acquisitions[0].completed_at.unwrap();
    assert_eq!(m.releases[0].started_at, confirm);
}

#[test]
fn two_hosts_split_by_reward_order() {
    let mut cfg = ScenarioConfig::empty(30.0);
    cfg.hosts = vec![HostConfig::default(), HostConfig::default()];
    cfg.vehicles = burst_vehicles(4, 20.0);
    let out = run(&cfg, 13, &RunOptions::default()).unwrap();
    let m = &out.metrics;
    assert_eq!(m.join_times_us.len(), 4);
    // Both hosts are notified; only the chosen one counts toward the session.
    assert!(m.acquisitions.iter().all(|s| s.messages == ACQUISITION_MESSAGES));
    assert!(m.acquisitions.iter().all(|s| s.host == Some(vmec::domain::HostId(0))));
}

#[test]
fn runs_are_deterministic_per_seed() {
    let mut cfg = ScenarioConfig::empty(3600.0);
    cfg.vehicles = VehicleSource::Burst {
        count: 30,
        at_s: 0.0,
        window_s: 600.0,
        residency: DurationDist::Uniform { min_s: 300.0, max_s: 3000.0 },
    };
    cfg.users = UserSource::Burst {
        count: 200,
        at_s: 0.0,
        window_s: 3000.0,
        session: DurationDist::Exponential { mean_s: 600.0, min_s: 1.0 },
    };
    cfg.vehicle_capacity = vec![
        Weighted { weight: 1.0, value: ResourceVector::new(4, 2048, 1000) },
        Weighted { weight: 1.0, value: ResourceVector::new(8, 4096, 1000) },
    ];
    let a = run(&cfg, 42, &trace_opts()).unwrap();
    let b = run(&cfg, 42, &trace_opts()).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.trace, b.trace);
    let c = run(&cfg, 43, &RunOptions::default()).unwrap();
    assert_ne!(a.metrics.join_times_us, c.metrics.join_times_us);
    assert!(a.invariant_checks > 0);
}

#[test]
fn every_scheduler_completes_a_busy_hour() {
    let mut counts = BTreeMap::new();
    for name in ["round-robin", "best-first"] {
        let mut cfg = ScenarioConfig::empty(3600.0);
        cfg.scheduler = name.to_string();
        cfg.vehicles = VehicleSource::Burst {
            count: 20,
            at_s: 0.0,
            window_s: 600.0,
            residency: DurationDist::Uniform { min_s: 300.0, max_s: 3000.0 },
        };
        cfg.users = UserSource::Burst {
            count: 300,
            at_s: 0.0,
            window_s: 3000.0,
            session: DurationDist::Uniform { min_s: 60.0, max_s: 1200.0 },
        };
        let out = run(&cfg, 5, &RunOptions::default()).unwrap();
        counts.insert(name, out.migrations.len());
    }
    assert!(counts.values().all(|c| *c > 0), "{counts:?}");
}
