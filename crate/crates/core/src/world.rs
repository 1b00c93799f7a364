//! The simulated system: vehicles, broker, hosts (VIM, AMS, local VI), users
//! and the system-level entities, driven by the event engine.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use log::{debug, warn};
use rand::Rng;

use crate::broker::{Broker, Publication, PublicationKind};
use crate::domain::{
    fits, AppId, AppInstance, AppState, FarEdgeNode, GeoPoint, HostId, Placement, ResourceVector,
    UeId, UserEquipment, VehicleId, VehicleState,
};
use crate::error::{Error, Result};
use crate::kernel::rng::{LATENCY, USERS, VEHICLES};
use crate::kernel::{Engine, LinkClass, RngStreams, SimDuration, SimEvent, SimRng, SimTime, TraceRecord};
use crate::lifecycle::{
    apply_vi_command, AbortReason, AcquisitionPhase, AcquisitionSession, NackReason, ReleasePhase,
    ReleaseSession, ViCommand, ViReply,
};
use crate::metrics::{OccupancySample, RunMetrics};
use crate::mobility::{migrations_per_hour, transfer_time, MigrationEvent, MigrationOutcome};
use crate::orchestration::{
    resolve_placement, select_host, InstantiationRequest, RequestPhase, ViTarget, Vim,
};
use crate::scheduling::{Scheduler, SchedulerParams, SchedulerRegistry};
use crate::workload::{
    burst_times, gen_user_process, gen_vehicle_process, ingest_parking_csv, ingest_user_csv,
    pick_weighted, ScenarioConfig, UserSource, VehicleSource,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Record one trace row per processed event.
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub migrations: Vec<MigrationEvent>,
    pub trace: Vec<TraceRecord>,
    /// Requests still travelling when the horizon was reached.
    pub open_requests: usize,
    /// Number of times the full invariant set was evaluated.
    pub invariant_checks: u64,
}

/// Run `cfg` with `seed` using the built-in schedulers.
pub fn run(cfg: &ScenarioConfig, seed: u64, opts: &RunOptions) -> Result<RunOutput> {
    run_with_registry(cfg, seed, opts, &SchedulerRegistry::with_builtins())
}

pub fn run_with_registry(
    cfg: &ScenarioConfig,
    seed: u64,
    opts: &RunOptions,
    registry: &SchedulerRegistry,
) -> Result<RunOutput> {
    cfg.validate()?;
    let mut engine = Engine::new();
    let mut world = World::build(cfg, seed, opts, registry, &mut engine)?;
    let horizon = SimTime::from_secs_f64(cfg.horizon_s);
    engine.run_until(horizon, |eng, ev| world.handle(eng, ev))?;
    world.finish(&engine)
}

#[derive(Debug, Clone, PartialEq)]
enum Msg {
    RewardRequest { v: VehicleId },
    RewardOffer { v: VehicleId, offers: Vec<(HostId, i64)> },
    ResourcePost { v: VehicleId, host: HostId },
    JoinNotify { v: VehicleId, host: HostId },
    RegistrationAck { v: VehicleId, host: HostId },
    JoinConfirm { v: VehicleId, host: HostId },
    LeavePublish { v: VehicleId },
    LeaveAck { v: VehicleId },
    LeaveNotify { v: VehicleId, host: HostId },
    ReleaseAck { v: VehicleId, host: HostId },
    AppRequest { req: usize },
    ToOrchestrator { req: usize },
    ToPlatformManager { req: usize, host: HostId },
    ToVim { req: usize, host: HostId },
    ViCmd { host: HostId, target: ViTarget, cmd: ViCommand },
    ViReply { host: HostId, target: ViTarget, cmd: ViCommand, reply: ViReply },
    MigrationNotice { host: HostId, app: AppId, v: VehicleId },
    ContextTransfer { host: HostId, app: AppId },
}

impl Msg {
    fn kind(&self) -> &'static str {
        match self {
            Msg::RewardRequest { .. } => "RewardRequest",
            Msg::RewardOffer { .. } => "RewardOffer",
            Msg::ResourcePost { .. } => "ResourcePost",
            Msg::JoinNotify { .. } => "JoinNotify",
            Msg::RegistrationAck { .. } => "RegistrationAck",
            Msg::JoinConfirm { .. } => "JoinConfirm",
            Msg::LeavePublish { .. } => "LeavePublish",
            Msg::LeaveAck { .. } => "LeaveAck",
            Msg::LeaveNotify { .. } => "LeaveNotify",
            Msg::ReleaseAck { .. } => "ReleaseAck",
            Msg::AppRequest { .. } => "AppRequest",
            Msg::ToOrchestrator { .. } => "ToOrchestrator",
            Msg::ToPlatformManager { .. } => "ToPlatformManager",
            Msg::ToVim { .. } => "ToVim",
            Msg::ViCmd { cmd, .. } => cmd.kind(),
            Msg::ViReply { reply: ViReply::Ack, .. } => "ViAck",
            Msg::ViReply { reply: ViReply::Nack(_), .. } => "ViNack",
            Msg::MigrationNotice { .. } => "MigrationNotice",
            Msg::ContextTransfer { .. } => "ContextTransfer",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Ev {
    VehicleArrive(VehicleId),
    VehicleLeave(VehicleId),
    UserArrive(UeId),
    SessionEnd(UeId),
    Deliver { link: LinkClass, msg: Msg },
}

struct VehicleRt {
    node: FarEdgeNode,
    demands: BTreeMap<AppId, ResourceVector>,
    host: Option<HostId>,
    acquisition: Option<usize>,
    release: Option<usize>,
    leave_requested: bool,
    leave_acked: bool,
}

struct LocalVi {
    capacity: ResourceVector,
    allocated: ResourceVector,
    apps: BTreeMap<AppId, ResourceVector>,
}

struct HostRt {
    vim: Vim,
    scheduler: Box<dyn Scheduler>,
    local: LocalVi,
}

struct AppRt {
    inst: AppInstance,
    request: usize,
    host: Option<HostId>,
    terminate_requested: bool,
    migration: Option<usize>,
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    trace_on: bool,
    latency_rng: SimRng,
    in_flight: [u32; 5],
    broker: Broker,
    hosts: BTreeMap<HostId, HostRt>,
    vehicles: BTreeMap<VehicleId, VehicleRt>,
    present: BTreeSet<VehicleId>,
    apps: BTreeMap<AppId, AppRt>,
    live_apps: BTreeSet<AppId>,
    ues: Vec<UserEquipment>,
    requests: Vec<InstantiationRequest>,
    acquisitions: Vec<AcquisitionSession>,
    releases: Vec<ReleaseSession>,
    migrations: Vec<MigrationEvent>,
    metrics: RunMetrics,
    trace: Vec<TraceRecord>,
    invariant_checks: u64,
}

fn random_point_in<R: Rng>(center: GeoPoint, radius: f64, rng: &mut R) -> GeoPoint {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    GeoPoint::new(center.x + r * theta.cos(), center.y + r * theta.sin())
}

impl<'a> World<'a> {
    fn build(
        cfg: &'a ScenarioConfig,
        seed: u64,
        opts: &RunOptions,
        registry: &SchedulerRegistry,
        engine: &mut Engine<Ev>,
    ) -> Result<Self> {
        let streams = RngStreams::new(seed);
        let horizon = SimTime::from_secs_f64(cfg.horizon_s);
        let params = SchedulerParams {
            residency_model: cfg.resolve_residency_model()?.map(Arc::new),
        };

        let mut broker = Broker::new();
        let mut hosts = BTreeMap::new();
        for (i, h) in cfg.hosts.iter().enumerate() {
            let id = HostId(i as u32);
            broker.subscribe(id, h.aoi);
            broker.set_reward(id, h.reward_offer);
            hosts.insert(
                id,
                HostRt {
                    vim: Vim::new(id, h.local_capacity),
                    scheduler: registry.create(&cfg.scheduler, &params)?,
                    local: LocalVi {
                        capacity: h.local_capacity,
                        allocated: ResourceVector::ZERO,
                        apps: BTreeMap::new(),
                    },
                },
            );
        }

        let mut world = World {
            cfg,
            seed,
            trace_on: opts.trace,
            latency_rng: streams.stream(LATENCY),
            in_flight: [0; 5],
            broker,
            hosts,
            vehicles: BTreeMap::new(),
            present: BTreeSet::new(),
            apps: BTreeMap::new(),
            live_apps: BTreeSet::new(),
            ues: Vec::new(),
            requests: Vec::new(),
            acquisitions: Vec::new(),
            releases: Vec::new(),
            migrations: Vec::new(),
            metrics: RunMetrics {
                seed,
                scheduler: cfg.scheduler.clone(),
                ..Default::default()
            },
            trace: Vec::new(),
            invariant_checks: 0,
        };

        let mut vrng = streams.stream(VEHICLES);
        for (arrival, residency, capacity) in world.vehicle_arrivals(horizon, &mut vrng)? {
            let id = VehicleId(world.vehicles.len() as u32);
            let loc = random_point_in(cfg.parking_lot.center, cfg.parking_lot.radius_m, &mut vrng);
            world.vehicles.insert(
                id,
                VehicleRt {
                    node: FarEdgeNode::new(id, loc, capacity),
                    demands: BTreeMap::new(),
                    host: None,
                    acquisition: None,
                    release: None,
                    leave_requested: false,
                    leave_acked: false,
                },
            );
            engine.schedule(arrival, Ev::VehicleArrive(id))?;
            engine.schedule(arrival + residency, Ev::VehicleLeave(id))?;
        }

        let mut urng = streams.stream(USERS);
        for (arrival, session, demand) in world.user_arrivals(horizon, &mut urng)? {
            let ue = UeId(world.ues.len() as u32);
            let app = AppId(ue.0);
            world.ues.push(UserEquipment {
                id: ue,
                arrival_time: arrival,
                session_duration: session,
                app_id: Some(app),
            });
            let mut inst = AppInstance::new(app, ue, demand, arrival);
            inst.context_size = cfg.migration.context_bytes;
            world.apps.insert(
                app,
                AppRt {
                    inst,
                    request: usize::MAX,
                    host: None,
                    terminate_requested: false,
                    migration: None,
                },
            );
            engine.schedule(arrival, Ev::UserArrive(ue))?;
            engine.schedule(arrival + session, Ev::SessionEnd(ue))?;
        }
        Ok(world)
    }

    fn vehicle_arrivals(
        &self,
        horizon: SimTime,
        rng: &mut SimRng,
    ) -> Result<Vec<(SimTime, SimDuration, ResourceVector)>> {
        let cfg = self.cfg;
        let caps = &cfg.vehicle_capacity;
        Ok(match &cfg.vehicles {
            VehicleSource::None => Vec::new(),
            VehicleSource::Profile { arrivals, residency, min_residency_s } => {
                let profile = arrivals.resolve(&cfg.base_dir)?;
                let model = residency.resolve(&cfg.base_dir)?;
                let min = SimDuration::from_secs_f64(*min_residency_s);
                gen_vehicle_process(&profile, &model, caps, min, horizon, rng)
                    .into_iter()
                    .map(|a| (a.arrival, a.residency, a.capacity))
                    .collect()
            }
            VehicleSource::Trace { path } => {
                let trace = ingest_parking_csv(&cfg.base_dir.join(path))?.value;
                let Some(first) = trace.rows().iter().map(|r| r.entry.date()).min() else {
                    return Ok(Vec::new());
                };
                let t0 = first.and_hms_opt(0, 0, 0).expect("midnight");
                let mut rows: Vec<_> = trace.rows().to_vec();
                rows.sort_by_key(|r| (r.entry, r.exit));
                rows.iter()
                    .filter_map(|r| {
                        let at = SimTime::from_secs((r.entry - t0).num_seconds() as u64);
                        let stay = SimDuration::from_secs(r.stay_secs()?);
                        (at < horizon).then(|| (at, stay, *pick_weighted(caps, rng)))
                    })
                    .collect()
            }
            VehicleSource::Burst { count, at_s, window_s, residency } => {
                let times = burst_times(
                    *count,
                    SimTime::from_secs_f64(*at_s),
                    SimDuration::from_secs_f64(*window_s),
                    rng,
                );
                times
                    .into_iter()
                    .filter(|t| *t <= horizon)
                    .map(|t| (t, residency.sample(rng), *pick_weighted(caps, rng)))
                    .collect()
            }
        })
    }

    fn user_arrivals(
        &self,
        horizon: SimTime,
        rng: &mut SimRng,
    ) -> Result<Vec<(SimTime, SimDuration, ResourceVector)>> {
        let cfg = self.cfg;
        let demands = &cfg.app_demand;
        let from_profile = |profile: crate::workload::HourlyProfile, session, rng: &mut SimRng| -> Result<_> {
            let profile = profile.scaled(cfg.user_rate_scale)?;
            Ok(gen_user_process(&profile, session, demands, horizon, rng)
                .into_iter()
                .map(|u| (u.arrival, u.session, u.demand))
                .collect())
        };
        match &cfg.users {
            UserSource::None => Ok(Vec::new()),
            UserSource::Profile { arrivals, session } => from_profile(arrivals.resolve(&cfg.base_dir)?, session, rng),
            UserSource::Trace { path, session } => {
                from_profile(ingest_user_csv(&cfg.base_dir.join(path))?.value, session, rng)
            }
            UserSource::Burst { count, at_s, window_s, session } => {
                let times = burst_times(
                    *count,
                    SimTime::from_secs_f64(*at_s),
                    SimDuration::from_secs_f64(*window_s),
                    rng,
                );
                Ok(times
                    .into_iter()
                    .filter(|t| *t <= horizon)
                    .map(|t| (t, session.sample(rng), *pick_weighted(demands, rng)))
                    .collect())
            }
        }
    }

    // ----- plumbing -------------------------------------------------------

    fn send(&mut self, eng: &mut Engine<Ev>, link: LinkClass, msg: Msg) -> Result<()> {
        self.send_after(eng, link, SimDuration::ZERO, msg)
    }

    /// Send `msg` on `link`, adding `extra` to the sampled latency.
    fn send_after(&mut self, eng: &mut Engine<Ev>, link: LinkClass, extra: SimDuration, msg: Msg) -> Result<()> {
        let slot = &mut self.in_flight[link.index()];
        let lat = self.cfg.latency.sample(link, *slot, &mut self.latency_rng)?;
        *slot += 1;
        eng.schedule(eng.now() + lat + extra, Ev::Deliver { link, msg })?;
        Ok(())
    }

    fn bug(&self, eng: &Engine<Ev>, msg: impl Into<String>) -> Error {
        Error::invariant(eng.now().as_micros(), msg)
    }

    fn record_occupancy(&mut self, now: SimTime) {
        let size: usize = self.hosts.values().map(|h| h.vim.pool_size()).sum();
        self.metrics.occupancy.push(OccupancySample {
            time_us: now.as_micros(),
            pool_size: size as u32,
        });
    }

    fn vehicle(&mut self, v: VehicleId) -> &mut VehicleRt {
        self.vehicles.get_mut(&v).expect("vehicle ids are dense and never removed")
    }

    fn app(&mut self, a: AppId) -> &mut AppRt {
        self.apps.get_mut(&a).expect("app ids are dense and never removed")
    }

    fn transition(&mut self, eng: &Engine<Ev>, a: AppId, to: AppState) -> Result<()> {
        let now = eng.now();
        let rt = self.apps.get_mut(&a).expect("known app");
        rt.inst.transition(to).map_err(|m| Error::invariant(now.as_micros(), m))?;
        if to == AppState::Terminated {
            rt.inst.terminated_at = Some(now);
            self.live_apps.remove(&a);
        }
        Ok(())
    }

    fn advance_request(&mut self, eng: &Engine<Ev>, req: usize, to: RequestPhase) -> Result<()> {
        let now = eng.now();
        self.requests[req]
            .advance(to)
            .map_err(|m| Error::invariant(now.as_micros(), m))
    }

    fn advance_acq(&mut self, eng: &Engine<Ev>, v: VehicleId, to: AcquisitionPhase) -> Result<()> {
        let idx = self.vehicles[&v].acquisition.expect("open acquisition");
        self.acquisitions[idx]
            .advance(to)
            .map_err(|m| Error::invariant(eng.now().as_micros(), m))
    }

    fn advance_rel(&mut self, eng: &Engine<Ev>, v: VehicleId, to: ReleasePhase) -> Result<()> {
        let idx = self.vehicles[&v].release.expect("open release");
        self.releases[idx]
            .advance(to)
            .map_err(|m| Error::invariant(eng.now().as_micros(), m))
    }

    fn push_trace(&mut self, ev: &SimEvent<Ev>) {
        let (kind, source, target, detail) = describe(&ev.payload);
        self.trace.push(TraceRecord {
            time_us: ev.fire_at.as_micros(),
            seq: ev.seq,
            kind: kind.to_string(),
            source,
            target,
            detail,
        });
    }

    // ----- dispatch -------------------------------------------------------

    fn handle(&mut self, eng: &mut Engine<Ev>, ev: SimEvent<Ev>) -> Result<()> {
        if self.trace_on {
            self.push_trace(&ev);
        }
        match ev.payload {
            Ev::VehicleArrive(v) => self.on_vehicle_arrive(eng, v)?,
            Ev::VehicleLeave(v) => self.on_vehicle_leave(eng, v)?,
            Ev::UserArrive(ue) => self.on_user_arrive(eng, ue)?,
            Ev::SessionEnd(ue) => {
                if let Some(app) = self.ues[ue.0 as usize].app_id {
                    self.terminate_app(eng, app)?;
                }
            }
            Ev::Deliver { link, msg } => {
                self.in_flight[link.index()] -= 1;
                self.on_message(eng, msg)?;
            }
        }
        if self.cfg.check_invariants {
            self.check_invariants(eng)?;
        }
        Ok(())
    }

    fn on_message(&mut self, eng: &mut Engine<Ev>, msg: Msg) -> Result<()> {
        match msg {
            Msg::RewardRequest { v } => self.broker_reward_request(eng, v),
            Msg::RewardOffer { v, offers } => self.vehicle_reward_offer(eng, v, offers),
            Msg::ResourcePost { v, host } => self.broker_resource_post(eng, v, host),
            Msg::JoinNotify { v, host } => self.vim_join_notify(eng, v, host),
            Msg::RegistrationAck { v, host } => self.broker_registration_ack(eng, v, host),
            Msg::JoinConfirm { v, .. } => self.vehicle_join_confirm(eng, v),
            Msg::LeavePublish { v } => self.broker_leave(eng, v),
            Msg::LeaveAck { v } => self.vehicle_leave_ack(eng, v),
            Msg::LeaveNotify { v, host } => self.vim_leave_notify(eng, v, host),
            Msg::ReleaseAck { v, .. } => self.broker_release_ack(eng, v),
            Msg::AppRequest { req } => self.send(eng, LinkClass::SystemLevel, Msg::ToOrchestrator { req }),
            Msg::ToOrchestrator { req } => self.orchestrator_request(eng, req),
            Msg::ToPlatformManager { req, host } => {
                self.send(eng, LinkClass::HostInternal, Msg::ToVim { req, host })
            }
            Msg::ToVim { req, host } => self.vim_request(eng, req, host),
            Msg::ViCmd { host, target, cmd } => self.vi_command(eng, host, target, cmd),
            Msg::ViReply { host, target, cmd, reply } => self.vi_reply(eng, host, target, cmd, reply),
            Msg::MigrationNotice { host, app, v } => self.ams_migration_notice(eng, host, app, v),
            Msg::ContextTransfer { host, app } => self.ams_transfer_done(eng, host, app),
        }
    }

    // ----- acquisition ----------------------------------------------------

    fn on_vehicle_arrive(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let now = eng.now();
        let idx = self.acquisitions.len();
        self.acquisitions.push(AcquisitionSession::start(v, now));
        let rt = self.vehicle(v);
        rt.node.state = VehicleState::RewardPending;
        rt.acquisition = Some(idx);
        self.present.insert(v);
        self.send(eng, LinkClass::VehicleToBroker, Msg::RewardRequest { v })
    }

    fn broker_reward_request(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let loc = self.vehicles[&v].node.location;
        let offers = self.broker.get_rewards(v, &loc);
        if offers.is_empty() {
            debug!("{v}: no host covers its position, acquisition aborted");
            self.abort_acquisition(v, AbortReason::NoHost);
            return Ok(());
        }
        self.advance_acq(eng, v, AcquisitionPhase::RewardOffered)?;
        self.send(eng, LinkClass::VehicleToBroker, Msg::RewardOffer { v, offers })
    }

    fn abort_acquisition(&mut self, v: VehicleId, reason: AbortReason) {
        let idx = self.vehicles[&v].acquisition.expect("open acquisition");
        self.acquisitions[idx].abort(reason);
        let rt = self.vehicle(v);
        rt.node.state = VehicleState::Outside;
        self.present.remove(&v);
    }

    fn vehicle_reward_offer(&mut self, eng: &mut Engine<Ev>, v: VehicleId, offers: Vec<(HostId, i64)>) -> Result<()> {
        // Offers are ordered by host id; the first acceptable one wins.
        let Some((host, _)) = offers.into_iter().find(|(_, r)| *r >= self.cfg.min_reward) else {
            self.abort_acquisition(v, AbortReason::Declined);
            return Ok(());
        };
        self.vehicle(v).host = Some(host);
        let idx = self.vehicles[&v].acquisition.expect("open acquisition");
        self.acquisitions[idx].host = Some(host);
        self.advance_acq(eng, v, AcquisitionPhase::Published)?;
        self.send(eng, LinkClass::VehicleToBroker, Msg::ResourcePost { v, host })
    }

    fn broker_resource_post(&mut self, eng: &mut Engine<Ev>, v: VehicleId, accepted: HostId) -> Result<()> {
        let node = &self.vehicles[&v].node;
        let publication = Publication {
            vehicle_id: v,
            location: node.location,
            offered: node.capacity,
            kind: PublicationKind::Join,
            endpoint: node.endpoint.clone(),
        };
        for host in self.broker.publish(&publication) {
            if host == accepted {
                self.advance_acq(eng, v, AcquisitionPhase::HostNotified)?;
            }
            self.send(eng, LinkClass::BrokerToHost, Msg::JoinNotify { v, host })?;
        }
        Ok(())
    }

    fn vim_join_notify(&mut self, eng: &mut Engine<Ev>, v: VehicleId, host: HostId) -> Result<()> {
        if self.vehicles[&v].host != Some(host) {
            // The vehicle took another host's reward.
            return Ok(());
        }
        let now = eng.now();
        let (cap, loc) = {
            let rt = self.vehicle(v);
            rt.node.state = VehicleState::Registered;
            rt.node.join_time = Some(now);
            (rt.node.capacity, rt.node.location)
        };
        self.hosts.get_mut(&host).expect("known host").vim.insert(v, cap, loc, now);
        let idx = self.vehicles[&v].acquisition.expect("open acquisition");
        self.acquisitions[idx].recognized_at = Some(now);
        let join = self.acquisitions[idx].join_time().expect("recognized");
        self.metrics.join_times_us.insert(v, join.as_micros());
        self.record_occupancy(now);
        self.advance_acq(eng, v, AcquisitionPhase::HostAcked)?;
        self.send(eng, LinkClass::BrokerToHost, Msg::RegistrationAck { v, host })
    }

    fn broker_registration_ack(&mut self, eng: &mut Engine<Ev>, v: VehicleId, host: HostId) -> Result<()> {
        self.advance_acq(eng, v, AcquisitionPhase::Confirmed)?;
        self.send(eng, LinkClass::VehicleToBroker, Msg::JoinConfirm { v, host })
    }

    fn vehicle_join_confirm(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let idx = self.vehicles[&v].acquisition.expect("open acquisition");
        self.acquisitions[idx].completed_at = Some(eng.now());
        if self.vehicles[&v].leave_requested {
            self.start_leave(eng, v)?;
        }
        Ok(())
    }

    // ----- release --------------------------------------------------------

    fn on_vehicle_leave(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let rt = &self.vehicles[&v];
        let acq = rt.acquisition.map(|i| &self.acquisitions[i]);
        match (rt.node.state, acq) {
            (VehicleState::Registered, Some(s)) if s.completed_at.is_some() => self.start_leave(eng, v),
            (_, Some(s)) if s.is_open() => {
                self.vehicle(v).leave_requested = true;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn start_leave(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let idx = self.releases.len();
        let mut session = ReleaseSession::start(v, eng.now());
        session.host = self.vehicles[&v].host;
        self.releases.push(session);
        let rt = self.vehicle(v);
        rt.node.state = VehicleState::Departing;
        rt.release = Some(idx);
        self.send(eng, LinkClass::VehicleToBroker, Msg::LeavePublish { v })
    }

    fn broker_leave(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let node = &self.vehicles[&v].node;
        let publication = Publication {
            vehicle_id: v,
            location: node.location,
            offered: node.capacity,
            kind: PublicationKind::Leave,
            endpoint: node.endpoint.clone(),
        };
        let hosts = self.broker.publish(&publication);
        let idx = self.vehicles[&v].release.expect("open release");
        self.releases[idx].count();
        self.send(eng, LinkClass::VehicleToBroker, Msg::LeaveAck { v })?;
        let own = self.vehicles[&v].host;
        for host in hosts {
            if Some(host) == own {
                self.advance_rel(eng, v, ReleasePhase::HostNotified)?;
            }
            self.send(eng, LinkClass::BrokerToHost, Msg::LeaveNotify { v, host })?;
        }
        Ok(())
    }

    fn vehicle_leave_ack(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        self.vehicle(v).leave_acked = true;
        let idx = self.vehicles[&v].release.expect("open release");
        let now = eng.now();
        let s = &mut self.releases[idx];
        if s.phase == ReleasePhase::Acked && s.completed_at.is_none() {
            s.completed_at = Some(now);
        }
        if self.cfg.migration.hard_cutoff {
            let rt = self.vehicle(v);
            rt.node.hosted_apps.clear();
            rt.demands.clear();
            rt.node.allocated = ResourceVector::ZERO;
            self.mark_departed(v);
        } else {
            self.maybe_depart(v);
        }
        Ok(())
    }

    fn maybe_depart(&mut self, v: VehicleId) {
        let rt = &self.vehicles[&v];
        if rt.node.state == VehicleState::Departing && rt.leave_acked && rt.node.hosted_apps.is_empty() {
            self.mark_departed(v);
        }
    }

    fn mark_departed(&mut self, v: VehicleId) {
        let rt = self.vehicle(v);
        rt.node.state = VehicleState::Departed;
        rt.node.join_time = None;
        self.present.remove(&v);
    }

    fn vim_leave_notify(&mut self, eng: &mut Engine<Ev>, v: VehicleId, host: HostId) -> Result<()> {
        if self.vehicles[&v].host != Some(host) {
            return Ok(());
        }
        let now = eng.now();
        self.hosts.get_mut(&host).expect("known host").vim.remove(v);
        self.record_occupancy(now);
        self.advance_rel(eng, v, ReleasePhase::PoolUpdated)?;
        let idx = self.vehicles[&v].release.expect("open release");
        self.releases[idx].pool_updated_at = Some(now);
        let rt = self.releases[idx].release_time().expect("pool updated");
        self.metrics.release_times_us.insert(v, rt.as_micros());

        // Applications placed on the vehicle and running there. Ones whose
        // allocation is still being acknowledged are handled on the ack.
        let hosted: Vec<AppId> = self
            .live_apps
            .iter()
            .filter(|a| {
                let app = &self.apps[a];
                app.inst.remote_vehicle() == Some(v)
                    && matches!(app.inst.state, AppState::Instantiated | AppState::Running)
            })
            .copied()
            .collect();
        for app in hosted {
            self.trigger_migration(eng, host, app, v)?;
        }
        self.advance_rel(eng, v, ReleasePhase::Acked)?;
        self.send(eng, LinkClass::BrokerToHost, Msg::ReleaseAck { v, host })
    }

    fn broker_release_ack(&mut self, eng: &mut Engine<Ev>, v: VehicleId) -> Result<()> {
        let idx = self.vehicles[&v].release.expect("open release");
        if self.vehicles[&v].leave_acked {
            self.releases[idx].completed_at = Some(eng.now());
        }
        Ok(())
    }

    // ----- instantiation --------------------------------------------------

    fn on_user_arrive(&mut self, eng: &mut Engine<Ev>, ue: UeId) -> Result<()> {
        let app = self.ues[ue.0 as usize].app_id.expect("one app per user");
        let req = self.requests.len();
        let demand = self.apps[&app].inst.demand;
        self.requests.push(InstantiationRequest::new(req as u32, ue, app, demand, eng.now()));
        self.app(app).request = req;
        self.live_apps.insert(app);
        self.send(eng, LinkClass::UeToHost, Msg::AppRequest { req })
    }

    fn orchestrator_request(&mut self, eng: &mut Engine<Ev>, req: usize) -> Result<()> {
        self.advance_request(eng, req, RequestPhase::AtOrchestrator)?;
        self.advance_request(eng, req, RequestPhase::Discovery)?;
        match select_host(self.hosts.values().map(|h| &h.vim)) {
            None => self.reject(eng, req),
            Some(host) => {
                self.advance_request(eng, req, RequestPhase::HostSelected)?;
                self.requests[req].host = Some(host);
                let app = self.requests[req].app_id;
                self.app(app).host = Some(host);
                self.send(eng, LinkClass::SystemLevel, Msg::ToPlatformManager { req, host })
            }
        }
    }

    fn reject(&mut self, eng: &Engine<Ev>, req: usize) -> Result<()> {
        self.advance_request(eng, req, RequestPhase::Rejected)?;
        self.metrics.rejected_requests += 1;
        let app = self.requests[req].app_id;
        self.transition(eng, app, AppState::Terminated)
    }

    fn vim_request(&mut self, eng: &mut Engine<Ev>, req: usize, host: HostId) -> Result<()> {
        self.advance_request(eng, req, RequestPhase::AtVim)?;
        let app = self.requests[req].app_id;
        self.transition(eng, app, AppState::Scheduling)?;
        self.schedule_app(eng, req, host)
    }

    /// Take a snapshot, ask the scheduler, reserve and send the allocation.
    /// Also used to retry after a vehicle refused an allocation.
    fn schedule_app(&mut self, eng: &mut Engine<Ev>, req: usize, host: HostId) -> Result<()> {
        let now = eng.now();
        let demand = self.requests[req].demand;
        let h = self.hosts.get_mut(&host).expect("known host");
        let snap = h.vim.snapshot(now);
        let decision = h.scheduler.decide(&snap, &demand, now);
        if let Placement::Remote(v) = decision {
            if !snap.get(v).is_some_and(|e| fits(&demand, &e.free)) {
                let name = h.scheduler.name().to_string();
                return Err(self.bug(eng, format!("scheduler {name} chose infeasible {v}")));
            }
        }
        let target = match resolve_placement(decision, &snap, &demand) {
            Placement::None => return self.reject(eng, req),
            Placement::Local => ViTarget::Local,
            Placement::Remote(v) => ViTarget::Vehicle(v),
        };
        if !h.vim.reserve(target, &demand) {
            return Err(self.bug(eng, format!("reservation on {target} failed after a feasible decision")));
        }
        let app = self.requests[req].app_id;
        self.app(app).inst.placement = Some(match target {
            ViTarget::Local => Placement::Local,
            ViTarget::Vehicle(v) => Placement::Remote(v),
        });
        if self.requests[req].phase == RequestPhase::AtVim {
            self.advance_request(eng, req, RequestPhase::Scheduled)?;
        }
        self.advance_request(eng, req, RequestPhase::ViAllocating)?;
        self.requests[req].first_allocate_at.get_or_insert(now);
        self.send_vi(eng, host, target, ViCommand::Allocate { app, demand })
    }

    fn send_vi(&mut self, eng: &mut Engine<Ev>, host: HostId, target: ViTarget, cmd: ViCommand) -> Result<()> {
        let link = match target {
            ViTarget::Local => LinkClass::HostInternal,
            ViTarget::Vehicle(_) => LinkClass::UeToHost,
        };
        self.send(eng, link, Msg::ViCmd { host, target, cmd })
    }

    fn vi_command(&mut self, eng: &mut Engine<Ev>, host: HostId, target: ViTarget, cmd: ViCommand) -> Result<()> {
        let reply = match target {
            ViTarget::Vehicle(v) => {
                let rt = self.vehicle(v);
                let r = apply_vi_command(&mut rt.node, &mut rt.demands, &cmd);
                if r == ViReply::Ack && matches!(cmd, ViCommand::Release { .. }) {
                    self.maybe_depart(v);
                }
                r
            }
            ViTarget::Local => {
                let local = &mut self.hosts.get_mut(&host).expect("known host").local;
                apply_local(local, &cmd)
            }
        };
        let link = match target {
            ViTarget::Local => LinkClass::HostInternal,
            ViTarget::Vehicle(_) => LinkClass::UeToHost,
        };
        self.send(eng, link, Msg::ViReply { host, target, cmd, reply })
    }

    fn vi_reply(
        &mut self,
        eng: &mut Engine<Ev>,
        host: HostId,
        target: ViTarget,
        cmd: ViCommand,
        reply: ViReply,
    ) -> Result<()> {
        match (cmd, reply) {
            (ViCommand::Allocate { app, .. }, ViReply::Ack) => self.allocation_acked(eng, host, target, app),
            (ViCommand::Allocate { app, demand }, ViReply::Nack(NackReason::Departing | NackReason::Unreachable)) => {
                let vim = &mut self.hosts.get_mut(&host).expect("known host").vim;
                vim.unreserve(target, &demand);
                if let ViTarget::Vehicle(v) = target {
                    vim.mark_draining(v);
                }
                let req = self.apps[&app].request;
                self.transition(eng, app, AppState::Scheduling)?;
                self.advance_request(eng, req, RequestPhase::Scheduled)?;
                self.schedule_app(eng, req, host)
            }
            (ViCommand::Release { app }, ViReply::Ack) => {
                let demand = self.apps[&app].inst.demand;
                self.hosts.get_mut(&host).expect("known host").vim.unreserve(target, &demand);
                Ok(())
            }
            (ViCommand::Release { .. }, ViReply::Nack(NackReason::Unreachable)) => Ok(()),
            (ViCommand::PrepareMigration { app }, reply) => self.ams_prepared(eng, host, app, reply),
            (cmd, ViReply::Nack(reason)) => Err(self.bug(
                eng,
                format!("{target} refused {} of {} with {reason:?}", cmd.kind(), cmd.app()),
            )),
        }
    }

    fn allocation_acked(&mut self, eng: &mut Engine<Ev>, host: HostId, target: ViTarget, app: AppId) -> Result<()> {
        let now = eng.now();
        let req = self.apps[&app].request;
        self.transition(eng, app, AppState::Instantiated)?;
        self.transition(eng, app, AppState::Running)?;
        self.advance_request(eng, req, RequestPhase::Completed)?;
        self.requests[req].completed_at = Some(now);
        let delay = self.requests[req].allocation_delay().expect("allocated");
        self.metrics.allocation_delays_us.insert(app, delay.as_micros());
        self.metrics.completed_requests += 1;

        if self.apps[&app].terminate_requested {
            return self.terminate_app(eng, app);
        }
        // The vehicle left the pool while this allocation was in flight.
        if let ViTarget::Vehicle(v) = target {
            let vim = &self.hosts[&host].vim;
            if !vim.contains(v) && self.vehicles[&v].release.is_some() {
                self.trigger_migration(eng, host, app, v)?;
            }
        }
        Ok(())
    }

    // ----- termination ----------------------------------------------------

    fn terminate_app(&mut self, eng: &mut Engine<Ev>, app: AppId) -> Result<()> {
        let (state, placement, host) = {
            let rt = &self.apps[&app];
            (rt.inst.state, rt.inst.placement, rt.host)
        };
        match state {
            AppState::Terminated => Ok(()),
            AppState::Requested | AppState::Scheduling | AppState::Instantiated => {
                self.app(app).terminate_requested = true;
                Ok(())
            }
            AppState::Running => {
                let host = host.expect("running apps have a host");
                self.transition(eng, app, AppState::Terminated)?;
                match placement {
                    Some(Placement::Local) => self.send_vi(eng, host, ViTarget::Local, ViCommand::Release { app }),
                    Some(Placement::Remote(v)) => self.release_remote(eng, host, v, app),
                    _ => Err(self.bug(eng, format!("{app} running without placement"))),
                }
            }
            AppState::MigrationPending | AppState::ContextTransferring => {
                let host = host.expect("migrating apps have a host");
                self.cancel_migration(eng, host, app, false)
            }
        }
    }

    fn release_remote(&mut self, eng: &mut Engine<Ev>, host: HostId, v: VehicleId, app: AppId) -> Result<()> {
        if self.vehicles[&v].node.is_reachable() {
            self.send_vi(eng, host, ViTarget::Vehicle(v), ViCommand::Release { app })
        } else {
            Ok(())
        }
    }

    // ----- mobility -------------------------------------------------------

    /// Log the migration event and notify the host's AMS.
    fn trigger_migration(&mut self, eng: &mut Engine<Ev>, host: HostId, app: AppId, v: VehicleId) -> Result<()> {
        let idx = self.migrations.len();
        self.migrations.push(MigrationEvent::new(app, v, eng.now(), self.apps[&app].inst.context_size));
        self.app(app).migration = Some(idx);
        let rel = self.vehicles[&v].release.expect("departing vehicle has a release session");
        self.releases[rel].pending_migrations.push(app);
        self.send(eng, LinkClass::HostInternal, Msg::MigrationNotice { host, app, v })
    }

    fn ams_migration_notice(&mut self, eng: &mut Engine<Ev>, host: HostId, app: AppId, v: VehicleId) -> Result<()> {
        let idx = self.apps[&app].migration.expect("migration logged");
        match self.apps[&app].inst.state {
            AppState::Running => {}
            AppState::Terminated => {
                // Session ended while the notice was in flight.
                self.migrations[idx].outcome = MigrationOutcome::Cancelled;
                self.migrations[idx].completed_at = Some(eng.now());
                return Ok(());
            }
            s => return Err(self.bug(eng, format!("{app} in {s:?} received a migration notice"))),
        }
        let demand = self.apps[&app].inst.demand;
        let reserved = self.hosts.get_mut(&host).expect("known host").vim.reserve(ViTarget::Local, &demand);
        if !reserved {
            warn!("{app}: no local capacity to migrate onto, service lost");
            self.migrations[idx].outcome = MigrationOutcome::Cancelled;
            self.migrations[idx].completed_at = Some(eng.now());
            self.metrics.service_losses += 1;
            self.transition(eng, app, AppState::Terminated)?;
            return self.release_remote(eng, host, v, app);
        }
        self.transition(eng, app, AppState::MigrationPending)?;
        self.send_vi(eng, host, ViTarget::Vehicle(v), ViCommand::PrepareMigration { app })
    }

    fn ams_prepared(&mut self, eng: &mut Engine<Ev>, host: HostId, app: AppId, reply: ViReply) -> Result<()> {
        if self.apps[&app].inst.state != AppState::MigrationPending {
            // Terminated while the command was in flight.
            return Ok(());
        }
        match reply {
            ViReply::Ack => {
                self.transition(eng, app, AppState::ContextTransferring)?;
                let idx = self.apps[&app].migration.expect("migration logged");
                self.migrations[idx].transfer_started_at = Some(eng.now());
                let bytes = self.apps[&app].inst.context_size;
                let serialize = transfer_time(bytes, self.cfg.migration.transfer_rate_bps);
                self.send_after(eng, LinkClass::UeToHost, serialize, Msg::ContextTransfer { host, app })
            }
            ViReply::Nack(NackReason::Unreachable) => {
                self.metrics.service_losses += 1;
                self.cancel_migration(eng, host, app, true)
            }
            ViReply::Nack(r) => Err(self.bug(eng, format!("{app}: migration prepare refused with {r:?}"))),
        }
    }

    /// Abandon an in-progress migration and terminate the app, freeing both
    /// the local reservation and the remote allocation.
    fn cancel_migration(&mut self, eng: &mut Engine<Ev>, host: HostId, app: AppId, lost: bool) -> Result<()> {
        let idx = self.apps[&app].migration.expect("migration logged");
        self.migrations[idx].outcome = MigrationOutcome::Cancelled;
        self.migrations[idx].completed_at = Some(eng.now());
        let demand = self.apps[&app].inst.demand;
        self.hosts.get_mut(&host).expect("known host").vim.unreserve(ViTarget::Local, &demand);
        self.transition(eng, app, AppState::Terminated)?;
        if lost {
            debug!("{app}: migration source unreachable");
        }
        let v = self.migrations[idx].vehicle_id;
        self.release_remote(eng, host, v, app)
    }

    fn ams_transfer_done(&mut self, eng: &mut Engine<Ev>, host: HostId, app: AppId) -> Result<()> {
        if self.apps[&app].inst.state != AppState::ContextTransferring {
            return Ok(());
        }
        let now = eng.now();
        let demand = self.apps[&app].inst.demand;
        let local = &mut self.hosts.get_mut(&host).expect("known host").local;
        if apply_local(local, &ViCommand::Allocate { app, demand }) != ViReply::Ack {
            return Err(self.bug(eng, format!("local VI refused migrated {app}")));
        }
        let idx = self.apps[&app].migration.expect("migration logged");
        let v = self.migrations[idx].vehicle_id;
        self.app(app).inst.placement = Some(Placement::Local);
        self.transition(eng, app, AppState::Running)?;
        let m = &mut self.migrations[idx];
        m.outcome = MigrationOutcome::Completed;
        m.completed_at = Some(now);
        let gap = m.service_gap().expect("completed");
        self.metrics.service_gaps_us.push(gap.as_micros());
        self.release_remote(eng, host, v, app)?;
        if self.apps[&app].terminate_requested {
            self.terminate_app(eng, app)?;
        }
        Ok(())
    }

    // ----- invariants -----------------------------------------------------

    fn check_invariants(&mut self, eng: &Engine<Ev>) -> Result<()> {
        self.invariant_checks += 1;
        let fail = |m: String| Err(Error::invariant(eng.now().as_micros(), m));
        for v in &self.present {
            let rt = &self.vehicles[v];
            let n = &rt.node;
            if !n.allocated.le(&n.capacity) {
                return fail(format!("{v}: allocated {} exceeds capacity {}", n.allocated, n.capacity));
            }
            let sum = rt.demands.values().fold(ResourceVector::ZERO, |a, d| a + *d);
            if sum != n.allocated || rt.demands.len() != n.hosted_apps.len() {
                return fail(format!("{v}: allocated {} but hosted apps hold {sum}", n.allocated));
            }
            if !n.hosted_apps.is_empty() && !n.is_reachable() {
                return fail(format!("{v}: hosts apps while {:?}", n.state));
            }
            if n.join_time.is_some() != n.is_reachable() {
                return fail(format!("{v}: join time set in state {:?}", n.state));
            }
        }
        for (id, h) in &self.hosts {
            h.vim.check_accounting().or_else(fail)?;
            let sum = h.local.apps.values().fold(ResourceVector::ZERO, |a, d| a + *d);
            if sum != h.local.allocated || !h.local.allocated.le(&h.local.capacity) {
                return fail(format!("{id}: local VI allocated {} inconsistent", h.local.allocated));
            }
            if !h.local.allocated.le(&h.vim.local_committed()) {
                return fail(format!("{id}: local VI holds more than the VIM committed"));
            }
            for v in h.vim.vehicles() {
                let held = self.vehicles[&v].node.allocated;
                if !held.le(&h.vim.committed(ViTarget::Vehicle(v)).unwrap_or_default()) {
                    return fail(format!("{v}: holds {held}, more than {id}'s VIM committed"));
                }
            }
        }
        if !self.cfg.migration.hard_cutoff {
            for a in &self.live_apps {
                let app = &self.apps[a].inst;
                if app.state != AppState::Running {
                    continue;
                }
                if let Some(v) = app.remote_vehicle() {
                    let n = &self.vehicles[&v].node;
                    if n.state == VehicleState::Departed || !n.hosted_apps.contains(a) {
                        return fail(format!("{a} runs on {v}, which no longer hosts it"));
                    }
                }
            }
        }
        let pending: usize = self.releases.iter().map(|r| r.pending_migrations.len()).sum();
        if pending != self.migrations.len() {
            return fail(format!("{} migrations logged for {pending} departing apps", self.migrations.len()));
        }
        Ok(())
    }

    fn finish(mut self, engine: &Engine<Ev>) -> Result<RunOutput> {
        for s in &self.acquisitions {
            if s.completed_at.is_some() && s.messages != crate::lifecycle::ACQUISITION_MESSAGES {
                return Err(Error::invariant(
                    engine.now().as_micros(),
                    format!("{}: acquisition used {} messages", s.vehicle_id, s.messages),
                ));
            }
        }
        for s in &self.releases {
            if s.completed_at.is_some() && s.messages != crate::lifecycle::RELEASE_MESSAGES {
                return Err(Error::invariant(
                    engine.now().as_micros(),
                    format!("{}: release used {} messages", s.vehicle_id, s.messages),
                ));
            }
        }
        for m in &self.migrations {
            match m.outcome {
                MigrationOutcome::Completed => self.metrics.migrations_completed += 1,
                MigrationOutcome::Cancelled => self.metrics.migrations_cancelled += 1,
                MigrationOutcome::Pending => {}
            }
        }
        self.metrics.migrations_per_hour = migrations_per_hour(&self.migrations);
        self.metrics.events_processed = engine.processed();
        self.metrics.acquisitions = self.acquisitions;
        self.metrics.releases = self.releases;
        let open = self.requests.iter().filter(|r| !r.phase.is_final()).count();
        debug!("seed {}: {} events, {} open requests", self.seed, engine.processed(), open);
        Ok(RunOutput {
            metrics: self.metrics,
            migrations: self.migrations,
            trace: self.trace,
            open_requests: open,
            invariant_checks: self.invariant_checks,
        })
    }
}

fn apply_local(local: &mut LocalVi, cmd: &ViCommand) -> ViReply {
    match *cmd {
        ViCommand::Allocate { app, demand } => {
            if local.apps.contains_key(&app) {
                return ViReply::Nack(NackReason::DuplicateApp);
            }
            if !fits(&demand, &local.capacity.saturating_sub(&local.allocated)) {
                return ViReply::Nack(NackReason::OverCommit);
            }
            local.allocated = local.allocated + demand;
            local.apps.insert(app, demand);
            ViReply::Ack
        }
        ViCommand::Release { app } => match local.apps.remove(&app) {
            Some(d) => {
                local.allocated = local.allocated.saturating_sub(&d);
                ViReply::Ack
            }
            None => ViReply::Nack(NackReason::UnknownApp),
        },
        ViCommand::PrepareMigration { .. } => ViReply::Nack(NackReason::UnknownApp),
    }
}

fn vim_name(h: HostId) -> String {
    format!("{h}/vim")
}

fn vi_name(h: HostId, t: ViTarget) -> String {
    match t {
        ViTarget::Local => format!("{h}/vi"),
        ViTarget::Vehicle(v) => v.to_string(),
    }
}

/// Trace columns for one event: kind, source, target, detail.
fn describe(ev: &Ev) -> (&'static str, String, String, String) {
    let wl = || "workload".to_string();
    match ev {
        Ev::VehicleArrive(v) => ("VehicleArrive", wl(), v.to_string(), String::new()),
        Ev::VehicleLeave(v) => ("VehicleLeave", wl(), v.to_string(), String::new()),
        Ev::UserArrive(u) => ("UserArrive", wl(), u.to_string(), String::new()),
        Ev::SessionEnd(u) => ("SessionEnd", wl(), u.to_string(), String::new()),
        Ev::Deliver { link, msg } => {
            let b = || "broker".to_string();
            let (src, dst, detail) = match msg {
                Msg::RewardRequest { v } => (v.to_string(), b(), format!("vehicle={v}")),
                Msg::RewardOffer { v, offers } => (b(), v.to_string(), format!("vehicle={v};offers={}", offers.len())),
                Msg::ResourcePost { v, host } => (v.to_string(), b(), format!("vehicle={v};host={host}")),
                Msg::JoinNotify { v, host } => (b(), vim_name(*host), format!("vehicle={v}")),
                Msg::RegistrationAck { v, host } => (vim_name(*host), b(), format!("vehicle={v}")),
                Msg::JoinConfirm { v, .. } => (b(), v.to_string(), format!("vehicle={v}")),
                Msg::LeavePublish { v } => (v.to_string(), b(), format!("vehicle={v}")),
                Msg::LeaveAck { v } => (b(), v.to_string(), format!("vehicle={v}")),
                Msg::LeaveNotify { v, host } => (b(), vim_name(*host), format!("vehicle={v}")),
                Msg::ReleaseAck { v, host } => (vim_name(*host), b(), format!("vehicle={v}")),
                Msg::AppRequest { req } => ("ue".into(), "ualcmp".into(), format!("request={req}")),
                Msg::ToOrchestrator { req } => ("ualcmp".into(), "meco".into(), format!("request={req}")),
                Msg::ToPlatformManager { req, host } => ("meco".into(), format!("{host}/mecpm"), format!("request={req}")),
                Msg::ToVim { req, host } => (format!("{host}/mecpm"), vim_name(*host), format!("request={req}")),
                Msg::ViCmd { host, target, cmd } => (vim_name(*host), vi_name(*host, *target), format!("app={}", cmd.app())),
                Msg::ViReply { host, target, cmd, reply } => (
                    vi_name(*host, *target),
                    vim_name(*host),
                    format!("app={};cmd={};reply={reply:?}", cmd.app(), cmd.kind()),
                ),
                Msg::MigrationNotice { host, app, v } => (vim_name(*host), format!("{host}/ams"), format!("app={app};vehicle={v}")),
                Msg::ContextTransfer { host, app } => ("vehicle".into(), format!("{host}/vi"), format!("app={app}")),
            };
            (msg.kind(), src, dst, format!("{detail};link={link}"))
        }
    }
}
