//! Resource acquisition and release sessions, and the vehicle-side VI agent.
//!
//! Acquisition is a six-message exchange:
//!
//! 1. reward request, vehicle to broker
//! 2. reward offer, broker to vehicle
//! 3. resource post (location, capacity, endpoint), vehicle to broker
//! 4. join notification, broker to VIM; the VIM adds the vehicle to its pool
//! 5. registration ack, VIM to broker
//! 6. join confirmation, broker to vehicle
//!
//! The join time is measured from sending (1) to the VIM processing (4).
//!
//! Release is four messages: leave publication (vehicle to broker), leave ack
//! (broker to vehicle), leave notification (broker to VIM, which removes the
//! vehicle from the pool) and release ack (VIM to broker). The release time is
//! measured from sending the publication to the pool removal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{AppId, FarEdgeNode, HostId, ResourceVector, VehicleId, VehicleState};
use crate::kernel::{SimDuration, SimTime};

pub const ACQUISITION_MESSAGES: u32 = 6;
pub const RELEASE_MESSAGES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AcquisitionPhase {
    RewardRequested,
    RewardOffered,
    Published,
    HostNotified,
    HostAcked,
    Confirmed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbortReason {
    NoHost,
    Declined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSession {
    pub vehicle_id: VehicleId,
    pub phase: AcquisitionPhase,
    pub host: Option<HostId>,
    pub started_at: SimTime,
    /// VIM pool insertion.
    pub recognized_at: Option<SimTime>,
    pub completed_at: Option<SimTime>,
    pub aborted: Option<AbortReason>,
    pub messages: u32,
}

impl AcquisitionSession {
    /// Start a session by sending the reward request.
    pub fn start(vehicle_id: VehicleId, at: SimTime) -> Self {
        AcquisitionSession {
            vehicle_id,
            phase: AcquisitionPhase::RewardRequested,
            host: None,
            started_at: at,
            recognized_at: None,
            completed_at: None,
            aborted: None,
            messages: 1,
        }
    }

    /// Enter the next phase, which must directly follow the current one. Each
    /// phase after the first corresponds to one more protocol message.
    pub fn advance(&mut self, to: AcquisitionPhase) -> Result<(), String> {
        if self.aborted.is_some() || self.phase == AcquisitionPhase::Confirmed || to as u8 != self.phase as u8 + 1 {
            return Err(format!("{}: acquisition cannot go {:?} -> {:?}", self.vehicle_id, self.phase, to));
        }
        self.phase = to;
        self.messages += 1;
        Ok(())
    }

    pub fn abort(&mut self, reason: AbortReason) {
        self.aborted = Some(reason);
    }

    pub fn is_open(&self) -> bool {
        self.aborted.is_none() && self.completed_at.is_none()
    }

    pub fn join_time(&self) -> Option<SimDuration> {
        Some(self.recognized_at?.saturating_since(self.started_at))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReleasePhase {
    LeavePublished,
    HostNotified,
    PoolUpdated,
    Acked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSession {
    pub vehicle_id: VehicleId,
    pub phase: ReleasePhase,
    pub host: Option<HostId>,
    pub started_at: SimTime,
    pub pool_updated_at: Option<SimTime>,
    pub completed_at: Option<SimTime>,
    pub pending_migrations: Vec<AppId>,
    pub messages: u32,
}

impl ReleaseSession {
    pub fn start(vehicle_id: VehicleId, at: SimTime) -> Self {
        ReleaseSession {
            vehicle_id,
            phase: ReleasePhase::LeavePublished,
            host: None,
            started_at: at,
            pool_updated_at: None,
            completed_at: None,
            pending_migrations: Vec::new(),
            messages: 1,
        }
    }

    /// Enter the next phase. `HostNotified` and `Acked` each carry one more
    /// message; the leave ack to the vehicle is counted with [`Self::count`].
    pub fn advance(&mut self, to: ReleasePhase) -> Result<(), String> {
        if self.phase == ReleasePhase::Acked || to as u8 != self.phase as u8 + 1 {
            return Err(format!("{}: release cannot go {:?} -> {:?}", self.vehicle_id, self.phase, to));
        }
        self.phase = to;
        if matches!(to, ReleasePhase::HostNotified | ReleasePhase::Acked) {
            self.messages += 1;
        }
        Ok(())
    }

    /// Count a message that does not change the phase.
    pub fn count(&mut self) {
        self.messages += 1;
    }

    pub fn release_time(&self) -> Option<SimDuration> {
        Some(self.pool_updated_at?.saturating_since(self.started_at))
    }
}

/// Management instruction from the VIM (or the AMS) to a VI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViCommand {
    Allocate { app: AppId, demand: ResourceVector },
    Release { app: AppId },
    PrepareMigration { app: AppId },
}

impl ViCommand {
    pub fn app(&self) -> AppId {
        match *self {
            ViCommand::Allocate { app, .. } | ViCommand::Release { app } | ViCommand::PrepareMigration { app } => app,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ViCommand::Allocate { .. } => "Allocate",
            ViCommand::Release { .. } => "Release",
            ViCommand::PrepareMigration { .. } => "PrepareMigration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NackReason {
    /// The vehicle is leaving and takes no new work.
    Departing,
    /// The vehicle is gone.
    Unreachable,
    /// Not enough free capacity; the VIM over-committed.
    OverCommit,
    UnknownApp,
    DuplicateApp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViReply {
    Ack,
    Nack(NackReason),
}

/// Apply `cmd` to a vehicle's VI. `demands` records what each hosted app
/// holds so a release can give it back.
pub fn apply_vi_command(
    node: &mut FarEdgeNode,
    demands: &mut BTreeMap<AppId, ResourceVector>,
    cmd: &ViCommand,
) -> ViReply {
    match *cmd {
        ViCommand::Allocate { app, demand } => {
            match node.state {
                VehicleState::Registered => {}
                VehicleState::Departing => return ViReply::Nack(NackReason::Departing),
                _ => return ViReply::Nack(NackReason::Unreachable),
            }
            if node.hosted_apps.contains(&app) {
                return ViReply::Nack(NackReason::DuplicateApp);
            }
            let Some(_) = node.free().checked_sub(&demand) else {
                return ViReply::Nack(NackReason::OverCommit);
            };
            node.allocated = node.allocated + demand;
            node.hosted_apps.insert(app);
            demands.insert(app, demand);
            ViReply::Ack
        }
        ViCommand::Release { app } => {
            if !node.is_reachable() {
                return ViReply::Nack(NackReason::Unreachable);
            }
            if !node.hosted_apps.remove(&app) {
                return ViReply::Nack(NackReason::UnknownApp);
            }
            let demand = demands.remove(&app).unwrap_or_default();
            node.allocated = node.allocated.saturating_sub(&demand);
            ViReply::Ack
        }
        ViCommand::PrepareMigration { app } => {
            if !node.is_reachable() {
                return ViReply::Nack(NackReason::Unreachable);
            }
            if node.hosted_apps.contains(&app) {
                ViReply::Ack
            } else {
                ViReply::Nack(NackReason::UnknownApp)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GeoPoint;

    fn node() -> FarEdgeNode {
        let mut n = FarEdgeNode::new(VehicleId(1), GeoPoint::default(), ResourceVector::new(4, 1024, 200));
        n.state = VehicleState::Registered;
        n
    }

    #[test]
    fn allocate_then_release_restores_zero() {
        let mut n = node();
        let mut d = BTreeMap::new();
        let demand = ResourceVector::new(1, 256, 50);
        let r = apply_vi_command(&mut n, &mut d, &ViCommand::Allocate { app: AppId(7), demand });
        assert_eq!(r, ViReply::Ack);
        assert_eq!(n.allocated, demand);
        let r = apply_vi_command(&mut n, &mut d, &ViCommand::Release { app: AppId(7) });
        assert_eq!(r, ViReply::Ack);
        assert_eq!(n.allocated, ResourceVector::ZERO);
        assert!(n.hosted_apps.is_empty());
    }

    #[test]
    fn nacks() {
        let mut n = node();
        let mut d = BTreeMap::new();
        let big = ResourceVector::new(5, 0, 0);
        assert_eq!(
            apply_vi_command(&mut n, &mut d, &ViCommand::Release { app: AppId(1) }),
            ViReply::Nack(NackReason::UnknownApp)
        );
        assert_eq!(
            apply_vi_command(&mut n, &mut d, &ViCommand::Allocate { app: AppId(1), demand: big }),
            ViReply::Nack(NackReason::OverCommit)
        );
        n.state = VehicleState::Departing;
        let small = ResourceVector::new(1, 0, 0);
        assert_eq!(
            apply_vi_command(&mut n, &mut d, &ViCommand::Allocate { app: AppId(1), demand: small }),
            ViReply::Nack(NackReason::Departing)
        );
        n.state = VehicleState::Departed;
        assert_eq!(
            apply_vi_command(&mut n, &mut d, &ViCommand::PrepareMigration { app: AppId(1) }),
            ViReply::Nack(NackReason::Unreachable)
        );
    }

    #[test]
    fn departing_vehicle_still_migrates_and_releases() {
        let mut n = node();
        let mut d = BTreeMap::new();
        let demand = ResourceVector::new(1, 1, 1);
        apply_vi_command(&mut n, &mut d, &ViCommand::Allocate { app: AppId(3), demand });
        n.state = VehicleState::Departing;
        assert_eq!(apply_vi_command(&mut n, &mut d, &ViCommand::PrepareMigration { app: AppId(3) }), ViReply::Ack);
        assert_eq!(apply_vi_command(&mut n, &mut d, &ViCommand::Release { app: AppId(3) }), ViReply::Ack);
    }

    #[test]
    fn acquisition_phases_count_messages() {
        let mut s = AcquisitionSession::start(VehicleId(1), SimTime::ZERO);
        for p in [
            AcquisitionPhase::RewardOffered,
            AcquisitionPhase::Published,
            AcquisitionPhase::HostNotified,
            AcquisitionPhase::HostAcked,
            AcquisitionPhase::Confirmed,
        ] {
            s.advance(p).unwrap();
        }
        assert_eq!(s.messages, ACQUISITION_MESSAGES);
        assert!(s.advance(AcquisitionPhase::Confirmed).is_err());
        let mut s = AcquisitionSession::start(VehicleId(2), SimTime::ZERO);
        assert!(s.advance(AcquisitionPhase::Published).is_err());
    }

    #[test]
    fn release_phases_count_messages() {
        let mut s = ReleaseSession::start(VehicleId(1), SimTime::ZERO);
        s.count();
        for p in [ReleasePhase::HostNotified, ReleasePhase::PoolUpdated, ReleasePhase::Acked] {
            s.advance(p).unwrap();
        }
        assert_eq!(s.messages, RELEASE_MESSAGES);
        assert!(s.advance(ReleasePhase::Acked).is_err());
    }
}
