//! Instantiation requests, host selection and the VIM's pool accounting.
//!
//! The VIM keeps its own view of what it has committed on every vehicle and
//! on the host's local infrastructure. Capacity is reserved when a placement
//! is decided and given back only once the VI acknowledges the release, so the
//! VIM's view is always at least as full as the VIs' own.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::domain::{fits, AppId, GeoPoint, HostId, Placement, ResourceVector, UeId, VehicleId};
use crate::kernel::{SimDuration, SimTime};

/// One vehicle as seen by a scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub vehicle: VehicleId,
    /// Pool-insertion sequence number; entries are ordered by it.
    pub seq: u64,
    pub free: ResourceVector,
    pub join_time: SimTime,
    pub location: GeoPoint,
}

/// Immutable view of a host's resources at one instant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoolSnapshot {
    pub vehicles: Vec<PoolEntry>,
    pub local_free: ResourceVector,
    pub snapshot_time: SimTime,
}

impl PoolSnapshot {
    pub fn get(&self, v: VehicleId) -> Option<&PoolEntry> {
        self.vehicles.iter().find(|e| e.vehicle == v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequestPhase {
    AtUalcmp,
    AtOrchestrator,
    Discovery,
    HostSelected,
    AtVim,
    Scheduled,
    ViAllocating,
    Completed,
    Rejected,
}

impl RequestPhase {
    pub fn is_final(self) -> bool {
        matches!(self, RequestPhase::Completed | RequestPhase::Rejected)
    }
}

#[derive(Debug, Clone)]
pub struct InstantiationRequest {
    pub id: u32,
    pub ue_id: UeId,
    pub app_id: AppId,
    pub demand: ResourceVector,
    pub issued_at: SimTime,
    pub phase: RequestPhase,
    pub host: Option<HostId>,
    pub first_allocate_at: Option<SimTime>,
    pub completed_at: Option<SimTime>,
    /// Phases in the order they were entered.
    pub history: Vec<RequestPhase>,
}

impl InstantiationRequest {
    pub fn new(id: u32, ue_id: UeId, app_id: AppId, demand: ResourceVector, at: SimTime) -> Self {
        InstantiationRequest {
            id,
            ue_id,
            app_id,
            demand,
            issued_at: at,
            phase: RequestPhase::AtUalcmp,
            host: None,
            first_allocate_at: None,
            completed_at: None,
            history: vec![RequestPhase::AtUalcmp],
        }
    }

    /// Move to `to`. Phases only advance, except that `ViAllocating` may fall
    /// back to `Scheduled` when a vehicle refuses and the VIM reschedules.
    pub fn advance(&mut self, to: RequestPhase) -> Result<(), String> {
        let ok = !self.phase.is_final()
            && (to > self.phase
                || (self.phase == RequestPhase::ViAllocating && to == RequestPhase::Scheduled));
        if !ok {
            return Err(format!("request {}: illegal phase change {:?} -> {:?}", self.id, self.phase, to));
        }
        self.phase = to;
        self.history.push(to);
        Ok(())
    }

    pub fn allocation_delay(&self) -> Option<SimDuration> {
        Some(self.completed_at?.saturating_since(self.first_allocate_at?))
    }
}

#[derive(Debug, Clone)]
struct VimVehicle {
    seq: u64,
    capacity: ResourceVector,
    committed: ResourceVector,
    join_time: SimTime,
    location: GeoPoint,
    /// Refused an allocation because it is leaving; no longer offered.
    draining: bool,
}

/// A target of VI commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViTarget {
    Local,
    Vehicle(VehicleId),
}

impl std::fmt::Display for ViTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ViTarget::Local => f.write_str("local-vi"),
            ViTarget::Vehicle(v) => write!(f, "{v}"),
        }
    }
}

/// The host's virtualisation infrastructure manager: local and vehicular
/// pool accounting.
#[derive(Debug, Clone)]
pub struct Vim {
    pub host: HostId,
    pool: IndexMap<VehicleId, VimVehicle>,
    next_seq: u64,
    local_capacity: ResourceVector,
    local_committed: ResourceVector,
}

impl Vim {
    pub fn new(host: HostId, local_capacity: ResourceVector) -> Self {
        Vim {
            host,
            pool: IndexMap::new(),
            next_seq: 0,
            local_capacity,
            local_committed: ResourceVector::ZERO,
        }
    }

    pub fn insert(&mut self, v: VehicleId, capacity: ResourceVector, location: GeoPoint, now: SimTime) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pool.insert(
            v,
            VimVehicle {
                seq,
                capacity,
                committed: ResourceVector::ZERO,
                join_time: now,
                location,
                draining: false,
            },
        );
    }

    /// Drop `v` from the pool. Returns whether it was there.
    pub fn remove(&mut self, v: VehicleId) -> bool {
        self.pool.shift_remove(&v).is_some()
    }

    pub fn contains(&self, v: VehicleId) -> bool {
        self.pool.contains_key(&v)
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn vehicles(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.pool.keys().copied()
    }

    pub fn mark_draining(&mut self, v: VehicleId) {
        if let Some(e) = self.pool.get_mut(&v) {
            e.draining = true;
        }
    }

    pub fn local_capacity(&self) -> ResourceVector {
        self.local_capacity
    }

    pub fn local_committed(&self) -> ResourceVector {
        self.local_committed
    }

    pub fn committed(&self, target: ViTarget) -> Option<ResourceVector> {
        match target {
            ViTarget::Local => Some(self.local_committed),
            ViTarget::Vehicle(v) => self.pool.get(&v).map(|e| e.committed),
        }
    }

    pub fn capacity(&self, target: ViTarget) -> Option<ResourceVector> {
        match target {
            ViTarget::Local => Some(self.local_capacity),
            ViTarget::Vehicle(v) => self.pool.get(&v).map(|e| e.capacity),
        }
    }

    /// Free resources the scheduler may hand out, in pool-insertion order.
    /// Draining vehicles are left out.
    pub fn snapshot(&self, now: SimTime) -> PoolSnapshot {
        PoolSnapshot {
            vehicles: self
                .pool
                .iter()
                .filter(|(_, e)| !e.draining)
                .map(|(id, e)| PoolEntry {
                    vehicle: *id,
                    seq: e.seq,
                    free: e.capacity.saturating_sub(&e.committed),
                    join_time: e.join_time,
                    location: e.location,
                })
                .collect(),
            local_free: self.local_capacity.saturating_sub(&self.local_committed),
            snapshot_time: now,
        }
    }

    /// Local plus non-draining vehicle free capacity.
    pub fn aggregate_free(&self) -> ResourceVector {
        let snap = self.snapshot(SimTime::ZERO);
        snap.vehicles.iter().fold(snap.local_free, |acc, e| acc + e.free)
    }

    /// Commit `demand` on `target` if it fits. Returns whether it did.
    pub fn reserve(&mut self, target: ViTarget, demand: &ResourceVector) -> bool {
        let (cap, committed) = match target {
            ViTarget::Local => (self.local_capacity, &mut self.local_committed),
            ViTarget::Vehicle(v) => match self.pool.get_mut(&v) {
                Some(e) => (e.capacity, &mut e.committed),
                None => return false,
            },
        };
        if fits(demand, &cap.saturating_sub(committed)) {
            *committed = *committed + *demand;
            true
        } else {
            false
        }
    }

    /// Give back a previous reservation. Vehicles that already left the pool
    /// are ignored.
    pub fn unreserve(&mut self, target: ViTarget, demand: &ResourceVector) {
        let committed = match target {
            ViTarget::Local => &mut self.local_committed,
            ViTarget::Vehicle(v) => match self.pool.get_mut(&v) {
                Some(e) => &mut e.committed,
                None => return,
            },
        };
        *committed = committed.saturating_sub(demand);
    }

    /// Committed never exceeds capacity anywhere.
    pub fn check_accounting(&self) -> Result<(), String> {
        if !self.local_committed.le(&self.local_capacity) {
            return Err(format!(
                "{}: local committed {} exceeds capacity {}",
                self.host, self.local_committed, self.local_capacity
            ));
        }
        for (v, e) in &self.pool {
            if !e.committed.le(&e.capacity) {
                return Err(format!(
                    "{}: committed {} on {v} exceeds capacity {}",
                    self.host, e.committed, e.capacity
                ));
            }
        }
        Ok(())
    }
}

/// Pick the host with the most free aggregate capacity (ranked by cpu, then
/// ram, then storage; ties to the lower host id). `None` when there are no
/// hosts or none has anything free.
pub fn select_host<'a, I>(hosts: I) -> Option<HostId>
where
    I: IntoIterator<Item = &'a Vim>,
{
    hosts
        .into_iter()
        .map(|vim| (vim.aggregate_free(), vim.host))
        .filter(|(free, _)| !free.is_zero())
        .max_by(|(fa, ha), (fb, hb)| fa.rank_key().cmp(&fb.rank_key()).then(hb.cmp(ha)))
        .map(|(_, h)| h)
}

/// Fall back to the local VI when the scheduler found no vehicle.
pub fn resolve_placement(decision: Placement, snapshot: &PoolSnapshot, demand: &ResourceVector) -> Placement {
    match decision {
        Placement::None if fits(demand, &snapshot.local_free) => Placement::Local,
        other => other,
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn rv(c: u64) -> ResourceVector {
        ResourceVector::new(c, 100 * c, 10 * c)
    }

    #[test]
    fn reserve_and_unreserve() {
        let mut vim = Vim::new(HostId(0), rv(2));
        vim.insert(VehicleId(1), rv(4), GeoPoint::default(), SimTime::ZERO);
        let t = ViTarget::Vehicle(VehicleId(1));
        assert!(vim.reserve(t, &rv(3)));
        assert!(!vim.reserve(t, &rv(2)));
        assert_eq!(vim.snapshot(SimTime::ZERO).vehicles[0].free, rv(1));
        vim.unreserve(t, &rv(3));
        assert_eq!(vim.committed(t), Some(ResourceVector::ZERO));
        assert!(vim.reserve(ViTarget::Local, &rv(2)));
        assert!(!vim.reserve(ViTarget::Local, &rv(1)));
        assert!(!vim.reserve(ViTarget::Vehicle(VehicleId(9)), &rv(1)));
        vim.check_accounting().unwrap();
    }

    #[test]
    fn snapshot_keeps_insertion_order_and_skips_draining() {
        let mut vim = Vim::new(HostId(0), ResourceVector::ZERO);
        for id in [5, 2, 9] {
            vim.insert(VehicleId(id), rv(4), GeoPoint::default(), SimTime::ZERO);
        }
        vim.remove(VehicleId(2));
        vim.insert(VehicleId(2), rv(4), GeoPoint::default(), SimTime::ZERO);
        let ids: Vec<u32> = vim.snapshot(SimTime::ZERO).vehicles.iter().map(|e| e.vehicle.0).collect();
        assert_eq!(ids, vec![5, 9, 2]);
        vim.mark_draining(VehicleId(9));
        let ids: Vec<u32> = vim.snapshot(SimTime::ZERO).vehicles.iter().map(|e| e.vehicle.0).collect();
        assert_eq!(ids, vec![5, 2]);
    }

    #[test]
    fn host_selection() {
        assert_eq!(select_host(std::iter::empty::<&Vim>()), None);
        let empty = Vim::new(HostId(0), ResourceVector::ZERO);
        assert_eq!(select_host([&empty]), None);
        let mut a = Vim::new(HostId(1), rv(2));
        let b = Vim::new(HostId(2), rv(2));
        assert_eq!(select_host([&empty, &b, &a]), Some(HostId(1)));
        a.insert(VehicleId(1), rv(1), GeoPoint::default(), SimTime::ZERO);
        assert_eq!(select_host([&empty, &a, &b]), Some(HostId(1)));
        let c = Vim::new(HostId(3), rv(5));
        assert_eq!(select_host([&a, &b, &c]), Some(HostId(3)));
    }

    #[test]
    fn local_fallback() {
        let mut snap = test_support::snapshot(&[]);
        let d = rv(1);
        assert_eq!(resolve_placement(Placement::None, &snap, &d), Placement::None);
        snap.local_free = rv(1);
        assert_eq!(resolve_placement(Placement::None, &snap, &d), Placement::Local);
        let r = Placement::Remote(VehicleId(3));
        assert_eq!(resolve_placement(r, &snap, &d), r);
    }

    #[test]
    fn request_phases_only_advance() {
        let mut r = InstantiationRequest::new(0, UeId(0), AppId(0), rv(1), SimTime::ZERO);
        for p in [
            RequestPhase::AtOrchestrator,
            RequestPhase::Discovery,
            RequestPhase::HostSelected,
            RequestPhase::AtVim,
            RequestPhase::Scheduled,
            RequestPhase::ViAllocating,
            RequestPhase::Scheduled,
            RequestPhase::ViAllocating,
            RequestPhase::Completed,
        ] {
            r.advance(p).unwrap();
        }
        assert!(r.advance(RequestPhase::Rejected).is_err());
        let mut r = InstantiationRequest::new(1, UeId(0), AppId(1), rv(1), SimTime::ZERO);
        r.advance(RequestPhase::Discovery).unwrap();
        assert!(r.advance(RequestPhase::AtOrchestrator).is_err());
    }
}
