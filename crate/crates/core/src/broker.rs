//! System-level publish/subscribe broker.
//!
//! Hosts subscribe with their area of interest; vehicles publish join and
//! leave announcements carrying their position. A publication is delivered to
//! every host with a subscription whose area contains that position. The
//! broker also answers reward queries for a position.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::domain::{AreaOfInterest, GeoPoint, HostId, ResourceVector, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubscriptionId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub struct Subscription {
    pub id: SubscriptionId,
    pub subscriber: HostId,
    pub filter: AreaOfInterest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PublicationKind {
    Join,
    Leave,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Publication {
    pub vehicle_id: VehicleId,
    pub location: GeoPoint,
    pub offered: ResourceVector,
    pub kind: PublicationKind,
    pub endpoint: String,
}

#[derive(Debug, Default)]
pub struct Broker {
    subscriptions: Vec<Subscription>,
    rewards: BTreeMap<HostId, i64>,
    /// Outstanding joins per vehicle (joins minus leaves).
    joined: BTreeMap<VehicleId, u32>,
    next_id: u32,
}

impl Broker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Subscribe `host` to publications inside `filter`. Re-subscribing the
    /// same pair returns the existing id.
    pub fn subscribe(&mut self, host: HostId, filter: AreaOfInterest) -> SubscriptionId {
        if let Some(s) = self
            .subscriptions
            .iter()
            .find(|s| s.subscriber == host && s.filter == filter)
        {
            return s.id;
        }
        let id = SubscriptionId(self.next_id);
        self.next_id += 1;
        self.subscriptions.push(Subscription {
            id,
            subscriber: host,
            filter,
        });
        id
    }

    /// Set the integer reward `host` offers vehicles in its areas.
    pub fn set_reward(&mut self, host: HostId, reward: i64) {
        self.rewards.insert(host, reward);
    }

    pub fn subscriptions(&self) -> &[Subscription] {
        &self.subscriptions
    }

    /// Hosts whose filters contain `p`, ascending by host id, each once.
    pub fn matching_hosts(&self, p: &GeoPoint) -> Vec<HostId> {
        let set: BTreeSet<HostId> = self
            .subscriptions
            .iter()
            .filter(|s| s.filter.contains(p))
            .map(|s| s.subscriber)
            .collect();
        set.into_iter().collect()
    }

    /// Match a publication and return the hosts to notify. A leave for a
    /// vehicle with no outstanding join is dropped with a warning.
    pub fn publish(&mut self, p: &Publication) -> Vec<HostId> {
        match p.kind {
            PublicationKind::Join => {
                *self.joined.entry(p.vehicle_id).or_default() += 1;
            }
            PublicationKind::Leave => match self.joined.get_mut(&p.vehicle_id) {
                Some(n) if *n > 0 => {
                    *n -= 1;
                    if *n == 0 {
                        self.joined.remove(&p.vehicle_id);
                    }
                }
                _ => {
                    warn!("leave publication for unknown vehicle {}", p.vehicle_id);
                    return Vec::new();
                }
            },
        }
        self.matching_hosts(&p.location)
    }

    /// Reward offers of every subscribed host whose area contains `location`,
    /// ordered by host id.
    pub fn get_rewards(&self, _vehicle: VehicleId, location: &GeoPoint) -> Vec<(HostId, i64)> {
        self.matching_hosts(location)
            .into_iter()
            .map(|h| (h, self.rewards.get(&h).copied().unwrap_or(0)))
            .collect()
    }

    pub fn outstanding_joins(&self, vehicle: VehicleId) -> u32 {
        self.joined.get(&vehicle).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aoi(x: f64, y: f64, r: f64) -> AreaOfInterest {
        AreaOfInterest::new(GeoPoint::new(x, y), r)
    }

    fn join_at(v: u32, x: f64, y: f64) -> Publication {
        Publication {
            vehicle_id: VehicleId(v),
            location: GeoPoint::new(x, y),
            offered: ResourceVector::new(4, 2048, 1000),
            kind: PublicationKind::Join,
            endpoint: format!("vi://vehicle-{v}"),
        }
    }

    #[test]
    fn subscribe_is_idempotent() {
        let mut b = Broker::new();
        let a = b.subscribe(HostId(1), aoi(0.0, 0.0, 10.0));
        let again = b.subscribe(HostId(1), aoi(0.0, 0.0, 10.0));
        let other = b.subscribe(HostId(2), aoi(0.0, 0.0, 10.0));
        assert_eq!(a, again);
        assert_ne!(a, other);
        assert_eq!(b.publish(&join_at(1, 1.0, 1.0)), vec![HostId(1), HostId(2)]);
    }

    #[test]
    fn single_and_no_match() {
        let mut b = Broker::new();
        b.subscribe(HostId(0), aoi(0.0, 0.0, 100.0));
        assert_eq!(b.publish(&join_at(1, 10.0, 0.0)).len(), 1);
        assert_eq!(b.publish(&join_at(2, 500.0, 0.0)).len(), 0);
    }

    #[test]
    fn leave_for_unknown_vehicle_notifies_nobody() {
        let mut b = Broker::new();
        b.subscribe(HostId(0), aoi(0.0, 0.0, 100.0));
        let mut p = join_at(9, 0.0, 0.0);
        p.kind = PublicationKind::Leave;
        assert!(b.publish(&p).is_empty());
        p.kind = PublicationKind::Join;
        b.publish(&p);
        p.kind = PublicationKind::Leave;
        assert_eq!(b.publish(&p), vec![HostId(0)]);
        assert_eq!(b.outstanding_joins(VehicleId(9)), 0);
    }

    #[test]
    fn rewards_by_position() {
        let mut b = Broker::new();
        b.subscribe(HostId(1), aoi(0.0, 0.0, 100.0));
        b.set_reward(HostId(1), 10);
        assert_eq!(
            b.get_rewards(VehicleId(1), &GeoPoint::new(5.0, 5.0)),
            vec![(HostId(1), 10)]
        );
        assert!(b.get_rewards(VehicleId(1), &GeoPoint::new(500.0, 5.0)).is_empty());
    }

    #[test]
    fn overlapping_hosts_ordered_by_id() {
        let mut b = Broker::new();
        b.subscribe(HostId(7), aoi(50.0, 0.0, 100.0));
        b.subscribe(HostId(2), aoi(0.0, 0.0, 100.0));
        b.set_reward(HostId(7), 3);
        b.set_reward(HostId(2), 5);
        assert_eq!(
            b.get_rewards(VehicleId(1), &GeoPoint::new(25.0, 0.0)),
            vec![(HostId(2), 5), (HostId(7), 3)]
        );
    }
}
