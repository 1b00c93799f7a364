//! Shared vocabulary: resources, geography, vehicles, hosts, applications and
//! users.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::kernel::{SimDuration, SimTime};

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(VehicleId, "v");
id_type!(HostId, "h");
id_type!(AppId, "app");
id_type!(UeId, "ue");

/// Compute, memory and storage capacity or demand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceVector {
    pub cpu_units: u64,
    pub ram_mb: u64,
    pub storage_mb: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector::new(0, 0, 0);

    pub const fn new(cpu_units: u64, ram_mb: u64, storage_mb: u64) -> Self {
        ResourceVector {
            cpu_units,
            ram_mb,
            storage_mb,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// `true` iff `self <= other` on every axis.
    pub fn le(&self, other: &ResourceVector) -> bool {
        self.cpu_units <= other.cpu_units
            && self.ram_mb <= other.ram_mb
            && self.storage_mb <= other.storage_mb
    }

    pub fn checked_sub(&self, other: &ResourceVector) -> Option<ResourceVector> {
        Some(ResourceVector {
            cpu_units: self.cpu_units.checked_sub(other.cpu_units)?,
            ram_mb: self.ram_mb.checked_sub(other.ram_mb)?,
            storage_mb: self.storage_mb.checked_sub(other.storage_mb)?,
        })
    }

    pub fn saturating_sub(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu_units: self.cpu_units.saturating_sub(other.cpu_units),
            ram_mb: self.ram_mb.saturating_sub(other.ram_mb),
            storage_mb: self.storage_mb.saturating_sub(other.storage_mb),
        }
    }

    /// Lexicographic key on (cpu, ram, storage) for ranking aggregate
    /// capacity. Not a feasibility order; use [`fits`] for that.
    pub fn rank_key(&self) -> (u64, u64, u64) {
        (self.cpu_units, self.ram_mb, self.storage_mb)
    }
}

/// `true` iff `demand <= free` componentwise.
pub fn fits(demand: &ResourceVector, free: &ResourceVector) -> bool {
    demand.le(free)
}

impl Add for ResourceVector {
    type Output = ResourceVector;
    fn add(self, rhs: ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu_units: self.cpu_units.saturating_add(rhs.cpu_units),
            ram_mb: self.ram_mb.saturating_add(rhs.ram_mb),
            storage_mb: self.storage_mb.saturating_add(rhs.storage_mb),
        }
    }
}

/// Panics on underflow; callers subtract only what they previously added.
impl Sub for ResourceVector {
    type Output = ResourceVector;
    fn sub(self, rhs: ResourceVector) -> ResourceVector {
        self.checked_sub(&rhs)
            .unwrap_or_else(|| panic!("resource underflow: {self} - {rhs}"))
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.cpu_units, self.ram_mb, self.storage_mb)
    }
}

/// Position on a planar scenario map, in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        GeoPoint { x, y }
    }

    pub fn distance(&self, other: &GeoPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Circular region from which a host recruits far-edge resources. Membership
/// is the closed disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaOfInterest {
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl AreaOfInterest {
    pub fn new(center: GeoPoint, radius_m: f64) -> Self {
        AreaOfInterest { center, radius_m }
    }

    /// Built from the center-and-diameter form hosts are configured with.
    pub fn from_diameter(center: GeoPoint, diameter_m: f64) -> Self {
        AreaOfInterest::new(center, diameter_m / 2.0)
    }

    pub fn is_valid(&self) -> bool {
        self.radius_m > 0.0 && self.radius_m.is_finite()
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        dx * dx + dy * dy <= self.radius_m * self.radius_m
    }
}

pub fn contains(aoi: &AreaOfInterest, p: &GeoPoint) -> bool {
    aoi.contains(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VehicleState {
    Outside,
    RewardPending,
    Registered,
    Departing,
    Departed,
}

/// A parked vehicle leasing its virtualization infrastructure.
#[derive(Debug, Clone)]
pub struct FarEdgeNode {
    pub id: VehicleId,
    pub location: GeoPoint,
    pub capacity: ResourceVector,
    /// What the vehicle-side VI agent has actually applied.
    pub allocated: ResourceVector,
    pub state: VehicleState,
    pub join_time: Option<SimTime>,
    pub hosted_apps: BTreeSet<AppId>,
    /// Address of the vehicle's remote VI as announced to the broker.
    pub endpoint: String,
}

impl FarEdgeNode {
    pub fn new(id: VehicleId, location: GeoPoint, capacity: ResourceVector) -> Self {
        FarEdgeNode {
            id,
            location,
            capacity,
            allocated: ResourceVector::ZERO,
            state: VehicleState::Outside,
            join_time: None,
            hosted_apps: BTreeSet::new(),
            endpoint: format!("vi://vehicle-{}", id.0),
        }
    }

    pub fn free(&self) -> ResourceVector {
        self.capacity.saturating_sub(&self.allocated)
    }

    /// Reachable by VI commands (parked and not yet gone).
    pub fn is_reachable(&self) -> bool {
        matches!(self.state, VehicleState::Registered | VehicleState::Departing)
    }
}

/// Where an application instance executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Local,
    Remote(VehicleId),
    /// Nothing fits.
    None,
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Placement::Local => f.write_str("local"),
            Placement::Remote(v) => write!(f, "remote:{v}"),
            Placement::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AppState {
    Requested,
    Scheduling,
    Instantiated,
    Running,
    MigrationPending,
    ContextTransferring,
    Terminated,
}

impl AppState {
    /// Edges of the application lifecycle graph. Rescheduling after a refused
    /// allocation is the `Scheduling -> Scheduling` self-loop.
    pub fn can_transition(self, to: AppState) -> bool {
        use AppState::*;
        match (self, to) {
            (Terminated, _) => false,
            (_, Terminated) => true,
            (Requested, Scheduling) => true,
            (Scheduling, Scheduling) | (Scheduling, Instantiated) => true,
            (Instantiated, Running) | (Instantiated, MigrationPending) => true,
            (Running, MigrationPending) => true,
            (MigrationPending, ContextTransferring) => true,
            (ContextTransferring, Running) => true,
            _ => false,
        }
    }

    pub fn is_live(self) -> bool {
        self != AppState::Terminated
    }
}

#[derive(Debug, Clone)]
pub struct AppInstance {
    pub id: AppId,
    pub ue_id: UeId,
    pub demand: ResourceVector,
    pub placement: Option<Placement>,
    pub state: AppState,
    pub context_size: u64,
    pub created_at: SimTime,
    pub terminated_at: Option<SimTime>,
}

pub const DEFAULT_CONTEXT_BYTES: u64 = 1 << 20;

impl AppInstance {
    pub fn new(id: AppId, ue_id: UeId, demand: ResourceVector, now: SimTime) -> Self {
        AppInstance {
            id,
            ue_id,
            demand,
            placement: None,
            state: AppState::Requested,
            context_size: DEFAULT_CONTEXT_BYTES,
            created_at: now,
            terminated_at: None,
        }
    }

    /// Apply a lifecycle transition, returning a description of the illegal
    /// edge on failure.
    pub fn transition(&mut self, to: AppState) -> Result<(), String> {
        if self.state.can_transition(to) {
            self.state = to;
            Ok(())
        } else {
            Err(format!("{}: illegal transition {:?} -> {:?}", self.id, self.state, to))
        }
    }

    pub fn remote_vehicle(&self) -> Option<VehicleId> {
        match self.placement {
            Some(Placement::Remote(v)) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UserEquipment {
    pub id: UeId,
    pub arrival_time: SimTime,
    pub session_duration: SimDuration,
    pub app_id: Option<AppId>,
}

impl UserEquipment {
    pub fn session_end(&self) -> SimTime {
        self.arrival_time + self.session_duration
    }
}
