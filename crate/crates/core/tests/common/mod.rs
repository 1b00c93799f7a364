//! Helpers shared by the property, workload and acceptance tests: brute-force
//! scheduler references with a random snapshot generator, and workload
//! statistics checks. The references are written from the policy definitions
//! and share no code with the library's schedulers.

#![allow(dead_code)]

pub mod stats;

use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use vmec::domain::{GeoPoint, Placement, ResourceVector, VehicleId};
use vmec::kernel::SimTime;
use vmec::orchestration::{PoolEntry, PoolSnapshot};
use vmec::scheduling::{ResidencyBin, ResidencyModel};

pub const DAY_US: u64 = 86_400_000_000;

/// One placement problem: a snapshot, a demand and the decision time.
#[derive(Debug, Clone)]
pub struct Case {
    pub snapshot: PoolSnapshot,
    pub demand: ResourceVector,
    pub now: SimTime,
}

/// Free vectors are drawn from a small range so that both fitting and
/// non-fitting vehicles are common; join times collide often to exercise
/// tie-breaking.
pub fn random_case<R: Rng>(rng: &mut R, max_vehicles: usize) -> Case {
    let n = rng.random_range(0..=max_vehicles);
    let mut ids: Vec<u32> = (0..40).collect();
    ids.shuffle(rng);
    let mut seq = 0u64;
    let mut vehicles = Vec::with_capacity(n);
    for id in ids.into_iter().take(n) {
        seq += rng.random_range(1..4);
        let join_us = rng.random_range(0..8u64) * 3_600_000_000 + rng.random_range(0..3u64) * 600_000_000;
        vehicles.push(PoolEntry {
            vehicle: VehicleId(id),
            seq,
            free: ResourceVector::new(rng.random_range(0..4), rng.random_range(0..4) * 256, rng.random_range(0..4) * 100),
            join_time: SimTime(join_us),
            location: GeoPoint::default(),
        });
    }
    let now = SimTime(8 * 3_600_000_000 + rng.random_range(0..4 * 3_600_000_000u64));
    let demand = ResourceVector::new(rng.random_range(0..3), rng.random_range(0..3) * 256, rng.random_range(0..3) * 100);
    Case { snapshot: PoolSnapshot { vehicles, local_free: ResourceVector::ZERO, snapshot_time: now }, demand, now }
}

/// Whole-second bin means so that the reference and the library agree on
/// microsecond rounding without sharing conversion code.
pub fn random_model<R: Rng>(rng: &mut R) -> Arc<ResidencyModel> {
    let bin_minutes = *[10u32, 30, 60, 180, 1440].choose(rng).unwrap();
    let bins = (0..1440 / bin_minutes)
        .map(|_| ResidencyBin { mean_s: f64::from(rng.random_range(0..6u32) * 1800), std_s: 0.0, n: 1 })
        .collect();
    Arc::new(ResidencyModel::new(bin_minutes, bins).unwrap())
}

pub fn fits_ref(demand: &ResourceVector, free: &ResourceVector) -> bool {
    demand.cpu_units <= free.cpu_units && demand.ram_mb <= free.ram_mb && demand.storage_mb <= free.storage_mb
}

/// A placement is feasible when it names a pool member with room for the
/// demand, or is `None` only when no member has room.
pub fn feasible(case: &Case, p: Placement) -> bool {
    let any_fits = case.snapshot.vehicles.iter().any(|e| fits_ref(&case.demand, &e.free));
    match p {
        Placement::Remote(v) => case
            .snapshot
            .vehicles
            .iter()
            .any(|e| e.vehicle == v && fits_ref(&case.demand, &e.free)),
        Placement::None => !any_fits,
        Placement::Local => false,
    }
}

fn remote(e: Option<&PoolEntry>) -> Placement {
    e.map_or(Placement::None, |e| Placement::Remote(e.vehicle))
}

/// Fitting vehicle with the smallest insertion sequence number.
pub fn best_first_ref(case: &Case) -> Placement {
    let mut best: Option<&PoolEntry> = None;
    for e in &case.snapshot.vehicles {
        if fits_ref(&case.demand, &e.free) && best.is_none_or(|b| e.seq < b.seq) {
            best = Some(e);
        }
    }
    remote(best)
}

/// Fitting vehicle with the smallest sequence number above `last`, wrapping
/// to the smallest overall. Returns the placement and the new cursor.
pub fn round_robin_ref(case: &Case, last: Option<u64>) -> (Placement, Option<u64>) {
    let fitting: Vec<&PoolEntry> = case.snapshot.vehicles.iter().filter(|e| fits_ref(&case.demand, &e.free)).collect();
    let after = fitting.iter().filter(|e| last.is_none_or(|l| e.seq > l)).min_by_key(|e| e.seq);
    let chosen = after.or_else(|| fitting.iter().min_by_key(|e| e.seq)).copied();
    (remote(chosen), chosen.map(|e| e.seq).or(last))
}

/// Remaining residency in microseconds, from first principles.
pub fn remaining_ref(model: &ResidencyModel, join: SimTime, now: SimTime) -> u64 {
    let bin_us = u64::from(model.bin_minutes()) * 60_000_000;
    let bin = ((join.0 % DAY_US) / bin_us) as usize;
    let mean_us = model.bins()[bin].mean_s as u64 * 1_000_000;
    mean_us.saturating_sub(now.0.saturating_sub(join.0))
}

/// Fitting vehicle with the longest remaining residency; ties to the earliest
/// join, then the smallest id.
pub fn residency_ref(case: &Case, model: &ResidencyModel) -> Placement {
    let mut best: Option<(&PoolEntry, u64)> = None;
    for e in &case.snapshot.vehicles {
        if !fits_ref(&case.demand, &e.free) {
            continue;
        }
        let r = remaining_ref(model, e.join_time, case.now);
        let better = match best {
            None => true,
            Some((b, br)) => {
                r > br || (r == br && (e.join_time < b.join_time || (e.join_time == b.join_time && e.vehicle < b.vehicle)))
            }
        };
        if better {
            best = Some((e, r));
        }
    }
    remote(best.map(|(e, _)| e))
}
