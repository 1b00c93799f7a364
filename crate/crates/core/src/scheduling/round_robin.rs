use super::Scheduler;
use crate::domain::{fits, Placement, ResourceVector};
use crate::kernel::SimTime;
use crate::orchestration::PoolSnapshot;

/// Cycles through the pool in insertion order, starting after the vehicle
/// chosen last time and skipping vehicles that do not fit.
///
/// The cursor is the pool-insertion sequence number of the last choice, so a
/// departed vehicle does not disturb the cycle.
#[derive(Debug, Default, Clone)]
pub struct RoundRobin {
    last_seq: Option<u64>,
}

impl RoundRobin {
    pub const NAME: &'static str = "round-robin";

    pub fn new() -> Self {
        Self::default()
    }
}

impl Scheduler for RoundRobin {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn decide(&mut self, snapshot: &PoolSnapshot, demand: &ResourceVector, _now: SimTime) -> Placement {
        let pool = &snapshot.vehicles;
        if pool.is_empty() {
            return Placement::None;
        }
        // Entries are sorted by seq; start at the first one past the cursor.
        let start = match self.last_seq {
            Some(last) => pool.partition_point(|e| e.seq <= last) % pool.len(),
            None => 0,
        };
        let chosen = (0..pool.len())
            .map(|i| &pool[(start + i) % pool.len()])
            .find(|e| fits(demand, &e.free));
        match chosen {
            Some(e) => {
                self.last_seq = Some(e.seq);
                Placement::Remote(e.vehicle)
            }
            None => Placement::None,
        }
    }
}
