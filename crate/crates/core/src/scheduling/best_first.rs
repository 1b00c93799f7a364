use super::Scheduler;
use crate::domain::{fits, Placement, ResourceVector};
use crate::kernel::SimTime;
use crate::orchestration::PoolSnapshot;

/// First vehicle in pool-insertion order with enough free resources.
#[derive(Debug, Default, Clone)]
pub struct BestFirst;

impl BestFirst {
    pub const NAME: &'static str = "best-first";
}

impl Scheduler for BestFirst {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn decide(&mut self, snapshot: &PoolSnapshot, demand: &ResourceVector, _now: SimTime) -> Placement {
        snapshot
            .vehicles
            .iter()
            .find(|v| fits(demand, &v.free))
            .map_or(Placement::None, |v| Placement::Remote(v.vehicle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::VehicleId;
    use crate::orchestration::test_support::snapshot;

    #[test]
    fn picks_first_fitting_in_insertion_order() {
        let snap = snapshot(&[(1, 4), (2, 8)]);
        let d = ResourceVector::new(2, 0, 0);
        assert_eq!(BestFirst.decide(&snap, &d, SimTime::ZERO), Placement::Remote(VehicleId(1)));
    }

    #[test]
    fn skips_full_vehicles() {
        let snap = snapshot(&[(1, 0), (2, 8)]);
        let d = ResourceVector::new(2, 0, 0);
        assert_eq!(BestFirst.decide(&snap, &d, SimTime::ZERO), Placement::Remote(VehicleId(2)));
    }

    #[test]
    fn none_when_nothing_fits() {
        let snap = snapshot(&[(1, 1), (2, 1)]);
        let d = ResourceVector::new(2, 0, 0);
        assert_eq!(BestFirst.decide(&snap, &d, SimTime::ZERO), Placement::None);
    }
}
