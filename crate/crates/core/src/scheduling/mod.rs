//! Placement policies over a snapshot of a host's vehicle pool.
//!
//! Every policy implements [`Scheduler`] and is constructed by name through a
//! [`SchedulerRegistry`], so scenarios and the command line select one at run
//! time. Policies only choose among vehicles; falling back to the host's own
//! infrastructure is the VIM's decision.

mod best_first;
mod registry;
pub mod residency;
mod round_robin;

pub use best_first::BestFirst;
pub use registry::{SchedulerFactory, SchedulerParams, SchedulerRegistry};
pub use residency::{
    build_residency_model, predict_remaining, ResidencyBin, ResidencyModel, ResidencyScheduler,
};
pub use round_robin::RoundRobin;

use crate::domain::{Placement, ResourceVector};
use crate::kernel::SimTime;
use crate::orchestration::PoolSnapshot;

pub trait Scheduler: Send {
    /// Registry name, e.g. `"round-robin"`.
    fn name(&self) -> &str;

    /// Choose a vehicle for `demand`. Returns `Placement::Remote(v)` with
    /// `fits(demand, v.free)` or `Placement::None` when no vehicle fits.
    fn decide(&mut self, snapshot: &PoolSnapshot, demand: &ResourceVector, now: SimTime)
        -> Placement;
}
