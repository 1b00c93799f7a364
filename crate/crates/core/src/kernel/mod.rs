//! Deterministic discrete-event kernel: clock, event queue, seeded random
//! substreams and the parametric message-latency model.

pub mod latency;
pub mod queue;
pub mod rng;
pub mod time;
pub mod trace;

pub use latency::{LatencyModel, LinkClass, LinkLatency};
pub use queue::{Engine, SimEvent};
pub use rng::{RngStreams, SimRng};
pub use time::{SimDuration, SimTime};
pub use trace::TraceRecord;
