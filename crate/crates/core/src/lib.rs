//! Discrete-event simulator for MEC hosts that lease computing resources from
//! parked vehicles.

pub mod broker;
pub mod calibrate;
pub mod cli;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod kernel;
pub mod lifecycle;
pub mod metrics;
pub mod mobility;
pub mod orchestration;
pub mod output;
pub mod scheduling;
pub mod workload;
pub mod world;

pub use error::{Error, Result};
