//! Parametric per-message latency standing in for the radio and backhaul
//! network.
//!
//! Every link class has a base latency, a uniform jitter half-width and a
//! queuing increment charged once per message already in flight on the same
//! class when the new message is sent:
//!
//! ```text
//! latency = max(0, base + U(-jitter, +jitter) + in_flight * queue_increment)
//! ```

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::time::SimDuration;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkClass {
    /// Radio hop between a UE (user device or parked vehicle) and the host.
    UeToHost,
    /// Vehicle agent to the system-level broker and back.
    VehicleToBroker,
    /// Broker to a host's VIM and back.
    BrokerToHost,
    /// Between entities inside one MEC host (VIM, MEC platform manager, AMS, local VI).
    HostInternal,
    /// Between system-level entities (UALCMP, orchestrator, platform managers).
    SystemLevel,
}

impl LinkClass {
    pub const ALL: [LinkClass; 5] = [
        LinkClass::UeToHost,
        LinkClass::VehicleToBroker,
        LinkClass::BrokerToHost,
        LinkClass::HostInternal,
        LinkClass::SystemLevel,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::UeToHost => "ue_to_host",
            LinkClass::VehicleToBroker => "vehicle_to_broker",
            LinkClass::BrokerToHost => "broker_to_host",
            LinkClass::HostInternal => "host_internal",
            LinkClass::SystemLevel => "system_level",
        }
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkLatency {
    pub base_us: u64,
    #[serde(default)]
    pub jitter_us: u64,
    #[serde(default)]
    pub queue_increment_us: u64,
}

impl LinkLatency {
    pub fn fixed(base_us: u64) -> Self {
        LinkLatency {
            base_us,
            jitter_us: 0,
            queue_increment_us: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatencyModel {
    links: BTreeMap<LinkClass, LinkLatency>,
}

impl Default for LatencyModel {
    /// Reference parameters fitted to the protocol timings this simulator
    /// reproduces; see `calibrate` for how they are derived.
    fn default() -> Self {
        LatencyModel::new()
            .with(
                LinkClass::UeToHost,
                LinkLatency {
                    base_us: 5_000,
                    jitter_us: 500,
                    queue_increment_us: 858,
                },
            )
            .with(
                LinkClass::VehicleToBroker,
                LinkLatency {
                    base_us: 3_000,
                    jitter_us: 300,
                    queue_increment_us: 220,
                },
            )
            .with(
                LinkClass::BrokerToHost,
                LinkLatency {
                    base_us: 4_000,
                    jitter_us: 400,
                    queue_increment_us: 0,
                },
            )
            .with(
                LinkClass::HostInternal,
                LinkLatency {
                    base_us: 100,
                    jitter_us: 10,
                    queue_increment_us: 0,
                },
            )
            .with(
                LinkClass::SystemLevel,
                LinkLatency {
                    base_us: 2_000,
                    jitter_us: 200,
                    queue_increment_us: 0,
                },
            )
    }
}

impl LatencyModel {
    /// A model with no links configured.
    pub fn new() -> Self {
        LatencyModel {
            links: BTreeMap::new(),
        }
    }

    /// Every link class with the same fixed latency and no jitter or queuing.
    pub fn uniform(base_us: u64) -> Self {
        let mut m = LatencyModel::new();
        for link in LinkClass::ALL {
            m.links.insert(link, LinkLatency::fixed(base_us));
        }
        m
    }

    pub fn with(mut self, link: LinkClass, params: LinkLatency) -> Self {
        self.links.insert(link, params);
        self
    }

    pub fn set(&mut self, link: LinkClass, params: LinkLatency) {
        self.links.insert(link, params);
    }

    pub fn get(&self, link: LinkClass) -> Result<&LinkLatency> {
        self.links
            .get(&link)
            .ok_or_else(|| Error::config(format!("link class {link} has no latency parameters")))
    }

    pub fn get_mut(&mut self, link: LinkClass) -> Result<&mut LinkLatency> {
        self.links
            .get_mut(&link)
            .ok_or_else(|| Error::config(format!("link class {link} has no latency parameters")))
    }

    pub fn validate(&self) -> Result<()> {
        for link in LinkClass::ALL {
            let p = self.get(link)?;
            if p.jitter_us > p.base_us {
                return Err(Error::config(format!(
                    "link {link}: jitter {}us exceeds base {}us",
                    p.jitter_us, p.base_us
                )));
            }
        }
        Ok(())
    }

    /// Draw one message latency for `link` given `in_flight` messages already
    /// travelling on that class.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        link: LinkClass,
        in_flight: u32,
        rng: &mut R,
    ) -> Result<SimDuration> {
        let p = self.get(link)?;
        let jitter = if p.jitter_us == 0 {
            0
        } else {
            let j = p.jitter_us as i64;
            rng.random_range(-j..=j)
        };
        let queued = u64::from(in_flight).saturating_mul(p.queue_increment_us) as i64;
        let total = (p.base_us as i64).saturating_add(jitter).saturating_add(queued);
        Ok(SimDuration(total.max(0) as u64))
    }
}
