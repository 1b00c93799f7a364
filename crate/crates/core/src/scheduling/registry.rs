use std::collections::BTreeMap;
use std::sync::Arc;

use super::{BestFirst, ResidencyModel, ResidencyScheduler, RoundRobin, Scheduler};
use crate::error::{Error, Result};

/// Inputs a factory may need when constructing a policy.
#[derive(Debug, Clone, Default)]
pub struct SchedulerParams {
    pub residency_model: Option<Arc<ResidencyModel>>,
}

pub type SchedulerFactory =
    Box<dyn Fn(&SchedulerParams) -> Result<Box<dyn Scheduler>> + Send + Sync>;

/// Name-keyed table of scheduler constructors.
pub struct SchedulerRegistry {
    factories: BTreeMap<String, SchedulerFactory>,
}

impl Default for SchedulerRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl SchedulerRegistry {
    pub fn empty() -> Self {
        SchedulerRegistry {
            factories: BTreeMap::new(),
        }
    }

    /// `best-first`, `round-robin` and `residency`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(BestFirst::NAME, Box::new(|_| Ok(Box::new(BestFirst))));
        r.register(RoundRobin::NAME, Box::new(|_| Ok(Box::new(RoundRobin::new()))));
        r.register(
            ResidencyScheduler::NAME,
            Box::new(|p| {
                let model = p.residency_model.clone().ok_or_else(|| {
                    Error::config("the residency scheduler needs a residency model")
                })?;
                Ok(Box::new(ResidencyScheduler::new(model)))
            }),
        );
        r
    }

    /// Register `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &str, factory: SchedulerFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn create(&self, name: &str, params: &SchedulerParams) -> Result<Box<dyn Scheduler>> {
        let f = self.factories.get(name).ok_or_else(|| {
            Error::config(format!(
                "unknown scheduler '{name}' (known: {})",
                self.names().join(", ")
            ))
        })?;
        f(params)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}
