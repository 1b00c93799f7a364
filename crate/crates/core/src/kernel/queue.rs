use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::SimTime;
use crate::error::{Error, Result};

/// A timestamped unit of work. `(fire_at, seq)` is unique per engine.
#[derive(Debug, Clone)]
pub struct SimEvent<P> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub payload: P,
}

struct Queued<P>(SimEvent<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.fire_at == other.0.fire_at && self.0.seq == other.0.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap: invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .fire_at
            .cmp(&self.0.fire_at)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Single-threaded discrete-event engine: a clock plus a priority queue
/// ordered by `(fire_at, seq)`, ties broken by insertion order.
pub struct Engine<P> {
    now: SimTime,
    next_seq: u64,
    processed: u64,
    queue: BinaryHeap<Queued<P>>,
}

impl<P> Default for Engine<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Engine<P> {
    pub fn new() -> Self {
        Engine {
            now: SimTime::ZERO,
            next_seq: 0,
            processed: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn scheduled(&self) -> u64 {
        self.next_seq
    }

    /// Enqueue `payload` to fire at `at`. Scheduling in the past is a logic
    /// bug in the caller and is rejected.
    pub fn schedule(&mut self, at: SimTime, payload: P) -> Result<u64> {
        if at < self.now {
            return Err(Error::invariant(
                self.now.as_micros(),
                format!("event scheduled in the past (fire_at={})", at.as_micros()),
            ));
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(SimEvent {
            fire_at: at,
            seq,
            payload,
        }));
        Ok(seq)
    }

    /// Pop the next event if it fires no later than `horizon`, advancing the
    /// clock to its timestamp. `None` means either the queue is empty or the
    /// next event lies beyond the horizon.
    pub fn pop_until(&mut self, horizon: SimTime) -> Option<SimEvent<P>> {
        match self.queue.peek() {
            Some(q) if q.0.fire_at <= horizon => {
                let ev = self.queue.pop().map(|q| q.0)?;
                self.now = ev.fire_at;
                self.processed += 1;
                Some(ev)
            }
            Some(_) => {
                self.now = self.now.max(horizon);
                None
            }
            None => None,
        }
    }

    /// Pop the next event regardless of time. `None` signals that the
    /// simulation is complete.
    pub fn pop(&mut self) -> Option<SimEvent<P>> {
        self.pop_until(SimTime(u64::MAX))
    }

    /// Process every event with `fire_at <= horizon` in order, handing each to
    /// `handler` together with the engine so it can schedule follow-ups.
    /// Returns the number of events processed by this call.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F) -> Result<u64>
    where
        F: FnMut(&mut Engine<P>, SimEvent<P>) -> Result<()>,
    {
        let mut count = 0;
        while let Some(ev) = self.pop_until(horizon) {
            handler(self, ev)?;
            count += 1;
        }
        Ok(count)
    }
}
