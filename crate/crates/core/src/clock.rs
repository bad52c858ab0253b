//! Discrete global clock and periodic listener registry.

use crate::error::KernelError;

/// Simulation time, in ticks. One tick is one time unit.
pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockEntry<L> {
    pub listener: L,
    pub period: u64,
    pub registered_at: Tick,
}

impl<L> ClockEntry<L> {
    /// A listener fires at `t` iff `t >= registered_at` and
    /// `(t - registered_at) % period == 0`.
    pub fn fires_at(&self, t: Tick) -> bool {
        t >= self.registered_at && (t - self.registered_at).is_multiple_of(self.period)
    }
}

/// Periodic callbacks keyed by listener, kept in registration order.
#[derive(Debug, Clone)]
pub struct ClockSchedule<L> {
    now: Tick,
    entries: Vec<ClockEntry<L>>,
}

impl<L> Default for ClockSchedule<L> {
    fn default() -> Self {
        ClockSchedule {
            now: 0,
            entries: Vec::new(),
        }
    }
}

impl<L: Copy + Eq> ClockSchedule<L> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current_time(&self) -> Tick {
        self.now
    }

    pub fn entries(&self) -> &[ClockEntry<L>] {
        &self.entries
    }

    pub fn add_listener(&mut self, listener: L, period: u64) -> Result<(), KernelError> {
        if period < 1 {
            return Err(KernelError::InvalidPeriod(period));
        }
        self.entries.push(ClockEntry {
            listener,
            period,
            registered_at: self.now,
        });
        Ok(())
    }

    /// Drops every entry held by `listener`. Returns how many were removed.
    pub fn remove_listener(&mut self, listener: L) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| e.listener != listener);
        before - self.entries.len()
    }

    pub fn is_registered(&self, listener: L) -> bool {
        self.entries.iter().any(|e| e.listener == listener)
    }

    /// Listeners due at the current tick, in registration order. The result
    /// is a snapshot: later registrations and removals do not affect it.
    pub fn due(&self) -> Vec<L> {
        self.entries
            .iter()
            .filter(|e| e.fires_at(self.now))
            .map(|e| e.listener)
            .collect()
    }

    pub(crate) fn advance(&mut self) {
        self.now += 1;
    }
}
