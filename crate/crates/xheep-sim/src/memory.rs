//! Banked on-chip memory with per-bank power states and access gating.
//!
//! A bank answers bus accesses only when On and in MemoryMode. Contents
//! survive On <-> ClockGated <-> Retentive transitions; entering Off clears
//! them, so any later power-up observes zero-filled memory. Byte order is
//! little-endian, matching RISC-V convention.

use crate::config::TimingParams;
use crate::engine::Cycle;
use crate::error::{SimError, SimResult};
use crate::power::{PowerState, StateCycles};

/// Bus-visible operating mode of a bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankMode {
    MemoryMode,
    /// Claimed by a near-memory accelerator; bus access fails.
    ComputeMode,
}

/// Read or write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone)]
pub struct MemoryBank {
    pub index: u32,
    pub size_bytes: u32,
    contents: Vec<u8>,
    pub power_state: PowerState,
    pub mode: BankMode,
    pub gateable: bool,
    state_since: Cycle,
    cycles: StateCycles,
    pending: Option<(PowerState, Cycle, u64)>,
    generation: u64,
}

/// Completion handle for a bank power transition (same scheme as the
/// non-bank domains: stale generations are dropped).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BankTransition {
    pub bank: u32,
    pub target: PowerState,
    pub complete_at: Cycle,
    pub generation: u64,
}

impl MemoryBank {
    pub fn new(index: u32, size_bytes: u32, gateable: bool) -> Self {
        MemoryBank {
            index,
            size_bytes,
            contents: vec![0; size_bytes as usize],
            power_state: PowerState::On,
            mode: BankMode::MemoryMode,
            gateable,
            state_since: 0,
            cycles: StateCycles::default(),
            pending: None,
            generation: 0,
        }
    }

    /// True when the bank can answer the bus.
    pub fn accessible(&self) -> bool {
        self.power_state == PowerState::On && self.mode == BankMode::MemoryMode
    }

    /// Perform a little-endian access. Out-of-range offsets are a decode
    /// bug upstream, not a runtime condition, so they abort.
    pub fn access(
        &mut self,
        offset: u32,
        kind: AccessKind,
        width: u8,
        data: u32,
    ) -> SimResult<u32> {
        assert!(
            offset as u64 + width as u64 <= self.size_bytes as u64,
            "bank{}: access at {:#x}+{} beyond size {:#x} escaped the decoder",
            self.index,
            offset,
            width,
            self.size_bytes
        );
        if !self.accessible() {
            return Err(SimError::Slave(format!(
                "bank{} is {} ({:?})",
                self.index, self.power_state, self.mode
            )));
        }
        let lo = offset as usize;
        let hi = lo + width as usize;
        match kind {
            AccessKind::Read => {
                let mut value = 0u32;
                for (i, b) in self.contents[lo..hi].iter().enumerate() {
                    value |= (*b as u32) << (8 * i);
                }
                Ok(value)
            }
            AccessKind::Write => {
                for (i, b) in self.contents[lo..hi].iter_mut().enumerate() {
                    *b = (data >> (8 * i)) as u8;
                }
                Ok(0)
            }
        }
    }

    /// Host-level (debug) view of the contents, bypassing the bus.
    pub fn contents(&self) -> &[u8] {
        &self.contents
    }

    pub fn contents_mut(&mut self) -> &mut [u8] {
        &mut self.contents
    }

    fn transition_latency(&self, target: PowerState, timing: &TimingParams) -> u64 {
        if target == self.power_state {
            return 0;
        }
        match target {
            PowerState::Off | PowerState::ClockGated | PowerState::Retentive => {
                timing.bank_gate_cycles
            }
            PowerState::On => match self.power_state {
                PowerState::Retentive => timing.bank_retentive_wake_cycles,
                PowerState::Off => timing.bank_off_wake_cycles,
                _ => timing.bank_gate_cycles,
            },
        }
    }

    /// Start a power transition. All transitions are legal for a gateable
    /// bank; a new request preempts any in-flight one. The state (and the
    /// leakage accounting) switches at the completion cycle.
    pub fn set_power_state(
        &mut self,
        target: PowerState,
        now: Cycle,
        timing: &TimingParams,
    ) -> SimResult<BankTransition> {
        if !self.gateable && target != PowerState::On {
            return Err(SimError::IllegalTransition {
                domain: format!("bank{}", self.index),
                target: target.to_string(),
            });
        }
        if self.mode == BankMode::ComputeMode {
            return Err(SimError::IllegalTransition {
                domain: format!("bank{} (compute mode)", self.index),
                target: target.to_string(),
            });
        }
        let latency = self.transition_latency(target, timing);
        self.generation += 1;
        let t = BankTransition {
            bank: self.index,
            target,
            complete_at: now + latency,
            generation: self.generation,
        };
        self.pending = Some((target, t.complete_at, t.generation));
        Ok(t)
    }

    /// Apply a completed transition; returns false for stale tickets.
    pub fn complete_transition(&mut self, ticket: &BankTransition, now: Cycle) -> bool {
        match self.pending {
            Some((target, _, generation))
                if generation == ticket.generation && target == ticket.target =>
            {
                self.pending = None;
                self.flush(now);
                let was = self.power_state;
                self.power_state = ticket.target;
                // Power loss clears contents; every later power-up reads zero.
                if ticket.target == PowerState::Off && was != PowerState::Off {
                    self.contents.fill(0);
                }
                true
            }
            _ => false,
        }
    }

    fn flush(&mut self, now: Cycle) {
        debug_assert!(now >= self.state_since);
        self.cycles.add(self.power_state, now - self.state_since);
        self.state_since = now;
    }

    pub fn flush_at(&mut self, now: Cycle) {
        self.flush(now);
    }

    pub fn state_cycles(&self) -> StateCycles {
        self.cycles
    }
}
