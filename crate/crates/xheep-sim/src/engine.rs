//! Deterministic discrete-event engine.
//!
//! A global cycle counter plus an event queue. Events carry a target
//! component id; same-cycle events are delivered in (component id,
//! insertion sequence) order, which makes identical (config, scenario,
//! seed) runs produce byte-identical traces. One simulated cycle equals
//! 1/clock_hz seconds for energy integration; the engine itself never
//! consults wall-clock time.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

use crate::interconnect::BusResponse;
use crate::memory::BankTransition;
use crate::power::TransitionTicket;

/// Simulation time in clock cycles.
pub type Cycle = u64;

/// Dense component identifier; also the same-cycle delivery priority.
pub type ComponentId = u32;

/// The bus arbitrates after every other component has acted in a cycle.
pub const BUS_COMPONENT: ComponentId = ComponentId::MAX;

/// Power transition completion, for a bank or a non-bank domain.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionKind {
    Domain(TransitionTicket),
    Bank(BankTransition),
}

/// What an event does when delivered.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// Internal arbitration tick; not traced.
    BusArbitrate,
    /// Completion of a granted transaction, delivered to the master.
    BusGrant { response: BusResponse },
    DmaElementDone { channel: u32, element: u64 },
    DmaChannelDone { channel: u32, ok: bool },
    IrqRaise { line: u32 },
    PowerTransitionDone { ticket: TransitionKind },
    AccelDone { slot: u32 },
    CpuResume,
    Custom(String),
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::BusArbitrate => write!(f, "BusArbitrate"),
            Payload::BusGrant { response } => {
                let status = match &response.outcome {
                    Ok(v) => format!("ok data=0x{v:08x}"),
                    Err(e) => format!("err {e}"),
                };
                write!(
                    f,
                    "BusGrant slave={} addr=0x{:08x} kind={:?} width={} issue={} grant={} complete={} {}",
                    response.slave,
                    response.address,
                    response.kind,
                    response.width,
                    response.issue_cycle,
                    response.grant_cycle,
                    response.complete_cycle,
                    status
                )
            }
            Payload::DmaElementDone { channel, element } => {
                write!(f, "DmaElementDone channel={channel} element={element}")
            }
            Payload::DmaChannelDone { channel, ok } => {
                write!(f, "DmaChannelDone channel={channel} ok={ok}")
            }
            Payload::IrqRaise { line } => write!(f, "IrqRaise line={line}"),
            Payload::PowerTransitionDone { ticket } => match ticket {
                TransitionKind::Domain(t) => {
                    write!(f, "PowerTransitionDone domain={} target={}", t.domain, t.target)
                }
                TransitionKind::Bank(t) => {
                    write!(f, "PowerTransitionDone domain=bank{} target={}", t.bank, t.target)
                }
            },
            Payload::AccelDone { slot } => write!(f, "AccelDone slot={slot}"),
            Payload::CpuResume => write!(f, "CpuResume"),
            Payload::Custom(tag) => write!(f, "Custom tag={tag}"),
        }
    }
}

/// A scheduled occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: Cycle,
    pub target: ComponentId,
    pub payload: Payload,
}

#[derive(Debug)]
struct Entry {
    time: Cycle,
    target: ComponentId,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.target, self.seq).cmp(&(other.time, other.target, other.seq))
    }
}

/// Result of draining the queue up to a limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineSummary {
    pub final_cycle: Cycle,
    pub events_processed: u64,
}

/// The event queue and clock. Single-threaded by construction; independent
/// instances may run concurrently.
#[derive(Debug, Default)]
pub struct Engine {
    now: Cycle,
    queue: BinaryHeap<Reverse<Entry>>,
    seq: u64,
    processed: u64,
}

impl Engine {
    pub fn new() -> Self {
        Engine::default()
    }

    pub fn now(&self) -> Cycle {
        self.now
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn next_time(&self) -> Option<Cycle> {
        self.queue.peek().map(|Reverse(e)| e.time)
    }

    /// Enqueue an event. Scheduling in the past is a contract violation.
    pub fn schedule(&mut self, event: Event) {
        assert!(
            event.time >= self.now,
            "event scheduled in the past: t={} < now={} ({})",
            event.time,
            self.now,
            event.payload
        );
        self.queue.push(Reverse(Entry {
            time: event.time,
            target: event.target,
            seq: self.seq,
            payload: event.payload,
        }));
        self.seq += 1;
    }

    /// Pop the next event if it is due at or before `limit`, advancing the
    /// clock to its timestamp.
    pub fn pop_due(&mut self, limit: Cycle) -> Option<Event> {
        match self.queue.peek() {
            Some(Reverse(e)) if e.time <= limit => {
                let Reverse(e) = self.queue.pop().unwrap();
                debug_assert!(e.time >= self.now, "event queue went backwards");
                self.now = e.time;
                self.processed += 1;
                Some(Event {
                    time: e.time,
                    target: e.target,
                    payload: e.payload,
                })
            }
            _ => None,
        }
    }

    /// Advance idle time (no events) up to `t`.
    pub fn advance_to(&mut self, t: Cycle) {
        assert!(t >= self.now, "cannot advance time backwards");
        debug_assert!(self.next_time().is_none_or(|n| n >= t));
        self.now = t;
    }

    /// Process events in order until the queue is empty or the next event
    /// lies beyond `limit`. If events remain, time advances to `limit`
    /// (that much idle time has demonstrably passed); if the queue empties,
    /// time rests at the last processed event.
    pub fn run_until(&mut self, limit: Cycle, mut handler: impl FnMut(Event)) -> EngineSummary {
        while let Some(ev) = self.pop_due(limit) {
            handler(ev);
        }
        if !self.queue.is_empty() && self.now < limit {
            self.now = limit;
        }
        EngineSummary {
            final_cycle: self.now,
            events_processed: self.processed,
        }
    }
}
