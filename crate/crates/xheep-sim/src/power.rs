//! Power domains, gating states, and the interrupt router.
//!
//! The power manager tracks the state of every non-bank domain (bank state
//! lives with the bank itself), accumulates per-state cycle counts for the
//! leakage integral, and routes interrupt lines to the CPU wake logic.
//! AoSubsystem, Bus, and Debug are never gateable: they report On at every
//! cycle of every simulation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{PlatformConfig, TimingParams};
use crate::engine::Cycle;
use crate::error::{SimError, SimResult};

/// Gating state of a power domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerState {
    On,
    /// Clock halted: no dynamic activity, full leakage, contents preserved.
    ClockGated,
    /// Reduced-supply state: contents preserved at a fraction of leakage.
    Retentive,
    /// Supply cut: zero leakage, contents lost.
    Off,
}

impl PowerState {
    /// Leakage relative to On. Clock gating does not reduce leakage.
    pub fn leakage_fraction(self, retention_fraction: f64) -> f64 {
        match self {
            PowerState::On | PowerState::ClockGated => 1.0,
            PowerState::Retentive => retention_fraction,
            PowerState::Off => 0.0,
        }
    }
}

impl fmt::Display for PowerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PowerState::On => "On",
            PowerState::ClockGated => "ClockGated",
            PowerState::Retentive => "Retentive",
            PowerState::Off => "Off",
        };
        f.write_str(s)
    }
}

/// A gateable (or always-on) unit of the platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DomainId {
    Cpu,
    Bank(u32),
    PeripheralSubsystem,
    AoSubsystem,
    Bus,
    Debug,
    Accelerator(u32),
}

impl fmt::Display for DomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainId::Cpu => write!(f, "cpu"),
            DomainId::Bank(i) => write!(f, "bank{i}"),
            DomainId::PeripheralSubsystem => write!(f, "peripheral"),
            DomainId::AoSubsystem => write!(f, "ao"),
            DomainId::Bus => write!(f, "bus"),
            DomainId::Debug => write!(f, "debug"),
            DomainId::Accelerator(s) => write!(f, "accel{s}"),
        }
    }
}

impl DomainId {
    /// Parse the scenario-file spelling: `cpu`, `bank3`, `peripheral`, `ao`,
    /// `bus`, `debug`, `accel0`.
    pub fn parse(s: &str) -> SimResult<DomainId> {
        match s {
            "cpu" => Ok(DomainId::Cpu),
            "peripheral" => Ok(DomainId::PeripheralSubsystem),
            "ao" => Ok(DomainId::AoSubsystem),
            "bus" => Ok(DomainId::Bus),
            "debug" => Ok(DomainId::Debug),
            _ => {
                if let Some(idx) = s.strip_prefix("bank") {
                    idx.parse()
                        .map(DomainId::Bank)
                        .map_err(|_| SimError::Scenario(format!("bad domain `{s}`")))
                } else if let Some(idx) = s.strip_prefix("accel") {
                    idx.parse()
                        .map(DomainId::Accelerator)
                        .map_err(|_| SimError::Scenario(format!("bad domain `{s}`")))
                } else {
                    Err(SimError::Scenario(format!("unknown domain `{s}`")))
                }
            }
        }
    }
}

/// Cycles a domain has spent in each power state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StateCycles {
    pub on: u64,
    pub clock_gated: u64,
    pub retentive: u64,
    pub off: u64,
}

impl StateCycles {
    pub fn add(&mut self, state: PowerState, cycles: u64) {
        match state {
            PowerState::On => self.on += cycles,
            PowerState::ClockGated => self.clock_gated += cycles,
            PowerState::Retentive => self.retentive += cycles,
            PowerState::Off => self.off += cycles,
        }
    }

    pub fn total(&self) -> u64 {
        self.on + self.clock_gated + self.retentive + self.off
    }

    /// Equivalent fully-leaking cycles given a retention fraction.
    pub fn leakage_weighted(&self, retention_fraction: f64) -> f64 {
        (self.on + self.clock_gated) as f64 + retention_fraction * self.retentive as f64
    }
}

/// Sources that can raise an interrupt line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrqSource {
    DmaChannel(u32),
    Accelerator(u32),
    Timer,
    External,
}

/// Static map from interrupt sources to line ids: DMA channels first, then
/// accelerator slots, then timer and external.
#[derive(Debug, Clone)]
pub struct IrqMap {
    dma_channels: u32,
    accel_slots: u32,
}

impl IrqMap {
    pub fn new(config: &PlatformConfig) -> Self {
        IrqMap {
            dma_channels: config.dma_channel_count,
            accel_slots: config.accelerator_slots,
        }
    }

    pub fn line(&self, source: IrqSource) -> u32 {
        match source {
            IrqSource::DmaChannel(k) => k,
            IrqSource::Accelerator(s) => self.dma_channels + s,
            IrqSource::Timer => self.dma_channels + self.accel_slots,
            IrqSource::External => self.dma_channels + self.accel_slots + 1,
        }
    }

    pub fn line_count(&self) -> u32 {
        self.dma_channels + self.accel_slots + 2
    }
}

/// Per-domain live state tracked by the power manager.
#[derive(Debug, Clone)]
struct DomainState {
    id: DomainId,
    gateable: bool,
    state: PowerState,
    state_since: Cycle,
    cycles: StateCycles,
    /// In-flight transition: (target, completion cycle, generation). A new
    /// request preempts the pending one by bumping the generation.
    pending: Option<(PowerState, Cycle, u64)>,
    generation: u64,
}

impl DomainState {
    fn flush(&mut self, now: Cycle) {
        debug_assert!(now >= self.state_since);
        self.cycles.add(self.state, now - self.state_since);
        self.state_since = now;
    }
}

/// Outcome of a transition request: when it completes and under which
/// generation tag (stale completions are ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionTicket {
    pub domain: DomainId,
    pub target: PowerState,
    pub complete_at: Cycle,
    pub generation: u64,
}

/// Power manager state for every non-bank domain, plus interrupt routing.
#[derive(Debug, Clone)]
pub struct PowerManager {
    domains: Vec<DomainState>,
    timing: TimingParams,
    pub irq_map: IrqMap,
    pending_irqs: Vec<bool>,
    /// Guards against scheduling more than one CpuResume per sleep.
    resume_scheduled: bool,
}

fn non_bank_latency(
    timing: &TimingParams,
    from: PowerState,
    to: PowerState,
) -> SimResult<u64> {
    if from == to {
        return Ok(0);
    }
    match to {
        PowerState::Retentive => Err(SimError::IllegalTransition {
            domain: String::new(),
            target: "Retentive".into(),
        }),
        PowerState::ClockGated | PowerState::Off => Ok(timing.domain_gate_cycles),
        PowerState::On => Ok(match from {
            PowerState::Off => timing.domain_wake_cycles,
            _ => timing.domain_gate_cycles,
        }),
    }
}

impl PowerManager {
    pub fn new(config: &PlatformConfig) -> Self {
        let mut domains = vec![
            DomainState {
                id: DomainId::Cpu,
                gateable: true,
                state: PowerState::On,
                state_since: 0,
                cycles: StateCycles::default(),
                pending: None,
                generation: 0,
            },
            DomainState {
                id: DomainId::PeripheralSubsystem,
                gateable: true,
                state: PowerState::On,
                state_since: 0,
                cycles: StateCycles::default(),
                pending: None,
                generation: 0,
            },
            DomainState {
                id: DomainId::AoSubsystem,
                gateable: false,
                state: PowerState::On,
                state_since: 0,
                cycles: StateCycles::default(),
                pending: None,
                generation: 0,
            },
            DomainState {
                id: DomainId::Bus,
                gateable: false,
                state: PowerState::On,
                state_since: 0,
                cycles: StateCycles::default(),
                pending: None,
                generation: 0,
            },
            DomainState {
                id: DomainId::Debug,
                gateable: false,
                state: PowerState::On,
                state_since: 0,
                cycles: StateCycles::default(),
                pending: None,
                generation: 0,
            },
        ];
        for s in 0..config.accelerator_slots {
            domains.push(DomainState {
                id: DomainId::Accelerator(s),
                gateable: true,
                state: PowerState::On,
                state_since: 0,
                cycles: StateCycles::default(),
                pending: None,
                generation: 0,
            });
        }
        let irq_map = IrqMap::new(config);
        let pending_irqs = vec![false; irq_map.line_count() as usize];
        PowerManager {
            domains,
            timing: config.timing.clone(),
            irq_map,
            pending_irqs,
            resume_scheduled: false,
        }
    }

    fn domain_mut(&mut self, id: DomainId) -> &mut DomainState {
        self.domains
            .iter_mut()
            .find(|d| d.id == id)
            .expect("non-bank domain exists")
    }

    fn domain(&self, id: DomainId) -> &DomainState {
        self.domains
            .iter()
            .find(|d| d.id == id)
            .expect("non-bank domain exists")
    }

    pub fn state_of(&self, id: DomainId) -> PowerState {
        self.domain(id).state
    }

    /// Request a transition for a non-bank domain. Bank requests are routed
    /// through the bank itself by the platform.
    pub fn request_transition(
        &mut self,
        id: DomainId,
        target: PowerState,
        now: Cycle,
    ) -> SimResult<TransitionTicket> {
        let timing = self.timing.clone();
        let d = self.domain_mut(id);
        if !d.gateable && target != PowerState::On {
            return Err(SimError::IllegalTransition {
                domain: id.to_string(),
                target: target.to_string(),
            });
        }
        let latency = non_bank_latency(&timing, d.state, target).map_err(|_| {
            SimError::IllegalTransition {
                domain: id.to_string(),
                target: target.to_string(),
            }
        })?;
        d.generation += 1;
        let ticket = TransitionTicket {
            domain: id,
            target,
            complete_at: now + latency,
            generation: d.generation,
        };
        d.pending = Some((target, ticket.complete_at, d.generation));
        Ok(ticket)
    }

    /// Apply a completed transition. Stale generations (preempted requests)
    /// are ignored. Leakage accounting switches at the completion cycle.
    pub fn complete_transition(&mut self, ticket: &TransitionTicket, now: Cycle) -> bool {
        let d = self.domain_mut(ticket.domain);
        match d.pending {
            Some((target, _, generation))
                if generation == ticket.generation && target == ticket.target =>
            {
                d.pending = None;
                d.flush(now);
                d.state = ticket.target;
                true
            }
            _ => false,
        }
    }

    /// Force a domain to On immediately (CPU wake path).
    pub fn force_on(&mut self, id: DomainId, now: Cycle) {
        let d = self.domain_mut(id);
        d.pending = None;
        d.generation += 1;
        d.flush(now);
        d.state = PowerState::On;
    }

    /// Record an interrupt. Returns true when a CpuResume should be
    /// scheduled (CPU is sleeping and no resume is in flight yet).
    pub fn route_interrupt(&mut self, line: u32) -> bool {
        if let Some(flag) = self.pending_irqs.get_mut(line as usize) {
            *flag = true;
        }
        if self.state_of(DomainId::Cpu) == PowerState::ClockGated && !self.resume_scheduled {
            self.resume_scheduled = true;
            true
        } else {
            false
        }
    }

    pub fn on_cpu_resume(&mut self, now: Cycle) {
        self.resume_scheduled = false;
        if self.state_of(DomainId::Cpu) != PowerState::On {
            self.force_on(DomainId::Cpu, now);
        }
    }

    pub fn irq_pending(&self, line: u32) -> bool {
        self.pending_irqs
            .get(line as usize)
            .copied()
            .unwrap_or(false)
    }

    pub fn any_irq_pending(&self) -> Option<u32> {
        self.pending_irqs.iter().position(|&f| f).map(|i| i as u32)
    }

    /// Clear a pending flag; scenario programs consume flags explicitly.
    pub fn consume_irq(&mut self, line: u32) {
        if let Some(flag) = self.pending_irqs.get_mut(line as usize) {
            *flag = false;
        }
    }

    pub fn irq_latency(&self) -> u64 {
        self.timing.irq_latency_cycles
    }

    /// Close out leakage accounting at the end of a run.
    pub fn flush_all(&mut self, now: Cycle) {
        for d in &mut self.domains {
            d.flush(now);
        }
    }

    /// Per-domain state-cycle totals (non-bank domains only).
    pub fn domain_cycles(&self) -> Vec<(DomainId, StateCycles)> {
        self.domains.iter().map(|d| (d.id, d.cycles)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manager() -> PowerManager {
        PowerManager::new(&PlatformConfig::default())
    }

    #[test]
    fn always_on_domains_refuse_gating() {
        let mut pm = manager();
        for id in [DomainId::AoSubsystem, DomainId::Bus, DomainId::Debug] {
            let err = pm.request_transition(id, PowerState::Off, 0).unwrap_err();
            assert!(matches!(err, SimError::IllegalTransition { .. }));
            assert_eq!(pm.state_of(id), PowerState::On);
            // On -> On stays legal for non-gateable domains.
            pm.request_transition(id, PowerState::On, 0).unwrap();
        }
    }

    #[test]
    fn cpu_clock_gate_takes_one_cycle() {
        let mut pm = manager();
        let t = pm
            .request_transition(DomainId::Cpu, PowerState::ClockGated, 5)
            .unwrap();
        assert_eq!(t.complete_at, 6);
        assert_eq!(pm.state_of(DomainId::Cpu), PowerState::On);
        assert!(pm.complete_transition(&t, 6));
        assert_eq!(pm.state_of(DomainId::Cpu), PowerState::ClockGated);
    }

    #[test]
    fn preempted_transition_is_ignored() {
        let mut pm = manager();
        let first = pm
            .request_transition(DomainId::Cpu, PowerState::ClockGated, 0)
            .unwrap();
        let second = pm
            .request_transition(DomainId::Cpu, PowerState::Off, 0)
            .unwrap();
        assert!(!pm.complete_transition(&first, 1));
        assert!(pm.complete_transition(&second, 1));
        assert_eq!(pm.state_of(DomainId::Cpu), PowerState::Off);
    }

    #[test]
    fn retentive_is_bank_only() {
        let mut pm = manager();
        let err = pm
            .request_transition(DomainId::Cpu, PowerState::Retentive, 0)
            .unwrap_err();
        assert!(matches!(err, SimError::IllegalTransition { .. }));
    }

    #[test]
    fn interrupt_wakes_sleeping_cpu_once() {
        let mut pm = manager();
        let t = pm
            .request_transition(DomainId::Cpu, PowerState::ClockGated, 0)
            .unwrap();
        pm.complete_transition(&t, 1);
        assert!(pm.route_interrupt(0));
        // Second interrupt in the same sleep window sets its flag only.
        assert!(!pm.route_interrupt(1));
        assert!(pm.irq_pending(0));
        assert!(pm.irq_pending(1));
        pm.on_cpu_resume(2);
        assert_eq!(pm.state_of(DomainId::Cpu), PowerState::On);
    }

    #[test]
    fn interrupt_while_running_sets_flag_only() {
        let mut pm = manager();
        assert!(!pm.route_interrupt(0));
        assert!(pm.irq_pending(0));
        pm.consume_irq(0);
        assert!(!pm.irq_pending(0));
    }

    #[test]
    fn state_cycle_accounting() {
        let mut pm = manager();
        let t = pm
            .request_transition(DomainId::Cpu, PowerState::ClockGated, 0)
            .unwrap();
        pm.complete_transition(&t, 1); // 1 cycle On
        pm.force_on(DomainId::Cpu, 11); // 10 cycles ClockGated
        pm.flush_all(20); // 9 more On
        let cycles = pm
            .domain_cycles()
            .into_iter()
            .find(|(id, _)| *id == DomainId::Cpu)
            .unwrap()
            .1;
        assert_eq!(cycles.on, 10);
        assert_eq!(cycles.clock_gated, 10);
        assert_eq!(cycles.total(), 20);
    }

    #[test]
    fn irq_line_map_is_stable() {
        let cfg = PlatformConfig {
            dma_channel_count: 2,
            accelerator_slots: 1,
            ..Default::default()
        };
        let map = IrqMap::new(&cfg);
        assert_eq!(map.line(IrqSource::DmaChannel(0)), 0);
        assert_eq!(map.line(IrqSource::DmaChannel(1)), 1);
        assert_eq!(map.line(IrqSource::Accelerator(0)), 2);
        assert_eq!(map.line(IrqSource::Timer), 3);
        assert_eq!(map.line(IrqSource::External), 4);
        assert_eq!(map.line_count(), 5);
    }
}
