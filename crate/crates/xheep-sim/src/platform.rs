//! The assembled platform: engine, bus, banks, DMA channels, power
//! manager, and accelerator sockets wired together, plus the CPU-side
//! driver operations that scenario programs and benchmarks call.
//!
//! Timing model: a slave performs its work at the grant cycle and the
//! response reaches the master after the completion latency (one cycle
//! for banks, two for peripherals and accelerator windows). The bus
//! arbitrates last within each cycle, so requests posted while earlier
//! events of the same cycle are handled still contend in that cycle.

use serde::Serialize;

use crate::config::{AddressMap, PlatformConfig, Region, RegionKind, RegionRef};
use crate::dma::{self, DmaAction, DmaChannel, DmaDescriptor};
use crate::engine::{Cycle, ComponentId, Engine, Event, Payload, TransitionKind, BUS_COMPONENT};
use crate::error::{SimError, SimResult};
use crate::interconnect::{BusResponse, BusTransaction, Interconnect, MasterId, MasterIdx, TickOutcome};
use crate::memory::{AccessKind, MemoryBank};
use crate::power::{DomainId, IrqSource, PowerManager, PowerState, StateCycles};
use crate::xaif::{AccelAction, AccelCommand, AccelRegistry, AcceleratorModel, XaifSocket};

/// Event-class counters consumed by the energy model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ActivityCounters {
    pub cpu_active_cycles: u64,
    pub accel_active_cycles: Vec<u64>,
    pub bus_grants: u64,
    pub mem_accesses: Vec<u64>,
    pub dma_elements: Vec<u64>,
    pub peripheral_accesses: u64,
}

/// Everything a completed run reports: final time, events processed, and
/// the per-component cycle/activity counters the energy module integrates.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_cycle: Cycle,
    pub events_processed: u64,
    pub activity: ActivityCounters,
    /// Per-domain cycles spent in each power state (banks included).
    pub domain_cycles: Vec<(String, StateCycles)>,
    pub issued_txns: u64,
    pub resolved_txns: u64,
    pub pending_txns: u64,
}

struct ComponentIds {
    cpu: ComponentId,
    power: ComponentId,
    dma0: ComponentId,
    accel0: ComponentId,
}

/// Master port layout: CPU instruction and data ports, DMA channels,
/// optional dedicated accelerator ports, debug last.
const MASTER_CPU_INSTR: MasterIdx = 0;
const MASTER_CPU_DATA: MasterIdx = 1;

pub struct Platform {
    pub cfg: PlatformConfig,
    map: AddressMap,
    engine: Engine,
    bus: Interconnect,
    banks: Vec<MemoryBank>,
    power: PowerManager,
    dma: Vec<DmaChannel>,
    sockets: Vec<Option<XaifSocket>>,
    activity: ActivityCounters,
    observed_transfers: Vec<Vec<(u32, u32)>>,
    ids: ComponentIds,
    component_names: Vec<String>,
    master_labels: Vec<String>,
    trace_enabled: bool,
    trace: Vec<String>,
    bus_tick_at: Option<Cycle>,
    cpu_response: Option<BusResponse>,
    cpu_compute_pending: bool,
    resolved_txns: u64,
    in_flight_responses: u64,
}

impl Platform {
    pub fn new(cfg: &PlatformConfig) -> SimResult<Self> {
        Self::with_registry(cfg, &AccelRegistry::default())
    }

    /// Build a platform, instantiating configured accelerators from the
    /// given registry (third-party models register there by name).
    pub fn with_registry(cfg: &PlatformConfig, registry: &AccelRegistry) -> SimResult<Self> {
        let report = cfg.validate();
        if !report.is_valid() {
            return Err(SimError::Config(report.to_string()));
        }
        let map = cfg.build_address_map();
        let bank_count = cfg.bank_count as usize;
        let dma_count = cfg.dma_channel_count as usize;
        let slot_count = cfg.accelerator_slots as usize;
        let accel_masters = if cfg.dedicated_accel_masters {
            slot_count
        } else {
            0
        };
        let num_masters = 2 + dma_count + accel_masters + 1; // +1 debug

        let ids = ComponentIds {
            cpu: 0,
            power: 1,
            dma0: 2 + bank_count as ComponentId,
            accel0: 2 + (bank_count + dma_count) as ComponentId,
        };
        let mut component_names = vec!["cpu".to_string(), "power".to_string()];
        for i in 0..bank_count {
            component_names.push(format!("bank{i}"));
        }
        for k in 0..dma_count {
            component_names.push(format!("dma{k}"));
        }
        for s in 0..slot_count {
            component_names.push(format!("accel{s}"));
        }

        let mut master_labels = vec![
            MasterId::CpuInstr.to_string(),
            MasterId::CpuData.to_string(),
        ];
        for k in 0..dma_count {
            master_labels.push(MasterId::Dma(k as u32).to_string());
        }
        for m in 0..accel_masters {
            master_labels.push(MasterId::AccelMaster(m as u32).to_string());
        }
        master_labels.push(MasterId::Debug.to_string());

        let banks = (0..cfg.bank_count)
            .map(|i| {
                let gateable = !cfg.non_gateable_banks.contains(&i);
                MemoryBank::new(i, cfg.bank_size_bytes, gateable)
            })
            .collect();
        let dma = (0..cfg.dma_channel_count)
            .map(|k| DmaChannel::new(k, 2 + k as usize))
            .collect();

        let mut platform = Platform {
            map: map.clone(),
            engine: Engine::new(),
            bus: Interconnect::new(map, cfg.bus_topology, cfg.arbitration, num_masters),
            banks,
            power: PowerManager::new(cfg),
            dma,
            sockets: (0..slot_count).map(|_| None).collect(),
            activity: ActivityCounters {
                accel_active_cycles: vec![0; slot_count],
                mem_accesses: vec![0; bank_count],
                dma_elements: vec![0; dma_count],
                ..Default::default()
            },
            observed_transfers: vec![Vec::new(); dma_count],
            ids,
            component_names,
            master_labels,
            trace_enabled: false,
            trace: Vec::new(),
            bus_tick_at: None,
            cpu_response: None,
            cpu_compute_pending: false,
            resolved_txns: 0,
            in_flight_responses: 0,
            cfg: cfg.clone(),
        };
        for acc in &cfg.accelerators {
            let model = registry.instantiate(acc)?;
            platform.attach(acc.slot, model)?;
        }
        Ok(platform)
    }

    pub fn now(&self) -> Cycle {
        self.engine.now()
    }

    pub fn map(&self) -> &AddressMap {
        &self.map
    }

    pub fn activity(&self) -> &ActivityCounters {
        &self.activity
    }

    pub fn bank(&self, i: u32) -> &MemoryBank {
        &self.banks[i as usize]
    }

    pub fn socket(&self, slot: u32) -> Option<&XaifSocket> {
        self.sockets.get(slot as usize).and_then(|s| s.as_ref())
    }

    pub fn dma_error(&self, channel: u32) -> Option<&SimError> {
        self.dma[channel as usize].last_error.as_ref()
    }

    pub fn dma_busy(&self, channel: u32) -> bool {
        self.dma[channel as usize].busy()
    }

    pub fn dma_completed_elements(&self, channel: u32) -> u64 {
        self.dma[channel as usize].completed_elements
    }

    /// (src, dst) pairs in the order elements actually completed.
    pub fn observed_transfers(&self, channel: u32) -> &[(u32, u32)] {
        &self.observed_transfers[channel as usize]
    }

    pub fn irq_pending(&self, line: u32) -> bool {
        self.power.irq_pending(line)
    }

    pub fn irq_line(&self, source: IrqSource) -> u32 {
        self.power.irq_map.line(source)
    }

    /// Power state of any domain, banks included.
    pub fn domain_state(&self, id: DomainId) -> PowerState {
        match id {
            DomainId::Bank(i) => self.banks[i as usize].power_state,
            other => self.power.state_of(other),
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace_enabled = true;
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        std::mem::take(&mut self.trace)
    }

    // ------------------------------------------------------------------
    // Socket management

    /// Wire an accelerator into a slot: window, irq line, power domain,
    /// and (when configured) a dedicated master port.
    pub fn attach(
        &mut self,
        slot: u32,
        mut model: Box<dyn AcceleratorModel>,
    ) -> SimResult<&XaifSocket> {
        if slot >= self.cfg.accelerator_slots {
            return Err(SimError::NoSuchSlot(slot));
        }
        if self.sockets[slot as usize].is_some() {
            return Err(SimError::SlotOccupied(slot));
        }
        if let Some(b) = model.embedded_bank() {
            if b >= self.cfg.bank_count {
                return Err(SimError::Config(format!(
                    "accelerator embeds in bank {b}, which does not exist"
                )));
            }
        }
        let window_region = self
            .map
            .regions
            .iter()
            .position(|r| r.kind == RegionKind::AcceleratorWindow && r.index == slot)
            .expect("window region exists for every slot");
        let master_port = if self.cfg.dedicated_accel_masters {
            Some(2 + self.dma.len() + slot as usize)
        } else {
            None
        };
        model.reset();
        let socket = XaifSocket {
            slot,
            window_region,
            irq_line: self.power.irq_map.line(IrqSource::Accelerator(slot)),
            power_domain: DomainId::Accelerator(slot),
            master_port,
            model,
            active_busy_cycles: 0,
            offloads_completed: 0,
        };
        self.sockets[slot as usize] = Some(socket);
        Ok(self.sockets[slot as usize].as_ref().unwrap())
    }

    // ------------------------------------------------------------------
    // CPU-side driver operations

    /// Burn CPU cycles (a compute segment). Returns when the segment ends.
    pub fn compute(&mut self, cycles: u64) -> SimResult<()> {
        if cycles == 0 {
            return Ok(());
        }
        self.check_cpu_on()?;
        self.activity.cpu_active_cycles += cycles;
        self.cpu_compute_pending = true;
        let at = self.engine.now() + cycles;
        self.schedule(at, self.ids.cpu, Payload::Custom("compute-done".into()));
        self.pump_until(|p| !p.cpu_compute_pending)
    }

    pub fn cpu_read(&mut self, address: u32, width: u8) -> SimResult<u32> {
        self.cpu_access(AccessKind::Read, address, width, 0)
    }

    pub fn cpu_write(&mut self, address: u32, width: u8, data: u32) -> SimResult<u32> {
        self.cpu_access(AccessKind::Write, address, width, data)
    }

    fn cpu_access(
        &mut self,
        kind: AccessKind,
        address: u32,
        width: u8,
        data: u32,
    ) -> SimResult<u32> {
        self.check_cpu_on()?;
        assert!(self.cpu_response.is_none(), "cpu transaction already in flight");
        let txn = BusTransaction {
            master: MASTER_CPU_DATA,
            kind,
            address,
            width,
            data,
            issue_cycle: self.engine.now(),
        };
        self.bus.post(txn);
        self.ensure_bus_tick();
        self.pump_until(|p| p.cpu_response.is_some())?;
        let resp = self.cpu_response.take().unwrap();
        self.activity.cpu_active_cycles += resp.complete_cycle - resp.issue_cycle;
        resp.outcome
    }

    /// Validate a descriptor against the address map and start the channel.
    pub fn start_dma(&mut self, desc: DmaDescriptor) -> SimResult<()> {
        let k = desc.channel;
        if k >= self.cfg.dma_channel_count {
            return Err(SimError::Scenario(format!("dma channel {k} not configured")));
        }
        dma::validate_against_map(&desc, &self.map)?;
        let txn = self.dma[k as usize].start(desc, self.engine.now())?;
        self.bus.post(txn);
        self.ensure_bus_tick();
        Ok(())
    }

    /// Load a command into a socket and issue the timed "go" write through
    /// the bus. Returns once the write completes; the busy period runs in
    /// the background and ends with the socket's interrupt.
    pub fn offload(&mut self, slot: u32, cmd: AccelCommand) -> SimResult<()> {
        let socket = self
            .sockets
            .get_mut(slot as usize)
            .ok_or(SimError::NoSuchSlot(slot))?
            .as_mut()
            .ok_or(SimError::NoSuchSlot(slot))?;
        socket.model.load_command(&cmd)?;
        let go_addr = self.map.regions[socket.window_region].base;
        let code = cmd.kernel as u32;
        self.cpu_write(go_addr, 4, code)?;
        Ok(())
    }

    /// Sleep (clock-gate the CPU) until an interrupt arrives, honoring the
    /// router's wake latency. Consumes and returns the satisfying line.
    /// An already-pending flag is consumed without sleeping.
    pub fn wait_for_interrupt(&mut self, line: Option<u32>) -> SimResult<u32> {
        if let Some(l) = self.match_pending(line) {
            self.power.consume_irq(l);
            return Ok(l);
        }
        let now = self.engine.now();
        let ticket = self
            .power
            .request_transition(DomainId::Cpu, PowerState::ClockGated, now)?;
        self.schedule(
            ticket.complete_at,
            self.ids.power,
            Payload::PowerTransitionDone {
                ticket: TransitionKind::Domain(ticket),
            },
        );
        self.pump_until(|p| {
            p.match_pending(line).is_some() && p.power.state_of(DomainId::Cpu) == PowerState::On
        })?;
        // Cancel any still-pending gate request (the interrupt beat it).
        self.power.force_on(DomainId::Cpu, self.engine.now());
        let l = self.match_pending(line).unwrap();
        self.power.consume_irq(l);
        Ok(l)
    }

    fn match_pending(&self, line: Option<u32>) -> Option<u32> {
        match line {
            Some(l) => self.power.irq_pending(l).then_some(l),
            None => self.power.any_irq_pending(),
        }
    }

    /// Inject an interrupt from the host side (timer/external sources).
    pub fn raise_irq(&mut self, source: IrqSource) {
        let line = self.power.irq_map.line(source);
        self.schedule(self.engine.now(), self.ids.power, Payload::IrqRaise { line });
    }

    /// Request a power transition; completion is an event. Returns the
    /// completion cycle.
    pub fn request_power(&mut self, domain: DomainId, target: PowerState) -> SimResult<Cycle> {
        let now = self.engine.now();
        match domain {
            DomainId::Bank(i) => {
                if i >= self.cfg.bank_count {
                    return Err(SimError::Scenario(format!("bank {i} not configured")));
                }
                let ticket =
                    self.banks[i as usize].set_power_state(target, now, &self.cfg.timing)?;
                let at = ticket.complete_at;
                self.schedule(
                    at,
                    self.ids.power,
                    Payload::PowerTransitionDone {
                        ticket: TransitionKind::Bank(ticket),
                    },
                );
                Ok(at)
            }
            DomainId::Accelerator(s) => {
                let busy = self
                    .socket(s)
                    .map(|sock| sock.model.state() == crate::xaif::AccelState::Busy)
                    .unwrap_or(false);
                if busy && target != PowerState::On {
                    return Err(SimError::IllegalTransition {
                        domain: format!("accel{s} (busy)"),
                        target: target.to_string(),
                    });
                }
                self.request_domain(domain, target, now)
            }
            other => self.request_domain(other, target, now),
        }
    }

    fn request_domain(&mut self, domain: DomainId, target: PowerState, now: Cycle) -> SimResult<Cycle> {
        let ticket = self.power.request_transition(domain, target, now)?;
        let at = ticket.complete_at;
        self.schedule(
            at,
            self.ids.power,
            Payload::PowerTransitionDone {
                ticket: TransitionKind::Domain(ticket),
            },
        );
        Ok(at)
    }

    /// Request a transition and pump until the domain reaches the target.
    pub fn power_and_wait(&mut self, domain: DomainId, target: PowerState) -> SimResult<()> {
        self.request_power(domain, target)?;
        self.pump_until(|p| p.domain_state(domain) == target)
    }

    /// Host-level bank preload (debug access, no bus traffic).
    pub fn load_bank(&mut self, bank: u32, offset: u32, bytes: &[u8]) -> SimResult<()> {
        let b = self
            .banks
            .get_mut(bank as usize)
            .ok_or_else(|| SimError::Scenario(format!("bank {bank} not configured")))?;
        if !b.accessible() {
            return Err(SimError::Scenario(format!(
                "bank {bank} is not On/MemoryMode; cannot load"
            )));
        }
        let end = offset as usize + bytes.len();
        if end > b.size_bytes as usize {
            return Err(SimError::Scenario(format!(
                "load of {} bytes at {offset:#x} exceeds bank size",
                bytes.len()
            )));
        }
        b.contents_mut()[offset as usize..end].copy_from_slice(bytes);
        Ok(())
    }

    /// Host-level bank dump (debug access, no bus traffic).
    pub fn dump_bank(&self, bank: u32, offset: u32, len: u32) -> SimResult<Vec<u8>> {
        let b = self
            .banks
            .get(bank as usize)
            .ok_or_else(|| SimError::Scenario(format!("bank {bank} not configured")))?;
        if !b.accessible() {
            return Err(SimError::Scenario(format!(
                "bank {bank} is not On/MemoryMode; cannot dump"
            )));
        }
        let end = offset as u64 + len as u64;
        if end > b.size_bytes as u64 {
            return Err(SimError::Scenario("dump range exceeds bank size".into()));
        }
        Ok(b.contents()[offset as usize..end as usize].to_vec())
    }

    // ------------------------------------------------------------------
    // Engine pumping

    /// Process all events at or before `limit`; if later events remain,
    /// idle time up to `limit` is considered elapsed.
    pub fn run_until(&mut self, limit: Cycle) {
        while let Some(ev) = self.engine.pop_due(limit) {
            self.dispatch(ev);
        }
        if !self.engine.is_empty() && self.engine.now() < limit {
            self.engine.advance_to(limit);
        }
    }

    /// Drain every pending event (descriptor chains and busy periods are
    /// finite, so this terminates).
    pub fn run_to_quiescence(&mut self) {
        while let Some(ev) = self.engine.pop_due(Cycle::MAX) {
            self.dispatch(ev);
        }
    }

    fn pump_until(&mut self, pred: impl Fn(&Platform) -> bool) -> SimResult<()> {
        loop {
            if pred(self) {
                return Ok(());
            }
            match self.engine.pop_due(Cycle::MAX) {
                Some(ev) => self.dispatch(ev),
                None => {
                    return Err(SimError::Scenario(
                        "deadlock: waiting on a condition with an empty event queue".into(),
                    ))
                }
            }
        }
    }

    /// Close a run: advance idle time to `end` when given, flush leakage
    /// accounting, and assemble the summary.
    pub fn finish(&mut self, end: Option<Cycle>) -> RunSummary {
        if let Some(t) = end {
            if t > self.engine.now() {
                self.engine.advance_to(t);
            }
        }
        let now = self.engine.now();
        for b in &mut self.banks {
            b.flush_at(now);
        }
        self.power.flush_all(now);

        let mut domain_cycles: Vec<(String, StateCycles)> = self
            .banks
            .iter()
            .map(|b| (format!("bank{}", b.index), b.state_cycles()))
            .collect();
        for (id, cyc) in self.power.domain_cycles() {
            domain_cycles.push((id.to_string(), cyc));
        }

        RunSummary {
            final_cycle: now,
            events_processed: self.engine.events_processed(),
            activity: self.activity.clone(),
            domain_cycles,
            issued_txns: self.bus.issued,
            resolved_txns: self.resolved_txns,
            pending_txns: self.bus.pending() as u64 + self.in_flight_responses,
        }
    }

    // ------------------------------------------------------------------
    // Event dispatch

    fn schedule(&mut self, time: Cycle, target: ComponentId, payload: Payload) {
        self.engine.schedule(Event {
            time,
            target,
            payload,
        });
    }

    fn ensure_bus_tick(&mut self) {
        let now = self.engine.now();
        match self.bus_tick_at {
            None => {
                self.schedule(now, BUS_COMPONENT, Payload::BusArbitrate);
                self.bus_tick_at = Some(now);
            }
            Some(ts) => debug_assert!(ts >= now, "stale bus tick at {ts} < {now}"),
        }
    }

    fn component_name(&self, id: ComponentId) -> &str {
        if id == BUS_COMPONENT {
            "bus"
        } else {
            &self.component_names[id as usize]
        }
    }

    fn dispatch(&mut self, ev: Event) {
        if self.trace_enabled && !matches!(ev.payload, Payload::BusArbitrate) {
            self.trace.push(format!(
                "{},{},{}",
                ev.time,
                self.component_name(ev.target),
                ev.payload
            ));
        }
        match ev.payload {
            Payload::BusArbitrate => self.bus_tick(ev.time),
            Payload::BusGrant { response } => self.on_response(response, ev.time),
            Payload::DmaElementDone { .. } => {}
            Payload::DmaChannelDone { channel, .. } => {
                let line = self.power.irq_map.line(IrqSource::DmaChannel(channel));
                self.schedule(ev.time, self.ids.power, Payload::IrqRaise { line });
            }
            Payload::IrqRaise { line } => {
                if self.power.route_interrupt(line) {
                    let at = ev.time + self.power.irq_latency();
                    self.schedule(at, self.ids.cpu, Payload::CpuResume);
                }
            }
            Payload::PowerTransitionDone { ticket } => match ticket {
                TransitionKind::Bank(t) => {
                    self.banks[t.bank as usize].complete_transition(&t, ev.time);
                }
                TransitionKind::Domain(t) => {
                    self.power.complete_transition(&t, ev.time);
                }
            },
            Payload::AccelDone { slot } => self.on_accel_done(slot, ev.time),
            Payload::CpuResume => self.power.on_cpu_resume(ev.time),
            Payload::Custom(tag) => {
                if tag == "compute-done" {
                    self.cpu_compute_pending = false;
                }
            }
        }
    }

    fn bus_tick(&mut self, now: Cycle) {
        self.bus_tick_at = None;
        let outcomes = self.bus.tick(now);
        for out in outcomes {
            match out {
                TickOutcome::Granted { txn, target } => self.handle_grant(txn, target, now),
                TickOutcome::DecodeFailed { txn } => {
                    let latency = self.cfg.timing.mem_access_cycles;
                    let response = BusResponse {
                        master: txn.master,
                        kind: txn.kind,
                        address: txn.address,
                        width: txn.width,
                        issue_cycle: txn.issue_cycle,
                        grant_cycle: now,
                        complete_cycle: now + latency,
                        slave: "unmapped".to_string(),
                        outcome: Err(SimError::Decode(txn.address)),
                    };
                    self.send_response(response);
                }
            }
        }
        if self.bus.pending() > 0 {
            self.schedule(now + 1, BUS_COMPONENT, Payload::BusArbitrate);
            self.bus_tick_at = Some(now + 1);
        }
    }

    fn handle_grant(&mut self, txn: BusTransaction, target: RegionRef, now: Cycle) {
        self.activity.bus_grants += 1;
        let region = self.map.regions[target.region].clone();
        let latency = Interconnect::completion_latency(region.kind, &self.cfg.timing);
        let outcome = self.slave_access(&region, target.offset, &txn, now);
        let response = BusResponse {
            master: txn.master,
            kind: txn.kind,
            address: txn.address,
            width: txn.width,
            issue_cycle: txn.issue_cycle,
            grant_cycle: now,
            complete_cycle: now + latency,
            slave: region.name,
            outcome,
        };
        self.send_response(response);
    }

    /// Perform the slave-side work of a granted transaction.
    fn slave_access(
        &mut self,
        region: &Region,
        offset: u32,
        txn: &BusTransaction,
        now: Cycle,
    ) -> Result<u32, SimError> {
        match region.kind {
            RegionKind::MemoryBank => {
                let r = self.banks[region.index as usize].access(offset, txn.kind, txn.width, txn.data);
                if r.is_ok() {
                    self.activity.mem_accesses[region.index as usize] += 1;
                }
                r
            }
            RegionKind::Peripheral => {
                if self.power.state_of(DomainId::PeripheralSubsystem) != PowerState::On {
                    return Err(SimError::Slave("peripheral subsystem is gated".into()));
                }
                self.activity.peripheral_accesses += 1;
                Ok(0)
            }
            RegionKind::AoPeripheral => {
                self.activity.peripheral_accesses += 1;
                Ok(0)
            }
            RegionKind::AcceleratorWindow => self.window_access(region.index, offset, txn, now),
        }
    }

    fn window_access(
        &mut self,
        slot: u32,
        offset: u32,
        txn: &BusTransaction,
        now: Cycle,
    ) -> Result<u32, SimError> {
        let Some(socket) = self.sockets[slot as usize].as_mut() else {
            return Err(SimError::Slave(format!("slot {slot} has no accelerator")));
        };
        if self.power.state_of(socket.power_domain) != PowerState::On {
            return Err(SimError::PoweredDown(slot));
        }
        match txn.kind {
            AccessKind::Read => socket.model.window_read(offset),
            AccessKind::Write => {
                if let Some(b) = socket.model.embedded_bank() {
                    if !self.banks[b as usize].accessible() {
                        return Err(SimError::Slave(format!(
                            "embedded bank{b} is unavailable"
                        )));
                    }
                }
                match socket.model.window_write(offset, txn.data)? {
                    AccelAction::None => Ok(0),
                    AccelAction::Start { busy_cycles } => {
                        socket.active_busy_cycles = busy_cycles;
                        if let Some(b) = socket.model.embedded_bank() {
                            self.banks[b as usize].mode = crate::memory::BankMode::ComputeMode;
                        }
                        let at = now + busy_cycles;
                        let target = self.ids.accel0 + slot as ComponentId;
                        self.schedule(at, target, Payload::AccelDone { slot });
                        Ok(0)
                    }
                }
            }
        }
    }

    fn on_accel_done(&mut self, slot: u32, now: Cycle) {
        let socket = self.sockets[slot as usize]
            .as_mut()
            .expect("done event for an attached socket");
        let bank = socket.model.embedded_bank();
        let contents = bank.map(|b| self.banks[b as usize].contents_mut());
        socket.model.finish(contents);
        if let Some(b) = bank {
            self.banks[b as usize].mode = crate::memory::BankMode::MemoryMode;
        }
        self.activity.accel_active_cycles[slot as usize] += socket.active_busy_cycles;
        socket.active_busy_cycles = 0;
        socket.offloads_completed += 1;
        let line = socket.irq_line;
        self.schedule(now, self.ids.power, Payload::IrqRaise { line });
    }

    fn send_response(&mut self, response: BusResponse) {
        let target = self.master_component(response.master);
        let at = response.complete_cycle;
        self.in_flight_responses += 1;
        self.schedule(at, target, Payload::BusGrant { response });
    }

    fn master_component(&self, master: MasterIdx) -> ComponentId {
        let dma_count = self.dma.len();
        if master == MASTER_CPU_INSTR || master == MASTER_CPU_DATA {
            self.ids.cpu
        } else if master < 2 + dma_count {
            self.ids.dma0 + (master - 2) as ComponentId
        } else if self.cfg.dedicated_accel_masters
            && master < 2 + dma_count + self.sockets.len()
        {
            self.ids.accel0 + (master - 2 - dma_count) as ComponentId
        } else {
            self.ids.cpu // debug port
        }
    }

    pub fn master_label(&self, master: MasterIdx) -> &str {
        &self.master_labels[master]
    }

    fn on_response(&mut self, response: BusResponse, now: Cycle) {
        self.in_flight_responses -= 1;
        self.resolved_txns += 1;
        let master = response.master;
        let dma_count = self.dma.len();
        if master == MASTER_CPU_DATA || master == MASTER_CPU_INSTR {
            self.cpu_response = Some(response);
        } else if master >= 2 && master < 2 + dma_count {
            let k = master - 2;
            let action = self.dma[k].on_response(&response, now);
            self.apply_dma_action(k as u32, action, now);
        }
        // Accelerator master ports carry no traffic in the reference model.
    }

    fn apply_dma_action(&mut self, channel: u32, action: DmaAction, now: Cycle) {
        let comp = self.ids.dma0 + channel as ComponentId;
        match action {
            DmaAction::Post(txn) => {
                self.bus.post(txn);
                self.ensure_bus_tick();
            }
            DmaAction::ElementDone {
                element,
                src,
                dst,
                next,
            } => {
                self.activity.dma_elements[channel as usize] += 1;
                self.observed_transfers[channel as usize].push((src, dst));
                self.schedule(now, comp, Payload::DmaElementDone { channel, element });
                match next {
                    Some(txn) => {
                        self.bus.post(txn);
                        self.ensure_bus_tick();
                    }
                    None => {
                        self.schedule(now, comp, Payload::DmaChannelDone { channel, ok: true });
                    }
                }
            }
            DmaAction::Abort(_) => {
                self.schedule(now, comp, Payload::DmaChannelDone { channel, ok: false });
            }
        }
    }

    fn check_cpu_on(&self) -> SimResult<()> {
        if self.power.state_of(DomainId::Cpu) != PowerState::On {
            return Err(SimError::Scenario("cpu domain is not On".into()));
        }
        Ok(())
    }
}
