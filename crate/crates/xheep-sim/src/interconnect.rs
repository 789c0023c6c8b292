//! OBI-style interconnect: address decode, per-slave arbitration, and
//! transaction timing for both bus topologies.
//!
//! Each master owns one request port (at most one outstanding transaction).
//! Every cycle with pending work the bus arbitrates: the one-at-a-time
//! topology grants a single transaction system-wide, the full crossbar
//! grants at most one per slave with distinct slaves proceeding in
//! parallel. Contenders for the same grant rotate round-robin starting
//! after the last-granted master.

use std::fmt;

use crate::config::{AddressMap, ArbitrationPolicy, BusTopology, RegionKind, RegionRef, TimingParams};
use crate::engine::Cycle;
use crate::error::SimError;
use crate::memory::AccessKind;

/// Dense master port index. Port order is fixed by the platform: CPU
/// instruction port, CPU data port, DMA channels, accelerator masters,
/// debug.
pub type MasterIdx = usize;

/// Stable labels for trace output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MasterId {
    CpuInstr,
    CpuData,
    Dma(u32),
    AccelMaster(u32),
    Debug,
}

impl fmt::Display for MasterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MasterId::CpuInstr => write!(f, "cpu_instr"),
            MasterId::CpuData => write!(f, "cpu_data"),
            MasterId::Dma(k) => write!(f, "dma{k}"),
            MasterId::AccelMaster(m) => write!(f, "accel_m{m}"),
            MasterId::Debug => write!(f, "debug"),
        }
    }
}

/// One master->slave access attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct BusTransaction {
    pub master: MasterIdx,
    pub kind: AccessKind,
    pub address: u32,
    pub width: u8,
    /// Write payload; ignored for reads.
    pub data: u32,
    pub issue_cycle: Cycle,
}

/// Completed transaction as seen by the issuing master.
#[derive(Debug, Clone, PartialEq)]
pub struct BusResponse {
    pub master: MasterIdx,
    pub kind: AccessKind,
    pub address: u32,
    pub width: u8,
    pub issue_cycle: Cycle,
    pub grant_cycle: Cycle,
    pub complete_cycle: Cycle,
    /// Slave name for the trace.
    pub slave: String,
    /// Read data (or 0 for a write ack), or the bus error.
    pub outcome: Result<u32, SimError>,
}

/// Result of one arbitration round for one request.
#[derive(Debug, Clone)]
pub enum TickOutcome {
    /// Request won arbitration this cycle.
    Granted {
        txn: BusTransaction,
        target: RegionRef,
    },
    /// No region contains the address; error response goes back to the
    /// master after the minimum completion latency.
    DecodeFailed { txn: BusTransaction },
}

#[derive(Debug, Clone)]
struct Slot {
    txn: BusTransaction,
    decode: Result<RegionRef, SimError>,
}

/// The bus model. Owns the request ports and the round-robin pointers.
#[derive(Debug, Clone)]
pub struct Interconnect {
    map: AddressMap,
    topology: BusTopology,
    policy: ArbitrationPolicy,
    slots: Vec<Option<Slot>>,
    /// Last-granted master per slave region (crossbar mode).
    rr_slave: Vec<Option<MasterIdx>>,
    /// Last-granted master system-wide (one-at-a-time mode).
    rr_global: Option<MasterIdx>,
    pub grants: u64,
    pub issued: u64,
}

impl Interconnect {
    pub fn new(
        map: AddressMap,
        topology: BusTopology,
        policy: ArbitrationPolicy,
        num_masters: usize,
    ) -> Self {
        let region_count = map.regions.len();
        Interconnect {
            map,
            topology,
            policy,
            slots: vec![None; num_masters],
            rr_slave: vec![None; region_count],
            rr_global: None,
            grants: 0,
            issued: 0,
        }
    }

    pub fn map(&self) -> &AddressMap {
        &self.map
    }

    pub fn num_masters(&self) -> usize {
        self.slots.len()
    }

    /// Post a request on a master port. One outstanding transaction per
    /// master is a hard contract; violating it is a platform bug.
    pub fn post(&mut self, txn: BusTransaction) {
        let slot = &mut self.slots[txn.master];
        assert!(
            slot.is_none(),
            "master {} already has an outstanding transaction",
            txn.master
        );
        let decode = self.map.decode(txn.address);
        self.issued += 1;
        *slot = Some(Slot { txn, decode });
    }

    pub fn pending(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// Completion latency after grant for a region class.
    pub fn completion_latency(kind: RegionKind, timing: &TimingParams) -> u64 {
        match kind {
            RegionKind::MemoryBank => timing.mem_access_cycles,
            RegionKind::Peripheral | RegionKind::AoPeripheral | RegionKind::AcceleratorWindow => {
                timing.peripheral_access_cycles
            }
        }
    }

    fn pick(&self, contenders: &[MasterIdx], last: Option<MasterIdx>) -> MasterIdx {
        debug_assert!(!contenders.is_empty());
        let m = self.slots.len();
        match self.policy {
            ArbitrationPolicy::FixedPriority => *contenders.iter().min().unwrap(),
            ArbitrationPolicy::RoundRobin => {
                // Distance from the slot just after the last-granted master.
                let start = last.map(|l| (l + 1) % m).unwrap_or(0);
                *contenders
                    .iter()
                    .min_by_key(|&&c| (c + m - start) % m)
                    .unwrap()
            }
        }
    }

    /// Run one arbitration round. Decode failures always drain; granted
    /// requests leave their port free for the next transaction.
    pub fn tick(&mut self, _cycle: Cycle) -> Vec<TickOutcome> {
        let mut outcomes = Vec::new();

        // Drain undecodable requests first; they never contend.
        for slot in self.slots.iter_mut() {
            if matches!(slot, Some(s) if s.decode.is_err()) {
                let s = slot.take().unwrap();
                outcomes.push(TickOutcome::DecodeFailed { txn: s.txn });
            }
        }

        let mut contenders: Vec<(MasterIdx, RegionRef)> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                s.as_ref()
                    .map(|s| (i, *s.decode.as_ref().expect("errors drained")))
            })
            .collect();
        if contenders.is_empty() {
            return outcomes;
        }

        match self.topology {
            BusTopology::OneAtATime => {
                let masters: Vec<MasterIdx> = contenders.iter().map(|(m, _)| *m).collect();
                let winner = self.pick(&masters, self.rr_global);
                self.rr_global = Some(winner);
                let (_, target) = contenders.iter().find(|(m, _)| *m == winner).unwrap();
                let target = *target;
                let slot = self.slots[winner].take().unwrap();
                self.grants += 1;
                outcomes.push(TickOutcome::Granted {
                    txn: slot.txn,
                    target,
                });
            }
            BusTopology::FullCrossbar => {
                contenders.sort_by_key(|(m, r)| (r.region, *m));
                let mut regions: Vec<usize> =
                    contenders.iter().map(|(_, r)| r.region).collect();
                regions.dedup();
                for region in regions {
                    let masters: Vec<MasterIdx> = contenders
                        .iter()
                        .filter(|(_, r)| r.region == region)
                        .map(|(m, _)| *m)
                        .collect();
                    let winner = self.pick(&masters, self.rr_slave[region]);
                    self.rr_slave[region] = Some(winner);
                    let (_, target) = contenders
                        .iter()
                        .find(|(m, r)| *m == winner && r.region == region)
                        .unwrap();
                    let target = *target;
                    let slot = self.slots[winner].take().unwrap();
                    self.grants += 1;
                    outcomes.push(TickOutcome::Granted {
                        txn: slot.txn,
                        target,
                    });
                }
            }
        }
        outcomes
    }
}
