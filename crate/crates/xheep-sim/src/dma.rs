//! Multi-channel DMA engine: 1D/2D strided transfers executed as
//! read-then-write bus transaction pairs, one outstanding transaction per
//! channel, with a completion (or error) interrupt per channel.
//!
//! Strides are signed byte offsets, so reversal and im2col-style gather
//! patterns express directly. The descriptor is the programming interface;
//! no register map is modeled.

use serde::{Deserialize, Serialize};

use crate::config::AddressMap;
use crate::engine::Cycle;
use crate::error::{SimError, SimResult};
use crate::interconnect::{BusResponse, BusTransaction, MasterIdx};
use crate::memory::AccessKind;

/// A 1D/2D transfer program. `outer_count == 1` degenerates to 1D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmaDescriptor {
    pub channel: u32,
    pub src_base: u32,
    pub dst_base: u32,
    pub element_size_bytes: u8,
    pub inner_count: u32,
    #[serde(default = "one")]
    pub outer_count: u32,
    #[serde(default)]
    pub src_inner_stride: i64,
    #[serde(default)]
    pub src_outer_stride: i64,
    #[serde(default)]
    pub dst_inner_stride: i64,
    #[serde(default)]
    pub dst_outer_stride: i64,
}

fn one() -> u32 {
    1
}

impl DmaDescriptor {
    pub fn total_elements(&self) -> u64 {
        self.inner_count as u64 * self.outer_count as u64
    }

    fn check_shape(&self) -> SimResult<()> {
        if self.inner_count == 0 || self.outer_count == 0 {
            return Err(SimError::Config(
                "inner_count and outer_count must be positive".into(),
            ));
        }
        if !matches!(self.element_size_bytes, 1 | 2 | 4) {
            return Err(SimError::Config(format!(
                "element_size_bytes must be 1, 2, or 4 (got {})",
                self.element_size_bytes
            )));
        }
        Ok(())
    }
}

/// Enumerate the (src, dst) address pairs of a descriptor in transfer
/// order: row-major, outer index j slow, inner index i fast.
///
/// src = src_base + j*src_outer_stride + i*src_inner_stride, and likewise
/// for dst. Fails with ConfigError when any address leaves the 32-bit
/// space.
pub fn address_sequence(desc: &DmaDescriptor) -> SimResult<Vec<(u32, u32)>> {
    desc.check_shape()?;
    let mut out = Vec::with_capacity(desc.total_elements() as usize);
    for j in 0..desc.outer_count as i64 {
        for i in 0..desc.inner_count as i64 {
            let src = desc.src_base as i64 + j * desc.src_outer_stride + i * desc.src_inner_stride;
            let dst = desc.dst_base as i64 + j * desc.dst_outer_stride + i * desc.dst_inner_stride;
            let last = desc.element_size_bytes as i64 - 1;
            for (label, a) in [("src", src), ("dst", dst)] {
                if a < 0 || a + last > u32::MAX as i64 {
                    return Err(SimError::Config(format!(
                        "{label} address {a:#x} at (i={i}, j={j}) outside the 32-bit space"
                    )));
                }
            }
            out.push((src as u32, dst as u32));
        }
    }
    Ok(out)
}

/// Validate that every address a descriptor will generate decodes to a
/// mapped region. Runs at configure time so a bad program never starts.
pub fn validate_against_map(desc: &DmaDescriptor, map: &AddressMap) -> SimResult<()> {
    for (src, dst) in address_sequence(desc)? {
        for addr in [src, dst] {
            let r = map
                .decode(addr)
                .map_err(|_| SimError::Config(format!("address {addr:#010x} decodes to no region")))?;
            let region = map.region(r);
            if r.offset as u64 + desc.element_size_bytes as u64 > region.size_bytes as u64 {
                return Err(SimError::Config(format!(
                    "element at {addr:#010x} crosses the end of region {}",
                    region.name
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Read,
    Write,
}

#[derive(Debug, Clone)]
struct Running {
    desc: DmaDescriptor,
    i: u32,
    j: u32,
    /// Start-of-row addresses; stepped by the outer strides.
    src_row: i64,
    dst_row: i64,
    /// Current element addresses; stepped by the inner strides.
    src_addr: i64,
    dst_addr: i64,
    phase: Phase,
    latched: u32,
    elements_done: u64,
}

/// What the platform must do after feeding a response to a channel.
#[derive(Debug, Clone)]
pub enum DmaAction {
    /// Issue the next transaction for this channel.
    Post(BusTransaction),
    /// An element finished; optionally issue the next element's read.
    /// `next: None` means the whole descriptor is done.
    ElementDone {
        element: u64,
        src: u32,
        dst: u32,
        next: Option<BusTransaction>,
    },
    /// A transaction failed; the channel is idle and flags the error.
    Abort(SimError),
}

/// One DMA channel: walks the descriptor incrementally (running pointers
/// stepped by strides), issuing one read then one write per element.
#[derive(Debug, Clone)]
pub struct DmaChannel {
    pub id: u32,
    master: MasterIdx,
    run: Option<Running>,
    pub last_error: Option<SimError>,
    pub completed_elements: u64,
}

impl DmaChannel {
    pub fn new(id: u32, master: MasterIdx) -> Self {
        DmaChannel {
            id,
            master,
            run: None,
            last_error: None,
            completed_elements: 0,
        }
    }

    pub fn busy(&self) -> bool {
        self.run.is_some()
    }

    /// Accept a descriptor and produce the first read transaction.
    pub fn start(&mut self, desc: DmaDescriptor, now: Cycle) -> SimResult<BusTransaction> {
        if self.busy() {
            return Err(SimError::ChannelBusy(self.id));
        }
        desc.check_shape()?;
        self.last_error = None;
        let run = Running {
            src_row: desc.src_base as i64,
            dst_row: desc.dst_base as i64,
            src_addr: desc.src_base as i64,
            dst_addr: desc.dst_base as i64,
            i: 0,
            j: 0,
            phase: Phase::Read,
            latched: 0,
            elements_done: 0,
            desc,
        };
        let txn = read_txn(&run, self.master, now);
        self.run = Some(run);
        Ok(txn)
    }

    /// Feed a completed transaction back into the channel state machine.
    pub fn on_response(&mut self, response: &BusResponse, now: Cycle) -> DmaAction {
        let Some(run) = self.run.as_mut() else {
            panic!("dma{}: response delivered to an idle channel", self.id);
        };
        let value = match &response.outcome {
            Ok(v) => *v,
            Err(e) => {
                let err = e.clone();
                self.run = None;
                self.last_error = Some(err.clone());
                return DmaAction::Abort(err);
            }
        };
        match run.phase {
            Phase::Read => {
                run.latched = value;
                run.phase = Phase::Write;
                DmaAction::Post(write_txn(run, self.master, now))
            }
            Phase::Write => {
                run.elements_done += 1;
                self.completed_elements += 1;
                let element = run.elements_done - 1;
                let (src, dst) = (run.src_addr as u32, run.dst_addr as u32);
                if run.elements_done == run.desc.total_elements() {
                    let action = DmaAction::ElementDone {
                        element,
                        src,
                        dst,
                        next: None,
                    };
                    self.run = None;
                    return action;
                }
                // Step to the next element: inner stride within a row,
                // outer stride from row start at a row boundary.
                run.i += 1;
                if run.i == run.desc.inner_count {
                    run.i = 0;
                    run.j += 1;
                    run.src_row += run.desc.src_outer_stride;
                    run.dst_row += run.desc.dst_outer_stride;
                    run.src_addr = run.src_row;
                    run.dst_addr = run.dst_row;
                } else {
                    run.src_addr += run.desc.src_inner_stride;
                    run.dst_addr += run.desc.dst_inner_stride;
                }
                run.phase = Phase::Read;
                DmaAction::ElementDone {
                    element,
                    src,
                    dst,
                    next: Some(read_txn(run, self.master, now)),
                }
            }
        }
    }
}

fn read_txn(run: &Running, master: MasterIdx, now: Cycle) -> BusTransaction {
    BusTransaction {
        master,
        kind: AccessKind::Read,
        address: run.src_addr as u32,
        width: run.desc.element_size_bytes,
        data: 0,
        issue_cycle: now,
    }
}

fn write_txn(run: &Running, master: MasterIdx, now: Cycle) -> BusTransaction {
    BusTransaction {
        master,
        kind: AccessKind::Write,
        address: run.dst_addr as u32,
        width: run.desc.element_size_bytes,
        data: run.latched,
        issue_cycle: now,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc_1d(elements: u32, stride: i64) -> DmaDescriptor {
        DmaDescriptor {
            channel: 0,
            src_base: 0,
            dst_base: 0x100,
            element_size_bytes: 4,
            inner_count: elements,
            outer_count: 1,
            src_inner_stride: stride,
            src_outer_stride: 0,
            dst_inner_stride: stride,
            dst_outer_stride: 0,
        }
    }

    #[test]
    fn linear_copy_addresses() {
        let seq = address_sequence(&desc_1d(4, 4)).unwrap();
        let srcs: Vec<u32> = seq.iter().map(|(s, _)| *s).collect();
        assert_eq!(srcs, vec![0x0, 0x4, 0x8, 0xC]);
    }

    #[test]
    fn gather_2d_addresses() {
        let desc = DmaDescriptor {
            channel: 0,
            src_base: 0,
            dst_base: 0x1000,
            element_size_bytes: 4,
            inner_count: 2,
            outer_count: 2,
            src_inner_stride: 4,
            src_outer_stride: 32,
            dst_inner_stride: 4,
            dst_outer_stride: 8,
        };
        let seq = address_sequence(&desc).unwrap();
        let srcs: Vec<u32> = seq.iter().map(|(s, _)| *s).collect();
        assert_eq!(srcs, vec![0x0, 0x4, 0x20, 0x24]);
        let dsts: Vec<u32> = seq.iter().map(|(_, d)| *d).collect();
        assert_eq!(dsts, vec![0x1000, 0x1004, 0x1008, 0x100C]);
    }

    #[test]
    fn single_element_is_the_base_pair() {
        let desc = DmaDescriptor {
            inner_count: 1,
            outer_count: 1,
            ..desc_1d(1, 4)
        };
        assert_eq!(address_sequence(&desc).unwrap(), vec![(0x0, 0x100)]);
    }

    #[test]
    fn negative_strides_walk_backwards() {
        let desc = DmaDescriptor {
            src_base: 0xC,
            src_inner_stride: -4,
            ..desc_1d(4, 4)
        };
        let seq = address_sequence(&desc).unwrap();
        let srcs: Vec<u32> = seq.iter().map(|(s, _)| *s).collect();
        assert_eq!(srcs, vec![0xC, 0x8, 0x4, 0x0]);
    }

    #[test]
    fn underflow_is_a_config_error() {
        let desc = DmaDescriptor {
            src_base: 0,
            src_inner_stride: -4,
            ..desc_1d(2, 4)
        };
        assert!(matches!(
            address_sequence(&desc),
            Err(SimError::Config(_))
        ));
    }

    #[test]
    fn zero_counts_rejected() {
        let desc = DmaDescriptor {
            inner_count: 0,
            ..desc_1d(1, 4)
        };
        assert!(address_sequence(&desc).is_err());
    }

    #[test]
    fn busy_channel_rejects_second_descriptor() {
        let mut ch = DmaChannel::new(0, 2);
        ch.start(desc_1d(2, 4), 0).unwrap();
        assert!(matches!(
            ch.start(desc_1d(2, 4), 0),
            Err(SimError::ChannelBusy(0))
        ));
    }

    #[test]
    fn incremental_walk_matches_formula() {
        let desc = DmaDescriptor {
            channel: 0,
            src_base: 0x40,
            dst_base: 0x200,
            element_size_bytes: 2,
            inner_count: 3,
            outer_count: 4,
            src_inner_stride: -2,
            src_outer_stride: 16,
            dst_inner_stride: 2,
            dst_outer_stride: -8,
        };
        let expect = address_sequence(&desc).unwrap();
        let mut ch = DmaChannel::new(0, 2);
        let mut observed = Vec::new();
        let mut txn = ch.start(desc, 0).unwrap();
        loop {
            // Answer whatever the channel asked for.
            let resp = BusResponse {
                master: txn.master,
                kind: txn.kind,
                address: txn.address,
                width: txn.width,
                issue_cycle: txn.issue_cycle,
                grant_cycle: txn.issue_cycle,
                complete_cycle: txn.issue_cycle + 1,
                slave: "bank0".into(),
                outcome: Ok(0),
            };
            match ch.on_response(&resp, resp.complete_cycle) {
                DmaAction::Post(next) => txn = next,
                DmaAction::ElementDone { src, dst, next, .. } => {
                    observed.push((src, dst));
                    match next {
                        Some(n) => txn = n,
                        None => break,
                    }
                }
                other => panic!("unexpected action {other:?}"),
            }
        }
        assert_eq!(observed, expect);
        assert!(!ch.busy());
    }
}
