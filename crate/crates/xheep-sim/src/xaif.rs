//! The accelerator socket: a plug-in contract bundling a slave window,
//! optional master ports, an interrupt line, and a power domain, plus the
//! reference near-memory vector accelerator that occupies one memory bank.
//!
//! Commands are delivered as typed structs (the data plane), while the
//! timed "go" write travels through the bus like any other slave access;
//! no register map is invented. Third-party models implement
//! [`AcceleratorModel`] and register by name.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::AcceleratorConfig;
use crate::error::{SimError, SimResult};
use crate::interconnect::MasterIdx;
use crate::power::DomainId;

/// Offload kernels understood by the reference accelerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelId {
    /// Pure busy period; no data effect.
    #[default]
    TimedNop,
    /// Elementwise y = scale*x + bias over `element_count` 32-bit words
    /// starting at `word_offset`, applied in the embedded bank.
    ScaleAdd,
}

/// One offload command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccelCommand {
    pub kernel: KernelId,
    pub element_count: u64,
    /// Positive rational throughput; busy duration is
    /// ceil(element_count * cycles_per_element).
    pub cycles_per_element: f64,
    pub word_offset: u32,
    pub scale: i32,
    pub bias: i32,
}

impl Default for AccelCommand {
    fn default() -> Self {
        AccelCommand {
            kernel: KernelId::TimedNop,
            element_count: 0,
            cycles_per_element: 0.25,
            word_offset: 0,
            scale: 1,
            bias: 0,
        }
    }
}

impl AccelCommand {
    pub fn busy_cycles(&self) -> u64 {
        (self.element_count as f64 * self.cycles_per_element).ceil() as u64
    }

    fn check(&self) -> SimResult<()> {
        if self.cycles_per_element <= 0.0 || self.cycles_per_element.is_nan() {
            return Err(SimError::Config(
                "cycles_per_element must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Life-cycle state visible through the socket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelState {
    Idle,
    Busy,
    Done,
}

/// Effect of a window write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelAction {
    None,
    /// Begin a busy period of the given length.
    Start { busy_cycles: u64 },
}

/// Behavioral contract every plug-in accelerator implements.
///
/// Models are stepped by the single-threaded engine: the socket delivers
/// window accesses and a `finish` call at the end of each busy period.
/// Observable nondeterminism is forbidden.
pub trait AcceleratorModel: fmt::Debug {
    fn kind(&self) -> &str;
    fn reset(&mut self);
    /// Typed command delivery; rejected while a kernel is running.
    fn load_command(&mut self, cmd: &AccelCommand) -> SimResult<()>;
    /// Timed window write. A write to offset 0 launches the loaded command.
    fn window_write(&mut self, offset: u32, value: u32) -> SimResult<AccelAction>;
    fn window_read(&self, offset: u32) -> SimResult<u32>;
    fn state(&self) -> AccelState;
    /// End of the busy period: apply any in-bank data transformation.
    /// Must move the model out of Busy.
    fn finish(&mut self, bank_contents: Option<&mut [u8]>);
    /// Bank this model embeds in, when near-memory.
    fn embedded_bank(&self) -> Option<u32>;
}

/// Socket wiring for one occupied slot.
#[derive(Debug)]
pub struct XaifSocket {
    pub slot: u32,
    /// Region index of the slave window in the address map.
    pub window_region: usize,
    pub irq_line: u32,
    pub power_domain: DomainId,
    pub master_port: Option<MasterIdx>,
    pub model: Box<dyn AcceleratorModel>,
    /// Busy length of the in-flight offload, for activity accounting.
    pub active_busy_cycles: u64,
    pub offloads_completed: u64,
}

/// The reference near-memory vector accelerator: programmable vector unit
/// embedded in one SRAM bank. While busy the bank is in compute mode and
/// bus access to it fails.
#[derive(Debug)]
pub struct NearMemVector {
    bank_index: u32,
    state: AccelState,
    pending: Option<AccelCommand>,
    active: Option<AccelCommand>,
    completed: u64,
}

impl NearMemVector {
    pub fn new(bank_index: u32) -> Self {
        NearMemVector {
            bank_index,
            state: AccelState::Idle,
            pending: None,
            active: None,
            completed: 0,
        }
    }
}

/// Window register offsets (read side).
const REG_STATUS: u32 = 0x0;
const REG_COMPLETED: u32 = 0x4;

impl AcceleratorModel for NearMemVector {
    fn kind(&self) -> &str {
        "near-mem-vector"
    }

    fn reset(&mut self) {
        self.state = AccelState::Idle;
        self.pending = None;
        self.active = None;
        self.completed = 0;
    }

    fn load_command(&mut self, cmd: &AccelCommand) -> SimResult<()> {
        if self.state == AccelState::Busy {
            return Err(SimError::AcceleratorBusy(self.bank_index));
        }
        cmd.check()?;
        self.pending = Some(cmd.clone());
        self.state = AccelState::Idle;
        Ok(())
    }

    fn window_write(&mut self, offset: u32, _value: u32) -> SimResult<AccelAction> {
        if self.state == AccelState::Busy {
            return Err(SimError::Slave("near-mem-vector busy".into()));
        }
        if offset == 0 {
            let cmd = self
                .pending
                .take()
                .ok_or_else(|| SimError::Slave("no command loaded".into()))?;
            let busy_cycles = cmd.busy_cycles();
            self.active = Some(cmd);
            self.state = AccelState::Busy;
            Ok(AccelAction::Start { busy_cycles })
        } else {
            // Scratch registers have no effect in this model.
            Ok(AccelAction::None)
        }
    }

    fn window_read(&self, offset: u32) -> SimResult<u32> {
        match offset {
            REG_STATUS => Ok(match self.state {
                AccelState::Idle => 0,
                AccelState::Busy => 1,
                AccelState::Done => 2,
            }),
            REG_COMPLETED => Ok(self.completed as u32),
            _ => Ok(0),
        }
    }

    fn state(&self) -> AccelState {
        self.state
    }

    fn finish(&mut self, bank_contents: Option<&mut [u8]>) {
        let cmd = self.active.take().expect("finish without an active kernel");
        if cmd.kernel == KernelId::ScaleAdd {
            if let Some(bank) = bank_contents {
                let start = cmd.word_offset as usize * 4;
                for k in 0..cmd.element_count as usize {
                    let lo = start + 4 * k;
                    if lo + 4 > bank.len() {
                        break;
                    }
                    let x = i32::from_le_bytes(bank[lo..lo + 4].try_into().unwrap());
                    let y = x.wrapping_mul(cmd.scale).wrapping_add(cmd.bias);
                    bank[lo..lo + 4].copy_from_slice(&y.to_le_bytes());
                }
            }
        }
        self.completed += 1;
        self.state = AccelState::Done;
    }

    fn embedded_bank(&self) -> Option<u32> {
        Some(self.bank_index)
    }
}

/// Factory signature for registered accelerator models.
pub type AccelFactory = fn(&AcceleratorConfig) -> SimResult<Box<dyn AcceleratorModel>>;

/// Name-indexed model registry. The reference model ships registered.
#[derive(Clone)]
pub struct AccelRegistry {
    factories: BTreeMap<String, AccelFactory>,
}

impl Default for AccelRegistry {
    fn default() -> Self {
        let mut r = AccelRegistry {
            factories: BTreeMap::new(),
        };
        r.register("near-mem-vector", |cfg| {
            Ok(Box::new(NearMemVector::new(cfg.bank_index)))
        });
        r
    }
}

impl AccelRegistry {
    pub fn register(&mut self, name: &str, factory: AccelFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn instantiate(&self, cfg: &AcceleratorConfig) -> SimResult<Box<dyn AcceleratorModel>> {
        let factory = self
            .factories
            .get(&cfg.kind)
            .ok_or_else(|| SimError::Config(format!("unknown accelerator kind `{}`", cfg.kind)))?;
        factory(cfg)
    }
}

impl fmt::Debug for AccelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AccelRegistry")
            .field("kinds", &self.factories.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busy_duration_rounds_up() {
        let cmd = AccelCommand {
            element_count: 1024,
            cycles_per_element: 0.25,
            ..Default::default()
        };
        assert_eq!(cmd.busy_cycles(), 256);
        let cmd = AccelCommand {
            element_count: 3,
            cycles_per_element: 0.4,
            ..Default::default()
        };
        assert_eq!(cmd.busy_cycles(), 2); // ceil(1.2)
    }

    #[test]
    fn go_write_without_command_fails() {
        let mut m = NearMemVector::new(0);
        assert!(matches!(m.window_write(0, 1), Err(SimError::Slave(_))));
    }

    #[test]
    fn offload_lifecycle() {
        let mut m = NearMemVector::new(0);
        m.load_command(&AccelCommand {
            element_count: 8,
            cycles_per_element: 1.0,
            ..Default::default()
        })
        .unwrap();
        let action = m.window_write(0, 0).unwrap();
        assert_eq!(action, AccelAction::Start { busy_cycles: 8 });
        assert_eq!(m.state(), AccelState::Busy);
        // A second command while busy is refused.
        assert!(matches!(
            m.load_command(&AccelCommand::default()),
            Err(SimError::AcceleratorBusy(_))
        ));
        m.finish(None);
        assert_eq!(m.state(), AccelState::Done);
        assert_eq!(m.window_read(REG_COMPLETED).unwrap(), 1);
        // Loading the next command re-arms the model.
        m.load_command(&AccelCommand {
            element_count: 1,
            cycles_per_element: 1.0,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(m.state(), AccelState::Idle);
    }

    #[test]
    fn scale_add_transforms_bank_words() {
        let mut m = NearMemVector::new(0);
        m.load_command(&AccelCommand {
            kernel: KernelId::ScaleAdd,
            element_count: 2,
            cycles_per_element: 1.0,
            word_offset: 1,
            scale: 3,
            bias: 1,
        })
        .unwrap();
        m.window_write(0, 0).unwrap();
        let mut bank = vec![0u8; 16];
        bank[4..8].copy_from_slice(&5i32.to_le_bytes());
        bank[8..12].copy_from_slice(&(-2i32).to_le_bytes());
        m.finish(Some(&mut bank));
        assert_eq!(i32::from_le_bytes(bank[4..8].try_into().unwrap()), 16);
        assert_eq!(i32::from_le_bytes(bank[8..12].try_into().unwrap()), -5);
        assert_eq!(i32::from_le_bytes(bank[0..4].try_into().unwrap()), 0);
    }

    #[test]
    fn registry_instantiates_reference_model() {
        let reg = AccelRegistry::default();
        let cfg = AcceleratorConfig {
            slot: 0,
            kind: "near-mem-vector".into(),
            bank_index: 1,
        };
        let model = reg.instantiate(&cfg).unwrap();
        assert_eq!(model.embedded_bank(), Some(1));
        let cfg = AcceleratorConfig {
            slot: 0,
            kind: "warp-drive".into(),
            bank_index: 0,
        };
        assert!(reg.instantiate(&cfg).is_err());
    }
}
