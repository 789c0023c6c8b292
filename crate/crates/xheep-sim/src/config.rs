//! Platform configuration: the tunable description of a platform instance,
//! its validation rules, and the derived memory/peripheral address map.
//!
//! Configs are immutable after validation and safe to share read-only across
//! concurrent scenario runs. The JSON form is strict: unknown keys are
//! rejected so typos surface as parse errors instead of silently ignored
//! settings.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy::{AreaModel, DynamicCostTable, LeakageModel};

/// RISC-V host cores selectable for the platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoreType {
    CV32E20,
    CV32E40X,
    #[default]
    CV32E40P,
    CV32E40PX,
}

impl CoreType {
    /// The coprocessor extension interface is only present on the X variants.
    pub fn xif_available(self) -> bool {
        matches!(self, CoreType::CV32E40X | CoreType::CV32E40PX)
    }
}

/// Interconnect topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BusTopology {
    /// At most one grant per cycle system-wide. Minimal resource usage.
    OneAtATime,
    /// One grant per slave per cycle; distinct slaves proceed in parallel.
    #[default]
    FullCrossbar,
}

/// Arbitration policy among contending masters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArbitrationPolicy {
    /// Rotate priority starting after the last-granted master.
    #[default]
    RoundRobin,
    /// Lowest master id always wins.
    FixedPriority,
}

/// Optional peripherals. Enum order fixes the address-map layout order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Peripheral {
    GPIO,
    I2C,
    I2S,
    SPI,
    Timer,
    PLIC,
}

impl Peripheral {
    pub const ALL: [Peripheral; 6] = [
        Peripheral::GPIO,
        Peripheral::I2C,
        Peripheral::I2S,
        Peripheral::SPI,
        Peripheral::Timer,
        Peripheral::PLIC,
    ];
}

/// Fixed timing parameters of the platform model, in cycles.
///
/// None of these are measured values; they parameterize the transaction
/// timing model and can be tuned per study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingParams {
    /// Memory-bank access completes this many cycles after grant.
    pub mem_access_cycles: u64,
    /// Peripheral and accelerator-window access latency after grant.
    pub peripheral_access_cycles: u64,
    /// Cycles from a routed interrupt to the CPU resume event.
    pub irq_latency_cycles: u64,
    /// Bank transition latency into Off, ClockGated, or Retentive.
    pub bank_gate_cycles: u64,
    /// Bank wake-up latency Retentive -> On.
    pub bank_retentive_wake_cycles: u64,
    /// Bank wake-up latency Off -> On (contents are zero-filled).
    pub bank_off_wake_cycles: u64,
    /// Clock/power gate latency for CPU, peripheral, accelerator domains.
    pub domain_gate_cycles: u64,
    /// Power-up latency Off -> On for CPU, peripheral, accelerator domains.
    pub domain_wake_cycles: u64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            mem_access_cycles: 1,
            peripheral_access_cycles: 2,
            irq_latency_cycles: 1,
            bank_gate_cycles: 1,
            bank_retentive_wake_cycles: 2,
            bank_off_wake_cycles: 10,
            domain_gate_cycles: 1,
            domain_wake_cycles: 10,
        }
    }
}

/// Energy model parameters: the static area/leakage characterization plus
/// the dynamic per-event cost table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub area: AreaModel,
    pub leakage: LeakageModel,
    pub costs: DynamicCostTable,
}

/// An accelerator instance plugged into a socket slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorConfig {
    pub slot: u32,
    /// Registered model name, e.g. `"near-mem-vector"`.
    pub kind: String,
    /// Bank the near-memory model embeds in.
    #[serde(default)]
    pub bank_index: u32,
}

/// The full tunable description of a platform instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformConfig {
    pub core_type: CoreType,
    pub bank_count: u32,
    /// Per-bank size in bytes; must be a power of two >= 256.
    pub bank_size_bytes: u32,
    pub bus_topology: BusTopology,
    pub dma_channel_count: u32,
    pub peripherals: BTreeSet<Peripheral>,
    pub accelerator_slots: u32,
    pub clock_hz: u64,
    pub voltage_v: f64,
    pub arbitration: ArbitrationPolicy,
    /// Scales the CPU area/leakage share; per-core differences are not
    /// published, so all cores default to 1.0.
    pub cpu_share_scale: f64,
    /// Banks that cannot be gated (always powered). Indices into the banks.
    pub non_gateable_banks: Vec<u32>,
    /// Accelerator sockets add dedicated bus master ports when true; when
    /// false their masters share the DMA channel ports.
    pub dedicated_accel_masters: bool,
    pub timing: TimingParams,
    pub energy: EnergySection,
    pub accelerators: Vec<AcceleratorConfig>,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            core_type: CoreType::default(),
            bank_count: 2,
            bank_size_bytes: 32 * 1024,
            bus_topology: BusTopology::default(),
            dma_channel_count: 1,
            peripherals: Peripheral::ALL.into_iter().collect(),
            accelerator_slots: 0,
            clock_hz: 300_000_000,
            voltage_v: 0.8,
            arbitration: ArbitrationPolicy::default(),
            cpu_share_scale: 1.0,
            non_gateable_banks: Vec::new(),
            dedicated_accel_masters: true,
            timing: TimingParams::default(),
            energy: EnergySection::default(),
            accelerators: Vec::new(),
        }
    }
}

/// One invariant violation found by [`PlatformConfig::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Outcome of config validation. Violations are data, not failures.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            field: field.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "{}: {}", v.field, v.message)?;
            }
            Ok(())
        }
    }
}

/// Base of the peripheral register region.
pub const PERIPHERAL_BASE: u32 = 0x2000_0000;
/// Bytes of register space per peripheral.
pub const PERIPHERAL_STRIDE: u32 = 0x1000;
/// Base of the always-on peripheral block.
pub const AO_BASE: u32 = 0x2010_0000;
/// Size of the always-on peripheral block.
pub const AO_SIZE: u32 = 0x1_0000;
/// Base of the accelerator window region.
pub const ACCEL_WINDOW_BASE: u32 = 0x3000_0000;
/// Window bytes per accelerator slot.
pub const ACCEL_WINDOW_SIZE: u32 = 0x1_0000;

/// Region classes of the address map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    MemoryBank,
    Peripheral,
    AoPeripheral,
    AcceleratorWindow,
}

/// One mapped address range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub base: u32,
    pub size_bytes: u32,
    pub kind: RegionKind,
    /// Index of the bank, peripheral, or slot the region belongs to.
    pub index: u32,
}

impl Region {
    pub fn contains(&self, addr: u32) -> bool {
        addr >= self.base && (addr - self.base) < self.size_bytes
    }

    pub fn end(&self) -> u32 {
        self.base + (self.size_bytes - 1)
    }
}

/// The derived platform address map: non-overlapping regions sorted by base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressMap {
    pub regions: Vec<Region>,
}

/// A successful decode: region index plus offset within the region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionRef {
    pub region: usize,
    pub offset: u32,
}

impl AddressMap {
    /// Resolve an address to the unique region containing it.
    pub fn decode(&self, addr: u32) -> Result<RegionRef, crate::error::SimError> {
        let idx = self
            .regions
            .partition_point(|r| r.base <= addr)
            .checked_sub(1)
            .ok_or(crate::error::SimError::Decode(addr))?;
        let region = &self.regions[idx];
        if region.contains(addr) {
            Ok(RegionRef {
                region: idx,
                offset: addr - region.base,
            })
        } else {
            Err(crate::error::SimError::Decode(addr))
        }
    }

    pub fn region(&self, r: RegionRef) -> &Region {
        &self.regions[r.region]
    }
}

impl PlatformConfig {
    /// Check every config invariant; each violation names the offending field.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();

        if self.bank_count < 1 {
            report.push("bank_count", "must be at least 1");
        }
        if !self.bank_size_bytes.is_power_of_two() {
            report.push("bank_size_bytes", "not a power of two");
        }
        if self.bank_size_bytes < 256 {
            report.push("bank_size_bytes", "must be at least 256 bytes");
        }
        let total_bank_bytes = self.bank_count as u64 * self.bank_size_bytes as u64;
        if total_bank_bytes > PERIPHERAL_BASE as u64 {
            report.push(
                "bank_count",
                format!(
                    "banks span {total_bank_bytes:#x} bytes, overlapping the peripheral region at {PERIPHERAL_BASE:#010x}"
                ),
            );
        }
        if self.dma_channel_count < 1 {
            report.push("dma_channel_count", "must be at least 1");
        }
        if self.clock_hz == 0 {
            report.push("clock_hz", "must be positive");
        }
        if self.voltage_v <= 0.0 || self.voltage_v.is_nan() {
            report.push("voltage_v", "must be positive");
        }
        if self.cpu_share_scale <= 0.0 || self.cpu_share_scale.is_nan() {
            report.push("cpu_share_scale", "must be positive");
        }
        for &b in &self.non_gateable_banks {
            if b >= self.bank_count {
                report.push("non_gateable_banks", format!("bank {b} does not exist"));
            }
        }
        if self.timing.mem_access_cycles < 1 {
            report.push("timing.mem_access_cycles", "must be at least 1");
        }
        if self.timing.peripheral_access_cycles < 1 {
            report.push("timing.peripheral_access_cycles", "must be at least 1");
        }

        let rf = self.energy.leakage.retention_fraction;
        if !(rf > 0.0 && rf < 1.0) {
            report.push(
                "energy.leakage.retention_fraction",
                "must lie strictly between 0 and 1",
            );
        }
        if self.energy.area.total_mm2 <= 0.0 || self.energy.area.total_mm2.is_nan() {
            report.push("energy.area.total_mm2", "must be positive");
        }
        if self.energy.leakage.total_uw <= 0.0 || self.energy.leakage.total_uw.is_nan() {
            report.push("energy.leakage.total_uw", "must be positive");
        }
        for (name, v) in self.energy.costs.entries() {
            if v < 0.0 || v.is_nan() {
                report.push(&format!("energy.costs.{name}"), "must be non-negative");
            }
        }

        let mut seen_slots = BTreeSet::new();
        for acc in &self.accelerators {
            if acc.slot >= self.accelerator_slots {
                report.push(
                    "accelerators.slot",
                    format!(
                        "slot {} out of range ({} slots configured)",
                        acc.slot, self.accelerator_slots
                    ),
                );
            }
            if !seen_slots.insert(acc.slot) {
                report.push(
                    "accelerators.slot",
                    format!("slot {} assigned more than once", acc.slot),
                );
            }
            if acc.kind == "near-mem-vector" && acc.bank_index >= self.bank_count {
                report.push(
                    "accelerators.bank_index",
                    format!("bank {} does not exist", acc.bank_index),
                );
            }
        }

        report
    }

    /// True iff the selected core exposes the coprocessor interface.
    pub fn xif_available(&self) -> bool {
        self.core_type.xif_available()
    }

    /// Lay out the address map. Deterministic: same config, identical map.
    ///
    /// Banks sit contiguously from zero in index order; peripherals get
    /// 4 KiB apiece in enum order; the always-on block and the accelerator
    /// windows live at fixed bases.
    pub fn build_address_map(&self) -> AddressMap {
        let mut regions = Vec::new();
        for i in 0..self.bank_count {
            regions.push(Region {
                name: format!("bank{i}"),
                base: i * self.bank_size_bytes,
                size_bytes: self.bank_size_bytes,
                kind: RegionKind::MemoryBank,
                index: i,
            });
        }
        for (k, p) in self.peripherals.iter().enumerate() {
            regions.push(Region {
                name: format!("{p:?}").to_lowercase(),
                base: PERIPHERAL_BASE + k as u32 * PERIPHERAL_STRIDE,
                size_bytes: PERIPHERAL_STRIDE,
                kind: RegionKind::Peripheral,
                index: k as u32,
            });
        }
        regions.push(Region {
            name: "ao".to_string(),
            base: AO_BASE,
            size_bytes: AO_SIZE,
            kind: RegionKind::AoPeripheral,
            index: 0,
        });
        for s in 0..self.accelerator_slots {
            regions.push(Region {
                name: format!("accel{s}"),
                base: ACCEL_WINDOW_BASE + s * ACCEL_WINDOW_SIZE,
                size_bytes: ACCEL_WINDOW_SIZE,
                kind: RegionKind::AcceleratorWindow,
                index: s,
            });
        }
        regions.sort_by_key(|r| r.base);
        AddressMap { regions }
    }

    /// The default host extended with the reference near-memory vector
    /// accelerator in slot 0, embedded in bank 1.
    pub fn nmc_reference() -> Self {
        PlatformConfig {
            accelerator_slots: 1,
            accelerators: vec![AcceleratorConfig {
                slot: 0,
                kind: "near-mem-vector".into(),
                bank_index: 1,
            }],
            ..Default::default()
        }
    }

    /// Parse a strict JSON config.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = PlatformConfig::default();
        assert!(cfg.validate().is_valid());
        assert_eq!(cfg.bank_count, 2);
        assert_eq!(cfg.bank_size_bytes, 32 * 1024);
        assert_eq!(cfg.bus_topology, BusTopology::FullCrossbar);
        assert_eq!(cfg.clock_hz, 300_000_000);
        assert_eq!(cfg.voltage_v, 0.8);
    }

    #[test]
    fn non_power_of_two_bank_size_rejected() {
        let cfg = PlatformConfig {
            bank_size_bytes: 3000,
            ..Default::default()
        };
        let report = cfg.validate();
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.field == "bank_size_bytes" && v.message.contains("power of two")));
    }

    #[test]
    fn zero_dma_channels_rejected() {
        let cfg = PlatformConfig {
            dma_channel_count: 0,
            ..Default::default()
        };
        let report = cfg.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| v.field == "dma_channel_count"));
    }

    #[test]
    fn xif_flag_tracks_core_type() {
        for (core, xif) in [
            (CoreType::CV32E20, false),
            (CoreType::CV32E40X, true),
            (CoreType::CV32E40P, false),
            (CoreType::CV32E40PX, true),
        ] {
            let cfg = PlatformConfig {
                core_type: core,
                ..Default::default()
            };
            assert_eq!(cfg.xif_available(), xif);
        }
    }

    #[test]
    fn default_map_layout() {
        let cfg = PlatformConfig::default();
        let map = cfg.build_address_map();
        let bank0 = &map.regions[0];
        assert_eq!((bank0.base, bank0.end()), (0x0000_0000, 0x0000_7FFF));
        let bank1 = &map.regions[1];
        assert_eq!((bank1.base, bank1.end()), (0x0000_8000, 0x0000_FFFF));
        // bank_count + |peripherals| + AO + slots
        assert_eq!(map.regions.len(), 2 + 6 + 1);
    }

    #[test]
    fn four_small_banks_layout() {
        let cfg = PlatformConfig {
            bank_count: 4,
            bank_size_bytes: 8 * 1024,
            ..Default::default()
        };
        let map = cfg.build_address_map();
        assert_eq!(map.regions[3].base, 0x0000_6000);
        assert_eq!(map.regions[3].name, "bank3");
    }

    #[test]
    fn accelerator_window_layout() {
        let cfg = PlatformConfig {
            accelerator_slots: 1,
            ..Default::default()
        };
        let map = cfg.build_address_map();
        let win = map.regions.last().unwrap();
        assert_eq!(win.base, 0x3000_0000);
        assert_eq!(win.size_bytes, 0x1_0000);
        assert_eq!(win.kind, RegionKind::AcceleratorWindow);
    }

    #[test]
    fn decode_hits_and_misses() {
        let cfg = PlatformConfig::default();
        let map = cfg.build_address_map();
        let r = map.decode(0x0000_0004).unwrap();
        assert_eq!(map.region(r).name, "bank0");
        assert_eq!(r.offset, 4);
        let r = map.decode(0x0000_8000).unwrap();
        assert_eq!(map.region(r).name, "bank1");
        assert_eq!(r.offset, 0);
        assert!(map.decode(0x1000_0000).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = PlatformConfig::from_json(r#"{"bank_count": 2, "bankSize": 4}"#).unwrap_err();
        assert!(err.to_string().contains("bankSize"));
    }

    #[test]
    fn json_round_trip() {
        let cfg = PlatformConfig {
            accelerator_slots: 2,
            accelerators: vec![AcceleratorConfig {
                slot: 0,
                kind: "near-mem-vector".into(),
                bank_index: 1,
            }],
            ..Default::default()
        };
        let back = PlatformConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
    }
}
