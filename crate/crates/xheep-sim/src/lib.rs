//! Transaction-level, discrete-event simulator of an ultra-low-power
//! RISC-V host platform: configurable memory banks, OBI-style bus
//! topologies, a multi-channel 1D/2D DMA engine, power gating and
//! retention, an accelerator socket with a reference near-memory vector
//! model, a calibrated area/leakage/energy model, and an early-exit
//! dynamic-network benchmark generator.
//!
//! Simulations are deterministic: identical (config, scenario, seed)
//! inputs produce byte-identical event traces and reports.

pub mod config;
pub mod dma;
pub mod energy;
pub mod engine;
pub mod error;
pub mod interconnect;
pub mod memory;
pub mod platform;
pub mod power;
pub mod scenario;
pub mod workload;
pub mod xaif;

pub use config::{AddressMap, PlatformConfig, ValidationReport};
pub use energy::{accrue, calibrate, static_report, EnergyLedger, StaticReport};
pub use error::{SimError, SimResult};
pub use platform::{Platform, RunSummary};
pub use scenario::{run_scenario, Scenario, ScenarioReport};
pub use workload::{expected_cost, normalized_entropy, run_benchmark, should_exit};
