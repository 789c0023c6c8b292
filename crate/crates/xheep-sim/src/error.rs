//! Error types shared across the simulator.

use thiserror::Error;

/// Errors surfaced by simulation components.
///
/// Bus-visible failures (`Decode`, `Slave`) travel inside responses; the
/// remaining variants are returned directly by the operation that failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// Address does not fall inside any region of the address map.
    #[error("decode error: address {0:#010x} maps to no region")]
    Decode(u32),

    /// Target slave refused the access (gated, off, or in compute mode).
    #[error("slave error: {0}")]
    Slave(String),

    /// DMA channel is already executing a descriptor.
    #[error("dma channel {0} busy")]
    ChannelBusy(u32),

    /// Accelerator slot already has a model attached.
    #[error("accelerator slot {0} occupied")]
    SlotOccupied(u32),

    /// Slot index is outside the configured range.
    #[error("no such accelerator slot {0}")]
    NoSuchSlot(u32),

    /// Offload issued while the accelerator is still busy.
    #[error("accelerator in slot {0} busy")]
    AcceleratorBusy(u32),

    /// Offload or window access while the accelerator domain is not on.
    #[error("accelerator in slot {0} powered down")]
    PoweredDown(u32),

    /// A non-gateable domain was asked to leave the On state, or the
    /// target state is not meaningful for the domain.
    #[error("illegal transition: domain {domain} to {target}")]
    IllegalTransition { domain: String, target: String },

    /// Descriptor or scenario parameter rejected at configure time.
    #[error("config error: {0}")]
    Config(String),

    /// Calibration search could not bring residuals under tolerance.
    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    /// Invalid probability vector handed to the entropy operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Scenario referenced an entity absent from the config.
    #[error("scenario error: {0}")]
    Scenario(String),
}

pub type SimResult<T> = Result<T, SimError>;
