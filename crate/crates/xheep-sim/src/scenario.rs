//! Scenario files: an ordered directive program driving one platform
//! instance, and/or a benchmark comparison section, with a JSON report
//! of the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dma::DmaDescriptor;
use crate::energy::{accrue, CalibrationFixture, EnergyLedger};
use crate::error::{SimError, SimResult};
use crate::platform::{ActivityCounters, Platform};
use crate::power::{DomainId, PowerState, StateCycles};
use crate::workload::{
    run_benchmark, run_comparison, BenchmarkReport, BenchmarkSpec, ComparisonSpec, ExecMode,
    ExitOutcome, ExitPolicy, ALL_MODES,
};
use crate::xaif::AccelCommand;

/// One step of a scenario program. Directives execute in order on the
/// scenario's platform; they may only reference entities the config
/// declares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Directive {
    /// Preload bank contents from a raw binary file.
    Load {
        bank: u32,
        #[serde(default)]
        offset: u32,
        path: PathBuf,
    },
    /// Dump bank contents to a raw binary file.
    Dump {
        bank: u32,
        #[serde(default)]
        offset: u32,
        len: u32,
        path: PathBuf,
    },
    /// Request a power transition; waits for completion unless told not to.
    Power {
        domain: String,
        target: PowerState,
        #[serde(default = "default_true")]
        wait: bool,
    },
    /// Configure and start a DMA channel.
    Dma(DmaDescriptor),
    /// Sleep until an interrupt (optionally a specific line) arrives.
    WaitIrq {
        #[serde(default)]
        line: Option<u32>,
    },
    /// Load a command into an accelerator socket and start it.
    Offload { slot: u32, command: AccelCommand },
    /// Burn CPU cycles.
    Compute { cycles: u64 },
    /// Run an inline benchmark on this platform.
    RunBenchmark(BenchmarkSpec),
}

fn default_true() -> bool {
    true
}

/// Benchmark comparison section: runs the four execution variants of a
/// calibrated model on fresh platforms and reports ratios against a
/// named baseline variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSection {
    /// Calibration fixture path, relative to the scenario file.
    pub calibration: PathBuf,
    /// Model name within the fixture.
    pub model: String,
    pub policy: ExitPolicy,
    #[serde(default = "default_mode")]
    pub mode: ExecMode,
    #[serde(default = "default_samples")]
    pub samples: u32,
    #[serde(default)]
    pub slot: u32,
    /// Variants to run; the baseline is always included.
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    #[serde(default = "default_baseline")]
    pub baseline: String,
}

fn default_mode() -> ExecMode {
    ExecMode::ExpectedValue
}

fn default_samples() -> u32 {
    1
}

fn default_modes() -> Vec<String> {
    ALL_MODES.iter().map(|s| s.to_string()).collect()
}

fn default_baseline() -> String {
    "cpu-no-ee".to_string()
}

/// A scenario file. `config` is a path relative to the scenario file;
/// `config_inline` embeds one instead.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub config: Option<PathBuf>,
    pub config_inline: Option<crate::config::PlatformConfig>,
    pub seed: u64,
    /// Stop (and account idle time) at this cycle; otherwise run to
    /// quiescence.
    pub run_limit: Option<u64>,
    pub directives: Vec<Directive>,
    pub benchmark: Option<BenchmarkSection>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Resolve the platform config: inline wins, then the referenced path.
    pub fn resolve_config(
        &self,
        base_dir: &Path,
    ) -> SimResult<crate::config::PlatformConfig> {
        if let Some(cfg) = &self.config_inline {
            return Ok(cfg.clone());
        }
        let Some(rel) = &self.config else {
            return Err(SimError::Scenario(
                "scenario names no config (config or config_inline)".into(),
            ));
        };
        let path = base_dir.join(rel);
        let text = fs::read_to_string(&path)
            .map_err(|e| SimError::Scenario(format!("cannot read {}: {e}", path.display())))?;
        crate::config::PlatformConfig::from_json(&text)
            .map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DmaChannelReport {
    pub channel: u32,
    pub completed_elements: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub issued_txns: u64,
    pub resolved_txns: u64,
    pub pending_txns: u64,
}

/// Everything a `run` invocation reports.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub seed: u64,
    pub final_cycle: u64,
    pub events_processed: u64,
    pub activity: ActivityCounters,
    pub domain_cycles: Vec<(String, StateCycles)>,
    pub energy: EnergyLedger,
    pub dma_channels: Vec<DmaChannelReport>,
    pub pending_irq_lines: Vec<u32>,
    pub inline_benchmarks: Vec<ExitOutcome>,
    pub benchmark: Option<BenchmarkReport>,
    pub conservation: ConservationReport,
}

/// Execute a scenario. `base_dir` anchors relative paths (config,
/// calibration, load/dump files). Returns the report and, when tracing
/// was enabled on the platform, leaves the trace retrievable from it.
pub fn run_scenario(
    scenario: &Scenario,
    base_dir: &Path,
    trace: bool,
) -> SimResult<(ScenarioReport, Vec<String>)> {
    let cfg = scenario.resolve_config(base_dir)?;
    let report = cfg.validate();
    if !report.is_valid() {
        return Err(SimError::Config(report.to_string()));
    }
    let mut platform = Platform::new(&cfg)?;
    if trace {
        platform.enable_trace();
    }

    let mut inline_benchmarks = Vec::new();
    for directive in &scenario.directives {
        match directive {
            Directive::Load { bank, offset, path } => {
                let p = base_dir.join(path);
                let bytes = fs::read(&p).map_err(|e| {
                    SimError::Scenario(format!("cannot read {}: {e}", p.display()))
                })?;
                platform.load_bank(*bank, *offset, &bytes)?;
            }
            Directive::Dump {
                bank,
                offset,
                len,
                path,
            } => {
                let bytes = platform.dump_bank(*bank, *offset, *len)?;
                let p = base_dir.join(path);
                fs::write(&p, bytes).map_err(|e| {
                    SimError::Scenario(format!("cannot write {}: {e}", p.display()))
                })?;
            }
            Directive::Power {
                domain,
                target,
                wait,
            } => {
                let id = DomainId::parse(domain)?;
                if *wait {
                    platform.power_and_wait(id, *target)?;
                } else {
                    platform.request_power(id, *target)?;
                }
            }
            Directive::Dma(desc) => platform.start_dma(desc.clone())?,
            Directive::WaitIrq { line } => {
                platform.wait_for_interrupt(*line)?;
            }
            Directive::Offload { slot, command } => {
                platform.offload(*slot, command.clone())?;
            }
            Directive::Compute { cycles } => platform.compute(*cycles)?,
            Directive::RunBenchmark(spec) => {
                let mut spec = spec.clone();
                if spec.seed.is_none() {
                    spec.seed = Some(scenario.seed);
                }
                inline_benchmarks.push(run_benchmark(&mut platform, &spec)?);
            }
        }
    }

    match scenario.run_limit {
        Some(limit) => platform.run_until(limit),
        None => platform.run_to_quiescence(),
    }
    let summary = platform.finish(scenario.run_limit);
    let energy = accrue(&summary, &cfg);

    let dma_channels = (0..cfg.dma_channel_count)
        .map(|k| DmaChannelReport {
            channel: k,
            completed_elements: platform.dma_completed_elements(k),
            error: platform.dma_error(k).map(|e| e.to_string()),
        })
        .collect();
    let pending_irq_lines = (0..platform.cfg.dma_channel_count
        + platform.cfg.accelerator_slots
        + 2)
        .filter(|&l| platform.irq_pending(l))
        .collect();

    let benchmark = match &scenario.benchmark {
        Some(section) => {
            let cal_path = base_dir.join(&section.calibration);
            let text = fs::read_to_string(&cal_path).map_err(|e| {
                SimError::Scenario(format!("cannot read {}: {e}", cal_path.display()))
            })?;
            let fixture: CalibrationFixture = serde_json::from_str(&text)
                .map_err(|e| SimError::Scenario(format!("{}: {e}", cal_path.display())))?;
            let cal = fixture.model(&section.model)?;
            let mut policy = section.policy.clone();
            if let ExitPolicy::FixedRate { seed: seed @ None, .. } = &mut policy {
                *seed = Some(scenario.seed);
            }
            Some(run_comparison(
                &cfg,
                cal,
                &ComparisonSpec {
                    policy,
                    mode: section.mode,
                    samples: section.samples,
                    modes: section.modes.clone(),
                    baseline: section.baseline.clone(),
                    slot: section.slot,
                },
            )?)
        }
        None => None,
    };

    let report = ScenarioReport {
        seed: scenario.seed,
        final_cycle: summary.final_cycle,
        events_processed: summary.events_processed,
        activity: summary.activity.clone(),
        domain_cycles: summary.domain_cycles.clone(),
        energy,
        dma_channels,
        pending_irq_lines,
        inline_benchmarks,
        benchmark,
        conservation: ConservationReport {
            issued_txns: summary.issued_txns,
            resolved_txns: summary.resolved_txns,
            pending_txns: summary.pending_txns,
        },
    };
    let trace_lines = platform.take_trace();
    Ok((report, trace_lines))
}
