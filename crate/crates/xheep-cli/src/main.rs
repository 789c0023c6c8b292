//! `xheep` — batch front end for the virtual platform: config validation,
//! static area/leakage reports, scenario execution, parameter sweeps, and
//! energy-cost calibration.
//!
//! Exit codes: 0 success, 1 validation or file-format error, 2 simulation
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use xheep_sim::config::PlatformConfig;
use xheep_sim::energy::{calibrate, static_report, CalibrationTargets};
use xheep_sim::scenario::{run_scenario, Scenario};
use xheep_sim::workload::ExitPolicy;

#[derive(Parser)]
#[command(name = "xheep", version, about = "Virtual platform simulator for an ultra-low-power RISC-V host")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a platform config against every invariant.
    Validate {
        /// Platform config JSON.
        config: PathBuf,
    },
    /// Static area and leakage breakdown for a config.
    ReportStatic {
        config: PathBuf,
        /// Include the derived address map in the report.
        #[arg(long)]
        map: bool,
        /// Write the JSON report here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a scenario file.
    Run {
        scenario: PathBuf,
        /// Write the event trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Prior run report to compute speedup/energy ratios against.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a scenario benchmark across a parameter range.
    Sweep {
        spec: PathBuf,
        /// Parallel worker threads; results merge in parameter order.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write the CSV table here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit dynamic energy costs to run-time ratio targets.
    Calibrate {
        targets: PathBuf,
        /// Platform config to calibrate on (defaults to the reference
        /// system with the near-memory accelerator).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Report envelope: volatile metadata stays out of the `report` object so
/// byte comparison of reports can exclude it.
#[derive(Serialize)]
struct Envelope<T: Serialize> {
    meta: Meta,
    report: T,
}

#[derive(Serialize)]
struct Meta {
    tool: String,
    generated_unix_s: u64,
}

fn envelope<T: Serialize>(report: T) -> Envelope<T> {
    Envelope {
        meta: Meta {
            tool: format!("xheep {}", env!("CARGO_PKG_VERSION")),
            generated_unix_s: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
        report,
    }
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match output {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

const EXIT_INVALID: u8 = 1;
const EXIT_SIM: u8 = 2;

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load_config(path: &Path) -> Result<PlatformConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    PlatformConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::ReportStatic {
            config,
            map,
            output,
        } => cmd_report_static(&config, map, output.as_deref()),
        Command::Run {
            scenario,
            trace,
            baseline,
            output,
        } => cmd_run(&scenario, trace.as_deref(), baseline.as_deref(), output.as_deref()),
        Command::Sweep { spec, jobs, output } => cmd_sweep(&spec, jobs, output.as_deref()),
        Command::Calibrate {
            targets,
            config,
            output,
        } => cmd_calibrate(&targets, config.as_deref(), output.as_deref()),
    }
}

fn cmd_validate(path: &Path) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INVALID, e),
    };
    let report = cfg.validate();
    if report.is_valid() {
        println!("{}: valid", path.display());
        ExitCode::SUCCESS
    } else {
        for v in &report.violations {
            eprintln!("{}: {}: {}", path.display(), v.field, v.message);
        }
        ExitCode::from(EXIT_INVALID)
    }
}

#[derive(Serialize)]
struct StaticEnvelopeBody {
    #[serde(flatten)]
    breakdown: xheep_sim::StaticReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    address_map: Option<xheep_sim::AddressMap>,
}

fn cmd_report_static(path: &Path, map: bool, output: Option<&Path>) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INVALID, e),
    };
    let validation = cfg.validate();
    if !validation.is_valid() {
        return fail(EXIT_INVALID, format!("{}: {validation}", path.display()));
    }
    let body = StaticEnvelopeBody {
        breakdown: static_report(&cfg),
        address_map: map.then(|| cfg.build_address_map()),
    };
    match emit(&envelope(body), output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_SIM, e),
    }
}

#[derive(Serialize)]
struct RunBody {
    #[serde(flatten)]
    scenario: xheep_sim::ScenarioReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_comparison: Option<BaselineComparison>,
}

#[derive(Serialize)]
struct BaselineComparison {
    baseline: String,
    speedup: f64,
    energy_gain: f64,
}

fn cmd_run(
    path: &Path,
    trace: Option<&Path>,
    baseline: Option<&Path>,
    output: Option<&Path>,
) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INVALID, format!("cannot read {}: {e}", path.display())),
    };
    let scenario = match Scenario::from_json(&text) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INVALID, format!("{}: {e}", path.display())),
    };
    let base_dir = path.parent().unwrap_or(Path::new("."));

    let (report, trace_lines) = match run_scenario(&scenario, base_dir, trace.is_some()) {
        Ok(r) => r,
        Err(xheep_sim::SimError::Config(msg)) => return fail(EXIT_INVALID, msg),
        Err(e) => return fail(EXIT_SIM, e),
    };
    if let Some(trace_path) = trace {
        let mut csv = String::from("cycle,component,payload\n");
        for line in &trace_lines {
            csv.push_str(line);
            csv.push('\n');
        }
        if let Err(e) = fs::write(trace_path, csv) {
            return fail(EXIT_SIM, format!("cannot write trace: {e}"));
        }
    }

    let baseline_comparison = match baseline {
        Some(bpath) => match load_baseline(bpath) {
            Ok((cycles, energy)) => Some(BaselineComparison {
                baseline: bpath.display().to_string(),
                speedup: cycles as f64 / report.final_cycle as f64,
                energy_gain: energy / report.energy.total_j,
            }),
            Err(e) => return fail(EXIT_INVALID, e),
        },
        None => None,
    };

    if let Some(bench) = &report.benchmark {
        print_benchmark_table(bench);
    }

    let body = RunBody {
        scenario: report,
        baseline_comparison,
    };
    match emit(&envelope(body), output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_SIM, e),
    }
}

fn load_baseline(path: &Path) -> Result<(u64, f64), String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read baseline {}: {e}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let report = &value["report"];
    let cycles = report["final_cycle"]
        .as_u64()
        .ok_or_else(|| format!("{}: no report.final_cycle", path.display()))?;
    let energy = report["energy"]["total_j"]
        .as_f64()
        .ok_or_else(|| format!("{}: no report.energy.total_j", path.display()))?;
    Ok((cycles, energy))
}

fn print_benchmark_table(bench: &xheep_sim::workload::BenchmarkReport) {
    println!(
        "model {} (baseline {}, {} samples)",
        bench.model, bench.baseline, bench.samples
    );
    println!(
        "{:<16} {:>12} {:>14} {:>10} {:>9} {:>12}",
        "mode", "cycles", "energy_j", "exit_rate", "speedup", "energy_gain"
    );
    for (name, r) in &bench.modes {
        let fmt_opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.3}"),
            None => "-".to_string(),
        };
        println!(
            "{:<16} {:>12} {:>14.6e} {:>10.4} {:>9} {:>12}",
            name,
            r.cycles,
            r.energy_j,
            r.exit_rate,
            fmt_opt(r.speedup),
            fmt_opt(r.energy_gain)
        );
    }
}

// ----------------------------------------------------------------------
// Sweep

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSpec {
    /// Scenario file (relative to the sweep spec) with a benchmark section.
    scenario: PathBuf,
    /// `entropy_threshold` or `exit_rate`.
    parameter: SweepParameter,
    values: SweepValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SweepParameter {
    EntropyThreshold,
    ExitRate,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum SweepValues {
    List(Vec<f64>),
    Range { from: f64, to: f64, step: f64 },
}

impl SweepValues {
    fn expand(&self) -> Vec<f64> {
        match self {
            SweepValues::List(v) => v.clone(),
            SweepValues::Range { from, to, step } => {
                let mut out = Vec::new();
                let mut v = *from;
                let mut i = 0u32;
                while v <= *to + 1e-12 {
                    out.push(v);
                    i += 1;
                    v = from + step * i as f64;
                }
                out
            }
        }
    }
}

fn patch_scenario(
    scenario: &Scenario,
    parameter: SweepParameter,
    value: f64,
) -> Result<Scenario, String> {
    let mut s = scenario.clone();
    let Some(bench) = s.benchmark.as_mut() else {
        return Err("sweep scenario has no benchmark section".into());
    };
    match parameter {
        SweepParameter::EntropyThreshold => match &mut bench.policy {
            ExitPolicy::Entropy { threshold, .. } => *threshold = value,
            _ => return Err("entropy_threshold sweep needs an entropy policy".into()),
        },
        SweepParameter::ExitRate => match &mut bench.policy {
            ExitPolicy::FixedRate { p, .. } => *p = value,
            _ => return Err("exit_rate sweep needs a fixed_rate policy".into()),
        },
    }
    Ok(s)
}

fn cmd_sweep(spec_path: &Path, jobs: usize, output: Option<&Path>) -> ExitCode {
    let text = match fs::read_to_string(spec_path) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_INVALID,
                format!("cannot read {}: {e}", spec_path.display()),
            )
        }
    };
    let spec: SweepSpec = match serde_json::from_str(&text) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INVALID, format!("{}: {e}", spec_path.display())),
    };
    let sweep_dir = spec_path.parent().unwrap_or(Path::new("."));
    let scenario_path = sweep_dir.join(&spec.scenario);
    let scenario_text = match fs::read_to_string(&scenario_path) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_INVALID,
                format!("cannot read {}: {e}", scenario_path.display()),
            )
        }
    };
    let scenario = match Scenario::from_json(&scenario_text) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INVALID, format!("{}: {e}", scenario_path.display())),
    };
    let base_dir = scenario_path
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();

    let values = spec.values.expand();
    if values.is_empty() {
        return fail(EXIT_INVALID, "sweep has no values");
    }

    // One isolated run per value; merged in parameter order no matter
    // which worker finishes first.
    type Row = Result<Vec<String>, String>;
    let mut rows: Vec<Option<Row>> = (0..values.len()).map(|_| None).collect();
    let jobs = jobs.max(1);
    std::thread::scope(|scope| {
        let (tx, rx) = std::sync::mpsc::channel::<(usize, Row)>();
        for worker in 0..jobs {
            let tx = tx.clone();
            let values = &values;
            let scenario = &scenario;
            let base_dir = &base_dir;
            scope.spawn(move || {
                for idx in (worker..values.len()).step_by(jobs) {
                    let row = run_sweep_point(scenario, base_dir, spec.parameter, values[idx]);
                    let _ = tx.send((idx, row));
                }
            });
        }
        drop(tx);
        while let Ok((idx, row)) = rx.recv() {
            rows[idx] = Some(row);
        }
    });

    let mut csv = String::from("value,mode,exit_rate,cycles,energy_j,speedup,energy_gain\n");
    for (i, row) in rows.into_iter().enumerate() {
        match row.expect("every sweep point reports") {
            Ok(lines) => {
                for line in lines {
                    csv.push_str(&format!("{},{line}\n", values[i]));
                }
            }
            Err(e) => return fail(EXIT_SIM, format!("value {}: {e}", values[i])),
        }
    }
    match output {
        Some(p) => {
            if let Err(e) = fs::write(p, csv) {
                return fail(EXIT_SIM, format!("cannot write {}: {e}", p.display()));
            }
        }
        None => print!("{csv}"),
    }
    ExitCode::SUCCESS
}

fn run_sweep_point(
    scenario: &Scenario,
    base_dir: &Path,
    parameter: SweepParameter,
    value: f64,
) -> Result<Vec<String>, String> {
    let patched = patch_scenario(scenario, parameter, value)?;
    let (report, _) = run_scenario(&patched, base_dir, false).map_err(|e| e.to_string())?;
    let bench = report
        .benchmark
        .ok_or_else(|| "benchmark section produced no report".to_string())?;
    let mut lines = Vec::new();
    for (name, r) in &bench.modes {
        let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "1".into());
        lines.push(format!(
            "{name},{},{},{},{},{}",
            r.exit_rate,
            r.cycles,
            r.energy_j,
            fmt_opt(r.speedup),
            fmt_opt(r.energy_gain)
        ));
    }
    Ok(lines)
}

fn cmd_calibrate(targets: &Path, config: Option<&Path>, output: Option<&Path>) -> ExitCode {
    let text = match fs::read_to_string(targets) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_INVALID,
                format!("cannot read {}: {e}", targets.display()),
            )
        }
    };
    let targets: CalibrationTargets = match serde_json::from_str(&text) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INVALID, format!("malformed targets: {e}")),
    };
    let cfg = match config {
        Some(p) => match load_config(p) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_INVALID, e),
        },
        None => PlatformConfig::nmc_reference(),
    };
    let fixture = match calibrate(&targets, &cfg) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_SIM, e),
    };
    for m in &fixture.models {
        let worst = m
            .residuals
            .iter()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap());
        if let Some((label, r)) = worst {
            eprintln!("{}: worst residual {:.4} ({label})", m.name, r);
        }
    }
    match emit(&fixture, output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(EXIT_SIM, e),
    }
}
