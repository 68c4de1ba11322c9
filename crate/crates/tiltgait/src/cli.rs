//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 configuration or input error, 3 numerical divergence.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;
use tiltgait_core::analysis::{critical_lyapunov, delta_l_grid, AnalysisError, CriticalLyapunov, GridSpec};
use tiltgait_core::sim::{run, verify_trajectory, RunError, VerificationReport, VerifyOptions};
use tiltgait_core::{ErrorState, LateralLoop, Sign, Trajectory};

use crate::config::{resolve, ConfigError, ConfigFile, ExperimentConfig, Overrides};
use crate::lemmas::{verify_lemmas, LemmaOptions};
use crate::{oracle, output};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const GRID_FILE: &str = "delta_l_grid.csv";
pub const SWEEP_FILE: &str = "sweep_summary.json";
pub const CRITICAL_FILE: &str = "critical_lyapunov.json";
pub const LEMMAS_FILE: &str = "lemmas.json";

/// Largest accepted |closed form − oracle| for `hitting-time`.
pub const HITTING_RESIDUAL_TOL: f64 = 1e-6;
/// Largest accepted relative change of L_critical when the grid is doubled.
pub const CRITICAL_STABILITY_TOL: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "tiltgait",
    version,
    about = "Gait-based trajectory tracking under rotor saturation"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Gait preset: small or large.
    #[arg(long, global = true, env = "TILTGAIT_PRESET")]
    pub preset: Option<String>,
    /// TOML config with `[model]`, `[gait]`, `[sim]` and `[sweep]` sections.
    #[arg(long, global = true, env = "TILTGAIT_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "TILTGAIT_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Integration step in seconds; must divide half the gait period.
    #[arg(long, global = true, env = "TILTGAIT_DT")]
    pub dt: Option<f64>,
    #[arg(long, global = true, env = "TILTGAIT_DURATION")]
    pub duration: Option<f64>,
    /// Yaw amplitude in radians.
    #[arg(long, global = true, env = "TILTGAIT_AMPLITUDE")]
    pub amplitude: Option<f64>,
    #[arg(long, global = true, env = "TILTGAIT_PERIOD")]
    pub period: Option<f64>,
    /// Cells per axis of the ΔL grids.
    #[arg(long, global = true, env = "TILTGAIT_GRID_RES")]
    pub grid_res: Option<usize>,
    /// Seed for randomized property sampling.
    #[arg(long, global = true, env = "TILTGAIT_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the closed loop, write the trajectory, verification report
    /// and resolved manifest.
    Simulate,
    /// Evaluate ΔL over one quadrant grid.
    SweepDeltaL {
        /// Yaw sign of the half-period: +1 (quadrant I) or -1 (quadrant III).
        #[arg(long, allow_hyphen_values = true, value_parser = parse_sign)]
        lambda_sign: Option<Sign>,
    },
    /// Closed-form time to reach the saturation line, checked against
    /// numerical event detection.
    HittingTime {
        #[arg(allow_negative_numbers = true)]
        e: f64,
        #[arg(allow_negative_numbers = true)]
        edot: f64,
        /// pos or neg (also +1 / -1).
        #[arg(allow_hyphen_values = true, value_parser = parse_sign)]
        branch: Sign,
    },
    /// Critical Lyapunov level and its stability under grid refinement.
    CriticalLyapunov,
    /// Capture, region, ΔL and hitting-time checks over grids and samples.
    VerifyLemmas,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s {
        "pos" | "+" | "+1" | "1" => Ok(Sign::Pos),
        "neg" | "-" | "-1" => Ok(Sign::Neg),
        _ => Err(format!("expected pos/neg or +1/-1, got `{s}`")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Analysis(#[from] AnalysisError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset.clone(),
            out_dir: self.out_dir.clone(),
            dt: self.dt,
            duration: self.duration,
            amplitude: self.amplitude,
            period: self.period,
            grid_res: self.grid_res,
            seed: self.seed,
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        resolve(&file, &self.overrides())
    }
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    output::write_atomic(&path, bytes).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn lateral_loop(cfg: &ExperimentConfig) -> Result<LateralLoop, CliError> {
    Ok(LateralLoop::new(&cfg.sim.params, &cfg.sim.gait)?)
}

#[derive(Debug, Serialize)]
struct SimulateReport<'a> {
    preset: &'a str,
    passed: bool,
    steps: usize,
    divergence: Option<String>,
    verification: &'a VerificationReport,
}

fn simulate(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let (traj, divergence): (Trajectory, _) = match run(&cfg.sim) {
        Ok(t) => (t, None),
        Err(RunError::Config(e)) => return Err(ConfigError::Sim(e).into()),
        Err(RunError::Diverged(d)) => (d.partial, Some(d.error.to_string())),
    };
    let verification = verify_trajectory(
        &traj,
        &cfg.sim,
        &VerifyOptions {
            grid: cfg.sweep.grid,
            ..VerifyOptions::default()
        },
    );
    let passed = divergence.is_none() && verification.passed();
    let report = SimulateReport {
        preset: &cfg.preset,
        passed,
        steps: traj.samples.len(),
        divergence: divergence.clone(),
        verification: &verification,
    };
    let csv = output::trajectory_csv(&traj).map_err(|source| CliError::Io {
        path: cfg.out_dir.join(TRAJECTORY_FILE),
        source,
    })?;
    write(&cfg.out_dir, TRAJECTORY_FILE, &csv)?;
    write(&cfg.out_dir, REPORT_FILE, &output::json(&report))?;
    write(
        &cfg.out_dir,
        MANIFEST_FILE,
        ConfigFile::resolved(cfg).to_toml().as_bytes(),
    )?;

    println!("steps: {}, clamped: {}", traj.samples.len(), traj.clamped_steps());
    for c in &verification.checks {
        println!(
            "{:<8} {}: {}",
            format!("{:?}", c.status).to_uppercase(),
            c.name,
            c.detail
        );
    }
    println!("outputs in {}", cfg.out_dir.display());
    if let Some(e) = divergence {
        eprintln!("error: {e}");
        return Ok(EXIT_DIVERGED);
    }
    Ok(if passed { EXIT_PASS } else { EXIT_FAIL })
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub lambda_sign: Sign,
    pub grid: GridSpec,
    pub cells: usize,
    pub admissible: usize,
    pub positive_cells: usize,
    pub max_delta_l: Option<f64>,
    pub argmax: Option<ErrorState>,
    pub l_critical: Option<f64>,
    pub supremum_bound: Option<f64>,
}

fn sweep(cfg: &ExperimentConfig, sign: Option<Sign>) -> Result<i32, CliError> {
    let lp = lateral_loop(cfg)?;
    let sign = sign.unwrap_or(cfg.sweep.lambda_sign);
    let grid = delta_l_grid(&lp, &cfg.sweep.grid, sign);
    let max = grid.max();
    let critical = (grid.admissible_count() > 0).then(|| critical_lyapunov(&lp, &cfg.sweep.grid));
    let summary = SweepSummary {
        lambda_sign: sign,
        grid: cfg.sweep.grid,
        cells: grid.values.len(),
        admissible: grid.admissible_count(),
        positive_cells: grid.positive_count(),
        max_delta_l: max.map(|m| m.1),
        argmax: max.map(|m| m.0),
        l_critical: critical.map(|c| c.value),
        supremum_bound: critical.map(|c| c.supremum_bound()),
    };
    let csv = output::grid_csv(&grid).map_err(|source| CliError::Io {
        path: cfg.out_dir.join(GRID_FILE),
        source,
    })?;
    write(&cfg.out_dir, GRID_FILE, &csv)?;
    write(&cfg.out_dir, SWEEP_FILE, &output::json(&summary))?;
    println!(
        "admissible cells: {}, dL > 0: {}",
        summary.admissible, summary.positive_cells
    );
    match (summary.max_delta_l, summary.l_critical) {
        (Some(m), Some(l)) => println!(
            "max dL: {m:.6}, L_critical: {l:.6}, L_critical + max dL: {:.6}",
            summary.supremum_bound.unwrap_or(l)
        ),
        _ => println!("no admissible cells"),
    }
    Ok(EXIT_PASS)
}

fn hitting_time(cfg: &ExperimentConfig, e: f64, edot: f64, branch: Sign) -> Result<i32, CliError> {
    let lp = lateral_loop(cfg)?;
    let s = ErrorState::new(e, edot);
    let t = lp.hitting_time(s, branch)?;
    let horizon = t + 8.0 * lp.half_period;
    let residual = oracle::hitting_time(&lp, s, branch, horizon).map(|r| (t - r).abs());
    println!("t = {}", output::float(t));
    match residual {
        Some(r) => {
            println!("residual = {r:.3e}");
            Ok(if r < HITTING_RESIDUAL_TOL { EXIT_PASS } else { EXIT_FAIL })
        }
        None => {
            println!("residual = n/a (oracle found no crossing)");
            Ok(EXIT_FAIL)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CriticalReport {
    pub grid: GridSpec,
    pub result: CriticalLyapunov,
    pub refined_grid: GridSpec,
    pub refined: CriticalLyapunov,
    pub relative_change: f64,
    pub stable: bool,
}

fn critical(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let lp = lateral_loop(cfg)?;
    let grid = cfg.sweep.grid;
    let refined_grid = GridSpec {
        resolution: grid.resolution.map(|n| 2 * n),
        ..grid
    };
    let result = critical_lyapunov(&lp, &grid);
    let refined = critical_lyapunov(&lp, &refined_grid);
    let relative_change = (refined.value - result.value).abs() / refined.value.abs().max(f64::MIN_POSITIVE);
    let stable = relative_change < CRITICAL_STABILITY_TOL && !result.truncated && !refined.truncated;
    let report = CriticalReport {
        grid,
        result,
        refined_grid,
        refined,
        relative_change,
        stable,
    };
    write(&cfg.out_dir, CRITICAL_FILE, &output::json(&report))?;
    println!("L_critical = {:.6} (coarse grid {:.6})", result.value, result.coarse);
    println!("L_critical + max dL = {:.6}", result.supremum_bound());
    println!("refined: {:.6}, relative change {relative_change:.3e}", refined.value);
    Ok(if stable { EXIT_PASS } else { EXIT_FAIL })
}

fn lemmas(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let lp = lateral_loop(cfg)?;
    let opts = LemmaOptions {
        grid: cfg.sweep.grid,
        seed: cfg.sweep.seed,
        samples: cfg.sweep.samples,
        ..LemmaOptions::default()
    };
    let report = verify_lemmas(&cfg.sim.params, &lp, cfg.sim.gait.amplitude, &opts);
    write(&cfg.out_dir, LEMMAS_FILE, &output::json(&report))?;
    for c in &report.checks {
        println!(
            "{:<8} {}: {}",
            format!("{:?}", c.status).to_uppercase(),
            c.name,
            c.detail
        );
    }
    Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let outcome = cli
        .common
        .experiment()
        .map_err(CliError::from)
        .and_then(|cfg| match cli.command {
            Command::Simulate => simulate(&cfg),
            Command::SweepDeltaL { lambda_sign } => sweep(&cfg, lambda_sign),
            Command::HittingTime { e, edot, branch } => hitting_time(&cfg, e, edot, branch),
            Command::CriticalLyapunov => critical(&cfg),
            Command::VerifyLemmas => lemmas(&cfg),
        });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
