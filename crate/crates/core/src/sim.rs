//! Fixed-step RK4 integration of the full closed loop, with per-step logs of
//! commands, switch matrices, the Lyapunov candidate and the acceleration
//! cone, plus the post-run checks on those logs.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::analysis::{
    acceleration_angle, critical_lyapunov, feasible_cone, AnalysisError, ErrorState, FeasibleCone, GridSpec,
    LateralLoop,
};
use crate::controller::{clamp, desired_accel, invert_with, switch_matrix_of, DesiredAccel, RawCommand, SwitchMatrix};
use crate::gait::{reference_at, GaitError, GaitSchedule};
use crate::linalg::Mat2;
use crate::plant::{accelerate, thrust_map, ModelParams, ParamError, RotorCommand, VehicleState};
use crate::Sign;

// Relative slack when checking that dt tiles a half-period.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub params: ModelParams,
    pub gait: GaitSchedule,
    /// s
    pub dt: f64,
    /// s
    pub duration: f64,
    pub initial_state: VehicleState,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            params: ModelParams::default(),
            gait: GaitSchedule::large(),
            dt: 1e-3,
            duration: 20.0,
            initial_state: VehicleState::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimError {
    Param(ParamError),
    Gait(GaitError),
    InvalidStep {
        dt: f64,
    },
    InvalidDuration {
        duration: f64,
        dt: f64,
    },
    /// Yaw switching instants must land on the time grid.
    Misaligned {
        dt: f64,
        half_period: f64,
    },
    NonFiniteInitialState,
    Divergence {
        t: f64,
        last: VehicleState,
    },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Param(e) => write!(f, "{e}"),
            SimError::Gait(e) => write!(f, "{e}"),
            SimError::InvalidStep { dt } => write!(f, "time step {dt} must be finite and > 0"),
            SimError::InvalidDuration { duration, dt } => {
                write!(f, "duration {duration} must be finite and at least one step ({dt})")
            }
            SimError::Misaligned { dt, half_period } => {
                write!(f, "time step {dt} does not divide the half-period {half_period}")
            }
            SimError::NonFiniteInitialState => f.write_str("initial state is not finite"),
            SimError::Divergence { t, .. } => write!(f, "state became non-finite after t = {t}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<ParamError> for SimError {
    fn from(e: ParamError) -> Self {
        SimError::Param(e)
    }
}

impl From<GaitError> for SimError {
    fn from(e: GaitError) -> Self {
        SimError::Gait(e)
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        self.gait.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidStep { dt: self.dt });
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(SimError::InvalidDuration {
                duration: self.duration,
                dt: self.dt,
            });
        }
        let half = self.gait.half_period();
        let ratio = half / self.dt;
        if libm::round(ratio) < 1.0 || libm::fabs(ratio - libm::round(ratio)) > ALIGN_TOL * ratio {
            return Err(SimError::Misaligned {
                dt: self.dt,
                half_period: half,
            });
        }
        if !self.initial_state.is_finite() {
            return Err(SimError::NonFiniteInitialState);
        }
        Ok(())
    }

    pub fn steps_per_half_period(&self) -> usize {
        libm::round(self.gait.half_period() / self.dt) as usize
    }

    pub fn step_count(&self) -> usize {
        libm::floor(self.duration / self.dt * (1.0 + ALIGN_TOL)) as usize
    }
}

/// One logged instant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Sample {
    pub t: f64,
    /// Index of the half-period containing `t` (closed on the left).
    pub half_period: usize,
    pub state: VehicleState,
    pub ex: ErrorState,
    pub ey: ErrorState,
    pub yaw: f64,
    pub desired: DesiredAccel,
    pub raw: RawCommand,
    pub cmd: RotorCommand,
    pub switch: SwitchMatrix,
    /// Lateral Lyapunov candidate `½·ė_y² + ½·K_Y2·e_y²`.
    pub lyapunov: f64,
    /// Angle of the desired acceleration; `None` when it is zero.
    pub angle_des: Option<f64>,
    pub cone: FeasibleCone,
}

#[cfg(feature = "serde")]
impl serde::Serialize for SwitchMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    pub steps_per_half_period: usize,
    /// Uniformly spaced, strictly increasing in `t`.
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn clamped_steps(&self) -> usize {
        self.samples.iter().filter(|s| s.switch.is_saturated()).count()
    }

    /// Samples at `t = n·T/2`, paired with `n`.
    pub fn half_period_boundaries(&self) -> impl Iterator<Item = (usize, &Sample)> + '_ {
        let k = self.steps_per_half_period.max(1);
        self.samples.iter().step_by(k).enumerate()
    }
}

struct ClosedLoop {
    params: ModelParams,
    inv_thrust: Mat2,
}

struct Control {
    desired: DesiredAccel,
    raw: RawCommand,
    cmd: RotorCommand,
}

impl ClosedLoop {
    fn new(params: &ModelParams) -> Result<Self, SimError> {
        params.validate()?;
        let inv_thrust = thrust_map(params)
            .inverse()
            .ok_or(ParamError::SingularThrustMap { theta: params.theta })?;
        Ok(ClosedLoop {
            params: *params,
            inv_thrust,
        })
    }

    fn control(&self, t: f64, s: &VehicleState, yaw: f64) -> Control {
        let desired = desired_accel(s, &reference_at(t), &self.params);
        let raw = invert_with(&self.inv_thrust, desired, yaw, self.params.mass);
        // clamping would silently map NaN to 0
        let cmd = if raw.sq1.is_finite() && raw.sq2.is_finite() {
            clamp(raw)
        } else {
            RotorCommand {
                w1sq: f64::NAN,
                w2sq: f64::NAN,
            }
        };
        Control { desired, raw, cmd }
    }

    fn field(&self, t: f64, s: &VehicleState, yaw: f64) -> VehicleState {
        let a = accelerate(self.control(t, s, yaw).cmd, yaw, &self.params);
        VehicleState {
            x: s.vx,
            y: s.vy,
            vx: a.x,
            vy: a.y,
        }
    }

    fn rk4(&self, s: &VehicleState, t: f64, h: f64, yaw: f64) -> VehicleState {
        let add = |a: &VehicleState, k: &VehicleState, c: f64| VehicleState {
            x: a.x + c * k.x,
            y: a.y + c * k.y,
            vx: a.vx + c * k.vx,
            vy: a.vy + c * k.vy,
        };
        let k1 = self.field(t, s, yaw);
        let k2 = self.field(t + 0.5 * h, &add(s, &k1, 0.5 * h), yaw);
        let k3 = self.field(t + 0.5 * h, &add(s, &k2, 0.5 * h), yaw);
        let k4 = self.field(t + h, &add(s, &k3, h), yaw);
        VehicleState {
            x: s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            y: s.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
            vx: s.vx + h / 6.0 * (k1.vx + 2.0 * k2.vx + 2.0 * k3.vx + k4.vx),
            vy: s.vy + h / 6.0 * (k1.vy + 2.0 * k2.vy + 2.0 * k3.vy + k4.vy),
        }
    }

    fn sample(&self, t: f64, half_period: usize, state: VehicleState, yaw: f64) -> Sample {
        let r = reference_at(t);
        let Control { desired, raw, cmd } = self.control(t, &state, yaw);
        let ey = ErrorState::new(r.yr - state.y, r.vyr - state.vy);
        Sample {
            t,
            half_period,
            state,
            ex: ErrorState::new(r.xr - state.x, r.vxr - state.vx),
            ey,
            yaw,
            desired,
            raw,
            cmd,
            switch: switch_matrix_of(raw),
            lyapunov: 0.5 * ey.edot * ey.edot + 0.5 * self.params.ky2 * ey.e * ey.e,
            angle_des: acceleration_angle(desired.ax_d, desired.ay_d).ok(),
            cone: feasible_cone(yaw, self.params.theta),
        }
    }
}

/// One RK4 step of length `config.dt` from `t`, with yaw held at
/// `yaw_at(t)` and the controller re-evaluated in every stage.
pub fn step(state: &VehicleState, t: f64, config: &SimConfig) -> Result<VehicleState, SimError> {
    let cl = ClosedLoop::new(&config.params)?;
    let next = cl.rk4(state, t, config.dt, config.gait.yaw_at(t));
    if next.is_finite() {
        Ok(next)
    } else {
        Err(SimError::Divergence { t, last: *state })
    }
}

/// A run that stopped on a non-finite state; `partial` holds every finite
/// sample up to that point.
#[derive(Debug, Clone, PartialEq)]
pub struct Diverged {
    pub partial: Trajectory,
    pub error: SimError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(SimError),
    Diverged(Diverged),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid simulation config: {e}"),
            RunError::Diverged(d) => write!(f, "{}", d.error),
        }
    }
}

impl core::error::Error for RunError {}

/// Integrates from `t = 0` to the last grid point not past `duration`.
/// Deterministic: time is `k·dt` and yaw is chosen by integer half-period
/// index.
pub fn run(config: &SimConfig) -> Result<Trajectory, RunError> {
    config.validate().map_err(RunError::Config)?;
    let cl = ClosedLoop::new(&config.params).map_err(RunError::Config)?;
    let per_half = config.steps_per_half_period();
    let n = config.step_count();
    let mut traj = Trajectory {
        dt: config.dt,
        steps_per_half_period: per_half,
        samples: Vec::with_capacity(n + 1),
    };
    let mut state = config.initial_state;
    for k in 0..=n {
        let t = k as f64 * config.dt;
        let half = k / per_half;
        let yaw = config.gait.yaw_in_half_period(half);
        traj.samples.push(cl.sample(t, half, state, yaw));
        if k == n {
            break;
        }
        let next = cl.rk4(&state, t, config.dt, yaw);
        if !next.is_finite() {
            return Err(RunError::Diverged(Diverged {
                partial: traj,
                error: SimError::Divergence { t, last: state },
            }));
        }
        state = next;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &'static str, ok: bool, detail: String) -> Self {
        CheckResult {
            name,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            detail,
        }
    }

    pub fn skipped(name: &'static str, detail: String) -> Self {
        CheckResult {
            name,
            status: CheckStatus::Skipped,
            detail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Grid for the critical Lyapunov level.
    pub grid: GridSpec,
    /// Slack on the within-half-period maximum of L.
    pub local_max_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            grid: GridSpec::default(),
            local_max_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub clamped_steps: usize,
    pub l_critical: Option<f64>,
    pub supremum_bound: Option<f64>,
    /// First half-period index `n ≥ 1` whose starting state has ΔL ≥ 0.
    pub settling_half_period: Option<usize>,
    /// Largest L over the samples from the settling half-period on.
    pub tail_sup_lyapunov: Option<f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_SWITCH: &str = "switch_matrix_restriction";
pub const CHECK_LOCAL_MAX: &str = "half_period_local_max";
pub const CHECK_SUPREMUM: &str = "supremum_bound";
pub const CHECK_CAPTURE: &str = "capture_region";
pub const CHECK_NONINCREASING: &str = "lyapunov_nonincreasing";

/// Post-run checks. With forced saturation (amplitude > θ): allowed switch
/// matrices per yaw sign, L maximal at half-period ends, the supremum bound
/// and capture of the half-period boundary states. Without: no clamping at
/// all and a non-increasing L.
pub fn verify_trajectory(traj: &Trajectory, config: &SimConfig, opts: &VerifyOptions) -> VerificationReport {
    let mut report = VerificationReport {
        clamped_steps: traj.clamped_steps(),
        ..VerificationReport::default()
    };
    if traj.samples.is_empty() {
        return report;
    }
    match LateralLoop::new(&config.params, &config.gait) {
        Ok(lp) => verify_saturating(traj, &lp, opts, &mut report),
        Err(AnalysisError::NoForcedSaturation { .. }) => verify_unsaturated(traj, opts, &mut report),
        Err(e) => report.checks.push(CheckResult::new(
            CHECK_SWITCH,
            false,
            format!("cannot analyze configuration: {e}"),
        )),
    }
    report
}

fn verify_unsaturated(traj: &Trajectory, opts: &VerifyOptions, report: &mut VerificationReport) {
    let clamped = traj.clamped_steps();
    report.checks.push(CheckResult::new(
        CHECK_SWITCH,
        clamped == 0,
        format!("{clamped} samples with a clamped rotor command (expected all S11)"),
    ));
    let worst = traj
        .samples
        .windows(2)
        .map(|w| w[1].lyapunov - w[0].lyapunov)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = if worst.is_finite() { worst } else { 0.0 };
    report.checks.push(CheckResult::new(
        CHECK_NONINCREASING,
        worst <= opts.local_max_tol,
        format!("largest step increase of L: {worst:e}"),
    ));
    let why = String::from("gait does not force saturation");
    report.checks.push(CheckResult::skipped(CHECK_SUPREMUM, why.clone()));
    report.checks.push(CheckResult::skipped(CHECK_CAPTURE, why));
}

fn verify_saturating(traj: &Trajectory, lp: &LateralLoop, opts: &VerifyOptions, report: &mut VerificationReport) {
    let samples = &traj.samples;
    let per_half = traj.steps_per_half_period.max(1);

    // (a) only S11 or the single-rotor pattern of the current yaw sign
    let bad: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.half_period >= 1)
        .filter(|s| {
            let allowed = if s.yaw < 0.0 {
                SwitchMatrix::S10
            } else {
                SwitchMatrix::S01
            };
            s.switch != SwitchMatrix::S11 && s.switch != allowed
        })
        .collect();
    report.checks.push(CheckResult::new(
        CHECK_SWITCH,
        bad.is_empty(),
        match bad.first() {
            None => String::from("only S11 and the yaw-matched single-rotor pattern after the first half-period"),
            Some(s) => format!("{} disallowed samples; first {} at t = {}", bad.len(), s.switch, s.t),
        },
    ));

    // (b) L within each complete half-period bounded by its endpoint values
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_n = 0;
    let mut windows = 0;
    let mut n = 1;
    while (n + 1) * per_half < samples.len() {
        let (a, b) = (n * per_half, (n + 1) * per_half);
        let cap = samples[a].lyapunov.max(samples[b].lyapunov);
        let excess = samples[a..=b]
            .iter()
            .map(|s| s.lyapunov - cap)
            .fold(f64::NEG_INFINITY, f64::max);
        if excess > worst_excess {
            worst_excess = excess;
            worst_n = n;
        }
        windows += 1;
        n += 1;
    }
    report.checks.push(if windows == 0 {
        CheckResult::skipped(CHECK_LOCAL_MAX, String::from("no complete half-period after the first"))
    } else {
        CheckResult::new(
            CHECK_LOCAL_MAX,
            worst_excess <= opts.local_max_tol,
            format!("{windows} half-periods; worst excess over endpoint max {worst_excess:e} (half-period {worst_n})"),
        )
    });

    // (c) supremum bound past the empirical settling index
    let crit = critical_lyapunov(lp, &opts.grid);
    let bound = crit.supremum_bound();
    report.l_critical = Some(crit.value);
    report.supremum_bound = Some(bound);
    let settle = traj.half_period_boundaries().skip(1).find_map(|(n, s)| {
        let sign = Sign::of(s.yaw);
        (lp.in_capture_region(s.ey, sign) && lp.delta_l(s.ey, sign).is_ok_and(|d| d >= 0.0)).then_some(n)
    });
    report.settling_half_period = settle;
    let start = settle.unwrap_or(1) * per_half;
    let sup = samples
        .iter()
        .skip(start)
        .map(|s| s.lyapunov)
        .fold(f64::NEG_INFINITY, f64::max);
    if sup.is_finite() {
        report.tail_sup_lyapunov = Some(sup);
        report.checks.push(CheckResult::new(
            CHECK_SUPREMUM,
            !crit.degenerate && sup <= bound,
            format!(
                "sup L = {sup} from half-period {}; L_critical + max dL = {} + {} = {bound}",
                settle.unwrap_or(1),
                crit.value,
                crit.delta_l_max
            ),
        ));
    } else {
        report.checks.push(CheckResult::skipped(
            CHECK_SUPREMUM,
            String::from("trajectory ends before the tail"),
        ));
    }

    // (d) states at half-period boundaries inside the capture regions
    let mut checked = 0;
    let outside: Vec<(usize, &Sample)> = traj
        .half_period_boundaries()
        .skip(1)
        .inspect(|_| checked += 1)
        .filter(|(_, s)| !lp.in_capture_region(s.ey, Sign::of(s.yaw)))
        .collect();
    report.checks.push(if checked == 0 {
        CheckResult::skipped(CHECK_CAPTURE, String::from("trajectory shorter than one half-period"))
    } else {
        CheckResult::new(
            CHECK_CAPTURE,
            outside.is_empty(),
            match outside.first() {
                None => format!("{checked} boundary states all captured"),
                Some((n, s)) => format!(
                    "{} of {checked} boundary states outside; first at n = {n}: (e={}, edot={})",
                    outside.len(),
                    s.ey.e,
                    s.ey.edot
                ),
            },
        )
    });
}
