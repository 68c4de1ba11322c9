//! Phase-plane machinery for the lateral error `(e_y, ė_y)` under the
//! large gait: closed-form flows per switch matrix, boundary hitting times,
//! the half-period map, ΔL grids and the Lyapunov level bounds.
//!
//! Everything here assumes the regime `e_x ≡ 0` (so `ẍ_d ≡ 1`), in which
//! the lateral loop is a planar switched affine system:
//!
//! * `S11`: `ë = −K_Y1·ė − K_Y2·e`
//! * single-rotor saturation: `ë = ±c` with `c = tan(A − θ)`
//!
//! and the saturation boundary is the line `K_Y1·ė + K_Y2·e = ±c`.

use core::fmt;
use core::ops::Neg;

use crate::gait::GaitSchedule;
use crate::plant::{ModelParams, ParamError};
use crate::Sign;

mod cone;
mod flow;
mod grid;
mod half_period;
mod hitting;

pub use cone::{acceleration_angle, feasible_cone, wrap_angle, FeasibleCone};
pub use flow::FlowMethod;
pub use grid::{
    critical_lyapunov, delta_l_grid, verify_quadrant_capture, CaptureReport, CellSign, CriticalLyapunov, DeltaLGrid,
    GridCell, GridSpec,
};

/// Lateral tracking error: position `e = y_r − y` and velocity `ė`.
/// Also reused for the x channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorState {
    pub e: f64,
    pub edot: f64,
}

impl ErrorState {
    pub const ORIGIN: ErrorState = ErrorState { e: 0.0, edot: 0.0 };

    pub const fn new(e: f64, edot: f64) -> Self {
        ErrorState { e, edot }
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.edot.is_finite()
    }

    pub fn distance(&self, other: &ErrorState) -> f64 {
        libm::hypot(self.e - other.e, self.edot - other.edot)
    }
}

impl Neg for ErrorState {
    type Output = ErrorState;
    fn neg(self) -> ErrorState {
        ErrorState::new(-self.e, -self.edot)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalysisError {
    Param(ParamError),
    /// The gait never forces saturation in the `e_x ≡ 0` regime
    /// (amplitude ≤ θ), so there is no switched lateral loop to analyze.
    NoForcedSaturation {
        amplitude: f64,
        theta: f64,
    },
    /// The initial state is outside the capture region of the given branch.
    Inadmissible {
        state: ErrorState,
        branch: Sign,
    },
    /// The unsaturated flow did not reach the saturation boundary within the
    /// search horizon.
    NoBoundaryHit {
        state: ErrorState,
        horizon: f64,
    },
    /// The angle of a zero vector is undefined.
    ZeroVector,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Param(e) => write!(f, "{e}"),
            AnalysisError::NoForcedSaturation { amplitude, theta } => write!(
                f,
                "gait amplitude {amplitude} does not exceed theta {theta}; no forced saturation"
            ),
            AnalysisError::Inadmissible { state, branch } => match branch {
                Sign::Pos => write!(
                    f,
                    "state (e={}, edot={}) violates the positive-branch conditions \
                     K_Y1*edot + K_Y2*e >= c, edot >= 0, e >= 0",
                    state.e, state.edot
                ),
                Sign::Neg => write!(
                    f,
                    "state (e={}, edot={}) violates the negative-branch conditions \
                     K_Y1*edot + K_Y2*e <= -c, edot <= 0, e <= 0",
                    state.e, state.edot
                ),
            },
            AnalysisError::NoBoundaryHit { state, horizon } => write!(
                f,
                "flow from (e={}, edot={}) does not reach the saturation boundary within {horizon} s",
                state.e, state.edot
            ),
            AnalysisError::ZeroVector => f.write_str("angle of a zero vector is undefined"),
        }
    }
}

impl core::error::Error for AnalysisError {}

impl From<ParamError> for AnalysisError {
    fn from(e: ParamError) -> Self {
        AnalysisError::Param(e)
    }
}

/// The switched lateral loop: PD gains, the saturation bound `c` and the
/// half-period over which yaw is constant.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LateralLoop {
    pub ky1: f64,
    pub ky2: f64,
    /// `c = tan(A − θ)`: both the boundary value of `K_Y1·ė + K_Y2·e` and
    /// the magnitude of the saturated lateral error acceleration.
    pub bound: f64,
    pub half_period: f64,
}

impl Default for LateralLoop {
    /// Default gains with the large gait: `c = 1/√3`, `T/2 = 1 s`.
    fn default() -> Self {
        LateralLoop {
            ky1: 9.0,
            ky2: 18.0,
            bound: 1.0 / libm::sqrt(3.0),
            half_period: 1.0,
        }
    }
}

impl LateralLoop {
    pub fn new(params: &ModelParams, gait: &GaitSchedule) -> Result<Self, AnalysisError> {
        params.validate()?;
        if gait.amplitude <= params.theta || gait.amplitude >= core::f64::consts::FRAC_PI_2 {
            return Err(AnalysisError::NoForcedSaturation {
                amplitude: gait.amplitude,
                theta: params.theta,
            });
        }
        Ok(LateralLoop {
            ky1: params.ky1,
            ky2: params.ky2,
            bound: libm::tan(gait.amplitude - params.theta),
            half_period: gait.half_period(),
        })
    }

    /// `½·ė² + ½·K_Y2·e²`.
    pub fn lyapunov(&self, s: ErrorState) -> f64 {
        0.5 * s.edot * s.edot + 0.5 * self.ky2 * s.e * s.e
    }

    /// `K_Y1·ė + K_Y2·e`, the quantity compared against `±c`.
    pub fn switching_function(&self, s: ErrorState) -> f64 {
        self.ky1 * s.edot + self.ky2 * s.e
    }

    /// Capture region of a branch. `Pos`: `K_Y1·ė + K_Y2·e ≥ c`, `ė ≥ 0`,
    /// `e ≥ 0` (the state at the start of a `Λ > 0` half-period). `Neg` is
    /// its mirror image.
    pub fn in_capture_region(&self, s: ErrorState, branch: Sign) -> bool {
        let m = branch.value();
        let (e, edot) = (m * s.e, m * s.edot);
        e >= 0.0 && edot >= 0.0 && self.ky1 * edot + self.ky2 * e >= self.bound
    }

    /// Perpendicular distance from `s` to the boundary line
    /// `K_Y1·ė + K_Y2·e = branch·c`.
    pub fn distance_to_boundary(&self, s: ErrorState, branch: Sign) -> f64 {
        let g = self.switching_function(s) - branch.value() * self.bound;
        libm::fabs(g) / libm::hypot(self.ky1, self.ky2)
    }

    /// Points on the boundary segment `K_Y1·ė + K_Y2·e = branch·c` that lie in
    /// the branch's quadrant, endpoints included. `n ≥ 2`.
    pub fn boundary_segment(&self, branch: Sign, n: usize) -> alloc::vec::Vec<ErrorState> {
        let e_end = self.bound / self.ky2;
        let m = branch.value();
        (0..n)
            .map(|i| {
                let e = if n > 1 { e_end * i as f64 / (n - 1) as f64 } else { 0.0 };
                let edot = ((self.bound - self.ky2 * e) / self.ky1).max(0.0);
                ErrorState::new(m * e, m * edot)
            })
            .collect()
    }

    /// Semi-axes `(e, ė)` of the level set `lyapunov = level`.
    pub fn ellipse_semi_axes(&self, level: f64) -> (f64, f64) {
        let l = level.max(0.0);
        (libm::sqrt(2.0 * l / self.ky2), libm::sqrt(2.0 * l))
    }
}
