//! Feedback-linearization PD controller with a zero lower bound on the
//! squared rotor speeds, and identification of the active saturation
//! pattern.

use core::fmt;

use crate::analysis::{ErrorState, LateralLoop};
use crate::gait::ReferenceSample;
use crate::linalg::{Mat2, Vec2};
use crate::plant::{rotation_matrix, thrust_map, ModelParams, ParamError, RotorCommand, VehicleState};
use crate::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DesiredAccel {
    pub ax_d: f64,
    pub ay_d: f64,
}

impl DesiredAccel {
    pub fn as_vec(self) -> Vec2 {
        Vec2::new(self.ax_d, self.ay_d)
    }
}

/// Squared rotor speeds before clamping; may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawCommand {
    pub sq1: f64,
    pub sq2: f64,
}

/// Diagonal 0/1 matrix `diag(p, q)` selecting which rotor commands pass
/// through unclamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwitchMatrix {
    pub p: bool,
    pub q: bool,
}

impl SwitchMatrix {
    pub const S00: SwitchMatrix = SwitchMatrix { p: false, q: false };
    pub const S01: SwitchMatrix = SwitchMatrix { p: false, q: true };
    pub const S10: SwitchMatrix = SwitchMatrix { p: true, q: false };
    pub const S11: SwitchMatrix = SwitchMatrix { p: true, q: true };

    pub fn apply(self, raw: RawCommand) -> RotorCommand {
        RotorCommand {
            w1sq: if self.p { raw.sq1 } else { 0.0 },
            w2sq: if self.q { raw.sq2 } else { 0.0 },
        }
    }

    pub fn is_saturated(self) -> bool {
        self != SwitchMatrix::S11
    }

    pub fn matrix(self) -> Mat2 {
        Mat2::new(self.p as u8 as f64, 0.0, 0.0, self.q as u8 as f64)
    }
}

impl fmt::Display for SwitchMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}{}", self.p as u8, self.q as u8)
    }
}

/// PD law on top of the reference feed-forward acceleration.
pub fn desired_accel(state: &VehicleState, r: &ReferenceSample, params: &ModelParams) -> DesiredAccel {
    DesiredAccel {
        ax_d: r.axr + params.kx1 * (r.vxr - state.vx) + params.kx2 * (r.xr - state.x),
        ay_d: r.ayr + params.ky1 * (r.vyr - state.vy) + params.ky2 * (r.yr - state.y),
    }
}

/// Dynamic inversion `J_θ⁻¹ · J_Λ⁻¹ · m · a_d`, before any clamping.
pub fn raw_inversion(acc: DesiredAccel, lambda: f64, params: &ModelParams) -> Result<RawCommand, ParamError> {
    let inv_thrust = thrust_map(params)
        .inverse()
        .ok_or(ParamError::SingularThrustMap { theta: params.theta })?;
    Ok(invert_with(&inv_thrust, acc, lambda, params.mass))
}

pub(crate) fn invert_with(inv_thrust: &Mat2, acc: DesiredAccel, lambda: f64, mass: f64) -> RawCommand {
    // rotation inverse is its transpose
    let body = rotation_matrix(lambda).transpose() * acc.as_vec();
    let w = *inv_thrust * (body * mass);
    RawCommand { sq1: w.x, sq2: w.y }
}

pub fn clamp(raw: RawCommand) -> RotorCommand {
    RotorCommand {
        w1sq: raw.sq1.max(0.0),
        w2sq: raw.sq2.max(0.0),
    }
}

/// `p = 1` iff `sq1 > 0`, `q = 1` iff `sq2 > 0`; an exact zero counts as
/// saturated.
pub fn switch_matrix_of(raw: RawCommand) -> SwitchMatrix {
    SwitchMatrix {
        p: raw.sq1 > 0.0,
        q: raw.sq2 > 0.0,
    }
}

/// Analytical saturation pattern of the lateral loop when `e_x ≡ 0`
/// (so `ẍ_d ≡ 1`). Only `S11` and the single-rotor pattern matching the
/// yaw sign can occur.
///
/// With `s = K_Y1·ė + K_Y2·e` and `c` the loop's saturation bound:
/// `Λ < 0` gives `S10` iff `s ≥ −c`; `Λ > 0` gives `S01` iff `s ≤ c`.
pub fn classify_region(err: ErrorState, lambda_sign: Sign, lp: &LateralLoop) -> SwitchMatrix {
    let s = lp.ky1 * err.edot + lp.ky2 * err.e;
    match lambda_sign {
        Sign::Neg if s >= -lp.bound => SwitchMatrix::S10,
        Sign::Pos if s <= lp.bound => SwitchMatrix::S01,
        _ => SwitchMatrix::S11,
    }
}
