//! Square-wave yaw schedule and the constant-acceleration straight-line
//! reference.

use core::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_8};
use core::fmt;

use crate::Sign;

/// Square-wave yaw: `phase_sign·A` on the first half of every period,
/// `−phase_sign·A` on the second. Jumps happen exactly at `n·T/2` and the
/// new value holds on `[n·T/2, (n+1)·T/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaitSchedule {
    /// rad
    pub amplitude: f64,
    /// s
    pub period: f64,
    pub phase_sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaitError {
    Amplitude(f64),
    Period(f64),
}

impl fmt::Display for GaitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaitError::Amplitude(a) => write!(f, "gait amplitude {a} outside (0, pi/2)"),
            GaitError::Period(t) => write!(f, "gait period {t} must be > 0"),
        }
    }
}

impl core::error::Error for GaitError {}

impl GaitSchedule {
    /// |Λ| = π/8, T = 2 s. Stays inside the feasible cone: no saturation.
    pub const fn small() -> Self {
        GaitSchedule {
            amplitude: FRAC_PI_8,
            period: 2.0,
            phase_sign: Sign::Neg,
        }
    }

    /// |Λ| = π/3, T = 2 s. Forces rotor saturation every half-period.
    pub const fn large() -> Self {
        GaitSchedule {
            amplitude: FRAC_PI_3,
            period: 2.0,
            phase_sign: Sign::Neg,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "small" => Some(Self::small()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        if !(self.amplitude > 0.0 && self.amplitude < FRAC_PI_2) {
            return Err(GaitError::Amplitude(self.amplitude));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(GaitError::Period(self.period));
        }
        Ok(())
    }

    pub fn half_period(&self) -> f64 {
        0.5 * self.period
    }

    /// Sign of Λ during half-period `n` (counting from 0).
    pub fn sign_in_half_period(&self, n: usize) -> Sign {
        if n.is_multiple_of(2) {
            self.phase_sign
        } else {
            -self.phase_sign
        }
    }

    pub fn yaw_in_half_period(&self, n: usize) -> f64 {
        self.sign_in_half_period(n).value() * self.amplitude
    }

    pub fn yaw_at(&self, t: f64) -> f64 {
        let phase = crate::linalg::rem_euclid(t, self.period);
        let s = if phase < self.half_period() {
            self.phase_sign
        } else {
            -self.phase_sign
        };
        s.value() * self.amplitude
    }
}

/// Reference position, velocity and acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub xr: f64,
    pub yr: f64,
    pub vxr: f64,
    pub vyr: f64,
    pub axr: f64,
    pub ayr: f64,
}

/// Straight line along x with unit acceleration: `x_r = t²/2`, `y_r = 0`.
pub fn reference_at(t: f64) -> ReferenceSample {
    ReferenceSample {
        xr: 0.5 * t * t,
        vxr: t,
        axr: 1.0,
        ..ReferenceSample::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_gait_phases() {
        let g = GaitSchedule::large();
        assert_eq!(g.yaw_at(0.5), -FRAC_PI_3);
        assert_eq!(g.yaw_at(1.5), FRAC_PI_3);
        assert_eq!(g.yaw_at(2.0), g.yaw_at(0.0));
        // closed-left switching
        assert_eq!(g.yaw_at(1.0), FRAC_PI_3);
        assert_eq!(g.yaw_in_half_period(0), -FRAC_PI_3);
        assert_eq!(g.yaw_in_half_period(3), FRAC_PI_3);
    }

    #[test]
    fn presets() {
        assert_eq!(GaitSchedule::preset("small"), Some(GaitSchedule::small()));
        assert_eq!(GaitSchedule::preset("large"), Some(GaitSchedule::large()));
        assert_eq!(GaitSchedule::preset("medium"), None);
        assert!(GaitSchedule::large().validate().is_ok());
        let bad = GaitSchedule {
            period: 0.0,
            ..GaitSchedule::small()
        };
        assert_eq!(bad.validate(), Err(GaitError::Period(0.0)));
    }

    #[test]
    fn reference_values() {
        let r0 = reference_at(0.0);
        assert_eq!(
            r0,
            ReferenceSample {
                axr: 1.0,
                ..ReferenceSample::default()
            }
        );
        let r2 = reference_at(2.0);
        assert_eq!((r2.xr, r2.vxr, r2.axr), (2.0, 2.0, 1.0));
        assert_eq!(reference_at(10.0).xr, 50.0);
    }
}
