//! Open-loop vehicle model: squared rotor speeds and yaw to planar
//! acceleration.

use core::f64::consts::FRAC_PI_2;
use core::fmt;

use crate::linalg::{Mat2, Vec2};

/// Physical constants and PD gains.
///
/// Mass defaults to 1 kg; it cancels from every closed-loop error equation
/// and only rescales raw rotor commands.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    /// kg
    pub mass: f64,
    /// Half-angle between the two propellers, rad.
    pub theta: f64,
    /// Maps rad²/s² to N.
    pub k_thrust: f64,
    pub kx1: f64,
    pub kx2: f64,
    pub ky1: f64,
    pub ky2: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            mass: 1.0,
            theta: core::f64::consts::FRAC_PI_6,
            k_thrust: 0.001,
            kx1: 12.0,
            kx2: 6.0,
            ky1: 9.0,
            ky2: 18.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamError {
    NonFinite(&'static str),
    NonPositive(&'static str),
    /// theta outside (0, π/2): the thrust map is singular.
    SingularThrustMap {
        theta: f64,
    },
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamError::NonFinite(name) => write!(f, "parameter `{name}` is not finite"),
            ParamError::NonPositive(name) => write!(f, "parameter `{name}` must be > 0"),
            ParamError::SingularThrustMap { theta } => write!(
                f,
                "theta = {theta} rad makes the thrust map singular; need 0 < theta < pi/2"
            ),
        }
    }
}

impl core::error::Error for ParamError {}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let fields = [
            ("mass", self.mass),
            ("theta", self.theta),
            ("k_thrust", self.k_thrust),
            ("kx1", self.kx1),
            ("kx2", self.kx2),
            ("ky1", self.ky1),
            ("ky2", self.ky2),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        for (name, v) in fields {
            if name != "theta" && v <= 0.0 {
                return Err(ParamError::NonPositive(name));
            }
        }
        if !(self.theta > 0.0 && self.theta < FRAC_PI_2) {
            return Err(ParamError::SingularThrustMap { theta: self.theta });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl VehicleState {
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.vx.is_finite() && self.vy.is_finite()
    }
}

/// Post-clamp squared rotor speeds, rad²/s². Both components are ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RotorCommand {
    pub w1sq: f64,
    pub w2sq: f64,
}

/// Yaw rotation `[[cos Λ, −sin Λ], [sin Λ, cos Λ]]`.
pub fn rotation_matrix(lambda: f64) -> Mat2 {
    let (s, c) = libm::sincos(lambda);
    Mat2::new(c, -s, s, c)
}

/// Tilt projection times per-rotor thrust coefficients:
/// `[[K cos θ, K cos θ], [K sin θ, −K sin θ]]`.
pub fn thrust_map(params: &ModelParams) -> Mat2 {
    let (s, c) = libm::sincos(params.theta);
    let k = params.k_thrust;
    Mat2::new(k * c, k * c, k * s, -k * s)
}

/// Planar acceleration `(1/m) · J_Λ · J_θ · [ω₁², ω₂²]`.
pub fn accelerate(cmd: RotorCommand, lambda: f64, params: &ModelParams) -> Vec2 {
    let m = rotation_matrix(lambda) * thrust_map(params);
    (m * Vec2::new(cmd.w1sq, cmd.w2sq)) * (1.0 / params.mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn mat_close(m: Mat2, want: [[f64; 2]; 2], tol: f64) -> bool {
        m.0.iter()
            .flatten()
            .zip(want.iter().flatten())
            .all(|(a, b)| close(*a, *b, tol))
    }

    #[test]
    fn rotation_identity_and_exact_values() {
        assert_eq!(rotation_matrix(0.0), Mat2::IDENTITY);
        let r = rotation_matrix(FRAC_PI_3);
        assert!(mat_close(r, [[0.5, -SQRT3 / 2.0], [SQRT3 / 2.0, 0.5]], 1e-15));
        assert!(mat_close(rotation_matrix(-FRAC_PI_3), r.transpose().0, 1e-15));
        assert!(close(r.det(), 1.0, 1e-15));
    }

    #[test]
    fn thrust_map_defaults() {
        let j = thrust_map(&ModelParams::default());
        assert!(mat_close(
            j,
            [[0.001 * SQRT3 / 2.0, 0.001 * SQRT3 / 2.0], [0.0005, -0.0005]],
            1e-18
        ));
    }

    #[test]
    fn thrust_map_degenerate_tilt() {
        let p = ModelParams {
            theta: FRAC_PI_2,
            k_thrust: 1.0,
            ..ModelParams::default()
        };
        let j = thrust_map(&p);
        assert!(close(j.0[0][0], 0.0, 1e-16) && close(j.0[0][1], 0.0, 1e-16));
        assert_eq!((j.0[1][0], j.0[1][1]), (1.0, -1.0));
    }

    #[test]
    fn thrust_map_determinant() {
        for &theta in &[0.1, FRAC_PI_6, 0.7, 1.4] {
            let p = ModelParams {
                theta,
                ..ModelParams::default()
            };
            let k = p.k_thrust;
            let want = -k * k * libm::sin(2.0 * theta);
            assert!(close(thrust_map(&p).det(), want, 1e-18));
        }
    }

    #[test]
    fn symmetric_command_has_no_lateral_thrust() {
        let p = ModelParams::default();
        let a = accelerate(
            RotorCommand {
                w1sq: 400.0,
                w2sq: 400.0,
            },
            0.0,
            &p,
        );
        assert!(close(a.x, 2.0 * 0.001 * 400.0 * libm::cos(FRAC_PI_6), 1e-15));
        assert!(close(a.y, 0.0, 1e-16));
        assert_eq!(accelerate(RotorCommand::default(), 0.3, &p), Vec2::ZERO);
    }

    #[test]
    fn single_rotor_under_negative_yaw() {
        // Column 1 of J_θ·1000 is the unit vector at θ = π/6; rotating by
        // −π/3 leaves the unit vector at −π/6 = (√3/2, −1/2).
        let p = ModelParams::default();
        let a = accelerate(
            RotorCommand {
                w1sq: 1000.0,
                w2sq: 0.0,
            },
            -FRAC_PI_3,
            &p,
        );
        assert!(close(a.x, SQRT3 / 2.0, 1e-14));
        assert!(close(a.y, -0.5, 1e-14));
    }

    #[test]
    fn validation() {
        assert!(ModelParams::default().validate().is_ok());
        let bad = ModelParams {
            theta: 0.0,
            ..ModelParams::default()
        };
        assert!(matches!(bad.validate(), Err(ParamError::SingularThrustMap { .. })));
        let bad = ModelParams {
            ky1: -1.0,
            ..ModelParams::default()
        };
        assert_eq!(bad.validate(), Err(ParamError::NonPositive("ky1")));
        let bad = ModelParams {
            mass: f64::NAN,
            ..ModelParams::default()
        };
        assert_eq!(bad.validate(), Err(ParamError::NonFinite("mass")));
    }
}
