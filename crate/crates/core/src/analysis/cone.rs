use core::f64::consts::TAU;

use super::AnalysisError;

/// Maps any angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = crate::linalg::rem_euclid(a, TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w + 0.0
    }
}

/// Direction of an acceleration vector in `[0, 2π)`.
pub fn acceleration_angle(ax: f64, ay: f64) -> Result<f64, AnalysisError> {
    if ax == 0.0 && ay == 0.0 {
        return Err(AnalysisError::ZeroVector);
    }
    Ok(wrap_angle(libm::atan2(ay, ax)))
}

/// Directions reachable with non-negative rotor commands: the arc from
/// `Λ − θ` counter-clockwise to `Λ + θ`, both wrapped into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeasibleCone {
    pub lower: f64,
    pub upper: f64,
    /// Arc length `2θ`.
    pub width: f64,
}

pub fn feasible_cone(lambda: f64, theta: f64) -> FeasibleCone {
    FeasibleCone {
        lower: wrap_angle(lambda - theta),
        upper: wrap_angle(lambda + theta),
        width: 2.0 * theta,
    }
}

impl FeasibleCone {
    fn offset(&self, angle: f64) -> f64 {
        wrap_angle(angle - self.lower)
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.offset(angle) <= self.width
    }

    /// Angular distance from `angle` to the nearer edge of the cone.
    pub fn edge_distance(&self, angle: f64) -> f64 {
        let d = self.offset(angle);
        d.min(libm::fabs(d - self.width)).min(TAU - d)
    }
}
