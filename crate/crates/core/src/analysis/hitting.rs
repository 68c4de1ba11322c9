use super::{AnalysisError, ErrorState, LateralLoop};
use crate::Sign;

// Scan resolution and horizon for bracketed event detection, in
// half-periods.
const SCAN_STEPS_PER_HALF_PERIOD: f64 = 512.0;
const SEARCH_HORIZON_HALF_PERIODS: f64 = 64.0;

impl LateralLoop {
    /// Time for the unsaturated flow starting in the positive capture region
    /// to reach `K_Y1·ė + K_Y2·e = c`.
    pub fn hitting_time_pos(&self, s0: ErrorState) -> Result<f64, AnalysisError> {
        self.hitting_time(s0, Sign::Pos)
    }

    /// Mirror of [`hitting_time_pos`](Self::hitting_time_pos) for the
    /// negative capture region and the line `K_Y1·ė + K_Y2·e = −c`.
    pub fn hitting_time_neg(&self, s0: ErrorState) -> Result<f64, AnalysisError> {
        self.hitting_time(s0, Sign::Neg)
    }

    pub fn hitting_time(&self, s0: ErrorState, branch: Sign) -> Result<f64, AnalysisError> {
        if !self.in_capture_region(s0, branch) {
            return Err(AnalysisError::Inadmissible { state: s0, branch });
        }
        if self.has_default_gains() {
            return Ok(match branch {
                Sign::Pos => self.closed_form_pos(s0),
                Sign::Neg => self.closed_form_neg(s0),
            });
        }
        let horizon = SEARCH_HORIZON_HALF_PERIODS * self.half_period;
        self.first_boundary_hit(s0, branch, horizon)
            .ok_or(AnalysisError::NoBoundaryHit { state: s0, horizon })
    }

    // e^{3t} is the positive root of (c/9)z² + (2e + ė/3)z − 4e − 4ė/3 = 0.
    fn closed_form_pos(&self, s0: ErrorState) -> f64 {
        let a = 2.0 * s0.e + s0.edot / 3.0;
        let q = 4.0 * s0.e + 4.0 * s0.edot / 3.0;
        let k = self.bound / 9.0;
        let z = (-a + libm::sqrt(a * a + 4.0 * k * q)) / (2.0 * k);
        (libm::log(z) / 3.0).max(0.0)
    }

    // e^{3t} is the positive root of (c/9)z² − (2e + ė/3)z + 4e + 4ė/3 = 0.
    fn closed_form_neg(&self, s0: ErrorState) -> f64 {
        let a = 2.0 * s0.e + s0.edot / 3.0;
        let q = 4.0 * s0.e + 4.0 * s0.edot / 3.0;
        let k = self.bound / 9.0;
        let z = (a + libm::sqrt(a * a - 4.0 * k * q)) / (2.0 * k);
        (libm::log(z) / 3.0).max(0.0)
    }

    /// First `t ∈ [0, horizon]` where the unsaturated flow meets the branch's
    /// boundary line, by scanning for a sign change and bisecting.
    pub(crate) fn first_boundary_hit(&self, s0: ErrorState, branch: Sign, horizon: f64) -> Option<f64> {
        let m = branch.value();
        let g = |t: f64| m * self.switching_function(self.s11_flow(s0, t)) - self.bound;
        if g(0.0) <= 0.0 {
            return Some(0.0);
        }
        let h = self.half_period / SCAN_STEPS_PER_HALF_PERIOD;
        let mut lo = 0.0;
        loop {
            if lo >= horizon {
                return None;
            }
            let hi = (lo + h).min(horizon);
            if g(hi) <= 0.0 {
                return Some(bisect(&g, lo, hi));
            }
            lo = hi;
        }
    }
}

// g(lo) > 0 ≥ g(hi)
fn bisect(g: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_boundary_is_zero() {
        let lp = LateralLoop::default();
        let c = lp.bound;
        // 9ė + 18e = c with e = c/36, ė = c/18
        let s = ErrorState::new(c / 36.0, c / 18.0);
        assert!(lp.hitting_time_pos(s).unwrap() < 1e-12);
        assert!(lp.hitting_time_neg(-s).unwrap() < 1e-12);
    }

    #[test]
    fn reference_value() {
        let lp = LateralLoop::default();
        let t1 = lp.hitting_time_pos(ErrorState::new(0.1, 0.0)).unwrap();
        assert!(libm::fabs(t1 - 0.1085) < 5e-5, "{t1}");
        let t3 = lp.hitting_time_neg(ErrorState::new(-0.1, 0.0)).unwrap();
        assert!(libm::fabs(t1 - t3) < 1e-14);
    }

    #[test]
    fn within_half_period() {
        let lp = LateralLoop::default();
        let t = lp.hitting_time_pos(ErrorState::new(1.0, 1.0)).unwrap();
        assert!(t > 0.0 && t < 1.0);
        let t = lp.hitting_time_neg(ErrorState::new(-1.0, -1.0)).unwrap();
        assert!(t > 0.0 && t < 1.0);
    }

    #[test]
    fn wrong_quadrant_rejected() {
        let lp = LateralLoop::default();
        assert!(matches!(
            lp.hitting_time_pos(ErrorState::new(-0.1, 0.0)),
            Err(AnalysisError::Inadmissible { branch: Sign::Pos, .. })
        ));
        assert!(lp.hitting_time_neg(ErrorState::new(0.1, 0.0)).is_err());
    }

    #[test]
    fn bracketed_search_matches_closed_form() {
        let lp = LateralLoop::default();
        for &(e, v) in &[(0.1, 0.0), (0.5, 2.0), (1.7, 0.3), (0.02, 0.05)] {
            let s = ErrorState::new(e, v);
            let closed = lp.hitting_time_pos(s).unwrap();
            let scanned = lp.first_boundary_hit(s, Sign::Pos, 64.0).unwrap();
            assert!(libm::fabs(closed - scanned) < 1e-12, "{closed} {scanned}");
            let closed = lp.hitting_time_neg(-s).unwrap();
            let scanned = lp.first_boundary_hit(-s, Sign::Neg, 64.0).unwrap();
            assert!(libm::fabs(closed - scanned) < 1e-12);
        }
    }
}
