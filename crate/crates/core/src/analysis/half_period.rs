use alloc::vec::Vec;

use super::{AnalysisError, ErrorState, LateralLoop};
use crate::Sign;

impl LateralLoop {
    /// Time of the switch from `S11` to saturation within a half-period that
    /// starts at `s0` under yaw sign `lambda_sign`; `None` when the
    /// unsaturated flow does not reach the boundary before the half-period
    /// ends.
    pub fn switch_time(&self, s0: ErrorState, lambda_sign: Sign) -> Result<Option<f64>, AnalysisError> {
        if !self.in_capture_region(s0, lambda_sign) {
            return Err(AnalysisError::Inadmissible {
                state: s0,
                branch: lambda_sign,
            });
        }
        if self.has_default_gains() {
            let t = self.hitting_time(s0, lambda_sign)?;
            return Ok((t < self.half_period).then_some(t));
        }
        Ok(self.first_boundary_hit(s0, lambda_sign, self.half_period))
    }

    /// State at time `tau ∈ [0, T/2]` into a half-period: unsaturated flow up
    /// to the boundary hit, then constant saturated acceleration `−Λ_sign·c`.
    pub fn half_period_state_at(
        &self,
        s0: ErrorState,
        lambda_sign: Sign,
        tau: f64,
    ) -> Result<ErrorState, AnalysisError> {
        let hit = self.switch_time(s0, lambda_sign)?;
        Ok(self.compose(s0, lambda_sign, hit, tau))
    }

    fn compose(&self, s0: ErrorState, lambda_sign: Sign, hit: Option<f64>, tau: f64) -> ErrorState {
        match hit {
            Some(t1) if tau > t1 => {
                let on_bound = self.s11_flow(s0, t1);
                self.saturated_flow(on_bound, tau - t1, -lambda_sign)
            }
            _ => self.s11_flow(s0, tau),
        }
    }

    /// Advances the lateral error by one half-period.
    pub fn half_period_map(&self, s0: ErrorState, lambda_sign: Sign) -> Result<ErrorState, AnalysisError> {
        self.half_period_state_at(s0, lambda_sign, self.half_period)
    }

    /// Two consecutive half-periods, starting under `lambda_sign`.
    pub fn full_period_map(&self, s0: ErrorState, lambda_sign: Sign) -> Result<ErrorState, AnalysisError> {
        let mid = self.half_period_map(s0, lambda_sign)?;
        self.half_period_map(mid, -lambda_sign)
    }

    /// Change of the Lyapunov candidate across one half-period.
    pub fn delta_l(&self, s0: ErrorState, lambda_sign: Sign) -> Result<f64, AnalysisError> {
        let s1 = self.half_period_map(s0, lambda_sign)?;
        Ok(self.lyapunov(s1) - self.lyapunov(s0))
    }

    /// `n + 1` uniformly spaced states across one half-period, both ends
    /// included.
    pub fn half_period_trajectory(
        &self,
        s0: ErrorState,
        lambda_sign: Sign,
        n: usize,
    ) -> Result<Vec<ErrorState>, AnalysisError> {
        let hit = self.switch_time(s0, lambda_sign)?;
        let n = n.max(1);
        Ok((0..=n)
            .map(|i| self.compose(s0, lambda_sign, hit, self.half_period * i as f64 / n as f64))
            .collect())
    }

    /// Largest ΔL along both boundary segments, sampled at `n` points each
    /// (endpoints included).
    pub fn boundary_delta_l_max(&self, n: usize) -> Option<(ErrorState, f64)> {
        let mut best: Option<(ErrorState, f64)> = None;
        for branch in [Sign::Pos, Sign::Neg] {
            for s in self.boundary_segment(branch, n) {
                // Rounding can nudge a boundary point just outside the region.
                let Ok(d) = self.delta_l(s, branch) else { continue };
                if best.is_none_or(|(_, b)| d > b) {
                    best = Some((s, d));
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_outside_both_regions() {
        let lp = LateralLoop::default();
        assert!(lp.half_period_map(ErrorState::ORIGIN, Sign::Pos).is_err());
        assert!(lp.half_period_map(ErrorState::ORIGIN, Sign::Neg).is_err());
    }

    #[test]
    fn first_half_period_state_is_captured() {
        let lp = LateralLoop::default();
        let sqrt3 = libm::sqrt(3.0);
        let s = ErrorState::new(1.0 / (2.0 * sqrt3), 1.0 / sqrt3);
        assert!(lp.in_capture_region(s, Sign::Pos));
        let next = lp.half_period_map(s, Sign::Pos).unwrap();
        assert!(lp.in_capture_region(next, Sign::Neg), "{next:?}");
    }

    #[test]
    fn delta_l_maximum_on_boundary_is_three_quarters() {
        let lp = LateralLoop::default();
        let (s, d) = lp.boundary_delta_l_max(2001).unwrap();
        assert!(libm::fabs(d - 0.75) < 1e-3, "{d} at {s:?}");
        // exact maximizer: the end of the segment on the e axis
        let end = ErrorState::new(lp.bound / 18.0, 0.0);
        assert!(libm::fabs(lp.delta_l(end, Sign::Pos).unwrap() - 0.75) < 1e-12);
    }

    #[test]
    fn trajectory_endpoints() {
        let lp = LateralLoop::default();
        let s0 = ErrorState::new(0.5, 0.5);
        let tr = lp.half_period_trajectory(s0, Sign::Pos, 100).unwrap();
        assert_eq!(tr.len(), 101);
        assert!(tr[0].distance(&s0) < 1e-15);
        let end = lp.half_period_map(s0, Sign::Pos).unwrap();
        assert!(tr[100].distance(&end) < 1e-15);
    }
}
