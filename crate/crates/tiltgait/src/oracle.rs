//! Numerical reference for boundary hitting times: fixed-step RK4 on the
//! unsaturated lateral loop with a sign-change scan and bisection.

use rand::Rng;
use tiltgait_core::{ErrorState, LateralLoop, Sign};

/// Scan step of the event detector.
pub const STEP: f64 = 1e-4;

fn rk4(lp: &LateralLoop, s: ErrorState, h: f64) -> ErrorState {
    let f = |s: ErrorState| ErrorState::new(s.edot, -lp.ky1 * s.edot - lp.ky2 * s.e);
    let add = |a: ErrorState, k: ErrorState, c: f64| ErrorState::new(a.e + c * k.e, a.edot + c * k.edot);
    let k1 = f(s);
    let k2 = f(add(s, k1, h / 2.0));
    let k3 = f(add(s, k2, h / 2.0));
    let k4 = f(add(s, k3, h));
    ErrorState::new(
        s.e + h / 6.0 * (k1.e + 2.0 * k2.e + 2.0 * k3.e + k4.e),
        s.edot + h / 6.0 * (k1.edot + 2.0 * k2.edot + 2.0 * k3.edot + k4.edot),
    )
}

/// First time within `horizon` at which the unsaturated flow from `s0`
/// reaches the boundary line of `branch`.
pub fn hitting_time(lp: &LateralLoop, s0: ErrorState, branch: Sign, horizon: f64) -> Option<f64> {
    let level = branch.value() * lp.bound;
    let g = |s: ErrorState| lp.switching_function(s) - level;
    let g0 = g(s0);
    if g0 == 0.0 {
        return Some(0.0);
    }
    let side = g0 > 0.0;
    let mut s = s0;
    let mut t = 0.0;
    while t < horizon {
        let next = rk4(lp, s, STEP);
        if (g(next) > 0.0) != side {
            let (mut lo, mut hi) = (0.0, STEP);
            while hi - lo > 1e-15 {
                let mid = 0.5 * (lo + hi);
                if (g(rk4(lp, s, mid)) > 0.0) == side {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(t + 0.5 * (lo + hi));
        }
        s = next;
        t += STEP;
    }
    None
}

/// Uniform sample from the capture region of `branch` within the box
/// `[0, extent]²` (mirrored for `Neg`).
pub fn sample_admissible<R: Rng>(rng: &mut R, lp: &LateralLoop, branch: Sign, extent: f64) -> ErrorState {
    loop {
        let s = ErrorState::new(rng.random_range(0.0..extent), rng.random_range(0.0..extent));
        let s = if branch == Sign::Pos { s } else { -s };
        if lp.in_capture_region(s, branch) {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_closed_form() {
        let lp = LateralLoop::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for branch in [Sign::Pos, Sign::Neg] {
            for _ in 0..20 {
                let s = sample_admissible(&mut rng, &lp, branch, 2.0);
                let want = lp.hitting_time(s, branch).unwrap();
                let got = hitting_time(&lp, s, branch, 5.0).unwrap();
                assert!((got - want).abs() < 1e-9, "{s:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn boundary_is_immediate() {
        let lp = LateralLoop::default();
        let s = ErrorState::new(lp.bound / lp.ky2, 0.0);
        assert!(hitting_time(&lp, s, Sign::Pos, 1.0).unwrap() < 1e-12);
    }
}
