use alloc::vec::Vec;

use super::{ErrorState, LateralLoop};
use crate::Sign;

/// Rectangular sampling of the `(e, ė)` plane. Axis values are evenly spaced
/// with both ends included; a resolution of 1 samples the lower end only and
/// 0 yields an empty grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub e_range: [f64; 2],
    pub edot_range: [f64; 2],
    /// Points along `e` and along `ė`.
    pub resolution: [usize; 2],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            e_range: [-2.0, 2.0],
            edot_range: [-2.0, 2.0],
            resolution: [200, 200],
        }
    }
}

fn axis_value(range: [f64; 2], n: usize, i: usize) -> f64 {
    if n <= 1 {
        range[0]
    } else {
        range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64
    }
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        GridSpec {
            e_range: [lo, hi],
            edot_range: [lo, hi],
            resolution: [n, n],
        }
    }

    pub fn with_resolution(self, n: usize) -> Self {
        GridSpec {
            resolution: [n, n],
            ..self
        }
    }

    pub fn len(&self) -> usize {
        self.resolution[0] * self.resolution[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn e_at(&self, i: usize) -> f64 {
        axis_value(self.e_range, self.resolution[0], i)
    }

    pub fn edot_at(&self, j: usize) -> f64 {
        axis_value(self.edot_range, self.resolution[1], j)
    }

    /// Grid spacing along each axis (0 for degenerate axes).
    pub fn spacing(&self) -> (f64, f64) {
        let step = |r: [f64; 2], n: usize| if n > 1 { (r[1] - r[0]) / (n - 1) as f64 } else { 0.0 };
        (
            step(self.e_range, self.resolution[0]),
            step(self.edot_range, self.resolution[1]),
        )
    }

    /// Row-major over `e`, then `ė`.
    pub fn points(&self) -> impl Iterator<Item = ErrorState> + '_ {
        let [ne, nv] = self.resolution;
        (0..ne).flat_map(move |i| (0..nv).map(move |j| ErrorState::new(self.e_at(i), self.edot_at(j))))
    }
}

/// Classification of one grid cell for the sign map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSign {
    /// Outside the capture region of the grid's branch.
    Masked,
    /// ΔL > 0.
    Increasing,
    /// ΔL ≤ 0 (ties included).
    NonIncreasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub state: ErrorState,
    /// `None` on masked cells.
    pub delta_l: Option<f64>,
}

impl GridCell {
    pub fn sign(&self) -> CellSign {
        match self.delta_l {
            None => CellSign::Masked,
            Some(d) if d > 0.0 => CellSign::Increasing,
            Some(_) => CellSign::NonIncreasing,
        }
    }
}

/// ΔL over a grid for one yaw sign, with inadmissible cells masked.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaLGrid {
    pub spec: GridSpec,
    pub lambda_sign: Sign,
    /// Row-major over `e`, then `ė`; `None` where masked.
    pub values: Vec<Option<f64>>,
}

impl DeltaLGrid {
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        self.spec
            .points()
            .zip(self.values.iter())
            .map(|(state, &delta_l)| GridCell { state, delta_l })
    }

    pub fn admissible_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn positive_count(&self) -> usize {
        self.values.iter().filter(|v| matches!(v, Some(d) if *d > 0.0)).count()
    }

    pub fn is_fully_masked(&self) -> bool {
        self.admissible_count() == 0
    }

    /// Admissible cell with the largest ΔL.
    pub fn max(&self) -> Option<(ErrorState, f64)> {
        self.cells()
            .filter_map(|c| c.delta_l.map(|d| (c.state, d)))
            .fold(None, |best, (s, d)| match best {
                Some((_, b)) if b >= d => best,
                _ => Some((s, d)),
            })
    }
}

/// Evaluates ΔL on every cell in the capture region of `lambda_sign`.
///
/// Cells are independent; the result does not depend on evaluation order.
pub fn delta_l_grid(lp: &LateralLoop, spec: &GridSpec, lambda_sign: Sign) -> DeltaLGrid {
    let values = spec
        .points()
        .map(|s| {
            if lp.in_capture_region(s, lambda_sign) {
                lp.delta_l(s, lambda_sign).ok()
            } else {
                None
            }
        })
        .collect();
    DeltaLGrid {
        spec: *spec,
        lambda_sign,
        values,
    }
}

/// Result of checking that the half-period map sends one capture region
/// into the other.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CaptureReport {
    pub lambda_sign: Sign,
    pub admissible: usize,
    /// Admissible cells whose image after one half-period is not in the
    /// opposite capture region.
    pub one_step_violations: Vec<ErrorState>,
    /// Admissible cells whose image after a full period is not back in the
    /// starting region.
    pub two_step_violations: Vec<ErrorState>,
}

impl CaptureReport {
    pub fn passed(&self) -> bool {
        self.one_step_violations.is_empty() && self.two_step_violations.is_empty()
    }
}

pub fn verify_quadrant_capture(lp: &LateralLoop, spec: &GridSpec, lambda_sign: Sign) -> CaptureReport {
    let mut report = CaptureReport {
        lambda_sign,
        admissible: 0,
        one_step_violations: Vec::new(),
        two_step_violations: Vec::new(),
    };
    for s in spec.points().filter(|s| lp.in_capture_region(*s, lambda_sign)) {
        report.admissible += 1;
        let one = lp.half_period_map(s, lambda_sign).ok();
        match one {
            Some(s1) if lp.in_capture_region(s1, -lambda_sign) => {
                let back = lp.half_period_map(s1, -lambda_sign).ok();
                if !back.is_some_and(|s2| lp.in_capture_region(s2, lambda_sign)) {
                    report.two_step_violations.push(s);
                }
            }
            _ => {
                report.one_step_violations.push(s);
                report.two_step_violations.push(s);
            }
        }
    }
    report
}

/// Largest Lyapunov level whose ellipse still meets `{ΔL ≥ 0}` inside the
/// capture regions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CriticalLyapunov {
    /// Refined critical level.
    pub value: f64,
    /// Coarse estimate: max of L over grid cells with ΔL ≥ 0.
    pub coarse: f64,
    /// Where the refined level is attained.
    pub argmax: Option<ErrorState>,
    /// Largest ΔL found on the saturation boundary segments.
    pub delta_l_max: f64,
    /// No cell or ray sample with ΔL ≥ 0 was found; `value` is 0.
    pub degenerate: bool,
    /// The non-negative region reaches the edge of the sampled box, so
    /// `value` is only a lower bound.
    pub truncated: bool,
}

impl CriticalLyapunov {
    /// Steady-state bound on the Lyapunov candidate: `L_critical + max ΔL`.
    pub fn supremum_bound(&self) -> f64 {
        self.value + self.delta_l_max
    }
}

// Bisection target on the Lyapunov level.
const LEVEL_TOL: f64 = 1e-10;
const BOUNDARY_SAMPLES: usize = 4001;

/// Coarse pass over both quadrant grids, then refinement along ellipse rays:
/// for each ray angle the outermost sample with ΔL ≥ 0 is bracketed against
/// the next sample out and bisected on the level.
pub fn critical_lyapunov(lp: &LateralLoop, spec: &GridSpec) -> CriticalLyapunov {
    let feasible =
        |s: ErrorState, sign: Sign| lp.in_capture_region(s, sign) && lp.delta_l(s, sign).is_ok_and(|d| d >= 0.0);

    let mut best: Option<(ErrorState, f64)> = None;
    let consider = |s: ErrorState, level: f64, best: &mut Option<(ErrorState, f64)>| {
        if best.is_none_or(|(_, b)| level > b) {
            *best = Some((s, level));
        }
    };

    let mut coarse = 0.0_f64;
    for sign in [Sign::Pos, Sign::Neg] {
        let grid = delta_l_grid(lp, spec, sign);
        for c in grid.cells() {
            if matches!(c.delta_l, Some(d) if d >= 0.0) {
                let level = lp.lyapunov(c.state);
                coarse = coarse.max(level);
                consider(c.state, level, &mut best);
            }
        }
    }

    let mut truncated = false;
    let n = spec.resolution[0].max(spec.resolution[1]);
    if n > 0 {
        let rays = 4 * n + 1;
        let samples = n.max(2);
        for sign in [Sign::Pos, Sign::Neg] {
            for k in 0..rays {
                let phi = core::f64::consts::FRAC_PI_2 * k as f64 / (rays - 1) as f64;
                // point at level L is rho·dir with rho = √L
                let dir = ErrorState::new(
                    sign.value() * libm::sqrt(2.0 / lp.ky2) * libm::cos(phi),
                    sign.value() * libm::sqrt(2.0) * libm::sin(phi),
                );
                let Some(rho_max) = ray_extent(spec, dir) else { continue };
                let at = |rho: f64| ErrorState::new(rho * dir.e, rho * dir.edot);
                let outermost = (1..=samples)
                    .rev()
                    .map(|i| rho_max * i as f64 / samples as f64)
                    .find(|&rho| feasible(at(rho), sign));
                let Some(rho_in) = outermost else { continue };
                let rho = if rho_in >= rho_max {
                    truncated = true;
                    rho_max
                } else {
                    let (mut lo, mut hi) = (rho_in, rho_in + rho_max / samples as f64);
                    while hi * hi - lo * lo > LEVEL_TOL {
                        let mid = 0.5 * (lo + hi);
                        if feasible(at(mid), sign) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                };
                consider(at(rho), lp.lyapunov(at(rho)), &mut best);
            }
        }
    }

    let delta_l_max = lp.boundary_delta_l_max(BOUNDARY_SAMPLES).map_or(0.0, |(_, d)| d);
    match best {
        Some((s, level)) => CriticalLyapunov {
            value: level,
            coarse,
            argmax: Some(s),
            delta_l_max,
            degenerate: false,
            truncated,
        },
        None => CriticalLyapunov {
            value: 0.0,
            coarse: 0.0,
            argmax: None,
            delta_l_max,
            degenerate: true,
            truncated: false,
        },
    }
}

/// Largest `rho ≥ 0` keeping `rho·dir` inside the grid box, or `None` when
/// the ray starts outside or has no extent.
fn ray_extent(spec: &GridSpec, dir: ErrorState) -> Option<f64> {
    let mut rho = f64::INFINITY;
    for (d, [lo, hi]) in [(dir.e, spec.e_range), (dir.edot, spec.edot_range)] {
        if lo > 0.0 || hi < 0.0 {
            return None;
        }
        if d > 0.0 {
            rho = rho.min(hi / d);
        } else if d < 0.0 {
            rho = rho.min(lo / d);
        }
    }
    (rho.is_finite() && rho > 0.0).then_some(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_two_is_fully_masked() {
        let lp = LateralLoop::default();
        let spec = GridSpec {
            e_range: [-2.0, -0.01],
            edot_range: [0.01, 2.0],
            resolution: [20, 20],
        };
        for sign in [Sign::Pos, Sign::Neg] {
            let g = delta_l_grid(&lp, &spec, sign);
            assert!(g.is_fully_masked());
            assert!(g.max().is_none());
            assert!(g.cells().all(|c| c.sign() == CellSign::Masked));
        }
    }

    #[test]
    fn empty_grid_capture_passes() {
        let lp = LateralLoop::default();
        let r = verify_quadrant_capture(&lp, &GridSpec::default().with_resolution(0), Sign::Pos);
        assert!(r.passed());
        assert_eq!(r.admissible, 0);
    }

    #[test]
    fn degenerate_critical_level() {
        let lp = LateralLoop::default();
        let spec = GridSpec {
            e_range: [-2.0, -1.0],
            edot_range: [1.0, 2.0],
            resolution: [5, 5],
        };
        let c = critical_lyapunov(&lp, &spec);
        assert!(c.degenerate);
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn axis_sampling() {
        let s = GridSpec::square(-2.0, 2.0, 5);
        assert_eq!(s.e_at(0), -2.0);
        assert_eq!(s.e_at(2), 0.0);
        assert_eq!(s.edot_at(4), 2.0);
        assert_eq!(s.points().count(), 25);
        let one = GridSpec::square(0.5, 1.0, 1);
        assert_eq!(one.points().collect::<Vec<_>>(), [ErrorState::new(0.5, 0.5)]);
    }
}
