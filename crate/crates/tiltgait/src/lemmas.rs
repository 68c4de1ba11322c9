//! Grid and sampling checks of the switched lateral loop, run by
//! `tiltgait verify-lemmas`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tiltgait_core::analysis::{critical_lyapunov, delta_l_grid, verify_quadrant_capture, CriticalLyapunov, GridSpec};
use tiltgait_core::controller::{classify_region, desired_accel, raw_inversion, switch_matrix_of};
use tiltgait_core::gait::reference_at;
use tiltgait_core::sim::{CheckResult, CheckStatus};
use tiltgait_core::{ErrorState, LateralLoop, ModelParams, Sign, VehicleState};

use crate::oracle;

pub const CAPTURE_POS: &str = "quadrant_capture_pos";
pub const CAPTURE_NEG: &str = "quadrant_capture_neg";
pub const TWO_STEP: &str = "two_half_period_capture";
pub const REGION: &str = "region_classification";
pub const DELTA_L_BOUND: &str = "delta_l_bound";
pub const DELTA_L_ARGMAX: &str = "delta_l_max_on_boundary";
pub const SYMMETRY: &str = "odd_symmetry";
pub const HITTING: &str = "hitting_time_oracle";
pub const CRITICAL: &str = "critical_lyapunov";

/// Upper bound on ΔL for the default loop.
pub const DELTA_L_LIMIT: f64 = 0.75;
pub const DELTA_L_TOL: f64 = 1e-3;
pub const HITTING_TOL: f64 = 1e-6;
/// Samples within this distance of a switching line are not classified.
pub const REGION_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaOptions {
    pub grid: GridSpec,
    pub seed: u64,
    pub samples: usize,
    /// Side of the square the random states are drawn from.
    pub sample_extent: f64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions {
            grid: GridSpec::default(),
            seed: crate::config::DEFAULT_SEED,
            samples: crate::config::DEFAULT_SAMPLES,
            sample_extent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub checks: Vec<CheckResult>,
    pub delta_l_max: Option<f64>,
    pub delta_l_argmax: Option<ErrorState>,
    pub critical: CriticalLyapunov,
    pub worst_hitting_residual: Option<f64>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn capture_check(lp: &LateralLoop, grid: &GridSpec, sign: Sign, name: &'static str) -> (CheckResult, usize) {
    let r = verify_quadrant_capture(lp, grid, sign);
    let detail = format!(
        "{} admissible cells, {} leave the opposite capture region",
        r.admissible,
        r.one_step_violations.len()
    );
    let check = if r.admissible == 0 {
        CheckResult::skipped(name, "no admissible cells".into())
    } else {
        CheckResult::new(name, r.one_step_violations.is_empty(), detail)
    };
    (check, r.two_step_violations.len())
}

/// Compares the sign-based region rule with the switch matrix obtained by
/// inverting the full controller at the matching vehicle state.
fn region_check(params: &ModelParams, lp: &LateralLoop, amplitude: f64, grid: &GridSpec) -> CheckResult {
    let mut compared = 0usize;
    let mut mismatches = 0usize;
    let r = reference_at(0.0);
    for s in grid.points() {
        let g = lp.switching_function(s);
        if (g - lp.bound).abs() < REGION_BAND || (g + lp.bound).abs() < REGION_BAND {
            continue;
        }
        let state = VehicleState {
            x: r.xr,
            y: r.yr - s.e,
            vx: r.vxr,
            vy: r.vyr - s.edot,
        };
        let acc = desired_accel(&state, &r, params);
        for sign in [Sign::Pos, Sign::Neg] {
            let Ok(raw) = raw_inversion(acc, sign.value() * amplitude, params) else {
                mismatches += 1;
                continue;
            };
            compared += 1;
            if switch_matrix_of(raw) != classify_region(s, sign, lp) {
                mismatches += 1;
            }
        }
    }
    CheckResult::new(
        REGION,
        mismatches == 0,
        format!("{compared} classifications, {mismatches} mismatches"),
    )
}

fn hitting_check(lp: &LateralLoop, opts: &LemmaOptions) -> (CheckResult, Option<f64>) {
    if opts.samples == 0 {
        return (CheckResult::skipped(HITTING, "no samples requested".into()), None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let horizon = 8.0 * lp.half_period;
    let mut worst: f64 = 0.0;
    let mut out_of_range = 0usize;
    let mut failures = 0usize;
    for i in 0..opts.samples {
        let branch = if i % 2 == 0 { Sign::Pos } else { Sign::Neg };
        let s = oracle::sample_admissible(&mut rng, lp, branch, opts.sample_extent);
        let (Ok(t), Some(reference)) = (lp.hitting_time(s, branch), oracle::hitting_time(lp, s, branch, horizon))
        else {
            failures += 1;
            continue;
        };
        worst = worst.max((t - reference).abs());
        if !(0.0..lp.half_period).contains(&t) {
            out_of_range += 1;
        }
    }
    let ok = failures == 0 && out_of_range == 0 && worst < HITTING_TOL;
    let detail = format!(
        "{} states: worst residual {worst:.3e}, {out_of_range} outside [0, T/2), {failures} without a hit",
        opts.samples
    );
    (CheckResult::new(HITTING, ok, detail), Some(worst))
}

/// Runs every check; never panics on unstable gains, failures are reported.
pub fn verify_lemmas(params: &ModelParams, lp: &LateralLoop, amplitude: f64, opts: &LemmaOptions) -> LemmaReport {
    let grid = &opts.grid;
    let mut checks = Vec::new();

    let (pos, two_pos) = capture_check(lp, grid, Sign::Pos, CAPTURE_POS);
    let (neg, two_neg) = capture_check(lp, grid, Sign::Neg, CAPTURE_NEG);
    let vacuous = pos.status == CheckStatus::Skipped && neg.status == CheckStatus::Skipped;
    checks.push(pos);
    checks.push(neg);
    checks.push(if vacuous {
        CheckResult::skipped(TWO_STEP, "no admissible cells".into())
    } else {
        CheckResult::new(
            TWO_STEP,
            two_pos + two_neg == 0,
            format!("{} cells fail to return after two half-periods", two_pos + two_neg),
        )
    });

    checks.push(region_check(params, lp, amplitude, grid));

    let grids = [delta_l_grid(lp, grid, Sign::Pos), delta_l_grid(lp, grid, Sign::Neg)];
    let best = grids
        .iter()
        .filter_map(|g| g.max().map(|m| (g.lambda_sign, m)))
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1));
    match best {
        None => {
            checks.push(CheckResult::skipped(DELTA_L_BOUND, "no admissible cells".into()));
            checks.push(CheckResult::skipped(DELTA_L_ARGMAX, "no admissible cells".into()));
        }
        Some((sign, (at, value))) => {
            checks.push(CheckResult::new(
                DELTA_L_BOUND,
                value <= DELTA_L_LIMIT + DELTA_L_TOL,
                format!("max dL = {value:.6} at ({:.4}, {:.4})", at.e, at.edot),
            ));
            let (de, dv) = grid.spacing();
            let cell = de.hypot(dv);
            let dist = lp.distance_to_boundary(at, sign);
            checks.push(CheckResult::new(
                DELTA_L_ARGMAX,
                dist <= cell,
                format!("argmax lies {dist:.3e} from the saturation line (cell diagonal {cell:.3e})"),
            ));
        }
    }

    // reversed row-major order pairs each cell with its negation on a
    // symmetric grid
    let mut asym: f64 = 0.0;
    let mut mirrored = 0usize;
    let neg_cells: Vec<_> = grids[1].cells().collect();
    for (a, b) in grids[0].cells().zip(neg_cells.into_iter().rev()) {
        if a.state.distance(&-b.state) > 1e-12 {
            continue;
        }
        mirrored += 1;
        match (a.delta_l, b.delta_l) {
            (Some(x), Some(y)) => asym = asym.max((x - y).abs()),
            (None, None) => {}
            _ => asym = f64::INFINITY,
        }
    }
    checks.push(if mirrored == 0 {
        CheckResult::skipped(SYMMETRY, "grid is not symmetric about the origin".into())
    } else {
        CheckResult::new(
            SYMMETRY,
            asym < 1e-9,
            format!("largest |dL(s, +) - dL(-s, -)| = {asym:.3e} over {mirrored} mirrored cells"),
        )
    });

    let (hit, worst_hitting_residual) = hitting_check(lp, opts);
    checks.push(hit);

    let critical = critical_lyapunov(lp, grid);
    let ok = critical.value.is_finite() && !critical.truncated;
    let detail = if critical.degenerate {
        "no state with dL >= 0 found".to_owned()
    } else {
        format!(
            "L_critical = {:.6} (coarse {:.6}), bound {:.6}{}",
            critical.value,
            critical.coarse,
            critical.supremum_bound(),
            if critical.truncated {
                ", region reaches the sampled box edge"
            } else {
                ""
            }
        )
    };
    checks.push(CheckResult::new(CRITICAL, ok, detail));

    LemmaReport {
        checks,
        delta_l_max: best.map(|(_, (_, v))| v),
        delta_l_argmax: best.map(|(_, (s, _))| s),
        critical,
        worst_hitting_residual,
    }
}
