//! Independent RK4 event-detecting oracle for the lateral error loop with
//! `e_x ≡ 0`. The vehicle acceleration is rebuilt from rotor directions
//! `Λ ± θ` by Cramer's rule and clamping, without the crate's flow formulas.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

pub const H: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub ky1: f64,
    pub ky2: f64,
    pub theta: f64,
    pub amplitude: f64,
    pub half_period: f64,
}

impl Default for Oracle {
    fn default() -> Self {
        Oracle {
            ky1: 9.0,
            ky2: 18.0,
            theta: FRAC_PI_6,
            amplitude: FRAC_PI_3,
            half_period: 1.0,
        }
    }
}

/// Which control law drives the error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Unclamped linear loop.
    Linear,
    /// Clamped rotor commands under yaw `lambda`.
    Switched { lambda: f64 },
}

impl Oracle {
    /// Actual `ẍ`, the error acceleration `ë = −ÿ` (errors are reference
    /// minus state) and whether a rotor was clamped, for desired acceleration
    /// `(1, K_Y1·ė + K_Y2·e)` under yaw `lambda`.
    pub fn physical_accel(&self, e: f64, edot: f64, lambda: f64) -> (f64, f64, bool) {
        let ad = (1.0, self.ky1 * edot + self.ky2 * e);
        let d1 = ((lambda + self.theta).cos(), (lambda + self.theta).sin());
        let d2 = ((lambda - self.theta).cos(), (lambda - self.theta).sin());
        let det = d1.0 * d2.1 - d1.1 * d2.0;
        let u1 = (ad.0 * d2.1 - ad.1 * d2.0) / det;
        let u2 = (d1.0 * ad.1 - d1.1 * ad.0) / det;
        let (v1, v2) = (u1.max(0.0), u2.max(0.0));
        let a = (v1 * d1.0 + v2 * d2.0, v1 * d1.1 + v2 * d2.1);
        (a.0, -a.1, u1 < 0.0 || u2 < 0.0)
    }

    fn field(&self, s: [f64; 2], mode: Mode) -> [f64; 2] {
        let acc = match mode {
            Mode::Linear => -self.ky1 * s[1] - self.ky2 * s[0],
            Mode::Switched { lambda } => self.physical_accel(s[0], s[1], lambda).1,
        };
        [s[1], acc]
    }

    pub fn rk4(&self, s: [f64; 2], h: f64, mode: Mode) -> [f64; 2] {
        let add = |a: [f64; 2], b: [f64; 2], k: f64| [a[0] + k * b[0], a[1] + k * b[1]];
        let k1 = self.field(s, mode);
        let k2 = self.field(add(s, k1, h / 2.0), mode);
        let k3 = self.field(add(s, k2, h / 2.0), mode);
        let k4 = self.field(add(s, k3, h), mode);
        [
            s[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            s[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }

    pub fn integrate(&self, mut s: [f64; 2], t: f64, mode: Mode) -> [f64; 2] {
        let n = (t / H).floor() as usize;
        for _ in 0..n {
            s = self.rk4(s, H, mode);
        }
        let rest = t - n as f64 * H;
        if rest > 0.0 {
            s = self.rk4(s, rest, mode);
        }
        s
    }

    /// First time the linear flow from `s` meets `K_Y1·ė + K_Y2·e = level`,
    /// scanning with step `H` and bisecting the bracketing step.
    pub fn linear_hit(&self, s0: [f64; 2], level: f64, horizon: f64) -> Option<f64> {
        let g = |s: [f64; 2]| self.ky1 * s[1] + self.ky2 * s[0] - level;
        let sign0 = g(s0).signum();
        if g(s0) == 0.0 {
            return Some(0.0);
        }
        let mut s = s0;
        let mut t = 0.0;
        while t < horizon {
            let next = self.rk4(s, H, Mode::Linear);
            if g(next).signum() != sign0 {
                let (mut lo, mut hi) = (0.0, H);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if g(self.rk4(s, mid, Mode::Linear)).signum() == sign0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(t + 0.5 * (lo + hi));
            }
            s = next;
            t += H;
        }
        None
    }

    /// Half-period of the clamped loop under yaw `lambda`, stepping exactly
    /// onto each detected change of the clamping pattern.
    pub fn switched_half_period(&self, s0: [f64; 2], lambda: f64) -> [f64; 2] {
        let clamped = |s: [f64; 2]| self.physical_accel(s[0], s[1], lambda).2;
        let mode = Mode::Switched { lambda };
        let mut s = s0;
        let mut t = 0.0;
        while t < self.half_period - 1e-15 {
            let h = H.min(self.half_period - t);
            let next = self.rk4(s, h, mode);
            if clamped(next) != clamped(s) {
                let c0 = clamped(s);
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if clamped(self.rk4(s, mid, mode)) == c0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                s = self.rk4(s, hi, mode);
                t += hi;
                continue;
            }
            s = next;
            t += h;
        }
        s
    }
}

/// Deterministic uniform sampler (SplitMix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
