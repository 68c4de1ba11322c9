use super::{ErrorState, LateralLoop};
use crate::Sign;

/// How [`LateralLoop::s11_flow`] propagates the unsaturated loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMethod {
    /// Default gains (roots −3, −6): the two-exponential closed form.
    DefaultClosedForm,
    /// Any other Hurwitz gains: exact modal solution for distinct real,
    /// repeated or complex roots.
    Modal,
}

// Relative width of the band in which the discriminant counts as zero.
const REPEATED_ROOT_TOL: f64 = 1e-12;

impl LateralLoop {
    pub fn has_default_gains(&self) -> bool {
        self.ky1 == 9.0 && self.ky2 == 18.0
    }

    pub fn flow_method(&self) -> FlowMethod {
        if self.has_default_gains() {
            FlowMethod::DefaultClosedForm
        } else {
            FlowMethod::Modal
        }
    }

    /// Unsaturated (`S11`) flow `ë = −K_Y1·ė − K_Y2·e` for time `t`.
    pub fn s11_flow(&self, s0: ErrorState, t: f64) -> ErrorState {
        match self.flow_method() {
            FlowMethod::DefaultClosedForm => {
                let ErrorState { e: e0, edot: v0 } = s0;
                let a = 2.0 * e0 + v0 / 3.0;
                let b = -e0 - v0 / 3.0;
                let (x3, x6) = (libm::exp(-3.0 * t), libm::exp(-6.0 * t));
                ErrorState::new(a * x3 + b * x6, (-6.0 * e0 - v0) * x3 + (6.0 * e0 + 2.0 * v0) * x6)
            }
            FlowMethod::Modal => self.modal_flow(s0, t),
        }
    }

    fn modal_flow(&self, s0: ErrorState, t: f64) -> ErrorState {
        let ErrorState { e: e0, edot: v0 } = s0;
        let (a, b) = (self.ky1, self.ky2);
        let disc = a * a - 4.0 * b;
        if libm::fabs(disc) <= REPEATED_ROOT_TOL * a * a {
            let r = -0.5 * a;
            let c2 = v0 - r * e0;
            let x = libm::exp(r * t);
            ErrorState::new((e0 + c2 * t) * x, (r * (e0 + c2 * t) + c2) * x)
        } else if disc > 0.0 {
            let sq = libm::sqrt(disc);
            let (r1, r2) = (0.5 * (-a + sq), 0.5 * (-a - sq));
            let c1 = (v0 - r2 * e0) / (r1 - r2);
            let c2 = (r1 * e0 - v0) / (r1 - r2);
            let (x1, x2) = (libm::exp(r1 * t), libm::exp(r2 * t));
            ErrorState::new(c1 * x1 + c2 * x2, c1 * r1 * x1 + c2 * r2 * x2)
        } else {
            let alpha = -0.5 * a;
            let omega = 0.5 * libm::sqrt(-disc);
            let k = (v0 - alpha * e0) / omega;
            let (s, c) = libm::sincos(omega * t);
            let x = libm::exp(alpha * t);
            let e = x * (e0 * c + k * s);
            let edot = alpha * e + x * (-e0 * omega * s + k * omega * c);
            ErrorState::new(e, edot)
        }
    }

    /// Single-rotor saturated flow: constant error acceleration
    /// `ë = accel_sign·c`.
    pub fn saturated_flow(&self, s0: ErrorState, t: f64, accel_sign: Sign) -> ErrorState {
        let acc = accel_sign.value() * self.bound;
        ErrorState::new(s0.e + s0.edot * t + 0.5 * acc * t * t, s0.edot + acc * t)
    }
}
