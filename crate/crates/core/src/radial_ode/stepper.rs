//! Dormand-Prince 5(4) step with an embedded error estimate.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) type State = [f64; 2];

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

pub(crate) struct StepOutcome {
    pub y: State,
    pub dy: State,
    pub err: State,
}

/// One DOPRI5 step from `(r, y)` with slope `dy0` (first-same-as-last).
pub(crate) fn dopri5_step<F>(rhs: &F, r: f64, y: &State, dy0: &State, h: f64) -> StepOutcome
where
    F: Fn(f64, &State) -> State,
{
    let k1 = *dy0;
    let k2 = rhs(r + C2 * h, &axpy(y, &[(A21, &k1)], h));
    let k3 = rhs(r + C3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)], h));
    let k4 = rhs(
        r + C4 * h,
        &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
    );
    let k5 = rhs(
        r + C5 * h,
        &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = rhs(
        r + h,
        &axpy(
            y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ),
    );
    let y1 = axpy(
        y,
        &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        h,
    );
    let k7 = rhs(r + h, &y1);
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    StepOutcome { y: y1, dy: k7, err }
}

/// PI step-size controller (Hairer-Wanner constants for order 5).
#[derive(Debug, Clone)]
pub(crate) struct PiController {
    err_prev: f64,
}

impl PiController {
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - 0.75 * Self::BETA;
    const SAFETY: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 5.0;

    pub fn new() -> Self {
        Self { err_prev: 1e-4 }
    }

    /// Factor for the next step after an accepted step with error `err ≤ 1`.
    pub fn accept(&mut self, err: f64) -> f64 {
        let err = err.max(1e-10);
        let fac = Self::SAFETY * err.powf(-Self::ALPHA) * self.err_prev.powf(Self::BETA);
        self.err_prev = err;
        fac.clamp(Self::FAC_MIN, Self::FAC_MAX)
    }

    /// Shrink factor after a rejected step.
    pub fn reject(&self, err: f64) -> f64 {
        if !err.is_finite() {
            return Self::FAC_MIN;
        }
        (Self::SAFETY * err.powf(-Self::ALPHA)).clamp(Self::FAC_MIN, 1.0)
    }
}
