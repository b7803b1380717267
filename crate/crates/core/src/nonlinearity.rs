//! Admissible source terms `f(u)` with exact derivative, antiderivative and
//! positive zero `b`.
//!
//! Every family is closed form, so `f'`, `F = ∫₀ᵘ f` and the logarithmic
//! steepness `g = u f'/f` are exact. `g` is only evaluated at or above
//! `u_min_for_g`, a cutoff a little above `b` where `f` vanishes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative offset of the default `g` cutoff above `b`.
pub const DEFAULT_G_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    /// `f(u) = c1 u^gamma - c0`
    PowerMinusConst { c1: f64, c0: f64, gamma: f64 },
    /// `f(u) = lambda u^(s-1) - u^(q-1)`
    DoublePower { s: f64, q: f64, lambda: f64 },
    /// `f(u) = u^3 - u`
    CubicMinusLinear,
    /// `f(u) = u - 1`
    LinearMinusConst,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::PowerMinusConst { .. } => "power-minus-const",
            Family::DoublePower { .. } => "double-power",
            Family::CubicMinusLinear => "cubic-minus-linear",
            Family::LinearMinusConst => "linear-minus-const",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub family: Family,
    pub b: f64,
    pub u_min_for_g: f64,
}

/// Sampled verdict on hypotheses (H1) and (H2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub h1_ok: bool,
    pub h2_ok: bool,
    pub g_min_above_b: f64,
}

impl NonlinearitySpec {
    pub fn new(family: Family) -> Result<Self> {
        let b = match family {
            Family::PowerMinusConst { c1, c0, gamma } => {
                if !(c1 > 0.0 && c0 >= 0.0 && gamma > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power-minus-const needs c1 > 0, c0 >= 0, gamma > 0 (got {c1}, {c0}, {gamma})"
                    )));
                }
                (c0 / c1).powf(1.0 / gamma)
            }
            Family::DoublePower { s, q, lambda } => {
                if !(q >= 1.0 && s > q && lambda > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "double-power needs s > q >= 1 and lambda > 0 (got s={s}, q={q}, lambda={lambda})"
                    )));
                }
                lambda.powf(-1.0 / (s - q))
            }
            Family::CubicMinusLinear | Family::LinearMinusConst => 1.0,
        };
        Ok(Self {
            family,
            b,
            u_min_for_g: b * (1.0 + DEFAULT_G_CUTOFF),
        })
    }

    /// Moves the `g` cutoff to `b (1 + delta)`.
    pub fn with_g_cutoff(mut self, delta: f64) -> Self {
        self.u_min_for_g = self.b * (1.0 + delta);
        self
    }

    pub fn cubic_minus_linear() -> Self {
        Self::new(Family::CubicMinusLinear).expect("valid")
    }

    pub fn linear_minus_const() -> Self {
        Self::new(Family::LinearMinusConst).expect("valid")
    }

    /// `f(u)` without domain checks. Arguments below zero are clamped to 0,
    /// which gives the continuous extension used inside integrator stages.
    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self.family {
            Family::PowerMinusConst { c1, c0, gamma } => c1 * u.powf(gamma) - c0,
            Family::DoublePower { s, q, lambda } => lambda * u.powf(s - 1.0) - u.powf(q - 1.0),
            Family::CubicMinusLinear => u * u * u - u,
            Family::LinearMinusConst => u - 1.0,
        }
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self.family {
            Family::PowerMinusConst { c1, gamma, .. } => c1 * gamma * u.powf(gamma - 1.0),
            Family::DoublePower { s, q, lambda } => {
                let a = lambda * (s - 1.0) * u.powf(s - 2.0);
                // q = 1 carries a zero coefficient; avoid 0 * inf at u = 0
                let c = if q == 1.0 {
                    0.0
                } else {
                    (q - 1.0) * u.powf(q - 2.0)
                };
                a - c
            }
            Family::CubicMinusLinear => 3.0 * u * u - 1.0,
            Family::LinearMinusConst => 1.0,
        }
    }

    /// `F(u) = ∫₀ᵘ f` without domain checks.
    #[inline]
    #[allow(non_snake_case)]
    pub fn F(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        match self.family {
            Family::PowerMinusConst { c1, c0, gamma } => {
                c1 * u.powf(gamma + 1.0) / (gamma + 1.0) - c0 * u
            }
            Family::DoublePower { s, q, lambda } => lambda * u.powf(s) / s - u.powf(q) / q,
            Family::CubicMinusLinear => {
                let u2 = u * u;
                0.25 * u2 * u2 - 0.5 * u2
            }
            Family::LinearMinusConst => 0.5 * u * u - u,
        }
    }

    /// `u f'(u) - c f(u)`, the form of the `g` integrand that stays finite at `b`.
    #[inline]
    pub fn steepness_combination(&self, u: f64, c: f64) -> f64 {
        u * self.df(u) - c * self.f(u)
    }

    pub fn eval_f(&self, u: f64) -> Result<f64> {
        if u <= 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("f needs u > 0, got {u}")));
        }
        Ok(self.f(u))
    }

    #[allow(non_snake_case)]
    pub fn eval_F(&self, u: f64) -> Result<f64> {
        if u < 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("F needs u >= 0, got {u}")));
        }
        Ok(self.F(u))
    }

    pub fn eval_df(&self, u: f64) -> Result<f64> {
        if u <= 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("f' needs u > 0, got {u}")));
        }
        Ok(self.df(u))
    }

    pub fn eval_g(&self, u: f64) -> Result<f64> {
        if u < self.u_min_for_g || !u.is_finite() || u <= 0.0 {
            return Err(Error::Singularity {
                u,
                cutoff: self.u_min_for_g,
            });
        }
        Ok(self.g_unchecked(u))
    }

    #[inline]
    pub(crate) fn g_unchecked(&self, u: f64) -> f64 {
        u * self.df(u) / self.f(u)
    }

    /// Order `k` of the leading behaviour `-F(u) ~ C u^k` as `u → 0`.
    pub fn zero_order(&self) -> f64 {
        match self.family {
            Family::PowerMinusConst { c0, gamma, .. } => {
                if c0 > 0.0 {
                    1.0
                } else {
                    gamma + 1.0
                }
            }
            Family::DoublePower { q, .. } => q,
            Family::CubicMinusLinear => 2.0,
            Family::LinearMinusConst => 1.0,
        }
    }

    /// Whether ground states for exponent `m` reach zero at a finite radius.
    ///
    /// The free boundary is finite exactly when `∫₀ du / (-F(u))^{1/m}`
    /// converges, i.e. when `zero_order() < m`.
    pub fn compact_support(&self, m: f64) -> bool {
        self.zero_order() < m
    }

    pub fn check_hypotheses(&self, grid: &[f64]) -> HypothesisReport {
        let b = self.b;
        let mut h1_ok = b > 0.0;
        for &u in grid.iter().filter(|u| **u > 0.0) {
            let fu = self.f(u);
            let near_b = (u - b).abs() <= 1e-14 * b.max(1.0);
            if near_b {
                continue;
            }
            if u < b && fu > 0.0 {
                h1_ok = false;
            }
            if u > b && fu <= 0.0 {
                h1_ok = false;
            }
        }

        let mut h2_ok = true;
        let mut g_min = f64::INFINITY;
        let mut prev: Option<f64> = None;
        for &u in grid.iter().filter(|u| **u >= self.u_min_for_g && **u > 0.0) {
            let g = self.g_unchecked(u);
            g_min = g_min.min(g);
            if let Some(p) = prev {
                if g > p + 1e-9 * p.abs().max(1.0) {
                    h2_ok = false;
                }
            }
            prev = Some(g);
        }
        HypothesisReport {
            h1_ok,
            h2_ok,
            g_min_above_b: g_min,
        }
    }

    /// Sample grid used by `certify`: 400 points on `(0, 4 u_max]` split at `b`.
    pub fn default_hypothesis_grid(&self, u_max: f64) -> Vec<f64> {
        let top = (4.0 * u_max).max(2.0 * self.b);
        let mut grid: Vec<f64> = (1..200).map(|i| self.b * i as f64 / 200.0).collect();
        grid.extend((0..200).map(|i| {
            let t = i as f64 / 199.0;
            self.u_min_for_g * (top / self.u_min_for_g).powf(t)
        }));
        grid
    }
}
