use serde::Serialize;

use super::ProblemParams;
use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;

/// One tabulated point of a radial trace with first and second
/// derivatives of both state components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Node {
    pub r: f64,
    pub u: f64,
    /// `v = u' |u'|^{m-2}`
    pub v: f64,
    pub du: f64,
    pub dv: f64,
    pub d2u: f64,
    pub d2v: f64,
}

impl Node {
    /// Builds a node from the state, taking derivatives from the radial ODE.
    pub fn from_state(
        params: &ProblemParams,
        spec: &NonlinearitySpec,
        r: f64,
        u: f64,
        v: f64,
    ) -> Self {
        let du = params.slope(v);
        let dv = -spec.f(u) - (params.n - 1.0) * v / r;
        let d2u = params.slope_derivative(v) * dv;
        let d2v = -spec.df(u) * du - (params.n - 1.0) * (dv / r - v / (r * r));
        Self {
            r,
            u,
            v,
            du,
            dv,
            d2u,
            d2v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TerminalEvent {
    /// `u` reached 0.
    ZeroCrossing,
    /// `u'` reached 0 at positive `u`.
    ZeroSlope,
    /// Decay thresholds held over a full step.
    Decay,
    /// `r_max` reached without a decision.
    RMax,
    StepUnderflow,
    MaxSteps,
    /// Cut at the end of the trusted region of an `R = ∞` ground state.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileEvents {
    /// First radius where `u = b`.
    pub r_b: Option<f64>,
    pub terminal: TerminalEvent,
    pub terminal_radius: f64,
}

/// A monotone radial solution trace starting at the series radius `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub params: ProblemParams,
    pub spec: NonlinearitySpec,
    pub alpha: f64,
    pub nodes: Vec<Node>,
    /// Right end of the positivity interval; `+∞` for decaying ground states.
    pub radius: f64,
    pub events: ProfileEvents,
    /// Natural radial scale used for step caps and thresholds.
    pub r_scale: f64,
    /// Natural scale of `v`.
    pub v_scale: f64,
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn quintic(t: f64, h: f64, y0: f64, d0: f64, s0: f64, y1: f64, d1: f64, s1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 0.5 * (t3 - 2.0 * t4 + t5);
    let value = h0 * y0 + h * (h1 * d0 + h4 * d1) + h * h * (h2 * s0 + h5 * s1) + h3 * y1;

    let g0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let g1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let g2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let g4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let g5 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let deriv = (g0 * (y0 - y1)) / h + g1 * d0 + g4 * d1 + h * (g2 * s0 + g5 * s1);
    (value, deriv)
}

#[inline]
fn cubic(t: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + h * (t3 - 2.0 * t2 + t) * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + h * (t3 - t2) * d1;
    let deriv = (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
        + (3.0 * t2 - 4.0 * t + 1.0) * d0
        + (3.0 * t2 - 2.0 * t) * d1;
    (value, deriv)
}

/// Hermite interpolation of one component, quintic when both second
/// derivatives are finite and cubic otherwise.
#[inline]
pub(crate) fn hermite(
    r: f64,
    r0: f64,
    r1: f64,
    (y0, d0, s0): (f64, f64, f64),
    (y1, d1, s1): (f64, f64, f64),
) -> (f64, f64) {
    let h = r1 - r0;
    let t = (r - r0) / h;
    if s0.is_finite() && s1.is_finite() && d0.is_finite() && d1.is_finite() {
        quintic(t, h, y0, d0, s0, y1, d1, s1)
    } else {
        let d0 = if d0.is_finite() { d0 } else { (y1 - y0) / h };
        let d1 = if d1.is_finite() { d1 } else { (y1 - y0) / h };
        cubic(t, h, y0, d0, y1, d1)
    }
}

impl Profile {
    pub fn first_radius(&self) -> f64 {
        self.nodes[0].r
    }

    pub fn last_node(&self) -> &Node {
        self.nodes.last().expect("profile has nodes")
    }

    /// Index `i` with `nodes[i].r <= r <= nodes[i+1].r` (clamped).
    pub fn interval(&self, r: f64) -> usize {
        let n = self.nodes.len();
        if n < 2 {
            return 0;
        }
        let idx = self.nodes.partition_point(|nd| nd.r <= r);
        idx.saturating_sub(1).min(n - 2)
    }

    /// Interpolated `(u, u_r, v, v_r)` at `r`.
    pub fn state_at(&self, r: f64) -> (f64, f64, f64, f64) {
        if self.nodes.len() == 1 {
            let nd = self.nodes[0];
            return (nd.u, nd.du, nd.v, nd.dv);
        }
        let i = self.interval(r);
        let (a, b) = (&self.nodes[i], &self.nodes[i + 1]);
        let (u, du) = hermite(r, a.r, b.r, (a.u, a.du, a.d2u), (b.u, b.du, b.d2u));
        let (v, dv) = hermite(r, a.r, b.r, (a.v, a.dv, a.d2v), (b.v, b.dv, b.d2v));
        (u, du, v, dv)
    }

    pub fn u_at(&self, r: f64) -> f64 {
        self.state_at(r).0
    }

    pub fn v_at(&self, r: f64) -> f64 {
        self.state_at(r).2
    }

    /// `u'(r)` recovered from the interpolated flux variable.
    pub fn slope_at(&self, r: f64) -> f64 {
        self.params.slope(self.v_at(r))
    }

    /// Inverse `r(u)` on the monotone part of the profile. `None` outside the
    /// tabulated `u` range.
    pub fn r_at_u(&self, u: f64) -> Option<f64> {
        let n = self.nodes.len();
        if n < 2 {
            return None;
        }
        let first = self.nodes[0].u;
        let last = self.nodes[n - 1].u;
        if u > first || u < last {
            return None;
        }
        // nodes are decreasing in u
        let idx = self.nodes.partition_point(|nd| nd.u > u);
        if idx == 0 {
            return Some(self.nodes[0].r);
        }
        if idx >= n {
            return Some(self.nodes[n - 1].r);
        }
        let (a, b) = (&self.nodes[idx - 1], &self.nodes[idx]);
        if b.u == u {
            return Some(b.r);
        }
        let (mut lo, mut hi) = (a.r, b.r);
        let mut x = a.r + (b.r - a.r) * (a.u - u) / (a.u - b.u);
        for _ in 0..100 {
            let (val, der) = hermite(x, a.r, b.r, (a.u, a.du, a.d2u), (b.u, b.du, b.d2u));
            let res = val - u;
            if res > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = if der < 0.0 && der.is_finite() {
                x - res / der
            } else {
                f64::NAN
            };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs()
                || hi - lo <= 4.0 * f64::EPSILON * hi
            {
                return Some(next);
            }
            x = next;
        }
        Some(x)
    }

    /// Copy of the profile restricted to nodes with `r <= r_stop`.
    pub fn truncated(&self, r_stop: f64, event: TerminalEvent) -> Profile {
        let mut p = self.clone();
        p.nodes.retain(|nd| nd.r <= r_stop);
        if p.nodes.is_empty() {
            p.nodes.push(self.nodes[0]);
        }
        p.events.terminal = event;
        p.events.terminal_radius = p.last_node().r;
        p
    }

    /// Grid of node radii.
    pub fn radii(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.r).collect()
    }

    /// Copy with every `u` replaced by `perturb(index, u)`.
    pub fn with_perturbed_values<F: Fn(usize, f64) -> f64>(&self, perturb: F) -> Profile {
        let mut p = self.clone();
        for (i, nd) in p.nodes.iter_mut().enumerate() {
            nd.u = perturb(i, nd.u);
        }
        p
    }
}

/// One point of the inverse plane `r = r(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversePoint {
    pub u: f64,
    pub r: f64,
    /// `r'(u) = 1 / u'(r)`, negative.
    pub rprime: f64,
}

/// The inverse view of a strictly decreasing profile, ordered by increasing `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseProfile {
    pub points: Vec<InversePoint>,
    pub source: Profile,
}

impl InverseProfile {
    pub fn params(&self) -> &ProblemParams {
        &self.source.params
    }

    pub fn spec(&self) -> &NonlinearitySpec {
        &self.source.spec
    }

    pub fn alpha(&self) -> f64 {
        self.source.alpha
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.points[0].u, self.points[self.points.len() - 1].u)
    }

    /// `(r(u), r'(u))` by inverting the forward interpolant.
    pub fn eval(&self, u: f64) -> Option<(f64, f64)> {
        let r = self.source.r_at_u(u)?;
        let du = self.source.slope_at(r);
        if du < 0.0 {
            Some((r, 1.0 / du))
        } else {
            None
        }
    }

    /// Inverse-plane second derivative implied by the ODE,
    /// `((N-1) r'^2 / r + f(u) |r'|^m r') / (m-1)`.
    pub fn rpp_from_ode(&self, u: f64, r: f64, rp: f64) -> f64 {
        let p = self.params();
        ((p.n - 1.0) * rp * rp / r + self.spec().f(u) * rp.abs().powf(p.m) * rp) / (p.m - 1.0)
    }
}

/// Builds the inverse view `r(u)` of a strictly decreasing profile.
pub fn invert_profile(profile: &Profile) -> Result<InverseProfile> {
    let nodes = &profile.nodes;
    if nodes.len() < 3 {
        return Err(Error::NotMonotone("fewer than three nodes".into()));
    }
    let last = nodes.len() - 1;
    for (i, nd) in nodes.iter().enumerate() {
        if i < last && nd.du >= 0.0 {
            return Err(Error::NotMonotone(format!(
                "u' = {} >= 0 at interior node r = {}",
                nd.du, nd.r
            )));
        }
        // a terminal stall node may tie with its predecessor in u
        let stall_tie = i == last && nd.du == 0.0;
        if i > 0 && nd.u >= nodes[i - 1].u && !stall_tie {
            return Err(Error::NotMonotone(format!(
                "u not decreasing at r = {}",
                nd.r
            )));
        }
    }
    let mut points: Vec<InversePoint> = nodes
        .iter()
        .filter(|nd| nd.du < 0.0)
        .map(|nd| InversePoint {
            u: nd.u,
            r: nd.r,
            rprime: 1.0 / nd.du,
        })
        .collect();
    points.reverse();
    Ok(InverseProfile {
        points,
        source: profile.clone(),
    })
}
