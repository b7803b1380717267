//! Outward integration of the radial m-Laplacian equation
//! `(r^{N-1} u'|u'|^{m-2})' = -r^{N-1} f(u)` in the flux variables
//! `(u, v)`, `v = u'|u'|^{m-2}`, from a series start near the singular
//! centre, with event location for crossings, stalls and decay.

mod profile;
mod stepper;

pub use profile::{
    invert_profile, InversePoint, InverseProfile, Node, Profile, ProfileEvents, TerminalEvent,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::bisect;
use crate::shooting::ShotClassification;
use stepper::{dopri5_step, PiController, State};

/// Dimension-like parameter `N` and exponent `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    #[serde(rename = "N")]
    pub n: f64,
    pub m: f64,
}

impl ProblemParams {
    pub fn new(n: f64, m: f64) -> Result<Self> {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("N must be >= 1, got {n}")));
        }
        if !(m > 1.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("m must be > 1, got {m}")));
        }
        Ok(Self { n, m })
    }

    /// `N <= m`, the regime in which the ground state is known to be unique.
    pub fn low_dim(&self) -> bool {
        self.n <= self.m
    }

    /// `u' = sign(v) |v|^{1/(m-1)}`.
    #[inline]
    pub fn slope(&self, v: f64) -> f64 {
        if self.m == 2.0 {
            v
        } else {
            v.signum() * v.abs().powf(1.0 / (self.m - 1.0))
        }
    }

    /// `d u' / d v`, infinite at `v = 0` for `m > 2`.
    #[inline]
    pub fn slope_derivative(&self, v: f64) -> f64 {
        if self.m == 2.0 {
            1.0
        } else {
            v.abs().powf((2.0 - self.m) / (self.m - 1.0)) / (self.m - 1.0)
        }
    }

    /// `v = u'|u'|^{m-2}`.
    #[inline]
    pub fn flux(&self, du: f64) -> f64 {
        if self.m == 2.0 {
            du
        } else {
            du.signum() * du.abs().powf(self.m - 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub r_max: f64,
    /// Decay threshold on `u`, relative to `alpha`.
    pub u_floor: f64,
    /// Decay threshold on `|v|`, relative to the flux scale `f(alpha) r_s / N`.
    pub vprime_floor: f64,
    /// Step cap as a fraction of the radial scale.
    pub max_step_frac: f64,
    /// Additional step allowance proportional to `r`.
    pub step_growth: f64,
    pub max_steps: usize,
    /// Series start radius; chosen from the tolerance when absent.
    pub epsilon: Option<f64>,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            r_max: 1e3,
            u_floor: 1e-9,
            vprime_floor: 1e-9,
            max_step_frac: 1.0 / 64.0,
            step_growth: 0.01,
            max_steps: 2_000_000,
            epsilon: None,
        }
    }
}

impl IntegrationControls {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("r_max", self.r_max),
            ("u_floor", self.u_floor),
            ("vprime_floor", self.vprime_floor),
            ("max_step_frac", self.max_step_frac),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "epsilon must be positive, got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// Leading coefficient `c` of `alpha - u(r) ≈ c r^{m/(m-1)}`.
fn center_coefficient(params: &ProblemParams, f_alpha: f64) -> f64 {
    (params.m - 1.0) / params.m * (f_alpha / params.n).powf(1.0 / (params.m - 1.0))
}

/// Radial scale `r_s` with `c r_s^{m/(m-1)} = alpha - b` and the matching
/// flux scale `f(alpha) r_s / N`.
pub fn natural_scales(params: &ProblemParams, spec: &NonlinearitySpec, alpha: f64) -> (f64, f64) {
    let fa = spec.f(alpha);
    let c = center_coefficient(params, fa);
    let drop = (alpha - spec.b).max(1e-12 * alpha);
    let r_s = (drop / c).powf((params.m - 1.0) / params.m);
    (r_s, fa * r_s / params.n)
}

/// Series start radius `ε = rel_tol^{(m-1)/m} r_s`.
pub fn default_epsilon(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha: f64,
    rel_tol: f64,
) -> f64 {
    let (r_s, _) = natural_scales(params, spec, alpha);
    rel_tol.powf((params.m - 1.0) / params.m) * r_s
}

/// State `(u(ε), v(ε))` from the expansion at the centre.
///
/// Leading terms give `v ≈ -f(α) ε / N` and
/// `u ≈ α - ((m-1)/m) (f(α)/N)^{1/(m-1)} ε^{m/(m-1)}`; the next correction,
/// proportional to `f'(α)`, is included for both.
pub fn series_start(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    if !(alpha > spec.b) {
        return Err(Error::Domain(format!(
            "center value alpha = {alpha} must exceed b = {}",
            spec.b
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (n, m) = (params.n, params.m);
    let fa = spec.f(alpha);
    let dfa = spec.df(alpha);
    let kappa = m / (m - 1.0);
    let c = center_coefficient(params, fa);
    let ek = epsilon.powf(kappa);
    let v = -fa * epsilon / n + dfa * c * epsilon.powf(1.0 + kappa) / (n + kappa);
    let u = alpha - c * ek + c * c * dfa * n * ek * ek / (2.0 * fa * (n + kappa) * (m - 1.0));
    Ok((u, v))
}

fn rhs(params: &ProblemParams, spec: &NonlinearitySpec, r: f64, y: &State) -> State {
    let du = params.slope(y[1]);
    let dv = -spec.f(y[0]) - (params.n - 1.0) * y[1] / r;
    [du, dv]
}

/// Integrates one shot with centre value `alpha` until a terminal event.
///
/// Numerical failures (step underflow, step budget) are reported through an
/// `Undetermined` classification rather than an error.
pub fn integrate(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha: f64,
    controls: &IntegrationControls,
) -> Result<(Profile, ShotClassification)> {
    controls.validate()?;
    if !(alpha > spec.b) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "center value alpha = {alpha} must exceed b = {}",
            spec.b
        )));
    }
    let (r_s, v_scale) = natural_scales(params, spec, alpha);
    let eps = controls
        .epsilon
        .unwrap_or_else(|| default_epsilon(params, spec, alpha, controls.rel_tol));
    let (u0, v0) = series_start(params, spec, alpha, eps)?;

    let sys = |r: f64, y: &State| rhs(params, spec, r, y);
    let atol = [controls.abs_tol * alpha, controls.abs_tol * v_scale];
    let u_floor = controls.u_floor * alpha;
    let v_floor = controls.vprime_floor * v_scale;
    let h_base = controls.max_step_frac * r_s;
    let h_min = 1e-15 * r_s.max(eps);

    let mut nodes = vec![Node::from_state(params, spec, eps, u0, v0)];
    let mut r = eps;
    let mut y: State = [u0, v0];
    let mut dy = sys(r, &y);
    let mut h = eps.min(h_base);
    let mut pi = PiController::new();
    let mut r_b: Option<f64> = if u0 <= spec.b { Some(eps) } else { None };
    let mut steps = 0usize;

    let terminal = loop {
        if steps >= controls.max_steps {
            break TerminalEvent::MaxSteps;
        }
        let h_cap = h_base.max(controls.step_growth * r);
        h = h.min(h_cap);
        let mut last_step = false;
        if r + h >= controls.r_max {
            h = controls.r_max - r;
            last_step = true;
        }
        if h < h_min {
            break TerminalEvent::StepUnderflow;
        }
        let out = dopri5_step(&sys, r, &y, &dy, h);
        let mut err = 0.0;
        for i in 0..2 {
            let sc = atol[i] + controls.rel_tol * y[i].abs().max(out.y[i].abs());
            err += (out.err[i] / sc).powi(2);
        }
        let err = (0.5 * err).sqrt();
        if !(err <= 1.0) {
            h *= pi.reject(err);
            continue;
        }
        steps += 1;
        let r1 = r + h;
        let node1 = Node::from_state(params, spec, r1, out.y[0], out.y[1]);
        let node0 = *nodes.last().expect("non-empty");

        // events inside (r, r1]
        let crossing = out.y[0] <= 0.0;
        let stall = out.y[1] >= 0.0;
        if crossing || stall {
            let interp_u = |x: f64| {
                profile::hermite(
                    x,
                    node0.r,
                    node1.r,
                    (node0.u, node0.du, node0.d2u),
                    (node1.u, node1.du, node1.d2u),
                )
                .0
            };
            let interp_v = |x: f64| {
                profile::hermite(
                    x,
                    node0.r,
                    node1.r,
                    (node0.v, node0.dv, node0.d2v),
                    (node1.v, node1.dv, node1.d2v),
                )
                .0
            };
            let rs = if stall {
                bisect(interp_v, node0.r, node1.r, 0.0).ok()
            } else {
                None
            };
            // a step past the minimum can end with u positive again
            let end = rs.unwrap_or(node1.r);
            let crossing = crossing || interp_u(end) <= 0.0;
            let rc = if crossing {
                bisect(interp_u, node0.r, end, 0.0).ok()
            } else {
                None
            };
            let (kind, re) = match (rc, rs) {
                (Some(a), Some(b)) if b < a => (TerminalEvent::ZeroSlope, b),
                (Some(a), _) => (TerminalEvent::ZeroCrossing, a),
                (None, Some(b)) => (TerminalEvent::ZeroSlope, b),
                (None, None) => {
                    // sign change lost in interpolation; place the event at the step end
                    if crossing {
                        (TerminalEvent::ZeroCrossing, r1)
                    } else {
                        (TerminalEvent::ZeroSlope, r1)
                    }
                }
            };
            let (mut ue, mut ve) = (interp_u(re), interp_v(re));
            match kind {
                TerminalEvent::ZeroCrossing => {
                    ue = 0.0;
                    ve = ve.min(0.0);
                }
                _ => {
                    ve = 0.0;
                    ue = ue.max(0.0).min(node0.u);
                }
            }
            if r_b.is_none() && ue <= spec.b {
                r_b = bisect(|x| interp_u(x) - spec.b, node0.r, re, 0.0).ok();
            }
            if re > node0.r {
                nodes.push(Node::from_state(params, spec, re, ue, ve));
            } else {
                let last = nodes.last_mut().expect("non-empty");
                *last = Node::from_state(params, spec, last.r, ue, ve);
            }
            break kind;
        }

        if r_b.is_none() && out.y[0] <= spec.b {
            let interp_u = |x: f64| {
                profile::hermite(
                    x,
                    node0.r,
                    node1.r,
                    (node0.u, node0.du, node0.d2u),
                    (node1.u, node1.du, node1.d2u),
                )
                .0 - spec.b
            };
            r_b = bisect(interp_u, node0.r, node1.r, 0.0).ok().or(Some(r1));
        }

        nodes.push(node1);
        r = r1;
        y = out.y;
        dy = out.dy;

        let below = |u: f64, v: f64| u < u_floor && v.abs() < v_floor;
        if below(node0.u, node0.v) && below(node1.u, node1.v) {
            break TerminalEvent::Decay;
        }
        if last_step || r >= controls.r_max {
            break TerminalEvent::RMax;
        }
        h *= pi.accept(err);
    };

    let last = *nodes.last().expect("non-empty");
    let radius = last.r;
    let profile = Profile {
        params: *params,
        spec: *spec,
        alpha,
        nodes,
        radius,
        events: ProfileEvents {
            r_b,
            terminal,
            terminal_radius: last.r,
        },
        r_scale: r_s,
        v_scale,
    };
    let class = ShotClassification::from_profile(&profile, controls);
    Ok((profile, class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::ShotTag;
    use std::f64::consts::PI;

    fn p(n: f64, m: f64) -> ProblemParams {
        ProblemParams::new(n, m).unwrap()
    }

    #[test]
    fn params_validation_and_regime() {
        assert!(ProblemParams::new(0.5, 2.0).is_err());
        assert!(ProblemParams::new(1.0, 1.0).is_err());
        assert!(p(2.0, 3.0).low_dim());
        assert!(!p(3.0, 2.0).low_dim());
    }

    #[test]
    fn series_start_cosine_case() {
        // u = 1 + cos r for f = u - 1, N = 1, m = 2, alpha = 2
        let spec = NonlinearitySpec::linear_minus_const();
        let eps = 1e-3;
        let (u, v) = series_start(&p(1.0, 2.0), &spec, 2.0, eps).unwrap();
        assert!((u - (1.0 + eps.cos())).abs() < 1e-16);
        assert!((v + eps.sin()).abs() < 1e-16);
    }

    #[test]
    fn series_start_leading_flux_coefficient() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        for (n, m) in [(1.0, 2.0), (2.0, 3.0), (3.0, 1.5), (2.5, 4.0)] {
            let params = p(n, m);
            let alpha = 1.7;
            let target = -spec.f(alpha) / n;
            // v / eps - target = O(eps^{m/(m-1)})
            let kappa = m / (m - 1.0);
            let dev = |eps: f64| {
                let (_, v) = series_start(&params, &spec, alpha, eps).unwrap();
                (v / eps - target).abs()
            };
            let order = (dev(1e-3) / dev(1e-4)).log10();
            assert!((order - kappa).abs() < 1e-2, "N={n} m={m}: order {order}");
        }
    }

    #[test]
    fn series_start_near_b_flux_vanishes() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let (_, v) = series_start(&p(2.0, 2.0), &spec, 1.0 + 1e-12, 1e-3).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(series_start(&p(2.0, 2.0), &spec, 1.0, 1e-3).is_err());
    }

    #[test]
    fn integrate_exact_ground_state_cosine() {
        let spec = NonlinearitySpec::linear_minus_const();
        let (prof, class) =
            integrate(&p(1.0, 2.0), &spec, 2.0, &IntegrationControls::default()).unwrap();
        assert_eq!(class.tag, ShotTag::GroundState, "{class:?}");
        assert!((prof.events.terminal_radius - PI).abs() < 1e-6);
        for nd in &prof.nodes {
            assert!((nd.u - (1.0 + nd.r.cos())).abs() < 1e-10);
        }
        assert!((prof.events.r_b.unwrap() - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn integrate_crossing_cosine() {
        let spec = NonlinearitySpec::linear_minus_const();
        let (prof, class) =
            integrate(&p(1.0, 2.0), &spec, 2.5, &IntegrationControls::default()).unwrap();
        assert_eq!(class.tag, ShotTag::Crossing);
        let expect = (-2.0f64 / 3.0).acos();
        assert!((prof.events.terminal_radius - expect).abs() < 1e-10);
        assert!(prof.last_node().du < 0.0);
    }

    #[test]
    fn integrate_stall_cubic() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let (prof, class) =
            integrate(&p(1.0, 2.0), &spec, 1.2, &IntegrationControls::default()).unwrap();
        assert_eq!(class.tag, ShotTag::Stall);
        assert!(prof.last_node().u > 0.0);
        // energy u'^2/2 + F(u) is conserved for N = 1, so the stall level solves F(u) = F(1.2)
        let ul = prof.last_node().u;
        assert!((spec.F(ul) - spec.F(1.2)).abs() < 1e-10);
    }

    #[test]
    fn conservative_form_residual() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        for (n, m) in [(2.0, 2.0), (2.0, 3.0), (3.0, 1.6)] {
            let params = p(n, m);
            let (prof, _) =
                integrate(&params, &spec, 3.0, &IntegrationControls::default()).unwrap();
            let res = crate::monitors::conservative_form_residual(&prof);
            assert!(res < 1e-8, "N={n} m={m} residual {res}");
        }
    }

    #[test]
    fn invert_cosine_profile() {
        let spec = NonlinearitySpec::linear_minus_const();
        let (prof, _) =
            integrate(&p(1.0, 2.0), &spec, 2.0, &IntegrationControls::default()).unwrap();
        let inv = invert_profile(&prof).unwrap();
        let (r1, rp1) = inv.eval(1.0).unwrap();
        assert!((r1 - PI / 2.0).abs() < 1e-10);
        assert!((rp1 + 1.0).abs() < 1e-9);
        // r(u) -> 0 and r'(u) -> -inf at the top
        let top = inv.points.last().unwrap();
        assert!(top.r < 1e-5 && top.rprime < -1e5);
        for pt in &inv.points {
            assert!(pt.rprime < 0.0);
        }
        // round trip
        for &r in &[0.3, 1.0, 2.0, 2.9] {
            let u = prof.u_at(r);
            let back = prof.r_at_u(u).unwrap();
            assert!((prof.u_at(back) - u).abs() < 1e-8);
            assert!((back - r).abs() < 1e-8);
        }
    }

    #[test]
    fn invert_rejects_non_monotone() {
        let spec = NonlinearitySpec::linear_minus_const();
        let (prof, _) =
            integrate(&p(1.0, 2.0), &spec, 2.0, &IntegrationControls::default()).unwrap();
        let mut bad = prof.clone();
        let k = bad.nodes.len() / 2;
        bad.nodes[k].du = 0.1;
        assert!(matches!(invert_profile(&bad), Err(Error::NotMonotone(_))));
    }

    #[test]
    fn rejects_alpha_below_b() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        assert!(integrate(&p(1.0, 2.0), &spec, 0.9, &IntegrationControls::default()).is_err());
    }
}
