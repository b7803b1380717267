//! Shooting on the centre value `α = u(0)`.
//!
//! Every shot is classified as a crossing (u reaches 0 with negative slope),
//! a stall (u' reaches 0 at positive u), a ground state (tangency or decay)
//! or undetermined. Stalls lie below the ground-state value and crossings
//! above it, so bisection between a stall witness and a crossing witness
//! converges to the unique free-boundary solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::{bisect, integrate_adaptive};
use crate::radial_ode::{
    integrate, natural_scales, IntegrationControls, Node, ProblemParams, Profile, ProfileEvents,
    TerminalEvent,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotTag {
    Crossing,
    Stall,
    GroundState,
    Undetermined,
}

impl ShotTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShotTag::Crossing => "Crossing",
            ShotTag::Stall => "Stall",
            ShotTag::GroundState => "GroundState",
            ShotTag::Undetermined => "Undetermined",
        }
    }
}

/// Which side of the ground-state value a shot lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Stalled: the centre value is too small.
    Undershoot,
    /// Crossed zero: the centre value is too large.
    Overshoot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShotClassification {
    pub tag: ShotTag,
    pub event_radius: Option<f64>,
    pub terminal_u: f64,
    pub terminal_v: f64,
    pub reason: Option<String>,
    /// Side of the ground state implied by the terminal event, when known.
    /// Tangential ground states keep the side of the event that ended them.
    pub side: Option<Side>,
}

impl ShotClassification {
    pub fn from_profile(profile: &Profile, controls: &IntegrationControls) -> Self {
        let last = profile.last_node();
        let u_floor = controls.u_floor * profile.alpha;
        let v_floor = controls.vprime_floor * profile.v_scale;
        let (tag, side, reason) = match profile.events.terminal {
            TerminalEvent::ZeroCrossing => {
                let tag = if last.v.abs() < v_floor {
                    ShotTag::GroundState
                } else {
                    ShotTag::Crossing
                };
                (tag, Some(Side::Overshoot), None)
            }
            TerminalEvent::ZeroSlope => {
                let tag = if last.u < u_floor {
                    ShotTag::GroundState
                } else {
                    ShotTag::Stall
                };
                (tag, Some(Side::Undershoot), None)
            }
            TerminalEvent::Decay | TerminalEvent::Truncated => (ShotTag::GroundState, None, None),
            TerminalEvent::RMax => (
                ShotTag::Undetermined,
                None,
                Some(format!(
                    "r_max = {} reached without a decision",
                    controls.r_max
                )),
            ),
            TerminalEvent::StepUnderflow => (
                ShotTag::Undetermined,
                None,
                Some(format!("step-size underflow near r = {}", last.r)),
            ),
            TerminalEvent::MaxSteps => (
                ShotTag::Undetermined,
                None,
                Some(format!(
                    "step budget of {} exhausted at r = {}",
                    controls.max_steps, last.r
                )),
            ),
        };
        let event_radius = match profile.events.terminal {
            TerminalEvent::ZeroCrossing | TerminalEvent::ZeroSlope | TerminalEvent::Decay => {
                Some(profile.events.terminal_radius)
            }
            _ => None,
        };
        Self {
            tag,
            event_radius,
            terminal_u: last.u,
            terminal_v: last.v,
            reason,
            side,
        }
    }
}

/// Classifies a single shot.
pub fn classify(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha: f64,
    controls: &IntegrationControls,
) -> Result<ShotClassification> {
    integrate(params, spec, alpha, controls).map(|(_, c)| c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveControls {
    pub ode: IntegrationControls,
    /// Bisection stops once the bracket is narrower than `alpha_rel_tol * α`;
    /// zero bisects down to adjacent floating point values.
    pub alpha_rel_tol: f64,
    /// Upper limit of the doubling search, as a multiple of `b`.
    pub alpha_max_factor: f64,
    /// First shot of the doubling search is at `b (1 + start_offset)`.
    pub start_offset: f64,
    /// Largest relative gap between the two bracketing shots that is still
    /// trusted when cutting an `R = ∞` ground state.
    pub trust_gap: f64,
    pub max_bisections: usize,
}

impl Default for SolveControls {
    fn default() -> Self {
        Self {
            ode: IntegrationControls::default(),
            alpha_rel_tol: 0.0,
            alpha_max_factor: 1e6,
            start_offset: 1e-2,
            trust_gap: 1e-2,
            max_bisections: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateResiduals {
    pub u_at_r: f64,
    pub uprime_at_r: f64,
    pub bracket_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub alpha: f64,
    pub tag: ShotTag,
    pub event_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundStateResult {
    pub alpha_star: f64,
    /// Free-boundary radius, `+∞` for decaying ground states.
    pub r_star: f64,
    pub profile: Profile,
    pub residuals: GroundStateResiduals,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub classification_trace: Vec<TraceEntry>,
    pub warnings: Vec<String>,
}

struct Shot {
    alpha: f64,
    profile: Profile,
    class: ShotClassification,
}

fn shoot(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha: f64,
    ode: &IntegrationControls,
    trace: &mut Vec<TraceEntry>,
) -> Result<Shot> {
    let (profile, class) = integrate(params, spec, alpha, ode)?;
    trace.push(TraceEntry {
        alpha,
        tag: class.tag,
        event_radius: class.event_radius,
    });
    Ok(Shot {
        alpha,
        profile,
        class,
    })
}

fn initial_bracket(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    hint: Option<(f64, f64)>,
    controls: &SolveControls,
    trace: &mut Vec<TraceEntry>,
) -> Result<(Shot, Shot)> {
    let ode = &controls.ode;
    if let Some((lo, hi)) = hint {
        if lo > spec.b && hi > lo {
            let a = shoot(params, spec, lo, ode, trace)?;
            let b = shoot(params, spec, hi, ode, trace)?;
            if a.class.side == Some(Side::Undershoot) && b.class.side == Some(Side::Overshoot) {
                return Ok((a, b));
            }
        }
    }

    let b = spec.b;
    let start = b * (1.0 + controls.start_offset);
    let first = shoot(params, spec, start, ode, trace)?;
    let mut low = match first.class.side {
        Some(Side::Undershoot) => first,
        Some(Side::Overshoot) => {
            // walk down towards b for a stall witness
            let mut found = None;
            for j in 1..=60 {
                let a = b + (start - b) * 0.5f64.powi(j);
                if a <= b {
                    break;
                }
                let s = shoot(params, spec, a, ode, trace)?;
                if s.class.side == Some(Side::Undershoot) {
                    found = Some(s);
                    break;
                }
            }
            let low = found.ok_or(Error::NoStallFound { b })?;
            return Ok((low, first));
        }
        None => {
            return Err(Error::BracketLost(format!(
                "undecided first shot at alpha = {start}: {}",
                first.class.reason.clone().unwrap_or_default()
            )))
        }
    };
    let alpha_max = controls.alpha_max_factor * b;
    let mut a = start;
    loop {
        a *= 2.0;
        if a > alpha_max {
            return Err(Error::NoCrossingFound { alpha_max });
        }
        let s = shoot(params, spec, a, ode, trace)?;
        match s.class.side {
            Some(Side::Overshoot) => return Ok((low, s)),
            Some(Side::Undershoot) => low = s,
            None => {}
        }
    }
}

/// Cuts the stall-side profile where it stops agreeing with the
/// crossing-side profile to within `trust_gap` relative.
fn trusted_prefix(low: &Profile, high: &Profile, trust_gap: f64) -> Profile {
    let r_hi_end = high.last_node().r;
    let mut r_stop = low.first_radius();
    for nd in &low.nodes {
        if nd.r > r_hi_end || nd.u <= 0.0 {
            break;
        }
        let gap = (nd.u - high.u_at(nd.r)).abs() / nd.u;
        if gap > trust_gap || nd.du >= 0.0 {
            break;
        }
        r_stop = nd.r;
    }
    let mut p = low.truncated(r_stop, TerminalEvent::Truncated);
    p.radius = f64::INFINITY;
    p
}

/// Locates the unique ground-state centre value by bisection on the shot
/// classification.
pub fn find_alpha(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    bracket_hint: Option<(f64, f64)>,
    controls: &SolveControls,
) -> Result<GroundStateResult> {
    if !(spec.b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source term needs a positive zero b, got {}",
            spec.b
        )));
    }
    let mut warnings = Vec::new();
    if !params.low_dim() {
        warnings.push(format!(
            "N = {} > m = {}: uniqueness is not covered in this regime",
            params.n, params.m
        ));
    }
    let mut trace = Vec::new();
    let (mut low, mut high) = initial_bracket(params, spec, bracket_hint, controls, &mut trace)?;
    let mut iterations = 0;
    let mut direct: Option<Shot> = None;
    while iterations < controls.max_bisections {
        let width = high.alpha - low.alpha;
        if width <= controls.alpha_rel_tol * high.alpha {
            break;
        }
        let mid = low.alpha + 0.5 * width;
        if mid <= low.alpha || mid >= high.alpha {
            break;
        }
        iterations += 1;
        let s = shoot(params, spec, mid, &controls.ode, &mut trace)?;
        match s.class.side {
            Some(Side::Undershoot) => low = s,
            Some(Side::Overshoot) => high = s,
            None => match s.profile.events.terminal {
                TerminalEvent::Decay | TerminalEvent::RMax => {
                    direct = Some(s);
                    break;
                }
                _ => {
                    return Err(Error::BracketLost(format!(
                        "shot at alpha = {mid} is undecided: {}",
                        s.class.reason.unwrap_or_default()
                    )))
                }
            },
        }
    }

    let bracket = (low.alpha, high.alpha);
    let bracket_width = high.alpha - low.alpha;
    let (alpha_star, r_star, profile, u_at_r, uprime_at_r) = if let Some(s) = direct {
        let mut p = s.profile;
        p.radius = f64::INFINITY;
        let last = *p.last_node();
        (s.alpha, f64::INFINITY, p, last.u, last.du.abs())
    } else if spec.compact_support(params.m) {
        let r = low.profile.events.terminal_radius;
        let u_end = low.profile.last_node().u;
        let slope_hi = high.profile.last_node().du.abs();
        let alpha = low.alpha + 0.5 * bracket_width;
        let mut p = low.profile;
        p.radius = r;
        (alpha, r, p, u_end, slope_hi)
    } else {
        let p = trusted_prefix(&low.profile, &high.profile, controls.trust_gap);
        let last = *p.last_node();
        let alpha = low.alpha + 0.5 * bracket_width;
        (alpha, f64::INFINITY, p, last.u, last.du.abs())
    };
    Ok(GroundStateResult {
        alpha_star,
        r_star,
        profile,
        residuals: GroundStateResiduals {
            u_at_r,
            uprime_at_r,
            bracket_width,
        },
        iterations,
        bracket,
        classification_trace: trace,
        warnings,
    })
}

/// Ground-state centre value in one dimension: the root of `F` above `b`.
pub fn n1_alpha_from_f(spec: &NonlinearitySpec) -> Result<f64> {
    let b = spec.b;
    if !(b > 0.0) || !(spec.F(b) < 0.0) {
        return Err(Error::NoRoot { searched_to: b });
    }
    let mut hi = 2.0 * b;
    let limit = 1e6 * b;
    while spec.F(hi) <= 0.0 {
        hi *= 2.0;
        if hi > limit {
            return Err(Error::NoRoot { searched_to: limit });
        }
    }
    bisect(|u| spec.F(u), b, hi, 0.0)
}

/// `F(α) - F(s)` evaluated without cancellation for `s` close to `α`.
fn energy_gap(spec: &NonlinearitySpec, alpha: f64, f_alpha_level: f64, s: f64) -> f64 {
    let d = alpha - s;
    if d < 1e-3 * alpha {
        d * mean_force(spec, alpha, d)
    } else {
        f_alpha_level - spec.F(s)
    }
}

/// Simpson mean of `f` on `[α - d, α]`.
fn mean_force(spec: &NonlinearitySpec, alpha: f64, d: f64) -> f64 {
    (spec.f(alpha - d) + 4.0 * spec.f(alpha - 0.5 * d) + spec.f(alpha)) / 6.0
}

/// `r(u) = ∫_u^α ds / [(m/(m-1)) (F(α) - F(s))]^{1/m}` for the
/// one-dimensional problem, where the energy `(m-1)/m |u'|^m + F(u)` is
/// conserved.
pub fn n1_inverse_radius(spec: &NonlinearitySpec, m: f64, alpha: f64, u: f64) -> Result<f64> {
    if !(u >= 0.0 && u <= alpha) {
        return Err(Error::Domain(format!("u = {u} outside [0, {alpha}]")));
    }
    if u == alpha {
        return Ok(0.0);
    }
    let scale = spec.f(alpha).abs() * alpha;
    let mut fa = spec.F(alpha);
    if fa < -1e-13 * scale {
        return Err(Error::SingularIntegrand(format!(
            "F(alpha) = {fa} < 0, so F(s) = F(alpha) at an interior level"
        )));
    }
    let ground = fa.abs() <= 1e-12 * scale.max(1e-300);
    if ground {
        // F(α) = 0 at a ground-state level; its rounding error would dominate F(s) near 0
        fa = 0.0;
    }
    let k = m / (m - 1.0);
    let inv_m = 1.0 / m;
    let integrand = |s: f64| {
        let gap = energy_gap(spec, alpha, fa, s);
        if gap <= 0.0 {
            f64::NAN
        } else {
            (k * gap).powf(-inv_m)
        }
    };
    let split = 0.5 * (u + alpha);
    let tol = 1e-14;

    // upper part: s = α - τ^p with p = m/(m-1) removes the endpoint singularity
    let p = k;
    let tau_max = (alpha - split).powf(1.0 / p);
    let upper = integrate_adaptive(
        |tau| {
            let d = tau.powf(p);
            if d < 1e-3 * alpha {
                // τ^{p-1} d^{-1/m} = 1
                p * (k * mean_force(spec, alpha, d)).powf(-inv_m)
            } else {
                p * tau.powf(p - 1.0) * integrand(alpha - d)
            }
        },
        0.0,
        tau_max,
        tol * tau_max,
        tol,
    )?;

    // lower part, singular at 0 only for a ground state of a compact family
    let order = spec.zero_order();
    let lower = if ground && u < 1e-2 * alpha && order < m {
        let q = m / (m - order);
        let lo = u.powf(1.0 / q);
        let hi = split.powf(1.0 / q);
        integrate_adaptive(
            |sig| q * sig.powf(q - 1.0) * integrand(sig.powf(q)),
            lo,
            hi,
            tol * (hi - lo),
            tol,
        )?
    } else {
        integrate_adaptive(integrand, u, split, tol * (split - u), tol)?
    };
    let total = upper + lower;
    if !total.is_finite() {
        return Err(Error::SingularIntegrand(format!("non-finite r({u})")));
    }
    Ok(total)
}

/// One-dimensional profile obtained from the energy quadrature instead of
/// the ODE; an independent oracle for `integrate`.
pub fn n1_quadrature_profile(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha: f64,
    n_points: usize,
) -> Result<Profile> {
    if params.n != 1.0 {
        return Err(Error::InvalidParameter(format!(
            "energy quadrature needs N = 1, got {}",
            params.n
        )));
    }
    if !(alpha > spec.b) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} must exceed b = {}",
            spec.b
        )));
    }
    let m = params.m;
    let fa = spec.F(alpha);
    let scale = spec.f(alpha).abs() * alpha;
    let crossing = fa > 1e-12 * scale;
    let reaches_zero = crossing || spec.compact_support(m);
    let u_lo = if reaches_zero { 0.0 } else { 1e-6 * alpha };
    let k = m / (m - 1.0);
    let n_points = n_points.max(8);
    let mut nodes = Vec::with_capacity(n_points);
    for j in 1..n_points {
        let sig = j as f64 / (n_points - 1) as f64;
        let u = if j == n_points - 1 {
            u_lo
        } else {
            alpha - (alpha - u_lo) * sig * sig
        };
        let r = n1_inverse_radius(spec, m, alpha, u)?;
        let gap = (fa - spec.F(u)).max(0.0);
        let du = -(k * gap).powf(1.0 / m);
        let v = params.flux(du);
        nodes.push(Node::from_state(params, spec, r, u, v));
    }
    let (r_s, v_scale) = natural_scales(params, spec, alpha);
    let last = *nodes.last().expect("non-empty");
    let r_b = n1_inverse_radius(spec, m, alpha, spec.b).ok();
    Ok(Profile {
        params: *params,
        spec: *spec,
        alpha,
        radius: if reaches_zero { last.r } else { f64::INFINITY },
        events: ProfileEvents {
            r_b,
            terminal: if reaches_zero {
                TerminalEvent::ZeroCrossing
            } else {
                TerminalEvent::Truncated
            },
            terminal_radius: last.r,
        },
        nodes,
        r_scale: r_s,
        v_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub tag: ShotTag,
    pub event_radius: Option<f64>,
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub stall_to_crossing: usize,
    pub crossing_to_stall: usize,
    pub undetermined: usize,
}

/// Classifies every `α` of the grid (in parallel on `workers` threads, or
/// the global pool when `workers` is `None`) and counts side changes.
pub fn sweep_classify(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    alpha_grid: &[f64],
    controls: &IntegrationControls,
    workers: Option<usize>,
) -> Result<SweepTable> {
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "alpha grid must be increasing".into(),
        ));
    }
    if let Some(&a) = alpha_grid.iter().find(|a| **a <= spec.b) {
        return Err(Error::Domain(format!(
            "alpha = {a} is not above b = {}",
            spec.b
        )));
    }
    let run = || -> Result<Vec<SweepRow>> {
        alpha_grid
            .par_iter()
            .map(|&alpha| {
                classify(params, spec, alpha, controls).map(|c| SweepRow {
                    alpha,
                    tag: c.tag,
                    event_radius: c.event_radius,
                    side: c.side,
                })
            })
            .collect()
    };
    let rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let mut up = 0;
    let mut down = 0;
    let mut prev: Option<Side> = None;
    for side in rows.iter().filter_map(|r| r.side) {
        match (prev, side) {
            (Some(Side::Undershoot), Side::Overshoot) => up += 1,
            (Some(Side::Overshoot), Side::Undershoot) => down += 1,
            _ => {}
        }
        prev = Some(side);
    }
    let undetermined = rows
        .iter()
        .filter(|r| r.tag == ShotTag::Undetermined)
        .count();
    Ok(SweepTable {
        rows,
        stall_to_crossing: up,
        crossing_to_stall: down,
        undetermined,
    })
}

/// `n` points from `a` to `b`, logarithmic or linear.
pub fn alpha_grid(a: f64, b: f64, n: usize, log: bool) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            if log {
                a * (b / a).powf(t)
            } else {
                a + (b - a) * t
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Family;
    use std::f64::consts::PI;

    fn p(n: f64, m: f64) -> ProblemParams {
        ProblemParams::new(n, m).unwrap()
    }

    #[test]
    fn classify_cosine_shots() {
        let spec = NonlinearitySpec::linear_minus_const();
        let c = IntegrationControls::default();
        assert_eq!(
            classify(&p(1.0, 2.0), &spec, 2.5, &c).unwrap().tag,
            ShotTag::Crossing
        );
        assert_eq!(
            classify(&p(1.0, 2.0), &spec, 1.5, &c).unwrap().tag,
            ShotTag::Stall
        );
    }

    #[test]
    fn classify_cubic_shots() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let c = IntegrationControls::default();
        assert_eq!(
            classify(&p(2.0, 2.0), &spec, 1.0 + 1e-3, &c).unwrap().tag,
            ShotTag::Stall
        );
        assert_eq!(
            classify(&p(1.0, 2.0), &spec, 2.0, &c).unwrap().tag,
            ShotTag::Crossing
        );
    }

    #[test]
    fn n1_alpha_examples() {
        assert!(
            (n1_alpha_from_f(&NonlinearitySpec::linear_minus_const()).unwrap() - 2.0).abs() < 1e-15
        );
        let r2 = n1_alpha_from_f(&NonlinearitySpec::cubic_minus_linear()).unwrap();
        assert!((r2 - 2f64.sqrt()).abs() < 1e-15);
        let dp = NonlinearitySpec::new(Family::DoublePower {
            s: 3.0,
            q: 1.0,
            lambda: 1.0,
        })
        .unwrap();
        assert!((n1_alpha_from_f(&dp).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        // f > 0 everywhere above a zero b but F negative forever cannot happen for
        // these families; a pure power has no b at all
        let pure = NonlinearitySpec::new(Family::PowerMinusConst {
            c1: 1.0,
            c0: 0.0,
            gamma: 1.0,
        })
        .unwrap();
        assert!(matches!(n1_alpha_from_f(&pure), Err(Error::NoRoot { .. })));
    }

    #[test]
    fn n1_quadrature_cosine() {
        let spec = NonlinearitySpec::linear_minus_const();
        let r = n1_inverse_radius(&spec, 2.0, 2.0, 1.0).unwrap();
        assert!((r - PI / 2.0).abs() < 1e-12, "{r}");
        let big_r = n1_inverse_radius(&spec, 2.0, 2.0, 0.0).unwrap();
        assert!((big_r - PI).abs() < 1e-10, "{big_r}");
        let prof = n1_quadrature_profile(&p(1.0, 2.0), &spec, 2.0, 200).unwrap();
        assert!((prof.radius - PI).abs() < 1e-10);
    }

    #[test]
    fn n1_quadrature_sech() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let a = 2f64.sqrt();
        for u in [1.3, 1.0, 0.5, 0.1, 1e-3] {
            let r = n1_inverse_radius(&spec, 2.0, a, u).unwrap();
            let exact = (a / u).acosh();
            assert!(
                (r - exact).abs() < 1e-10 * exact.max(1.0),
                "u={u}: {r} vs {exact}"
            );
        }
    }

    #[test]
    fn n1_quadrature_finite_radius_for_negative_f0() {
        for m in [1.5, 2.0, 3.0] {
            let spec = NonlinearitySpec::new(Family::PowerMinusConst {
                c1: 1.0,
                c0: 1.0,
                gamma: 2.0,
            })
            .unwrap();
            let alpha = n1_alpha_from_f(&spec).unwrap();
            let r = n1_inverse_radius(&spec, m, alpha, 0.0).unwrap();
            assert!(r.is_finite() && r > 0.0);
        }
    }

    #[test]
    fn n1_quadrature_rejects_stall_levels() {
        let spec = NonlinearitySpec::linear_minus_const();
        assert!(matches!(
            n1_inverse_radius(&spec, 2.0, 1.5, 0.2),
            Err(Error::SingularIntegrand(_))
        ));
    }

    #[test]
    fn find_alpha_cosine() {
        let spec = NonlinearitySpec::linear_minus_const();
        let res = find_alpha(&p(1.0, 2.0), &spec, None, &SolveControls::default()).unwrap();
        assert!((res.alpha_star - 2.0).abs() < 1e-8);
        assert!((res.r_star - PI).abs() < 1e-8, "{}", res.r_star);
        assert!(res.alpha_star > spec.b);
    }

    #[test]
    fn sweep_cosine_grid() {
        let spec = NonlinearitySpec::linear_minus_const();
        let t = sweep_classify(
            &p(1.0, 2.0),
            &spec,
            &[1.5, 1.9, 2.1, 3.0],
            &IntegrationControls::default(),
            Some(2),
        )
        .unwrap();
        let tags: Vec<ShotTag> = t.rows.iter().map(|r| r.tag).collect();
        assert_eq!(
            tags,
            vec![
                ShotTag::Stall,
                ShotTag::Stall,
                ShotTag::Crossing,
                ShotTag::Crossing
            ]
        );
        assert_eq!((t.stall_to_crossing, t.crossing_to_stall), (1, 0));

        let one = sweep_classify(
            &p(1.0, 2.0),
            &spec,
            &[2.5],
            &IntegrationControls::default(),
            None,
        )
        .unwrap();
        assert_eq!(one.rows.len(), 1);
        assert_eq!(one.stall_to_crossing + one.crossing_to_stall, 0);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let spec = NonlinearitySpec::linear_minus_const();
        let c = IntegrationControls::default();
        assert!(sweep_classify(&p(1.0, 2.0), &spec, &[2.0, 1.5], &c, None).is_err());
        assert!(sweep_classify(&p(1.0, 2.0), &spec, &[0.5, 1.5], &c, None).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = alpha_grid(1.001, 1000.0, 64, true);
        assert_eq!(g.len(), 64);
        assert!((g[0] - 1.001).abs() < 1e-15 && (g[63] - 1000.0).abs() < 1e-9);
    }
}
