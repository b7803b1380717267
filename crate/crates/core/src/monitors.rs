//! Structure functions along computed profiles and numerical checks of the
//! identities they satisfy.
//!
//! Derivatives are taken by finite differences along `r` on the integrator
//! nodes; an identity for `X'(u)` is checked as `dX/dr = X'(u) u'(r)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::nonlinearity::NonlinearitySpec;
use crate::numerics::{bisect, fd_derivative, fd_weights, gauss_legendre5};
use crate::radial_ode::{
    integrate, invert_profile, IntegrationControls, InverseProfile, ProblemParams, Profile,
};
use crate::shooting::{n1_alpha_from_f, n1_quadrature_profile, GroundStateResult};

/// Half width of the finite-difference stencils.
const FD_HALF_WIDTH: usize = 3;

/// A tabulated structure function on the node grid of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorSeries {
    pub name: String,
    /// `u` at each node.
    pub grid: Vec<f64>,
    /// `r` at each node.
    pub radius: Vec<f64>,
    pub values: Vec<f64>,
    /// Closed-form derivative with respect to `u` (or `r` where noted).
    pub derivative: Vec<f64>,
    /// Relative residual of the derivative identity over the interior window.
    pub residual: Option<f64>,
}

impl MonitorSeries {
    /// CSV with header `u,value,derivative`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,value,derivative\n");
        for i in 0..self.grid.len() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.grid[i], self.values[i], self.derivative[i]
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub description: String,
    #[serde(serialize_with = "crate::cli::output::serialize_f64")]
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        check: impl Into<String>,
        description: impl Into<String>,
        residual: f64,
        tol: f64,
    ) -> Self {
        Self {
            check: check.into(),
            description: description.into(),
            residual,
            tol,
            pass: residual <= tol,
        }
    }

    fn failed(
        check: impl Into<String>,
        description: impl Into<String>,
        tol: f64,
        err: &Error,
    ) -> Self {
        Self::new(
            check,
            format!("{}: {err}", description.into()),
            f64::INFINITY,
            tol,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
    /// Checks that do not apply to these parameters.
    pub skipped: Vec<String>,
    /// Values of `a` used for the integral identity of `P`.
    pub a_values: Vec<f64>,
    pub u_rep: f64,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Nodes at least half a radial scale away from the centre and from the
/// terminal radius, with a full stencil, positive `u` and negative `u'`.
pub fn interior_window(profile: &Profile) -> Vec<bool> {
    let n = profile.nodes.len();
    let end = profile.last_node().r;
    let margin = 0.5 * profile.r_scale;
    profile
        .nodes
        .iter()
        .enumerate()
        .map(|(i, nd)| {
            i >= FD_HALF_WIDTH
                && i + FD_HALF_WIDTH < n
                && nd.r >= margin
                && nd.r <= end - margin
                && nd.u > 0.0
                && nd.du < 0.0
        })
        .collect()
}

/// `max |FD(values)_r - rhs_r| / max |rhs_r|` over the window, with the
/// normalisation bounded below by `floor`.
fn fd_residual(radii: &[f64], values: &[f64], rhs_r: &[f64], mask: &[bool], floor: f64) -> f64 {
    let fd = fd_derivative(radii, values, 1, FD_HALF_WIDTH);
    let mut num: f64 = 0.0;
    let mut den: f64 = floor;
    let mut any = false;
    for i in 0..radii.len() {
        if !mask[i] {
            continue;
        }
        if let Some(d) = fd[i] {
            let diff = (d - rhs_r[i]).abs();
            if !diff.is_finite() {
                return f64::INFINITY;
            }
            num = num.max(diff);
            den = den.max(rhs_r[i].abs());
            any = true;
        }
    }
    if !any {
        return f64::INFINITY;
    }
    num / den
}

fn series_from(
    profile: &Profile,
    name: &str,
    values: Vec<f64>,
    derivative: Vec<f64>,
    residual: Option<f64>,
) -> MonitorSeries {
    MonitorSeries {
        name: name.to_string(),
        grid: profile.nodes.iter().map(|n| n.u).collect(),
        radius: profile.radii(),
        values,
        derivative,
        residual,
    }
}

/// Cumulative `∫_0^{r_i} integrand(r, u, u', v) dr` at every node. The piece
/// `[0, ε]` uses the power law `integrand ∝ r^p`.
fn cumulative_integral<F>(profile: &Profile, p: f64, integrand: F) -> Vec<f64>
where
    F: Fn(f64, f64, f64, f64) -> f64,
{
    let nodes = &profile.nodes;
    let at = |r: f64| {
        let (u, _, v, _) = profile.state_at(r);
        integrand(r, u, profile.params.slope(v), v)
    };
    let first = nodes[0];
    let mut acc = integrand(first.r, first.u, first.du, first.v) * first.r / (p + 1.0);
    let mut out = Vec::with_capacity(nodes.len());
    out.push(acc);
    for w in nodes.windows(2) {
        acc += gauss_legendre5(at, w[0].r, w[1].r);
        out.push(acc);
    }
    out
}

/// Conservative-form residual: `r^{N-1} v(r) = -∫_0^r s^{N-1} f(u(s)) ds`,
/// relative to the largest integral value.
pub fn conservative_form_residual(profile: &Profile) -> f64 {
    let n = profile.params.n;
    let spec = profile.spec;
    let integral = cumulative_integral(profile, n - 1.0, |r, u, _, _| r.powf(n - 1.0) * spec.f(u));
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (nd, i) in profile.nodes.iter().zip(&integral) {
        num = num.max((nd.r.powf(n - 1.0) * nd.v + i).abs());
        den = den.max(i.abs());
    }
    num / den
}

/// `ρ(r) = ((m-1)/m)|u'|^m + ∫_{u_ref}^{u(r)} f`. The derivative column is
/// `ρ'(r) = -(N-1)|u'|^m / r`, with respect to `r`.
pub fn energy_rho(profile: &Profile, u_ref: f64) -> MonitorSeries {
    let ProblemParams { n, m } = profile.params;
    let spec = &profile.spec;
    let f_ref = spec.F(u_ref);
    let mut values = Vec::with_capacity(profile.nodes.len());
    let mut deriv = Vec::with_capacity(profile.nodes.len());
    for nd in &profile.nodes {
        let g = nd.du.abs().powf(m);
        values.push((m - 1.0) / m * g + spec.F(nd.u) - f_ref);
        deriv.push(-(n - 1.0) * g / nd.r);
    }
    let mask = interior_window(profile);
    let residual = if n == 1.0 {
        // ρ is constant: report its spread against the size of its terms
        let scale = profile
            .nodes
            .iter()
            .map(|nd| ((m - 1.0) / m * nd.du.abs().powf(m)).max((spec.F(nd.u) - f_ref).abs()))
            .fold(0.0, f64::max);
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        (hi - lo) / scale.max(f64::MIN_POSITIVE)
    } else {
        fd_residual(&profile.radii(), &values, &deriv, &mask, 0.0)
    };
    series_from(profile, "rho", values, deriv, Some(residual))
}

/// Largest increase of `ρ` between consecutive nodes, relative to `max |ρ|`.
pub fn rho_monotonicity_violation(series: &MonitorSeries) -> f64 {
    let scale = series
        .values
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    series
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .fold(0.0, f64::max)
        / scale
}

/// `A(u) = (N-m)u + (m-1) r/r'` with `A'(u) = -f(u) r |r'|^{m-2} r'`.
pub fn func_a(inverse: &InverseProfile) -> MonitorSeries {
    let prof = &inverse.source;
    let ProblemParams { n, m } = prof.params;
    let spec = &prof.spec;
    let values: Vec<f64> = prof
        .nodes
        .iter()
        .map(|nd| (n - m) * nd.u + (m - 1.0) * nd.r * nd.du)
        .collect();
    let deriv: Vec<f64> = prof
        .nodes
        .iter()
        .map(|nd| -spec.f(nd.u) * nd.r / nd.v)
        .collect();
    let rhs_r: Vec<f64> = prof
        .nodes
        .iter()
        .zip(&deriv)
        .map(|(nd, d)| d * nd.du)
        .collect();
    let residual = fd_residual(&prof.radii(), &values, &rhs_r, &interior_window(prof), 0.0);
    series_from(prof, "A", values, deriv, Some(residual))
}

/// `ω(u) = r^{N-1} / (r'|r'|^{m-2})` with `ω'(u) = -f(u) r' r^{N-1}`.
pub fn func_omega(inverse: &InverseProfile) -> MonitorSeries {
    let prof = &inverse.source;
    let n = prof.params.n;
    let spec = &prof.spec;
    let values: Vec<f64> = prof
        .nodes
        .iter()
        .map(|nd| nd.r.powf(n - 1.0) * nd.v)
        .collect();
    let deriv: Vec<f64> = prof
        .nodes
        .iter()
        .map(|nd| -spec.f(nd.u) * nd.r.powf(n - 1.0) / nd.du)
        .collect();
    let rhs_r: Vec<f64> = prof
        .nodes
        .iter()
        .zip(&deriv)
        .map(|(nd, d)| d * nd.du)
        .collect();
    let residual = fd_residual(&prof.radii(), &values, &rhs_r, &interior_window(prof), 0.0);
    series_from(prof, "omega", values, deriv, Some(residual))
}

/// Integrand `P'(u)` of the integral identity for `P`.
fn p_prime(params: &ProblemParams, spec: &NonlinearitySpec, a: f64, r: f64, u: f64, v: f64) -> f64 {
    let (n, m) = (params.n, params.m);
    let omega = r.powf(n - 1.0) * v;
    let tail = if a == 0.0 {
        -spec.f(u)
    } else {
        a / n * spec.steepness_combination(u, (n - a) / a)
    };
    (a + 1.0 - n / m) * omega + r.powf(n) * tail
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PIdentity {
    pub a: f64,
    pub series: MonitorSeries,
    /// Right side of the identity, `∫_α^u P'(τ) dτ`, at each node.
    pub quadrature: Vec<f64>,
    /// `max |P - ∫_α^u P'| / scale` over the nodes.
    pub residual: f64,
    /// `|P|` at the first node, relative to the same scale.
    pub p_at_alpha: f64,
}

/// `P(u) = a u ω + r^N((m-1)/m |r'|^{-m} + (a/N) u f(u))` against the
/// quadrature of its derivative
/// `(a + 1 - N/m) ω + (a/N) r^N (u f' - ((N-a)/a) f)`.
pub fn func_p(inverse: &InverseProfile, a: f64) -> PIdentity {
    let prof = &inverse.source;
    let params = prof.params;
    let spec = prof.spec;
    let ProblemParams { n, m } = params;
    let lhs: Vec<f64> = prof
        .nodes
        .iter()
        .map(|nd| {
            let omega = nd.r.powf(n - 1.0) * nd.v;
            a * nd.u * omega
                + nd.r.powf(n) * ((m - 1.0) / m * nd.du.abs().powf(m) + a / n * nd.u * spec.f(nd.u))
        })
        .collect();
    let deriv: Vec<f64> = prof
        .nodes
        .iter()
        .map(|nd| p_prime(&params, &spec, a, nd.r, nd.u, nd.v))
        .collect();
    // both pieces of P', integrated separately so the scale ignores cancellation
    let exponent = n + 1.0 / (m - 1.0);
    let c1 = a + 1.0 - n / m;
    let q_omega = cumulative_integral(prof, exponent, |r, _, du, v| c1 * r.powf(n - 1.0) * v * du);
    let q_rest = cumulative_integral(prof, exponent, |r, u, du, v| {
        (p_prime(&params, &spec, a, r, u, v) - c1 * r.powf(n - 1.0) * v) * du
    });
    let rhs: Vec<f64> = q_omega.iter().zip(&q_rest).map(|(x, y)| x + y).collect();
    let mut scale: f64 = 0.0;
    for i in 0..lhs.len() {
        scale = scale
            .max(lhs[i].abs())
            .max(q_omega[i].abs())
            .max(q_rest[i].abs());
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    let last = prof.nodes.len() - 1;
    let residual = (0..prof.nodes.len())
        .filter(|&i| i < last || prof.nodes[i].u > 0.0)
        .map(|i| (lhs[i] - rhs[i]).abs())
        .fold(0.0, f64::max)
        / scale;
    let p_at_alpha = lhs[0].abs() / scale;
    PIdentity {
        a,
        series: series_from(prof, &format!("P(a={a})"), lhs, deriv, Some(residual)),
        quadrature: rhs,
        residual,
        p_at_alpha,
    }
}

/// Residual of `(m-1) r'' = (N-1) r'^2/r + f(u)|r'|^m r'`, with `r''` from
/// finite differences of `r' = 1/u'` along `r`.
pub fn inverse_ode_residual(inverse: &InverseProfile) -> f64 {
    let prof = &inverse.source;
    let rp: Vec<f64> = prof.nodes.iter().map(|nd| 1.0 / nd.du).collect();
    let rhs_r: Vec<f64> = prof
        .nodes
        .iter()
        .zip(&rp)
        .map(|(nd, &p)| inverse.rpp_from_ode(nd.u, nd.r, p) * nd.du)
        .collect();
    fd_residual(&prof.radii(), &rp, &rhs_r, &interior_window(prof), 0.0)
}

/// Relative deviation of `|u'(ε)|^{m-1} / ε` from `f(α)/N`.
pub fn center_limit_residual(profile: &Profile) -> f64 {
    let nd = profile.nodes[0];
    let target = profile.spec.f(profile.alpha) / profile.params.n;
    (nd.du.abs().powf(profile.params.m - 1.0) / nd.r / target - 1.0).abs()
}

/// Terminal values of `r^{(N-1)/(m-1)} |u'|`, relative to the initial slope scale, and
/// `r^{(N-m)/(m-1)} u`, relative to `α`.
pub fn terminal_limits(profile: &Profile) -> (f64, f64) {
    let ProblemParams { n, m } = profile.params;
    let last = profile.last_node();
    // initial slope scale from the flux scale of the series start
    let slope_scale = profile.v_scale.abs().powf(1.0 / (m - 1.0));
    let i = last.r.powf((n - 1.0) / (m - 1.0)) * last.du.abs() / slope_scale.max(f64::MIN_POSITIVE);
    let ii = last.r.powf((n - m) / (m - 1.0)) * last.u.max(0.0) / profile.alpha;
    (i, ii)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ASignReport {
    /// Largest increase of `A` between consecutive nodes in `(0, b)`, relative.
    pub monotone_violation: f64,
    /// `A(b)` relative to `max |A|`.
    pub a_at_b: f64,
    /// `|A|` at the smallest tabulated `u`, relative to `max |A|`.
    pub a_at_min: f64,
    pub u_min: f64,
    pub scale: f64,
}

pub fn a_sign_report(inverse: &InverseProfile) -> ASignReport {
    let prof = &inverse.source;
    let a = func_a(inverse);
    let b = prof.spec.b;
    let scale = a
        .values
        .iter()
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let mut violation: f64 = 0.0;
    for i in 1..a.values.len() {
        // nodes run towards smaller u, so A must not decrease along them
        if a.grid[i] < b && a.grid[i - 1] <= b {
            violation = violation.max(a.values[i - 1] - a.values[i]);
        }
    }
    let a_at_b = prof
        .r_at_u(b)
        .map(|r| {
            let (u, du, _, _) = prof.state_at(r);
            let ProblemParams { n, m } = prof.params;
            ((n - m) * u + (m - 1.0) * r * du) / scale
        })
        .unwrap_or(f64::INFINITY);
    let last = a.values.len() - 1;
    ASignReport {
        monotone_violation: violation / scale,
        a_at_b,
        a_at_min: a.values[last].abs() / scale,
        u_min: a.grid[last],
        scale,
    }
}

/// Number of nodes where `ω ≥ 0` or `r' ≥ 0`, excluding the terminal node.
pub fn sign_violations(inverse: &InverseProfile) -> (usize, usize) {
    let prof = &inverse.source;
    let last = prof.nodes.len() - 1;
    let omega = func_omega(inverse);
    let w = omega.values[..last].iter().filter(|x| **x >= 0.0).count();
    let rp = prof.nodes[..last]
        .iter()
        .filter(|nd| !(1.0 / nd.du < 0.0))
        .count();
    (w, rp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub u: f64,
    pub t: f64,
    pub tpp_fd: f64,
    pub tpp_formula: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub grid: Vec<f64>,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub big_t: Vec<f64>,
    pub big_s: Vec<f64>,
    pub big_b: Vec<f64>,
    /// `T = -(r_2^2/(r_1' r_2')) s'`.
    pub residual_t: f64,
    /// `T' = f (r_1|r_1'|^{m-1} - r_2|r_2'|^{m-1}) / (m-1)`.
    pub residual_tprime: f64,
    /// `S' = (r_1/r_2)^{N-1} (r_2'/r_1')^{m-1} f (|r_2'|^m - |r_1'|^m)`.
    pub residual_sprime: f64,
    /// `t'' = r_1'' - r_2''` with both sides from the inverse-plane ODE.
    pub residual_tpp: f64,
    pub critical_points: Vec<CriticalPoint>,
    /// Worst relative mismatch of `t''` at critical points of `t`.
    pub residual_critical: Option<f64>,
    /// Spread of `B = |r_1'|^{-m} - |r_2'|^{-m}` relative to its terms; only for `N = 1`.
    pub b_spread: Option<f64>,
}

fn max_abs(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(0.0, |a, x| a.max(x.abs()))
}

/// Pair functions of two trial solutions of the same problem on their
/// common `u`-range.
pub fn pair_monitors(inv1: &InverseProfile, inv2: &InverseProfile) -> Result<PairReport> {
    let p1 = &inv1.source;
    let p2 = &inv2.source;
    if p1.params != p2.params || p1.spec != p2.spec {
        return Err(Error::InvalidParameter(
            "pair monitors need the same problem".into(),
        ));
    }
    let ProblemParams { n, m } = p1.params;
    let spec = p1.spec;
    let w1 = interior_window(p1);
    let w2 = interior_window(p2);
    let (u2_lo, u2_hi) = p2
        .nodes
        .iter()
        .zip(&w2)
        .filter(|(_, &w)| w)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (nd, _)| {
            (lo.min(nd.u), hi.max(nd.u))
        });

    // contiguous run of profile-1 nodes inside both windows
    let idx: Vec<usize> = (0..p1.nodes.len())
        .filter(|&i| w1[i] && p1.nodes[i].u >= u2_lo && p1.nodes[i].u <= u2_hi)
        .collect();
    if idx.len() < 2 * FD_HALF_WIDTH + 3 {
        return Err(Error::EmptyOverlap);
    }
    let (i0, i1) = (
        idx[0].saturating_sub(FD_HALF_WIDTH),
        (idx[idx.len() - 1] + FD_HALF_WIDTH).min(p1.nodes.len() - 1),
    );
    let mut rows = Vec::new();
    for i in i0..=i1 {
        let nd = p1.nodes[i];
        let Some((r2, rp2)) = inv2.eval(nd.u) else {
            continue;
        };
        rows.push((i, nd.r, nd.u, 1.0 / nd.du, r2, rp2, nd.du));
    }
    if rows.len() < 2 * FD_HALF_WIDTH + 3 {
        return Err(Error::EmptyOverlap);
    }
    let mask: Vec<bool> = rows
        .iter()
        .map(|row| w1[row.0] && row.2 >= u2_lo && row.2 <= u2_hi)
        .collect();
    let radii: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let grid: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mut t = Vec::new();
    let mut s = Vec::new();
    let mut big_t = Vec::new();
    let mut big_s = Vec::new();
    let mut big_b = Vec::new();
    let mut rhs_tprime_r = Vec::new();
    let mut rhs_sprime_r = Vec::new();
    let mut tprime = Vec::new();
    let mut rhs_tpp_r = Vec::new();
    for &(_, r1, u, rp1, r2, rp2, du1) in &rows {
        let f = spec.f(u);
        t.push(r1 - r2);
        s.push(r1 / r2);
        big_t.push(r1 / rp1 - r2 / rp2);
        let om1 = r1.powf(n - 1.0) / (rp1 * rp1.abs().powf(m - 2.0));
        let om2 = r2.powf(n - 1.0) / (rp2 * rp2.abs().powf(m - 2.0));
        big_s.push(om1 / om2);
        big_b.push(rp1.abs().powf(-m) - rp2.abs().powf(-m));
        let tp = f * (r1 * rp1.abs().powf(m - 1.0) - r2 * rp2.abs().powf(m - 1.0)) / (m - 1.0);
        rhs_tprime_r.push(tp * du1);
        let sp = (r1 / r2).powf(n - 1.0)
            * (rp2 / rp1).powf(m - 1.0)
            * f
            * (rp2.abs().powf(m) - rp1.abs().powf(m));
        rhs_sprime_r.push(sp * du1);
        tprime.push(rp1 - rp2);
        rhs_tpp_r.push((inv1.rpp_from_ode(u, r1, rp1) - inv2.rpp_from_ode(u, r2, rp2)) * du1);
    }

    // (a) T against -(r_2^2/(r_1' r_2')) s'(u), s' from finite differences
    let ds = fd_derivative(&radii, &s, 1, FD_HALF_WIDTH);
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for (k, row) in rows.iter().enumerate() {
        if !mask[k] {
            continue;
        }
        if let Some(d) = ds[k] {
            let (_, _, _, rp1, r2, rp2, du1) = *row;
            let rhs = -(r2 * r2) / (rp1 * rp2) * (d / du1);
            num = num.max((big_t[k] - rhs).abs());
            den = den.max(big_t[k].abs());
        }
    }
    let residual_t = if den > 0.0 { num / den } else { num };
    let residual_tprime = fd_residual(&radii, &big_t, &rhs_tprime_r, &mask, 0.0);
    let residual_sprime = fd_residual(&radii, &big_s, &rhs_sprime_r, &mask, 0.0);
    let residual_tpp = fd_residual(&radii, &tprime, &rhs_tpp_r, &mask, 0.0);

    // (d) critical points of t, where r_1' = r_2'
    let mut critical_points = Vec::new();
    let tprime_at = |u: f64| -> f64 {
        match (inv1.eval(u), inv2.eval(u)) {
            (Some((_, a)), Some((_, b))) => a - b,
            _ => f64::NAN,
        }
    };
    for k in 1..rows.len() {
        if !(mask[k] && mask[k - 1]) || tprime[k].signum() == tprime[k - 1].signum() {
            continue;
        }
        let (ua, ub) = (grid[k].min(grid[k - 1]), grid[k].max(grid[k - 1]));
        let Ok(uc) = bisect(tprime_at, ua, ub, 0.0) else {
            continue;
        };
        let (Some((r1, rp1)), Some((r2, _))) = (inv1.eval(uc), inv2.eval(uc)) else {
            continue;
        };
        let h = 1e-3 * (u2_hi - u2_lo).min(p1.alpha);
        let xs: Vec<f64> = (-2..=2).map(|j| uc + j as f64 * h).collect();
        let vals: Vec<f64> = xs.iter().map(|&x| tprime_at(x)).collect();
        let w = fd_weights(uc, &xs, 1);
        let tpp_fd: f64 = w[1].iter().zip(&vals).map(|(a, b)| a * b).sum();
        let tpp_formula = (n - 1.0) / (m - 1.0) * rp1 * rp1 * (1.0 / r1 - 1.0 / r2);
        critical_points.push(CriticalPoint {
            u: uc,
            t: r1 - r2,
            tpp_fd,
            tpp_formula,
        });
    }
    let residual_critical = if critical_points.is_empty() {
        None
    } else {
        let scale = max_abs(critical_points.iter().map(|c| c.tpp_formula)).max(f64::MIN_POSITIVE);
        Some(max_abs(critical_points.iter().map(|c| c.tpp_fd - c.tpp_formula)) / scale)
    };

    let b_spread = if n == 1.0 {
        let sel: Vec<usize> = (0..rows.len()).filter(|&k| mask[k]).collect();
        let lo = sel.iter().map(|&k| big_b[k]).fold(f64::INFINITY, f64::min);
        let hi = sel
            .iter()
            .map(|&k| big_b[k])
            .fold(f64::NEG_INFINITY, f64::max);
        let scale = sel
            .iter()
            .map(|&k| rows[k].3.abs().powf(-m).max(rows[k].5.abs().powf(-m)))
            .fold(0.0, f64::max);
        Some((hi - lo) / scale.max(f64::MIN_POSITIVE))
    } else {
        None
    };

    Ok(PairReport {
        grid,
        t,
        s,
        big_t,
        big_s,
        big_b,
        residual_t,
        residual_tprime,
        residual_sprime,
        residual_tpp,
        critical_points,
        residual_critical,
        b_spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyOptions {
    /// Values of `a` for the identity of `P`; defaults to `0` and `N/(1+g(u_rep))`.
    pub a_values: Option<Vec<f64>>,
    /// Representative level for the default `a`; defaults to `α`.
    pub u_rep: Option<f64>,
    pub identity_tol: f64,
    pub center_limit_tol: f64,
    pub endpoint_tol: f64,
    pub a_limit_tol: f64,
    pub n1_tol: f64,
    pub controls: IntegrationControls,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            a_values: None,
            u_rep: None,
            identity_tol: 1e-6,
            center_limit_tol: 1e-4,
            endpoint_tol: 1e-6,
            a_limit_tol: 1e-4,
            n1_tol: 1e-8,
            controls: IntegrationControls::default(),
        }
    }
}

/// Maximum relative deviation of `profile` from an N = 1 quadrature oracle.
/// The oracle is centred at the root of `F`, not at the shooting value.
pub fn n1_oracle_deviation(profile: &Profile) -> Result<f64> {
    let alpha = n1_alpha_from_f(&profile.spec)?;
    let oracle = n1_quadrature_profile(&profile.params, &profile.spec, alpha, 400)?;
    let mut worst: f64 = 0.0;
    let u_min = 1e-3 * profile.alpha;
    for nd in &oracle.nodes {
        if nd.u < u_min || nd.r > profile.last_node().r || nd.r < profile.first_radius() {
            continue;
        }
        let u = profile.u_at(nd.r);
        worst = worst.max((u - nd.u).abs() / nd.u);
    }
    Ok(worst)
}

/// Runs every applicable check on a computed ground state.
pub fn certify(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    result: &GroundStateResult,
    options: &CertifyOptions,
) -> CertificateReport {
    let prof = &result.profile;
    let ProblemParams { n, m } = *params;
    let alpha = prof.alpha;
    let tol = options.identity_tol;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();

    let grid = spec.default_hypothesis_grid(2.0 * alpha);
    let hyp = spec.check_hypotheses(&grid);
    checks.push(Check::new(
        "h1",
        "sign pattern of f around b",
        if hyp.h1_ok { 0.0 } else { 1.0 },
        0.0,
    ));
    checks.push(Check::new(
        "h2",
        "g non-increasing above b",
        if hyp.h2_ok { 0.0 } else { 1.0 },
        0.0,
    ));

    let last = prof.last_node();
    let slope_scale = prof.nodes.iter().fold(0.0f64, |a, nd| a.max(nd.du.abs()));
    checks.push(Check::new(
        "endpoint_u",
        "u at the free boundary relative to alpha",
        last.u.abs() / alpha,
        options.endpoint_tol,
    ));
    // a crossing shot Δα above the ground state reaches u = 0 with |u'|^m ~ Δα
    let slope_floor = 10.0 * (result.residuals.bracket_width / alpha).powf(1.0 / m);
    checks.push(Check::new(
        "endpoint_slope",
        "u' at the free boundary relative to max |u'|",
        result.residuals.uprime_at_r / slope_scale,
        options.endpoint_tol.max(slope_floor),
    ));
    checks.push(Check::new(
        "conservative_form",
        "r^{N-1} v = -int_0^r s^{N-1} f(u)",
        conservative_form_residual(prof),
        1e-8,
    ));

    let rho = energy_rho(prof, alpha);
    if n == 1.0 {
        checks.push(Check::new(
            "rho_constant",
            "spread of rho for N = 1",
            rho.residual.unwrap_or(f64::INFINITY),
            options.n1_tol,
        ));
    } else {
        checks.push(Check::new(
            "rho_identity",
            "rho'(r) = -(N-1)|u'|^m / r",
            rho.residual.unwrap_or(f64::INFINITY),
            tol,
        ));
        checks.push(Check::new(
            "rho_monotone",
            "rho non-increasing",
            rho_monotonicity_violation(&rho),
            1e-12,
        ));
    }

    checks.push(Check::new(
        "center_limit",
        "|u'|^{m-1}/r -> f(alpha)/N at the centre",
        center_limit_residual(prof),
        options.center_limit_tol,
    ));
    let (lim_i, lim_ii) = terminal_limits(prof);
    checks.push(Check::new(
        "terminal_slope_limit",
        "r^{(N-1)/(m-1)} |u'| at the end",
        lim_i,
        options.endpoint_tol,
    ));
    if n < m {
        checks.push(Check::new(
            "terminal_value_limit",
            "r^{(N-m)/(m-1)} u at the end",
            lim_ii,
            options.endpoint_tol,
        ));
    } else {
        skipped.push("terminal_value_limit (needs N < m)".into());
    }

    let u_rep = options.u_rep.unwrap_or(alpha);
    let a_values = options
        .a_values
        .clone()
        .unwrap_or_else(|| vec![0.0, n / (1.0 + spec.g_unchecked(u_rep))]);

    match invert_profile(prof) {
        Ok(inv) => {
            checks.push(Check::new(
                "inverse_ode",
                "(m-1) r'' = (N-1) r'^2/r + f |r'|^m r'",
                inverse_ode_residual(&inv),
                tol,
            ));
            let a = func_a(&inv);
            checks.push(Check::new(
                "a_derivative",
                "A'(u) = -f r |r'|^{m-2} r'",
                a.residual.unwrap_or(f64::INFINITY),
                tol,
            ));
            let w = func_omega(&inv);
            checks.push(Check::new(
                "omega_derivative",
                "omega'(u) = -f r' r^{N-1}",
                w.residual.unwrap_or(f64::INFINITY),
                tol,
            ));
            let (w_bad, rp_bad) = sign_violations(&inv);
            checks.push(Check::new(
                "omega_negative",
                "nodes with omega >= 0",
                w_bad as f64,
                0.0,
            ));
            checks.push(Check::new(
                "rprime_negative",
                "nodes with r' >= 0",
                rp_bad as f64,
                0.0,
            ));
            if (2.0..=m).contains(&n) {
                let l = a_sign_report(&inv);
                checks.push(Check::new(
                    "a_monotone_below_b",
                    "A non-increasing in u on (0, b)",
                    l.monotone_violation,
                    1e-8,
                ));
                checks.push(Check::new("a_at_b", "A(b) <= 0", l.a_at_b.max(0.0), 1e-8));
                if l.u_min <= 1e-4 * alpha {
                    checks.push(Check::new(
                        "a_limit_at_zero",
                        "|A| at the smallest u",
                        l.a_at_min,
                        options.a_limit_tol,
                    ));
                } else {
                    checks.push(Check::new(
                        "a_limit_at_zero",
                        format!("grid stops at u = {:e} > 1e-4 alpha", l.u_min),
                        f64::INFINITY,
                        options.a_limit_tol,
                    ));
                }
            } else {
                skipped.push("A sign and limit checks (need 2 <= N <= m)".into());
            }
            for &a in &a_values {
                let p = func_p(&inv, a);
                checks.push(Check::new(
                    format!("p_identity(a={a})"),
                    "P(u) equals the quadrature of P'",
                    p.residual,
                    tol,
                ));
                checks.push(Check::new(
                    format!("p_at_alpha(a={a})"),
                    "P vanishes at the centre",
                    p.p_at_alpha,
                    tol,
                ));
            }
        }
        Err(e) => {
            for (name, what) in [
                ("inverse_ode", "inverse-plane ODE"),
                ("a_derivative", "A'(u)"),
                ("omega_derivative", "omega'(u)"),
                ("p_identity", "integral identity of P"),
            ] {
                checks.push(Check::failed(name, what, tol, &e));
            }
        }
    }

    if n == 1.0 {
        let fa = spec.F(alpha).abs() / (alpha * spec.f(alpha).abs());
        checks.push(Check::new("n1_f_alpha", "F(alpha) = 0", fa, options.n1_tol));
        match n1_oracle_deviation(prof) {
            Ok(d) => checks.push(Check::new(
                "n1_quadrature",
                "profile against the energy quadrature",
                d,
                1e-6,
            )),
            Err(e) => checks.push(Check::failed(
                "n1_quadrature",
                "energy quadrature",
                1e-6,
                &e,
            )),
        }
        let trial_alpha = spec.b + 0.9 * (alpha - spec.b);
        let pair =
            integrate(params, spec, trial_alpha, &options.controls).and_then(|(trial, _)| {
                let inv_gs = invert_profile(prof)?;
                let inv_tr = invert_profile(&trial)?;
                pair_monitors(&inv_tr, &inv_gs)
            });
        match pair {
            Ok(p) => checks.push(Check::new(
                "n1_b_constant",
                "B constant against a stall shot",
                p.b_spread.unwrap_or(f64::INFINITY),
                options.n1_tol,
            )),
            Err(e) => checks.push(Check::failed(
                "n1_b_constant",
                "B constant",
                options.n1_tol,
                &e,
            )),
        }
    } else {
        skipped.push("N = 1 checks (F(alpha), quadrature oracle, B)".into());
    }

    CertificateReport {
        checks,
        skipped,
        a_values,
        u_rep,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shooting::{find_alpha, SolveControls};

    fn shot(n: f64, m: f64, spec: &NonlinearitySpec, alpha: f64) -> Profile {
        integrate(
            &ProblemParams::new(n, m).unwrap(),
            spec,
            alpha,
            &IntegrationControls::default(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn rho_vanishes_on_the_cosine_ground_state() {
        let spec = NonlinearitySpec::linear_minus_const();
        let p = shot(1.0, 2.0, &spec, 2.0);
        let rho = energy_rho(&p, 2.0);
        assert!(rho.values.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn rho_decreases_for_n2() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let p = shot(2.0, 2.0, &spec, 3.0);
        let rho = energy_rho(&p, 3.0);
        assert!(rho_monotonicity_violation(&rho) < 1e-12);
        assert!(rho.residual.unwrap() < 1e-6, "{:?}", rho.residual);
    }

    #[test]
    fn a_and_omega_identities_on_a_crossing_shot() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let p = shot(2.0, 3.0, &spec, 3.0);
        let inv = invert_profile(&p).unwrap();
        let a = func_a(&inv);
        assert!(a.residual.unwrap() < 1e-6, "{:?}", a.residual);
        // A -> (N - m) alpha at the top
        assert!((a.values[0] - (2.0 - 3.0) * 3.0).abs() < 1e-6);
        let w = func_omega(&inv);
        assert!(w.residual.unwrap() < 1e-6, "{:?}", w.residual);
        assert!(w.values[0].abs() < 1e-10);
        assert_eq!(sign_violations(&inv), (0, 0));
    }

    #[test]
    fn n_equals_m_gives_nonpositive_a() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let p = shot(2.0, 2.0, &spec, 2.5);
        let inv = invert_profile(&p).unwrap();
        assert!(func_a(&inv).values.iter().all(|x| *x <= 0.0));
    }

    #[test]
    fn omega_is_slope_for_n1_m2() {
        let spec = NonlinearitySpec::linear_minus_const();
        let p = shot(1.0, 2.0, &spec, 2.0);
        let inv = invert_profile(&p).unwrap();
        let w = func_omega(&inv);
        for (nd, x) in p.nodes.iter().zip(&w.values) {
            assert!((nd.du - x).abs() < 1e-14);
        }
    }

    #[test]
    fn p_identity_on_trial_shots() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        for (n, m) in [(2.0, 3.0), (2.0, 2.0), (1.0, 1.5)] {
            let p = shot(n, m, &spec, 2.5);
            let inv = invert_profile(&p).unwrap();
            for a in [0.0, 1.0, 0.7] {
                let id = func_p(&inv, a);
                assert!(id.residual < 1e-8, "N={n} m={m} a={a}: {}", id.residual);
                assert!(id.p_at_alpha < 1e-8);
            }
        }
    }

    #[test]
    fn p_for_n_equal_m_and_a_zero_is_minus_integral_of_rn_f() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let p = shot(2.0, 2.0, &spec, 2.5);
        let inv = invert_profile(&p).unwrap();
        let id = func_p(&inv, 0.0);
        let direct = cumulative_integral(&p, 2.0 + 1.0, |r, u, du, _| -r * r * spec.f(u) * du);
        for (x, y) in id.quadrature.iter().zip(&direct) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn inverse_ode_holds_on_shots() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        for (n, m) in [(2.0, 3.0), (3.0, 4.0), (1.0, 2.0)] {
            let p = shot(n, m, &spec, 2.0);
            let inv = invert_profile(&p).unwrap();
            let res = inverse_ode_residual(&inv);
            assert!(res < 1e-6, "N={n} m={m}: {res}");
        }
    }

    #[test]
    fn center_limit() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        for (n, m) in [(2.0, 3.0), (1.0, 1.5), (3.0, 4.0)] {
            assert!(center_limit_residual(&shot(n, m, &spec, 2.0)) < 1e-4);
        }
    }

    #[test]
    fn identical_pair_is_trivial() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let p = shot(2.0, 2.0, &spec, 2.5);
        let inv = invert_profile(&p).unwrap();
        let rep = pair_monitors(&inv, &inv).unwrap();
        assert!(rep.t.iter().all(|x| x.abs() < 1e-10));
        assert!(rep.s.iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert!(rep.big_t.iter().all(|x| x.abs() < 1e-10));
        assert!(rep.big_s.iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert!(rep.big_b.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn b_constant_for_two_cosine_stalls() {
        let spec = NonlinearitySpec::linear_minus_const();
        let i1 = invert_profile(&shot(1.0, 2.0, &spec, 1.5)).unwrap();
        let i2 = invert_profile(&shot(1.0, 2.0, &spec, 1.8)).unwrap();
        let rep = pair_monitors(&i1, &i2).unwrap();
        assert!(rep.b_spread.unwrap() < 1e-8, "{:?}", rep.b_spread);
    }

    #[test]
    fn pair_identities_for_crossing_shots() {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let i1 = invert_profile(&shot(2.0, 2.0, &spec, 3.0)).unwrap();
        let i2 = invert_profile(&shot(2.0, 2.0, &spec, 3.5)).unwrap();
        let rep = pair_monitors(&i1, &i2).unwrap();
        for (name, r) in [
            ("T", rep.residual_t),
            ("T'", rep.residual_tprime),
            ("S'", rep.residual_sprime),
            ("t''", rep.residual_tpp),
        ] {
            assert!(r < 1e-6, "{name}: {r}");
        }
    }

    #[test]
    fn disjoint_pairs_fail() {
        let spec = NonlinearitySpec::linear_minus_const();
        let a = NonlinearitySpec::cubic_minus_linear();
        let i1 = invert_profile(&shot(1.0, 2.0, &spec, 1.5)).unwrap();
        let i2 = invert_profile(&shot(1.0, 2.0, &a, 1.5)).unwrap();
        assert!(pair_monitors(&i1, &i2).is_err());
    }

    #[test]
    fn certify_cosine_ground_state() {
        let params = ProblemParams::new(1.0, 2.0).unwrap();
        let spec = NonlinearitySpec::linear_minus_const();
        let res = find_alpha(&params, &spec, None, &SolveControls::default()).unwrap();
        let rep = certify(&params, &spec, &res, &CertifyOptions::default());
        assert!(rep.all_pass(), "{:#?}", rep.failures());
    }

    #[test]
    fn certify_flags_corrupted_profiles() {
        let params = ProblemParams::new(1.0, 2.0).unwrap();
        let spec = NonlinearitySpec::linear_minus_const();
        let mut res = find_alpha(&params, &spec, None, &SolveControls::default()).unwrap();
        res.profile =
            res.profile
                .with_perturbed_values(|i, u| if i % 2 == 0 { u + 1e-3 } else { u - 1e-3 });
        let rep = certify(&params, &spec, &res, &CertifyOptions::default());
        assert!(!rep.get("rho_constant").unwrap().pass);
        assert!(!rep.get("inverse_ode").unwrap().pass);
    }
}
