//! Gagliardo-Nirenberg interpolation exponent, radial norms and the sharp
//! constant `K_opt` obtained from a computed ground state.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{Family, NonlinearitySpec};
use crate::numerics::gauss_legendre5;
use crate::radial_ode::{ProblemParams, Profile};
use crate::shooting::{find_alpha, SolveControls};

/// Default sampler seed.
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Which range of `s` is guaranteed for these `(N, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admissibility {
    /// `N > m`, `q < s < Nm/(N-m)`.
    Classical,
    /// `N = 1`, `q < s < ∞`.
    OneDimensional,
    /// `1 < N ≤ m`; only `q < s < ∞` is imposed and the inequality itself is
    /// not covered by the classical statements.
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GNParams {
    #[serde(rename = "N")]
    pub n: f64,
    pub m: f64,
    pub q: f64,
    pub s: f64,
    pub admissibility: Admissibility,
}

impl GNParams {
    pub fn new(n: f64, m: f64, q: f64, s: f64) -> Result<Self> {
        if !(n >= 1.0 && m > 1.0 && q >= 1.0 && s > q && s.is_finite()) {
            return Err(Error::Inadmissible(format!(
                "need N >= 1, m > 1, 1 <= q < s < inf (got N={n}, m={m}, q={q}, s={s})"
            )));
        }
        let admissibility = if n > m {
            let m_star = n * m / (n - m);
            if s >= m_star {
                return Err(Error::Inadmissible(format!(
                    "s = {s} must be below m* = {m_star}"
                )));
            }
            Admissibility::Classical
        } else if n == 1.0 {
            Admissibility::OneDimensional
        } else {
            Admissibility::Intermediate
        };
        Ok(Self {
            n,
            m,
            q,
            s,
            admissibility,
        })
    }

    /// `m* = Nm/(N-m)` for `N > m`, infinite otherwise.
    pub fn critical_exponent(&self) -> f64 {
        if self.n > self.m {
            self.n * self.m / (self.n - self.m)
        } else {
            f64::INFINITY
        }
    }
}

/// `θ = Nm(s-q) / (s[Nm - q(N-m)])`.
pub fn theta(gn: &GNParams) -> f64 {
    let GNParams { n, m, q, s, .. } = *gn;
    n * m * (s - q) / (s * (n * m - q * (n - m)))
}

/// Surface measure of the unit sphere in `R^N`, with `σ_0 = 2`.
pub fn sphere_measure(n: f64) -> f64 {
    if n == 1.0 {
        2.0
    } else {
        2.0 * std::f64::consts::PI.powf(n / 2.0) / libm::tgamma(n / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Value,
    Gradient,
}

/// A radial function on `[0, ∞)` given piecewise smooth between breakpoints.
pub trait RadialFunction {
    fn value(&self, r: f64) -> f64;
    fn slope(&self, r: f64) -> f64;
    /// Increasing breakpoints starting at 0; the function is smooth on each
    /// piece and the last breakpoint bounds the tabulated part.
    fn breakpoints(&self) -> Vec<f64>;
    /// `∫_{last}^∞ r^{N-1} |·|^p dr` for the part beyond the last breakpoint.
    fn tail(&self, _n: f64, _exponent: f64, _kind: NormKind) -> Result<f64> {
        Ok(0.0)
    }
}

fn integrand<R: RadialFunction + ?Sized>(
    f: &R,
    n: f64,
    p: f64,
    kind: NormKind,
) -> impl Fn(f64) -> f64 + '_ {
    move |r: f64| {
        let x = match kind {
            NormKind::Value => f.value(r),
            NormKind::Gradient => f.slope(r),
        };
        r.powf(n - 1.0) * x.abs().powf(p)
    }
}

/// `∫_0^∞ r^{N-1} |·|^p dr` by five-point Gauss-Legendre on `2^level`
/// subdivisions of every piece, plus the tail.
fn radial_integral<R: RadialFunction + ?Sized>(
    f: &R,
    n: f64,
    p: f64,
    kind: NormKind,
    level: u32,
) -> Result<f64> {
    let bp = f.breakpoints();
    let g = integrand(f, n, p, kind);
    let mut body = 0.0;
    let parts = 1usize << level;
    for w in bp.windows(2) {
        let h = (w[1] - w[0]) / parts as f64;
        for j in 0..parts {
            let a = w[0] + j as f64 * h;
            body += gauss_legendre5(&g, a, a + h);
        }
    }
    let tail = f.tail(n, p, kind)?;
    if tail > 1e-10 * body {
        return Err(Error::UnnormalizableTail(format!(
            "tail {tail:e} exceeds 1e-10 of the integral {body:e}"
        )));
    }
    Ok(body + tail)
}

/// `(σ_{N-1} ∫_0^∞ r^{N-1} |·|^p dr)^{1/p}` for the value or the gradient.
pub fn radial_norm<R: RadialFunction + ?Sized>(
    f: &R,
    n: f64,
    exponent: f64,
    kind: NormKind,
) -> Result<f64> {
    if !(exponent >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "norm exponent {exponent} < 1"
        )));
    }
    let i = radial_integral(f, n, exponent, kind, 0)?;
    Ok((sphere_measure(n) * i).powf(1.0 / exponent))
}

/// Relative change of the norm when every quadrature piece is halved.
pub fn norm_resolution_change<R: RadialFunction + ?Sized>(
    f: &R,
    n: f64,
    exponent: f64,
    kind: NormKind,
) -> Result<f64> {
    let a = radial_integral(f, n, exponent, kind, 0)?;
    let b = radial_integral(f, n, exponent, kind, 1)?;
    Ok(((a / b).powf(1.0 / exponent) - 1.0).abs())
}

impl RadialFunction for Profile {
    fn value(&self, r: f64) -> f64 {
        let first = self.nodes[0];
        if r < first.r {
            // centre expansion α - (α - u(ε)) (r/ε)^{m/(m-1)}
            let k = self.params.m / (self.params.m - 1.0);
            return self.alpha - (self.alpha - first.u) * (r / first.r).powf(k);
        }
        if r >= self.last_node().r {
            return self.last_node().u.max(0.0);
        }
        self.u_at(r)
    }

    fn slope(&self, r: f64) -> f64 {
        let first = self.nodes[0];
        if r < first.r {
            return first.du * (r / first.r).powf(1.0 / (self.params.m - 1.0));
        }
        if r >= self.last_node().r {
            return self.last_node().du;
        }
        self.slope_at(r)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut bp = Vec::with_capacity(self.nodes.len() + 1);
        bp.push(0.0);
        bp.extend(self.nodes.iter().map(|n| n.r));
        bp
    }

    /// Zero for a finite free boundary. Otherwise the decay beyond the last
    /// node is modelled by the power law `x_e (r/r_e)^{-β}`,
    /// `β = -r x'/x` at the last node, which gives `r_e^N x_e^p/(pβ - N)`.
    fn tail(&self, n: f64, p: f64, kind: NormKind) -> Result<f64> {
        if self.radius.is_finite() {
            return Ok(0.0);
        }
        let last = self.last_node();
        let (x, dx) = match kind {
            NormKind::Value => (last.u, last.du),
            NormKind::Gradient => (last.du, last.d2u),
        };
        if x == 0.0 {
            return Ok(0.0);
        }
        let beta = -last.r * dx / x;
        if !(p * beta > n) {
            return Err(Error::UnnormalizableTail(format!(
                "local decay exponent {beta} too small for p = {p}, N = {n}"
            )));
        }
        Ok(last.r.powf(n) * x.abs().powf(p) / (p * beta - n))
    }
}

/// `c u(λ r)` for a radial function `u`.
pub struct Scaled<'a, R: RadialFunction + ?Sized> {
    pub base: &'a R,
    pub c: f64,
    pub lambda: f64,
}

impl<R: RadialFunction + ?Sized> RadialFunction for Scaled<'_, R> {
    fn value(&self, r: f64) -> f64 {
        self.c * self.base.value(self.lambda * r)
    }
    fn slope(&self, r: f64) -> f64 {
        self.c * self.lambda * self.base.slope(self.lambda * r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.base
            .breakpoints()
            .into_iter()
            .map(|r| r / self.lambda)
            .collect()
    }
    fn tail(&self, n: f64, p: f64, kind: NormKind) -> Result<f64> {
        let factor = match kind {
            NormKind::Value => 1.0,
            NormKind::Gradient => self.lambda.powf(p),
        };
        Ok(self.base.tail(n, p, kind)? * self.c.abs().powf(p) * factor / self.lambda.powf(n))
    }
}

/// `c exp(-(r/w)^2)`, tabulated up to `8w`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub c: f64,
    pub w: f64,
}

impl RadialFunction for Gaussian {
    fn value(&self, r: f64) -> f64 {
        self.c * (-(r / self.w).powi(2)).exp()
    }
    fn slope(&self, r: f64) -> f64 {
        -2.0 * r / (self.w * self.w) * self.value(r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        (0..=256).map(|i| 8.0 * self.w * i as f64 / 256.0).collect()
    }
}

/// `c (1 - r/w)_+`.
#[derive(Debug, Clone, Copy)]
pub struct Tent {
    pub c: f64,
    pub w: f64,
}

impl RadialFunction for Tent {
    fn value(&self, r: f64) -> f64 {
        self.c * (1.0 - r / self.w).max(0.0)
    }
    fn slope(&self, r: f64) -> f64 {
        if r < self.w {
            -self.c / self.w
        } else {
            0.0
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        // graded towards the vertex, where |·|^p is least smooth
        (0..=256)
            .map(|i| {
                let t = i as f64 / 256.0;
                self.w * (1.0 - (1.0 - t).powi(3))
            })
            .collect()
    }
}

/// `u (1 + ε cos(k r + φ))` for a ground-state profile `u`.
pub struct PerturbedProfile<'a> {
    pub base: &'a Profile,
    pub eps: f64,
    pub k: f64,
    pub phase: f64,
}

impl RadialFunction for PerturbedProfile<'_> {
    fn value(&self, r: f64) -> f64 {
        self.base.value(r) * (1.0 + self.eps * (self.k * r + self.phase).cos())
    }
    fn slope(&self, r: f64) -> f64 {
        let arg = self.k * r + self.phase;
        self.base.slope(r) * (1.0 + self.eps * arg.cos())
            - self.base.value(r) * self.eps * self.k * arg.sin()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.base.breakpoints()
    }
    fn tail(&self, n: f64, p: f64, kind: NormKind) -> Result<f64> {
        Ok(self.base.tail(n, p, kind)? * (1.0 + self.eps).powf(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub norm_s: f64,
    pub norm_q: f64,
    pub grad_norm_m: f64,
}

fn norms<R: RadialFunction + ?Sized>(f: &R, gn: &GNParams) -> Result<Norms> {
    Ok(Norms {
        norm_s: radial_norm(f, gn.n, gn.s, NormKind::Value)?,
        norm_q: radial_norm(f, gn.n, gn.q, NormKind::Value)?,
        grad_norm_m: radial_norm(f, gn.n, gn.m, NormKind::Gradient)?,
    })
}

/// `‖u‖_s / (‖∇u‖_m^θ ‖u‖_q^{1-θ})`.
pub fn quotient<R: RadialFunction + ?Sized>(f: &R, gn: &GNParams) -> Result<f64> {
    let th = theta(gn);
    let nm = norms(f, gn)?;
    Ok(nm.norm_s / (nm.grad_norm_m.powf(th) * nm.norm_q.powf(1.0 - th)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GNResult {
    pub params: GNParams,
    pub theta: f64,
    pub norm_s: f64,
    pub norm_q: f64,
    pub grad_norm_m: f64,
    pub k_opt: f64,
    /// Multiplier in `-Δ_m u + u^{q-1} = λ u^{s-1}`; fixed to 1.
    pub lambda_used: f64,
    pub alpha_star: f64,
    #[serde(serialize_with = "crate::cli::output::serialize_f64")]
    pub r_star: f64,
    /// Largest relative change of the quotient under `u -> c u(λ ·)`.
    pub scale_invariance: f64,
    /// Largest relative change of a norm under halved quadrature pieces.
    pub resolution_change: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub profile: Profile,
}

/// Source term `u^{s-1} - u^{q-1}` of the ground-state equation with `λ = 1`.
pub fn gn_spec(gn: &GNParams) -> Result<NonlinearitySpec> {
    NonlinearitySpec::new(Family::DoublePower {
        s: gn.s,
        q: gn.q,
        lambda: 1.0,
    })
}

/// Computes the ground state for `gn` and its quotient.
pub fn k_opt(gn: &GNParams, controls: &SolveControls) -> Result<GNResult> {
    let params = ProblemParams::new(gn.n, gn.m)?;
    let spec = gn_spec(gn)?;
    let gs = find_alpha(&params, &spec, None, controls)?;
    let prof = gs.profile;
    let th = theta(gn);
    let nm = norms(&prof, gn)?;
    let k = nm.norm_s / (nm.grad_norm_m.powf(th) * nm.norm_q.powf(1.0 - th));

    let mut scale_invariance: f64 = 0.0;
    for (c, lambda) in [(0.37, 2.9), (5.0, 0.21), (1.0, 1.7)] {
        let sc = Scaled {
            base: &prof,
            c,
            lambda,
        };
        scale_invariance = scale_invariance.max((quotient(&sc, gn)? / k - 1.0).abs());
    }
    let resolution_change = [
        norm_resolution_change(&prof, gn.n, gn.s, NormKind::Value)?,
        norm_resolution_change(&prof, gn.n, gn.q, NormKind::Value)?,
        norm_resolution_change(&prof, gn.n, gn.m, NormKind::Gradient)?,
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let mut warnings = gs.warnings;
    if gn.admissibility == Admissibility::Intermediate {
        warnings.push("1 < N <= m: the quotient is evidence for, not a proof of, sharpness".into());
    }
    Ok(GNResult {
        params: *gn,
        theta: th,
        norm_s: nm.norm_s,
        norm_q: nm.norm_q,
        grad_norm_m: nm.grad_norm_m,
        k_opt: k,
        lambda_used: 1.0,
        alpha_star: gs.alpha_star,
        r_star: gs.r_star,
        scale_invariance,
        resolution_change,
        warnings,
        profile: prof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialFamily {
    GaussianBumps,
    Tents,
    PerturbedGroundState,
}

impl std::str::FromStr for TrialFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_bumps" | "gaussian-bumps" => Ok(Self::GaussianBumps),
            "tents" => Ok(Self::Tents),
            "perturbed_ground_state" | "perturbed-ground-state" => Ok(Self::PerturbedGroundState),
            _ => Err(Error::InvalidParameter(format!(
                "unknown trial family {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub family: TrialFamily,
    pub samples: usize,
    pub seed: u64,
    pub max_quotient: f64,
    /// `1 - max_quotient / k_opt`.
    pub margin: f64,
    pub violations: usize,
    pub quotients: Vec<f64>,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let t: f64 = rng.random();
    lo * (hi / lo).powf(t)
}

/// Samples `n_samples` radial trial functions and counts those whose
/// quotient exceeds `k_opt_value (1 + 1e-6)`.
pub fn check_inequality(
    gn: &GNParams,
    k_opt_value: f64,
    family: TrialFamily,
    n_samples: usize,
    seed: u64,
    ground_state: Option<&Profile>,
) -> Result<InequalityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quotients = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let c = log_uniform(&mut rng, 1e-2, 1e2);
        let w = log_uniform(&mut rng, 1e-1, 1e1);
        let q = match family {
            TrialFamily::GaussianBumps => quotient(&Gaussian { c, w }, gn)?,
            TrialFamily::Tents => quotient(&Tent { c, w }, gn)?,
            TrialFamily::PerturbedGroundState => {
                let base = ground_state.ok_or_else(|| {
                    Error::InvalidParameter("perturbed trials need the ground-state profile".into())
                })?;
                let eps = log_uniform(&mut rng, 1e-4, 1e-1);
                let k = log_uniform(&mut rng, 0.5, 5.0) / base.r_scale;
                let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                quotient(
                    &PerturbedProfile {
                        base,
                        eps,
                        k,
                        phase,
                    },
                    gn,
                )?
            }
        };
        quotients.push(q);
    }
    let max_quotient = quotients.iter().copied().fold(0.0, f64::max);
    let violations = quotients
        .iter()
        .filter(|q| **q > k_opt_value * (1.0 + 1e-6))
        .count();
    Ok(InequalityReport {
        family,
        samples: n_samples,
        seed,
        max_quotient,
        margin: 1.0 - max_quotient / k_opt_value,
        violations,
        quotients,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    Qp,
    Jzz,
}

impl std::str::FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qp" => Ok(Self::Qp),
            "jzz" => Ok(Self::Jzz),
            _ => Err(Error::InvalidParameter(format!(
                "unknown preset {s:?} (expected qp or jzz)"
            ))),
        }
    }
}

/// Named source terms with `m = 2`:
/// `qp(p)`: `f(u) = u^{p/2-1} - 1`, with `2 < p < 4N/(N-2)` for `N > 2`;
/// `jzz(p)`: `f(u) = 2^{(p-4)/4} u^{(p-2)/2} - √2/2`.
pub fn preset(name: PresetName, p: f64, n: f64) -> Result<(ProblemParams, NonlinearitySpec)> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "preset exponent p = {p} must exceed 2"
        )));
    }
    let params = ProblemParams::new(n, 2.0)?;
    let family = match name {
        PresetName::Qp => {
            if n > 2.0 && p >= 4.0 * n / (n - 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "qp needs p < 4N/(N-2) = {} for N = {n}",
                    4.0 * n / (n - 2.0)
                )));
            }
            Family::PowerMinusConst {
                c1: 1.0,
                c0: 1.0,
                gamma: p / 2.0 - 1.0,
            }
        }
        PresetName::Jzz => Family::PowerMinusConst {
            c1: 2f64.powf((p - 4.0) / 4.0),
            c0: std::f64::consts::FRAC_1_SQRT_2,
            gamma: (p - 2.0) / 2.0,
        },
    };
    Ok((params, NonlinearitySpec::new(family)?))
}
