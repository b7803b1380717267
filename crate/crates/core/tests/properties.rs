use proptest::prelude::*;

use mlap::gn::{quotient, GNParams, Gaussian, Scaled};
use mlap::monitors::{energy_rho, func_p, inverse_ode_residual};
use mlap::nonlinearity::{Family, NonlinearitySpec};
use mlap::radial_ode::{integrate, invert_profile, IntegrationControls, ProblemParams};
use mlap::shooting::{classify, find_alpha, GroundStateResult, ShotTag, SolveControls};

fn families() -> Vec<NonlinearitySpec> {
    vec![
        NonlinearitySpec::cubic_minus_linear(),
        NonlinearitySpec::linear_minus_const(),
        NonlinearitySpec::new(Family::PowerMinusConst {
            c1: 1.0,
            c0: 1.0,
            gamma: 2.0,
        })
        .unwrap(),
        NonlinearitySpec::new(Family::DoublePower {
            s: 3.0,
            q: 1.0,
            lambda: 1.0,
        })
        .unwrap(),
    ]
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    /// A crossing shot stays a crossing for every larger centre value.
    #[test]
    fn classification_is_monotone_in_alpha(
        fam in 0usize..4, n in 1.0f64..3.0, extra in 0.0f64..1.0, t1 in 0.001f64..2.0, t2 in 0.001f64..2.0,
    ) {
        let spec = families()[fam];
        let m = n + extra;
        prop_assume!(m > 1.05);
        let params = ProblemParams::new(n, m).unwrap();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assume!(hi - lo > 1e-3);
        let c = IntegrationControls::default();
        let a = classify(&params, &spec, spec.b * (1.0 + lo), &c).unwrap();
        let b = classify(&params, &spec, spec.b * (1.0 + hi), &c).unwrap();
        prop_assert!(!(a.tag == ShotTag::Crossing && b.tag == ShotTag::Stall), "{:?} then {:?}", a.tag, b.tag);
    }

    /// Accepted shots are strictly decreasing with non-positive flux.
    #[test]
    fn shots_decrease_with_nonpositive_flux(fam in 0usize..4, n in 1.0f64..4.0, m in 1.2f64..4.0, t in 0.001f64..3.0) {
        let spec = families()[fam];
        let params = ProblemParams::new(n, m).unwrap();
        let alpha = spec.b * (1.0 + t);
        let (prof, _) = integrate(&params, &spec, alpha, &IntegrationControls::default()).unwrap();
        prop_assert!(prof.nodes[0].u <= alpha);
        for w in prof.nodes.windows(2) {
            prop_assert!(w[1].r > w[0].r);
            prop_assert!(w[1].u <= w[0].u);
            prop_assert!(w[1].v <= 0.0);
        }
    }

    /// For N = 1 the energy (m-1)/m |u'|^m + F(u) is conserved along any shot.
    #[test]
    fn one_dimensional_energy_is_conserved(fam in 0usize..4, m in 1.3f64..4.0, t in 0.05f64..2.0) {
        let spec = families()[fam];
        let params = ProblemParams::new(1.0, m).unwrap();
        let (prof, _) = integrate(&params, &spec, spec.b * (1.0 + t), &IntegrationControls::default()).unwrap();
        let rho = energy_rho(&prof, prof.alpha);
        prop_assert!(rho.residual.unwrap() < 1e-8, "{:?}", rho.residual);
    }

    /// The inverse-plane ODE and the identity for P hold along crossing shots for any a.
    #[test]
    fn inverse_plane_identities_hold(n in 1.0f64..4.0, m in 1.5f64..4.0, t in 0.5f64..2.0, a in 0.0f64..2.0) {
        let spec = NonlinearitySpec::cubic_minus_linear();
        let params = ProblemParams::new(n, m).unwrap();
        let (prof, class) = integrate(&params, &spec, spec.b * (1.0 + t) * 2.0, &IntegrationControls::default()).unwrap();
        prop_assume!(class.tag == ShotTag::Crossing);
        let inv = invert_profile(&prof).unwrap();
        prop_assert!(inverse_ode_residual(&inv) < 1e-6);
        let p = func_p(&inv, a);
        prop_assert!(p.residual < 1e-6, "P residual {} for a = {a}", p.residual);
    }

    /// Q(c u(λ ·)) = Q(u) for gaussian trial functions.
    #[test]
    fn quotient_is_scale_invariant(
        n in 1u32..4, c in 0.1f64..10.0, w in 0.3f64..3.0, sc in 0.05f64..20.0, lambda in 0.1f64..10.0,
    ) {
        let n = n as f64;
        let gn = GNParams::new(n, 2.0, 2.0, 3.0).unwrap();
        let g = Gaussian { c, w };
        let q0 = quotient(&g, &gn).unwrap();
        let q1 = quotient(&Scaled { base: &g, c: sc, lambda }, &gn).unwrap();
        prop_assert!((q1 / q0 - 1.0).abs() < 1e-10, "{q0} vs {q1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    /// The computed centre value always lies above b.
    #[test]
    fn ground_state_lies_above_b(fam in 0usize..4, n in 1.0f64..3.0, extra in 0.0f64..1.5) {
        let spec = families()[fam];
        let m = (n + extra).max(1.2);
        let params = ProblemParams::new(n, m).unwrap();
        let res = find_alpha(&params, &spec, None, &SolveControls::default()).unwrap();
        prop_assert!(res.alpha_star > spec.b);
        prop_assert!(res.residuals.u_at_r.abs() <= 1e-6 * res.alpha_star);
    }
}

/// Tightening the integration tolerances by 10x moves alpha_star by less than
/// 10x the reported bracket width once bisection stops at a width above the
/// discretization error.
#[test]
fn tolerance_refinement_stays_within_reported_bracket() {
    for (n, m, spec) in cases() {
        let params = ProblemParams::new(n, m).unwrap();
        let coarse = SolveControls {
            alpha_rel_tol: 1e-10,
            ..SolveControls::default()
        };
        let (a, b) = refine(&params, &spec, coarse);
        let shift = (a.alpha_star - b.alpha_star).abs();
        assert!(a.residuals.bracket_width <= 1e-10 * a.alpha_star);
        assert!(
            shift < 10.0 * a.residuals.bracket_width,
            "N={n} m={m}: shift {shift:e}, bracket width {:e}",
            a.residuals.bracket_width
        );
    }
}

/// With bisection down to adjacent floats the bracket no longer bounds the
/// shift; the shift is then set by the integration tolerance.
#[test]
fn machine_precision_bisection_shift_is_discretization_sized() {
    for (n, m, spec) in cases() {
        let params = ProblemParams::new(n, m).unwrap();
        let coarse = SolveControls::default();
        let (a, b) = refine(&params, &spec, coarse);
        let shift = (a.alpha_star - b.alpha_star).abs();
        assert!(
            shift < 100.0 * coarse.ode.rel_tol * a.alpha_star,
            "N={n} m={m}: shift {shift:e}"
        );
    }
}

fn cases() -> Vec<(f64, f64, NonlinearitySpec)> {
    vec![
        (1.0, 2.0, NonlinearitySpec::cubic_minus_linear()),
        (2.0, 3.0, NonlinearitySpec::cubic_minus_linear()),
        (2.0, 2.0, NonlinearitySpec::linear_minus_const()),
        (1.0, 1.5, NonlinearitySpec::cubic_minus_linear()),
    ]
}

fn refine(
    params: &ProblemParams,
    spec: &NonlinearitySpec,
    coarse: SolveControls,
) -> (GroundStateResult, GroundStateResult) {
    let mut fine = coarse;
    fine.ode.rel_tol /= 10.0;
    fine.ode.abs_tol /= 10.0;
    (
        find_alpha(params, spec, None, &coarse).unwrap(),
        find_alpha(params, spec, None, &fine).unwrap(),
    )
}
