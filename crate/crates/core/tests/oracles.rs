//! Closed-form solutions checked end to end.

use std::f64::consts::PI;

use mlap::gn::{k_opt, sphere_measure, theta, GNParams};
use mlap::nonlinearity::{Family, NonlinearitySpec};
use mlap::radial_ode::ProblemParams;
use mlap::shooting::{
    find_alpha, n1_alpha_from_f, n1_inverse_radius, n1_quadrature_profile, SolveControls,
};

#[test]
fn cosine_profile_pointwise() {
    let spec = NonlinearitySpec::linear_minus_const();
    let res = find_alpha(
        &ProblemParams::new(1.0, 2.0).unwrap(),
        &spec,
        None,
        &SolveControls::default(),
    )
    .unwrap();
    for i in 0..=40 {
        let r = PI * i as f64 / 40.0 * 0.999;
        let exact = 1.0 + r.cos();
        assert!((res.profile.u_at(r) - exact).abs() < 1e-10, "r = {r}");
    }
}

#[test]
fn sech_inverse_radius_for_several_levels() {
    let spec = NonlinearitySpec::cubic_minus_linear();
    let a = 2f64.sqrt();
    for u in [1.4, 1.0, 0.3, 1e-2, 1e-5] {
        let r = n1_inverse_radius(&spec, 2.0, a, u).unwrap();
        let exact = (a / u).acosh();
        assert!((r / exact - 1.0).abs() < 1e-10, "u = {u}: {r} vs {exact}");
    }
}

#[test]
fn quadrature_profile_matches_shooting_radius_for_compact_support() {
    // f(0) = -1 gives a finite free boundary for every m
    let spec = NonlinearitySpec::new(Family::PowerMinusConst {
        c1: 1.0,
        c0: 1.0,
        gamma: 2.0,
    })
    .unwrap();
    for m in [1.5, 2.0, 3.0] {
        let params = ProblemParams::new(1.0, m).unwrap();
        let alpha = n1_alpha_from_f(&spec).unwrap();
        let quad = n1_quadrature_profile(&params, &spec, alpha, 200).unwrap();
        let shot = find_alpha(&params, &spec, None, &SolveControls::default()).unwrap();
        assert!(
            (shot.r_star / quad.radius - 1.0).abs() < 1e-7,
            "m = {m}: {} vs {}",
            shot.r_star,
            quad.radius
        );
    }
}

#[test]
fn f_root_for_power_families() {
    // F(u) = u^{γ+1}/(γ+1) - u vanishes at (γ+1)^{1/γ}
    for gamma in [0.5, 1.0, 2.0, 3.5] {
        let spec = NonlinearitySpec::new(Family::PowerMinusConst {
            c1: 1.0,
            c0: 1.0,
            gamma,
        })
        .unwrap();
        let exact = (gamma + 1.0f64).powf(1.0 / gamma);
        assert!((n1_alpha_from_f(&spec).unwrap() / exact - 1.0).abs() < 1e-14);
    }
}

#[test]
fn gn_constants_for_cosine_and_sech() {
    let c = k_opt(
        &GNParams::new(1.0, 2.0, 1.0, 2.0).unwrap(),
        &SolveControls::default(),
    )
    .unwrap();
    let exact = 3f64.sqrt() * PI.powf(-1.0 / 3.0) * 2f64.powf(-2.0 / 3.0);
    assert!((c.k_opt / exact - 1.0).abs() < 1e-10, "{}", c.k_opt);
    assert!((c.r_star - PI).abs() < 1e-8);

    let s = k_opt(
        &GNParams::new(1.0, 2.0, 2.0, 4.0).unwrap(),
        &SolveControls::default(),
    )
    .unwrap();
    let exact = (16.0f64 / 3.0).powf(0.25) / ((4.0f64 / 3.0).powf(0.125) * 4f64.powf(0.375));
    assert!((s.k_opt / exact - 1.0).abs() < 1e-8, "{}", s.k_opt);
}

#[test]
fn theta_and_sphere_closed_forms() {
    assert_eq!(
        theta(&GNParams::new(1.0, 2.0, 1.0, 2.0).unwrap()),
        1.0 / 3.0
    );
    assert!((theta(&GNParams::new(1.0, 2.0, 2.0, 4.0).unwrap()) - 0.25).abs() < 1e-15);
    assert_eq!(sphere_measure(1.0), 2.0);
    assert!((sphere_measure(2.0) - 2.0 * PI).abs() < 1e-14);
    assert!((sphere_measure(3.0) - 4.0 * PI).abs() < 1e-13);
}
