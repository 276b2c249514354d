use implosion::params::*;
use implosion::Error;
use proptest::prelude::*;

#[test]
fn closed_forms_for_gamma_two() {
    // hand evaluation: ell = 2/(2-1), p = 1 + 4/2, r* = 5/(2+sqrt 3)
    let p = derive(3, 2.0, 0.0, 0.0, Regime::Euler).unwrap();
    assert_eq!((p.ell, p.p), (2.0, 3.0));
    assert!((p.r_star - 1.339745962155614).abs() < 1e-15);
    assert_eq!(p.r_eye, p.r_star);
}

#[test]
fn monoatomic_gas_is_degenerate() {
    let e = derive(3, 5.0 / 3.0, 0.0, 0.0, Regime::Euler).unwrap_err();
    assert!(matches!(e, Error::DegenerateTriplePoint { d: 3, .. }));
    assert!(matches!(derive(3, 1.0, 0.0, 0.0, Regime::Euler), Err(Error::InvalidStateLaw(_))));
    assert!(matches!(derive(3, 2.0, -1.0, 0.0, Regime::Euler), Err(Error::InvalidParameter(_))));
}

#[test]
fn limiting_speeds_meet_at_the_triple_point() {
    let d = 3.0;
    let target = 3.0 - 3f64.sqrt();
    assert!((r_star(d, d) - target).abs() < 1e-12);
    assert!((r_plus(d, d) - target).abs() < 1e-12);
    for side in [-1e-3, 1e-3] {
        let p = derive_from_ell(3, 3.0 + side, 0.0, 0.0, Regime::Euler).unwrap();
        assert!((p.r_eye - target).abs() < 1e-3);
    }
}

#[test]
fn compat_exponent_signs() {
    assert!(compat_exponent(2.0, 4.0 / 3.0).abs() < 1e-15);
    assert!(compat_exponent(2.0, r_star(3.0, 2.0)) > 0.0);
    assert!(compat_exponent(1.0, r_star(2.0, 1.0)) < 0.0);
}

#[test]
fn ell_threshold() {
    let t = threshold_ell(3).unwrap();
    assert!((t.ell0 - 3f64.sqrt()).abs() < 1e-12);
    let t4 = threshold_ell(4).unwrap();
    assert!(t4.ell0 <= 0.0 && t4.automatic);
    // brute scan on a 1e-6 grid for the smallest ell with r*(3, ell) above the e-threshold
    let mut k = 1_700_000u64;
    while r_star(3.0, k as f64 * 1e-6) <= compat_threshold(k as f64 * 1e-6) {
        k += 1;
    }
    assert!((k as f64 * 1e-6 - 3f64.sqrt()).abs() < 2e-6);
}

#[test]
fn navier_stokes_admissibility() {
    assert!(derive_from_ell(3, 2.0, 1.0, 0.0, Regime::NavierStokes).unwrap().admissible);
    assert!(!derive_from_ell(3, 1.5, 1.0, 0.0, Regime::NavierStokes).unwrap().admissible);
    assert!(!derive_from_ell(2, 2.5, 1.0, 0.0, Regime::NavierStokes).unwrap().admissible);
}

fn bisect_sign(ell: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if compat_exponent(ell, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

proptest! {
    #[test]
    fn gamma_ell_p_consistent(gamma in 1.01f64..4.0) {
        prop_assume!((ell_from_gamma(gamma) - 3.0).abs() > 1e-3);
        let p = derive(3, gamma, 0.0, 0.0, Regime::Euler).unwrap();
        prop_assert!((p.ell - 2.0 / (gamma - 1.0)).abs() < 1e-12 * p.ell);
        prop_assert!((p.p - 1.0 - 4.0 / p.ell).abs() < 1e-12);
        prop_assert!((p.p - 1.0 - 2.0 * (gamma - 1.0)).abs() < 1e-12);
        prop_assert!((gamma_from_ell(p.ell) - gamma).abs() < 1e-12);
    }

    #[test]
    fn e_matches_gamma_form(gamma in 1.05f64..4.0, r in 1.0f64..2.0) {
        let ell = ell_from_gamma(gamma);
        let alt = ((1.0 + gamma) * r - 2.0 * gamma) / (2.0 * (gamma - 1.0));
        prop_assert!((compat_exponent(ell, r) - alt).abs() < 1e-12 * (1.0 + alt.abs()));
    }

    #[test]
    fn r_star_below_sqrt_d(d in 2u32..4, t in 0.001f64..0.999) {
        let df = d as f64;
        let ell = t * df;
        prop_assert!(r_star(df, ell) < df.sqrt());
        prop_assert!(r_star(df, ell) > 1.0);
    }

    #[test]
    fn r_eye_branch(d in 2u32..4, ell in 0.1f64..8.0) {
        prop_assume!((ell - d as f64).abs() > 1e-3);
        let p = derive_from_ell(d, ell, 0.0, 0.0, Regime::Euler).unwrap();
        if ell < d as f64 {
            prop_assert_eq!(p.r_eye, p.r_star);
        } else {
            prop_assert_eq!(p.r_eye, p.r_plus);
        }
    }

    #[test]
    fn e_sign_flips_at_threshold(ell in 0.1f64..10.0) {
        prop_assert!((bisect_sign(ell) - compat_threshold(ell)).abs() < 1e-12);
    }
}

#[test]
fn r_star_decreasing_on_dense_grid() {
    for d in [2.0f64, 3.0] {
        let mut prev = f64::INFINITY;
        for k in 1..1000 {
            let v = r_star(d, d * k as f64 / 1000.0);
            assert!(v < prev && v < d.sqrt());
            prev = v;
        }
    }
}
