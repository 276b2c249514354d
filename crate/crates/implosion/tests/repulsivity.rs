mod common;

use common::fixture;
use implosion::repulsivity::*;

fn report() -> RepulsivityReport {
    let f = fixture();
    margins(f.curve(), &f.params)
}

#[test]
fn margins_are_positive_and_frozen() {
    let r = report();
    assert!(r.passes());
    assert_eq!(r.verdicts.outside, Some(true));
    let m = &r.margins;
    // frozen from a first run, cross-checked by the halved grid below
    for (got, want) in [(m.inside_1.min, 0.342573), (m.inside_2.min, 0.416155), (m.outside_1.min, 0.329205), (m.outside.min, 0.611265)] {
        assert!((got - want).abs() < 2e-6, "{got} vs {want}");
    }
}

#[test]
fn halving_the_grid_barely_moves_the_minima() {
    assert!(report().halving_drift() < 1e-4);
}

#[test]
fn kappa_two_ways() {
    let f = fixture();
    let c = f.curve();
    let k = surface_gravity(c);
    assert!((k.from_derivatives - k.from_coercivity).abs() < 1e-8, "{k:?}");
    assert!(k.from_derivatives > 0.0);
    // second inside quantity at the sonic point is kappa
    let l = c.local(c.z2);
    let q2 = 1.0 - l.w - l.lam_w - (1.0 - l.w) * (l.sigma + l.lam_sigma) / l.sigma;
    assert!((q2 - k.from_derivatives).abs() < 1e-6, "{q2}");
    assert!((k.from_derivatives - 0.416155).abs() < 2e-6);
}

#[test]
fn density_identity_holds() {
    assert!(report().identity_error < 1e-3);
}

#[test]
fn f_vanishes_at_origin_and_tends_to_one_far_out() {
    let c = fixture().curve();
    // F is odd-linear at the centre
    let slope = |z: f64| {
        let l = c.local(z);
        (l.sigma + l.lam_sigma) / z
    };
    assert!((slope(1e-4) - slope(1e-3)).abs() < 1e-5);
    assert!(slope(1e-4).abs() < 1.0);
    let far = c.local(c.z_max());
    assert!((1.0 - far.w - far.lam_w - 1.0).abs() < 1e-3);
}

#[test]
fn characteristic_speeds_change_sign_once_at_z2() {
    let c = fixture().curve();
    let s = characteristic_speeds(c);
    assert_eq!(s.sign_changes, 1);
    let root = s.root.unwrap();
    assert!((root - c.z2).abs() < 1e-6 * c.z2);
    for i in 0..s.z.len() {
        assert!(s.l_bar[i] > 0.0);
        if s.z[i] < c.z2 * (1.0 - 1e-6) {
            assert!(s.l[i] < 0.0, "L >= 0 at {}", s.z[i]);
        }
    }
    // exactly on the sonic point
    let l = c.local(c.z2);
    assert!((1.0 - l.w - l.sigma).abs() < 1e-10);
}
