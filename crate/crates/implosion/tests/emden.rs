use implosion::emden::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sys() -> Emden {
    Emden::new(3.0, 2.0, 1.3)
}

#[test]
fn coefficients_at_unit_point() {
    // by hand: a1 = 0, b1 = 2, d1 = 1 - 1.3 + 2, a2 = 1/2, b2 = 0, d2 = 2.5 - 1.3
    let c = sys().coefficients(1.0, 1.0);
    let want = [0.0, 2.0, 1.7, 0.5, 0.0, 1.2];
    for (got, w) in [c.a1, c.b1, c.d1, c.a2, c.b2, c.d2].into_iter().zip(want) {
        assert!((got - w).abs() < 1e-14, "{got} vs {w}");
    }
    // d2 vanishes at w = ell r/(ell + d) only
    let s = sys();
    assert!(s.coefficients(2.0 * 1.3 / 5.0, 0.7).d2.abs() < 1e-15);
    assert!(s.coefficients(s.w_e, 0.7).d2.abs() > 1e-3);
}

#[test]
fn corner_points() {
    let d = sys().determinants(1.0, 0.0);
    assert_eq!((d.delta, d.delta1, d.delta2), (0.0, 0.0, 0.0));
    let d = sys().determinants(0.0, 0.0);
    assert_eq!((d.delta, d.delta1, d.delta2), (1.0, 0.0, 0.0));
}

#[test]
fn sonic_roots_by_sign_scan() {
    let s = sys();
    let (a, b) = s.sonic_roots().unwrap();
    // sign changes of delta1 along sigma = 1 - w, away from the trivial root w = 1
    let n = 100_000;
    let ws: Vec<f64> = (0..=n).map(|k| 0.999 * k as f64 / n as f64).collect();
    let found: Vec<f64> = ws
        .windows(2)
        .filter(|p| s.delta1(p[0], 1.0 - p[0]) * s.delta1(p[1], 1.0 - p[1]) < 0.0)
        .map(|p| 0.5 * (p[0] + p[1]))
        .collect();
    assert_eq!(found.len(), 2);
    assert!((found[0] - 0.4).abs() < 1e-4 && (found[1] - 0.75).abs() < 1e-4);
    assert!((a - 0.4).abs() < 1e-14 && (b - 0.75).abs() < 1e-14);
}

#[test]
fn discriminant_zero_at_double_root_speed() {
    let f = |r: f64| Emden::new(3.0, 2.0, r).sonic_discriminant();
    let (mut lo, mut hi) = (1.0001, 1.339);
    assert!(f(lo).signum() != f(hi).signum() || f(lo) > 0.0);
    if f(lo).signum() != f(hi).signum() {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m).signum() == f(lo).signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        let s = Emden::new(3.0, 2.0, 0.5 * (lo + hi));
        assert!(s.sonic_discriminant().abs() < 1e-10);
    }
}

#[test]
fn desingularized_jacobian_matches_finite_differences() {
    let s = sys();
    let cp = s.desingularized_jacobian(0.75, 0.25).unwrap();
    let h = 1e-6;
    let f = |w: f64, x: f64| s.desingularized(w, x);
    let (a, b) = (f(0.75 + h, 0.25), f(0.75 - h, 0.25));
    let (c, d) = (f(0.75, 0.25 + h), f(0.75, 0.25 - h));
    let fd = [[(a.0 - b.0) / (2.0 * h), (c.0 - d.0) / (2.0 * h)], [(a.1 - b.1) / (2.0 * h), (c.1 - d.1) / (2.0 * h)]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((cp.jacobian[i][j] - fd[i][j]).abs() < 1e-8, "{i}{j}");
        }
    }
    let g = s.gradients(0.75, 0.25);
    for i in 0..2 {
        for j in 0..2 {
            assert!((cp.jacobian[i][j] + g[i][j]).abs() < 1e-14);
        }
    }
    assert!(s.desingularized_jacobian(0.3, 0.3).is_err());
}

#[test]
fn portrait_contains_loci_and_p2() {
    let s = sys();
    let window = Window { w_min: -0.5, w_max: 1.5, s_min: 0.0, s_max: 1.5 };
    let p = portrait_sample(&s, window, 81).unwrap();
    let cell = 2.0 / 80.0;
    for row in p.rows.iter().filter(|r| r.locus == Locus::Sonic) {
        assert!(((row.w - 1.0).abs() - row.sigma).abs() < cell, "{row:?}");
    }
    for (w, sg) in [(0.0, 0.0), (1.0, 0.0)] {
        let near = p.rows.iter().filter(|r| r.locus == Locus::Delta1).any(|r| (r.w - w).abs() < cell && (r.sigma - sg).abs() < cell);
        assert!(near);
    }
    let p2: Vec<_> = p.critical.iter().filter(|c| c.sigma > 0.0).collect();
    assert_eq!(p2.len(), 2);
    for c in p2 {
        for locus in [Locus::Sonic, Locus::Delta1, Locus::Delta2] {
            let near = p.rows.iter().filter(|r| r.locus == locus).any(|r| (r.w - c.w).abs() < cell && (r.sigma - c.sigma).abs() < cell);
            assert!(near, "{locus:?}");
        }
    }
    assert!(portrait_sample(&s, window, 1).is_err());
}

#[test]
fn factorization_identity_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let (d, l) = ([2.0, 3.0][rng.random_range(0..2)], rng.random_range(0.2..8.0));
        let r = rng.random_range(1.0..2.0);
        let s = Emden::new(d, l, r);
        let (w, sg) = (rng.random_range(-2.0..2.0), rng.random_range(0.0..3.0));
        let c = s.coefficients(w, sg);
        let det = s.determinants(w, sg);
        let scale = 1.0 + w.abs().powi(4) + sg.powi(4);
        assert!((c.a2 * det.delta1 + c.b2 * det.delta2 - c.d2 * det.delta).abs() < 1e-12 * scale);
        // Cramer forms
        assert!((det.delta - (c.a1 * c.b2 - c.b1 * c.a2)).abs() < 1e-13 * scale);
        assert!((det.delta1 - (c.b2 * c.d1 - c.b1 * c.d2)).abs() < 1e-13 * scale);
        assert!((det.delta2 - (c.a1 * c.d2 - c.a2 * c.d1)).abs() < 1e-13 * scale);
    }
}

proptest! {
    #[test]
    fn vector_field_solves_raw_system(w in -2.0f64..2.0, sg in 0.0f64..3.0, r in 1.0f64..2.0) {
        let s = Emden::new(3.0, 2.0, r);
        prop_assume!(s.delta(w, sg).abs() > 1e-3);
        let (fw, fs) = s.vector_field(w, sg).unwrap();
        let c = s.coefficients(w, sg);
        let scale = 1.0 + (c.a1 * fw).abs() + (c.b1 * fs).abs() + c.d1.abs() + (c.a2 * fw).abs() + (c.b2 * fs).abs() + c.d2.abs();
        prop_assert!((c.a1 * fw + c.b1 * fs + c.d1).abs() < 1e-12 * scale);
        prop_assert!((c.a2 * fw + c.b2 * fs + c.d2).abs() < 1e-12 * scale);
    }

    #[test]
    fn delta1_nullcline_has_flat_w(w in 0.05f64..0.95, r in 1.05f64..1.3) {
        let s = Emden::new(3.0, 2.0, r);
        // sigma^2 from delta1 = 0
        let s2 = w * (w - 1.0) * (w - r) / (3.0 * (w - s.w_e));
        prop_assume!(s2 > 0.0);
        let sg = s2.sqrt();
        prop_assume!(s.delta(w, sg).abs() > 1e-3);
        prop_assert!(s.vector_field(w, sg).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn sonic_roots_annihilate_delta1(r in 1.01f64..1.33) {
        let s = Emden::new(3.0, 2.0, r);
        if let Ok((a, b)) = s.sonic_roots() {
            for w in [a, b] {
                let d = s.determinants(w, 1.0 - w);
                prop_assert!(d.delta.abs() < 1e-12 && d.delta1.abs() < 1e-12 && d.delta2.abs() < 1e-12);
            }
        }
    }
}
