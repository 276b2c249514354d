mod common;

use common::fixture;
use implosion::spectral::*;
use nalgebra::{Complex, DMatrix, DVector};

fn grid(c: &implosion::profile::ProfileCurve, n: usize) -> Vec<f64> {
    (1..n).map(|i| c.z2 * i as f64 / n as f64).chain([c.z2 * 1.5, 10.0, 100.0]).collect()
}

#[test]
fn h1_two_ways() {
    let c = fixture().curve();
    let p = potentials(c, &grid(c, 200));
    for i in 0..p.z.len() {
        assert!((p.h1[i] - p.h1_alt[i]).abs() < 1e-8, "at {}: {} {}", p.z[i], p.h1[i], p.h1_alt[i]);
    }
}

#[test]
fn h1_matches_log_derivative_of_density() {
    // H1 = H2 Lambda rho / rho, with rho from the curve and a finite difference
    let f = fixture();
    let c = f.curve();
    let phi2 = c.ell / 4.0;
    let rho = |z: f64| {
        let l = c.local(z);
        (phi2 * z * z * l.sigma * l.sigma).powf(1.0 / (f.params.p - 1.0))
    };
    let zs = [0.3, 0.9, 1.5, 2.5, 7.0];
    let p = potentials(c, &zs);
    for (i, &z) in zs.iter().enumerate() {
        let h = 1e-4 * z;
        let d = (rho(z - 2.0 * h) - 8.0 * rho(z - h) + 8.0 * rho(z + h) - rho(z + 2.0 * h)) / (12.0 * h);
        let want = p.h2[i] * z * d / rho(z);
        assert!((p.h1[i] - want).abs() < 1e-7, "{z}: {} {want}", p.h1[i]);
    }
}

#[test]
fn potentials_at_sonic_point_and_far_field() {
    let f = fixture();
    let c = f.curve();
    let p = potentials(c, &[c.z2, 1e3]);
    assert!((p.h2[0] - c.crossing.sigma2).abs() < 1e-10);
    let limit = -2.0 * (c.r - 1.0) / (f.params.p - 1.0);
    assert!((p.h1[1] - limit).abs() < 1e-2, "{} vs {limit}", p.h1[1]);
    assert!((p.h2[1] - 1.0).abs() < 1e-2);
}

#[test]
fn shifted_root_properties() {
    let c = fixture().curve();
    assert!((shifted_root(c, 0.0).unwrap() - c.z2).abs() < 1e-10);
    let roots: Vec<f64> = [0.01, 0.02, 0.04].iter().map(|&a| shifted_root(c, a).unwrap()).collect();
    assert!(roots[0] > c.z2 && roots[1] > roots[0] && roots[2] > roots[1]);
    let za = roots[1];
    for k in 1..400 {
        let z = (za - 1e-6) * k as f64 / 400.0;
        assert!(-shifted_discriminant(c, 0.02, z) > 0.0, "D_a >= 0 at {z}");
    }
    // linear approach to Z2
    let slope1 = (roots[0] - c.z2) / 0.01;
    let slope2 = (roots[1] - c.z2) / 0.02;
    assert!((slope1 / slope2 - 1.0).abs() < 0.05);
    assert!(shifted_root(c, 0.7).is_err());
}

#[test]
fn constant_field_row() {
    let c = fixture().curve();
    let asm = assemble(c, 0.02, 64).unwrap();
    let n = asm.grid.len();
    let v = DVector::from_fn(2 * n, |i, _| if i < n { 1.0 } else { 0.0 });
    let out = &asm.matrix * v;
    for i in 0..n {
        // differentiation rows sum to zero only up to round-off on their own scale
        let scale: f64 = (0..n).map(|j| asm.matrix[(n + i, j)].abs()).sum();
        assert!(out[i].abs() < 1e-12 * scale.max(1.0));
        assert!((out[n + i] - asm.potentials.a3[i]).abs() < 1e-12 * scale.max(1.0), "{} {}", out[n + i], asm.potentials.a3[i]);
    }
}

#[test]
fn a2_tilde_from_pieces() {
    let c = fixture().curve();
    let p = potentials(c, &grid(c, 50));
    let a = 0.03;
    let t = p.a2_tilde(a);
    for i in 0..t.len() {
        let lam_h2 = p.lam_h2[i];
        let want = p.a1[i] + (2.0 * a - a * a) * p.h2[i] * lam_h2 - a * p.a2[i] * p.h2[i];
        assert!((t[i] - want).abs() < 1e-12 * (1.0 + want.abs()));
    }
}

/// Operator applied with potentials and derivatives all taken by finite differences of
/// the curve, independent of the closed-form coefficients used by the assembly.
fn fd_action(c: &implosion::profile::ProfileCurve, p_exp: f64, a: f64, z: f64) -> [f64; 2] {
    let d = c.d;
    let r = c.r;
    let phi2 = c.ell / 4.0;
    let q = |z: f64| {
        let l = c.local(z);
        phi2 * z * z * l.sigma * l.sigma
    };
    let rho = |z: f64| q(z).powf(1.0 / (p_exp - 1.0));
    let h2 = |z: f64| 1.0 - c.local(z).w;
    let dz = |f: &dyn Fn(f64) -> f64, z: f64| {
        let h = 1e-3 * z.min(1.0);
        (-f(z + 3.0 * h) + 9.0 * f(z + 2.0 * h) - 45.0 * f(z + h) + 45.0 * f(z - h) - 9.0 * f(z - 2.0 * h) + f(z - 3.0 * h))
            / (-60.0 * h)
    };
    let h1 = |z: f64| h2(z) * z * dz(&rho, z) / rho(z);
    let lam_h2 = z * dz(&h2, z);
    let lam_h1 = z * dz(&h1, z);
    let lq = z * dz(&q, z) / q(z);
    let drho = |z: f64| dz(&rho, z);
    let h3 = (dz(&drho, z) + (d - 1.0) / z * drho(z)) / rho(z);
    let (h1v, h2v, pq) = (h1(z), h2(z), (p_exp - 1.0) * q(z));
    let k = h1v - (r - 2.0);
    let a1 = h2v * h1v - h2v * lam_h2 + h2v * k + h2v * h2v * lq;
    let a2 = 2.0 * h1v - (r - 2.0) + h2v * lq;
    let a3 = -k * h1v + h2v * lam_h1 - h2v * k * lq - pq * h3;
    let a2t = a1 + (2.0 * a - a * a) * h2v * lam_h2 - a * a2 * h2v;
    // test pair: Phi = cos(Z^2) + Z^2, Theta = exp(-Z^2)
    let f = |z: f64| (z * z).cos() + z * z;
    let g = |z: f64| (-z * z).exp();
    let (f1, f2) = (dz(&f, z), dz(&|t| dz(&f, t), z));
    let g1 = dz(&g, z);
    let lap = f2 + (d - 1.0) / z * f1;
    [
        -a * h2v * z * f1 + g(z),
        pq * lap - (1.0 - a).powi(2) * h2v * h2v * (z * f1 + z * z * f2) + a2t * z * f1 + a3 * f(z)
            - (2.0 - a) * h2v * z * g1
            + a2 * g(z),
    ]
}

#[test]
fn matrix_action_matches_finite_difference_oracle() {
    let f = fixture();
    let c = f.curve();
    let a = 0.02;
    let asm = assemble(c, a, 64).unwrap();
    let n = asm.grid.len();
    let v = DVector::from_fn(2 * n, |i, _| {
        let z = asm.grid.z[i % n];
        if i < n {
            (z * z).cos() + z * z
        } else {
            (-z * z).exp()
        }
    });
    let out = &asm.matrix * v;
    for i in (1..n - 1).step_by(3) {
        let z = asm.grid.z[i];
        if z < 0.05 {
            continue;
        }
        let want = fd_action(c, f.params.p, a, z);
        for k in 0..2 {
            let got = out[k * n + i];
            assert!((got - want[k]).abs() < 1e-6 * (1.0 + want[k].abs()), "Z = {z}, row {k}: {got} vs {}", want[k]);
        }
        // and the pointwise form with exact derivatives
        let s = z * z;
        let pw = apply_pointwise(c, a, z, [s.cos() + s, -2.0 * z * s.sin() + 2.0 * z, -2.0 * s.sin() - 4.0 * s * s.cos() + 2.0], [
            (-s).exp(),
            -2.0 * z * (-s).exp(),
        ]);
        for k in 0..2 {
            assert!((out[k * n + i] - pw[k]).abs() < 1e-8 * (1.0 + pw[k].abs()));
        }
    }
}

#[test]
fn zero_matrix_has_zero_spectrum() {
    let e = eigenvalues(&DMatrix::zeros(40, 40)).unwrap();
    assert_eq!(e.len(), 40);
    assert!(e.iter().all(|l| l.norm() == 0.0));
}

fn top(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut e: Vec<Complex<f64>> = eigenvalues(m).unwrap().into_iter().filter(|l| l.re > 0.5 && l.im.abs() < 1e-6).collect();
    e.sort_by(|a, b| b.re.total_cmp(&a.re));
    e.into_iter().map(|l| rayleigh(m, l).unwrap()).collect()
}

#[test]
fn shift_and_similarity_invariance() {
    let c = fixture().curve();
    let asm = assemble(c, 0.02, 64).unwrap();
    let m = &asm.matrix;
    let base = top(m);
    assert!(!base.is_empty());
    let cs = 0.37;
    let shifted = m + DMatrix::identity(m.nrows(), m.ncols()) * cs;
    for l in &base {
        let q = rayleigh(&shifted, l + cs).unwrap();
        assert!((q - (l + cs)).norm() < 1e-8, "{q} vs {}", l + cs);
    }
    let k = m.nrows();
    let dg: Vec<f64> = (0..k).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin()).collect();
    let sim = DMatrix::from_fn(k, k, |i, j| dg[i] * m[(i, j)] / dg[j]);
    for l in &base {
        let q = rayleigh(&sim, *l).unwrap();
        assert!((q - l).norm() < 1e-8, "{q} vs {l}");
    }
}

#[test]
fn unstable_count_is_resolution_stable() {
    let c = fixture().curve();
    let s = spectral_study(c, 128, &SpectralConfig::default()).unwrap();
    assert!(s.report.converged && s.refined.converged);
    assert_eq!(s.count_n, s.count_2n);
    assert!(s.consistent);
    assert!(s.drift < 1e-4, "drift {}", s.drift);
    assert_eq!(s.count_n, 3);
    // the time-translation mode sits at r and the gauge mode at 2 - r
    let has = |v: f64| s.report.unstable().any(|e| (e.re - v).abs() < 1e-5 && e.im.abs() < 1e-9);
    assert!(has(c.r), "{:?}", s.report.eigenvalues);
    assert!(has(2.0 - c.r));
    assert!((s.report.lambda_max().unwrap() - c.r).abs() < 1e-5);
}
