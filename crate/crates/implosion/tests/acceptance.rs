//! One line per acceptance criterion. Failures are printed, not panicked on; set
//! `ACCEPTANCE_STRICT=1` to get a nonzero exit status when any criterion fails.

use std::time::{Duration, Instant};

use implosion::emden::Emden;
use implosion::params::*;
use implosion::profile::{dampen, find_profile, ProfileConfig, ProfileCurve};
use implosion::repulsivity::margins;
use implosion::simulate::*;
use implosion::spectral::*;
use implosion::Parameters;
use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let ell0 = threshold_ell(3).unwrap().ell0;
    let c_ell0 = (ell0 - 3f64.sqrt()).abs() < 1e-12;
    let grid_ok = (1..=1000).all(|k| {
        let ell = 3.0 * k as f64 / 1001.0;
        r_star(3.0, ell) < 3f64.sqrt()
    });
    let at_d = (r_star(3.0, 3.0) - r_plus(3.0, 3.0)).abs() < 1e-12;
    let mut worst: f64 = 0.0;
    for k in 1..=50 {
        let ell = 0.2 * k as f64;
        let (mut lo, mut hi) = (1.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if compat_exponent(ell, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((0.5 * (lo + hi) - (2.0 + ell) / (1.0 + ell)).abs());
    }
    let e_ok = worst < 1e-12;
    outcome(
        c_ell0 && grid_ok && at_d && e_ok,
        format!("ell0 - sqrt3 = {:.1e}, r* < sqrt3 on grid: {grid_ok}, r*=r+ at ell=d: {at_d}, e-threshold err {worst:.1e}", ell0 - 3f64.sqrt()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut ident, mut raw): (f64, f64) = (0.0, 0.0);
    let mut n = 0;
    while n < 10_000 {
        let s = Emden::new(3.0, rng.random_range(0.2..6.0), rng.random_range(1.0..1.7));
        let (w, sg) = (rng.random_range(-2.0..2.0), rng.random_range(0.0..3.0));
        let c = s.coefficients(w, sg);
        let det = s.determinants(w, sg);
        let scale = 1.0 + w.abs().powi(4) + sg.powi(4);
        ident = ident.max((c.a2 * det.delta1 + c.b2 * det.delta2 - c.d2 * det.delta).abs() / scale);
        if det.delta.abs() < 1e-3 {
            continue;
        }
        let (fw, fs) = s.vector_field(w, sg).unwrap();
        let sc = 1.0 + (c.a1 * fw).abs() + (c.b1 * fs).abs() + c.d1.abs() + (c.a2 * fw).abs() + (c.b2 * fs).abs() + c.d2.abs();
        raw = raw.max((c.a1 * fw + c.b1 * fs + c.d1).abs() / sc).max((c.a2 * fw + c.b2 * fs + c.d2).abs() / sc);
        n += 1;
    }
    outcome(ident < 1e-12 && raw < 1e-12, format!("identity {ident:.1e}, raw system {raw:.1e} on 1e4 points"))
}

struct Found {
    params: Parameters,
    curve: ProfileCurve,
}

fn criterion_3() -> (Outcome, Option<Found>) {
    let base = derive(3, 2.0, 0.0, 0.0, Regime::Euler).unwrap();
    let sol = match find_profile(&base, &ProfileConfig::default()) {
        Ok(s) => s,
        Err(e) => return (outcome(false, format!("no profile: {e}")), None),
    };
    let c = sol.curve;
    let in_range = c.r > 1.0 && c.r < base.r_star;
    let miss = sol.root.miss.abs();
    let dw = c.crossing.max_abs_dw;
    let slope_err = (c.tail_slope + c.r).abs();
    let positive = c.x.iter().all(|&x| x > 0.0);
    let pass = in_range && miss < 1e-6 && dw.is_finite() && dw < 10.0 && slope_err < 1e-2 && positive;
    let params = base.with_speed(c.r).unwrap();
    (
        outcome(pass, format!("r1 = {:.12}, miss {miss:.1e}, max |w'| at crossing {dw:.3}, tail slope + r = {slope_err:.1e}, rho > 0: {positive}", c.r)),
        Some(Found { params, curve: c }),
    )
}

fn criterion_4(f: &Found) -> Outcome {
    let rep = margins(&f.curve, &f.params);
    let m = &rep.margins;
    let drift = rep.halving_drift();
    let pass = rep.passes() && rep.verdicts.outside == Some(true) && rep.identity_error < 1e-3 && drift < 1e-4;
    outcome(
        pass,
        format!(
            "inside {:.6}/{:.6}, outside {:.6}/{:.6}, kappa {:.6}, identity {:.1e}, halving drift {drift:.1e}",
            m.inside_1.min, m.inside_2.min, m.outside_1.min, m.outside.min, rep.kappa.from_derivatives, rep.identity_error
        ),
    )
}

fn criterion_5(f: &Found) -> Outcome {
    let c = &f.curve;
    let z0 = shifted_root(c, 0.0).map(|z| (z - c.z2).abs()).unwrap_or(f64::INFINITY);
    let roots: Vec<f64> = [0.01, 0.02, 0.04, 0.08].iter().map(|&a| shifted_root(c, a).unwrap_or(f64::NAN)).collect();
    let increasing = roots[0] > c.z2 && roots.windows(2).all(|w| w[1] > w[0]);
    outcome(z0 < 1e-10 && increasing, format!("|Z_0 - Z2| = {z0:.1e}, Z_a = {roots:.6?}"))
}

fn invariance_error(m: &DMatrix<f64>) -> f64 {
    let mut top: Vec<Complex<f64>> = eigenvalues(m).unwrap_or_default().into_iter().filter(|l| l.re > 0.5 && l.im.abs() < 1e-6).collect();
    top.sort_by(|a, b| b.re.total_cmp(&a.re));
    if top.is_empty() {
        return f64::INFINITY;
    }
    let k = m.nrows();
    let shift = 0.37;
    let shifted = m + DMatrix::identity(k, k) * shift;
    let dg: Vec<f64> = (0..k).map(|i| 1.0 + 0.5 * (i as f64 * 0.7).sin()).collect();
    let sim = DMatrix::from_fn(k, k, |i, j| dg[i] * m[(i, j)] / dg[j]);
    let mut worst: f64 = 0.0;
    for l in top {
        let Some(l) = rayleigh(m, l) else { return f64::INFINITY };
        let a = rayleigh(&shifted, l + shift).map(|q| (q - l - shift).norm()).unwrap_or(f64::INFINITY);
        let b = rayleigh(&sim, l).map(|q| (q - l).norm()).unwrap_or(f64::INFINITY);
        worst = worst.max(a).max(b);
    }
    worst
}

fn criterion_6(f: &Found) -> (Outcome, Option<f64>) {
    let cfg = SpectralConfig::default();
    let study = match spectral_study(&f.curve, 128, &cfg) {
        Ok(s) => s,
        Err(e) => return (outcome(false, format!("{e}")), None),
    };
    let inv = assemble(&f.curve, cfg.a, 128).map(|a| invariance_error(&a.matrix)).unwrap_or(f64::INFINITY);
    let same = study.nonnegative_n == study.nonnegative_2n && study.count_n == study.count_2n;
    let lmax = study.report.lambda_max();
    let vals: Vec<String> = study.report.unstable().map(|e| format!("{:.6}", e.re)).collect();
    (
        outcome(
            same && inv < 1e-8 && study.drift < 1e-4,
            format!(
                "Re >= 0 resolved: {} at N=128, {} at N=256 (unstable {} / {}), lambda = [{}], drift {:.1e}, invariances {inv:.1e}",
                study.nonnegative_n,
                study.nonnegative_2n,
                study.count_n,
                study.count_2n,
                vals.join(", "),
                study.drift
            ),
        ),
        lmax,
    )
}

fn stationary_state(f: &Found, h: f64) -> SimState {
    let z = sim_grid(h, 12.0);
    profile_state(&f.curve, &f.params, &z, &Perturbation::none()).unwrap()
}

fn criterion_7(f: &Found) -> Outcome {
    let res: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let s = sample(&stationary_state(f, h), f.curve.z2, 0.0, 0.0);
            s.residual[0].max(s.residual[1])
        })
        .collect();
    let slopes = [(res[0] / res[1]).log2(), (res[1] / res[2]).log2()];
    let slope_ok = slopes.iter().all(|s| (1.7..=2.3).contains(s));
    let h = 0.02;
    let mut s = stationary_state(f, h);
    let t = run(&mut s, 5.0, &RunConfig { cadence: 0.5, ..RunConfig::default() }, f.curve.z2);
    let dev = t.diagnostics.max_deviation();
    let bound = 10.0 * h * h;
    let finished = t.stop == Stop::Finished;
    outcome(
        slope_ok && finished && dev < bound,
        format!(
            "residuals {:.2e}/{:.2e}/{:.2e} (slopes {:.2}, {:.2}); deviation after tau 5 at h = {h}: {dev:.2e} vs 10h^2 = {bound:.1e} ({:?})",
            res[0], res[1], res[2], slopes[0], slopes[1], t.stop
        ),
    )
}

fn criterion_8(f: &Found) -> Outcome {
    let ts: Vec<f64> = (0..40).map(|i| 1.0 - 10f64.powf(-1.0 - 0.1 * i as f64)).collect();
    let r = physical_rates(&f.curve, 1.0, &ts, TimeConvention::default(), 0.5);
    let eu = (r.exponent_u - r.expected_u).abs();
    let er = (r.exponent_rho - r.expected_rho).abs();
    let check = physical_check(&f.curve, &f.params, &CheckConfig::default(), &[100, 200, 400]);
    let (ratios, cons) = match &check {
        Ok(t) => (t.ratios.clone(), t.rows.iter().map(|r| r.mass_defect).fold(0.0, f64::max)),
        Err(_) => (vec![], f64::INFINITY),
    };
    let pass = eu < 1e-3 && er < 1e-3 && !ratios.is_empty() && ratios.iter().all(|x| (1.7..=2.3).contains(x));
    outcome(
        pass,
        format!("exponent errors u {eu:.1e}, rho {er:.1e}; L1 ratios {ratios:.3?}; mass defect {cons:.1e}"),
    )
}

fn perturbed_growth(f: &Found, pert: &Perturbation, lmax: f64) -> (bool, String) {
    let h = 0.02;
    let z = sim_grid(h, 20.0);
    let d = dampen(&f.curve, 2.0, 0.0, &z).unwrap();
    let cfg = RunConfig { cadence: 0.25, snapshot_every: 1, ..RunConfig::default() };
    let mut base = init(&d, &f.curve, &f.params, &Perturbation::none()).unwrap();
    let mut pert_state = match init(&d, &f.curve, &f.params, pert) {
        Ok(s) => s,
        Err(e) => return (false, format!("{e}")),
    };
    let a = run(&mut base, 3.0, &cfg, f.curve.z2);
    let b = run(&mut pert_state, 3.0, &cfg, f.curve.z2);
    if a.stop != Stop::Finished || b.stop != Stop::Finished || a.snapshots.len() != b.snapshots.len() {
        return (false, format!("runs stopped: {:?} / {:?}", a.stop, b.stop));
    }
    let z2 = f.curve.z2;
    // sup norm as the verdict; weighted L2 and the location of the sup alongside for diagnosis
    let dev: Vec<(f64, f64, f64, f64)> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            let (mut sup, mut at, mut l2) = (0.0f64, 0.0, 0.0);
            for i in (0..x.z.len()).filter(|&i| x.z[i] <= z2) {
                let (dr, du) = (x.rho[i] - y.rho[i], x.u[i] - y.u[i]);
                if dr.abs().max(du.abs()) > sup {
                    sup = dr.abs().max(du.abs());
                    at = x.z[i];
                }
                l2 += (dr * dr + du * du) * x.z[i] * x.z[i] * h;
            }
            (x.tau, sup, at, l2.sqrt())
        })
        .collect();
    let (d0, l0) = (dev[0].1, dev[0].3);
    let growth = |t: f64| (lmax * t).exp();
    let (mut worst, mut worst_tau, mut worst_z, mut worst_l2) = (0.0f64, 0.0, 0.0, 0.0f64);
    for &(t, m, z, l2) in &dev {
        if m / (d0 * growth(t)) > worst {
            (worst, worst_tau, worst_z) = (m / (d0 * growth(t)), t, z);
        }
        worst_l2 = worst_l2.max(l2 / (l0 * growth(t)));
    }
    let end = dev.last().unwrap();
    (
        worst <= 3.0,
        format!(
            "{d0:.1e} -> {:.1e} at tau {:.1}, sup growth / e^(lambda tau) max {worst:.3} (tau {worst_tau:.2}, Z {worst_z:.3}), L2 {worst_l2:.3}",
            end.1, end.0
        ),
    )
}

fn criterion_9(f: &Found, lmax: Option<f64>) -> Outcome {
    let Some(lmax) = lmax else {
        return outcome(false, "no lambda_max from the spectral report".into());
    };
    let (a, da) = perturbed_growth(f, &Perturbation::single(1e-3, 1e-3, 1.0, 0.5), lmax);
    let (b, db) = perturbed_growth(f, &Perturbation::random(7, 4, 1e-3, f.curve.z2), lmax);
    outcome(a && b, format!("lambda_max {lmax:.6}; bump: {da}; random: {db}"))
}

fn report(id: usize, limit: Duration, start: Instant, o: Outcome, failures: &mut usize) {
    let took = start.elapsed();
    let pass = o.pass && took <= limit;
    if !pass {
        *failures += 1;
    }
    println!(
        "criterion {id}: {} ({:.2} s, limit {} s) {}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs(),
        o.detail
    );
}

fn main() {
    let mut failures = 0;
    let secs = Duration::from_secs;
    let t = Instant::now();
    report(1, secs(1), t, criterion_1(), &mut failures);
    let t = Instant::now();
    report(2, secs(1), t, criterion_2(), &mut failures);
    let t = Instant::now();
    let (o, found) = criterion_3();
    report(3, secs(60), t, o, &mut failures);
    let Some(f) = found else {
        for id in 4..=9 {
            println!("criterion {id}: FAIL (no profile)");
        }
        finish(failures + 6);
        return;
    };
    let t = Instant::now();
    report(4, secs(10), t, criterion_4(&f), &mut failures);
    let t = Instant::now();
    report(5, secs(1), t, criterion_5(&f), &mut failures);
    let t = Instant::now();
    let (o, lmax) = criterion_6(&f);
    report(6, secs(300), t, o, &mut failures);
    let t = Instant::now();
    report(7, secs(300), t, criterion_7(&f), &mut failures);
    let t = Instant::now();
    report(8, secs(300), t, criterion_8(&f), &mut failures);
    let t = Instant::now();
    report(9, secs(600), t, criterion_9(&f, lmax), &mut failures);
    finish(failures);
}

fn finish(failures: usize) {
    println!("{} of 9 criteria passed", 9 - failures.min(9));
    if failures > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v != "0") {
        std::process::exit(1);
    }
}
